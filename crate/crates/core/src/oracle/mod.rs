//! Two-point randomized gradient-free oracle and Gaussian-smoothing helpers.

mod stream;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use stream::{
    builtin_stream, reference_signal, Constant, LinearProbe, NormDistance, ObjectiveStream,
    TrackingQuadratic, QuadraticForm, BUILTIN_STREAMS,
};

use crate::error::{Error, Result};

/// Domain tags that keep substreams for different uses independent.
pub mod purpose {
    pub const DIRECTION: u64 = 1;
    pub const INITIAL_STATE: u64 = 2;
    pub const COEFFICIENTS: u64 = 3;
    pub const SMOOTHING: u64 = 4;
}

/// Deterministic family of pseudorandom substreams keyed by
/// `(master_seed, agent, t, purpose)`.
///
/// Every key maps to its own ChaCha stream, so a draw never depends on the
/// order in which other agents or steps were sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    master_seed: u64,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn substream(&self, agent: usize, t: u64, purpose: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&(agent as u64).to_le_bytes());
        key[16..24].copy_from_slice(&t.to_le_bytes());
        key[24..].copy_from_slice(&purpose.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionLaw {
    /// i.i.d. standard normal coordinates.
    #[default]
    Gaussian,
    /// Uniform on the unit sphere.
    UniformSphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Per-agent smoothing parameters, all positive.
    pub mu: Vec<f64>,
    pub law: DirectionLaw,
    pub seed: u64,
}

impl OracleConfig {
    pub fn uniform(n: usize, mu: f64, law: DirectionLaw, seed: u64) -> Self {
        Self {
            mu: vec![mu; n],
            law,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu.is_empty() {
            return Err(Error::invalid("oracle needs at least one smoothing parameter"));
        }
        if let Some(m) = self.mu.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
            return Err(Error::invalid(format!("smoothing parameter must be positive, got {m}")));
        }
        Ok(())
    }

    /// Largest per-agent smoothing parameter.
    pub fn mu_hat(&self) -> f64 {
        self.mu.iter().cloned().fold(0.0, f64::max)
    }

    pub fn rng(&self) -> RngStream {
        RngStream::new(self.seed)
    }
}

/// Direction `xi^i(t)`; a pure function of `(seed, agent, t)`.
pub fn sample_direction(cfg: &OracleConfig, agent: usize, t: u64, dim: usize) -> Vec<f64> {
    let mut rng = cfg.rng().substream(agent, t, purpose::DIRECTION);
    draw_direction(&mut rng, cfg.law, dim)
}

fn draw_direction(rng: &mut ChaCha8Rng, law: DirectionLaw, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        match law {
            DirectionLaw::Gaussian => return v,
            DirectionLaw::UniformSphere => {
                let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm > 0.0 {
                    return v.into_iter().map(|c| c / norm).collect();
                }
            }
        }
    }
}

/// `(f(x + mu xi) - f(x)) / mu * xi` for a given direction. Exactly two
/// evaluations of the stream.
pub fn two_point_estimate(
    stream: &dyn ObjectiveStream,
    agent: usize,
    t: u64,
    x: &[f64],
    mu: f64,
    direction: &[f64],
) -> Result<Vec<f64>> {
    let shifted: Vec<f64> = x.iter().zip(direction).map(|(a, d)| a + mu * d).collect();
    let f_shift = stream.eval(agent, t, &shifted);
    let f_base = stream.eval(agent, t, x);
    if !f_shift.is_finite() || !f_base.is_finite() {
        return Err(Error::NonFinite {
            what: "objective value",
            agent,
            t,
        });
    }
    let scale = (f_shift - f_base) / mu;
    Ok(direction.iter().map(|d| scale * d).collect())
}

/// Gradient-free estimate `g^t_{mu^i}(x)` for one agent at one step.
pub fn gradient_free_oracle(
    stream: &dyn ObjectiveStream,
    cfg: &OracleConfig,
    agent: usize,
    t: u64,
    x: &[f64],
) -> Result<Vec<f64>> {
    let direction = sample_direction(cfg, agent, t, x.len());
    two_point_estimate(stream, agent, t, x, cfg.mu[agent], &direction)
}

/// Monte Carlo estimate together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Estimates the Gaussian smoothing `E[f(x + mu xi)]`, `xi ~ N(0, I)`.
pub fn smoothed_value_mc(
    stream: &dyn ObjectiveStream,
    agent: usize,
    t: u64,
    x: &[f64],
    mu: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples == 0 {
        return Err(Error::invalid("smoothed value needs at least one sample"));
    }
    let mut rng = RngStream::new(seed).substream(agent, t, purpose::SMOOTHING);
    let mut point = vec![0.0; x.len()];
    // Welford keeps the variance stable when the mean dwarfs the spread
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 0..n_samples {
        for (p, xi) in point.iter_mut().zip(x) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *p = xi + mu * z;
        }
        let v = stream.eval(agent, t, &point);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: "objective value",
                agent,
                t,
            });
        }
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = if n_samples > 1 { m2 / (n_samples - 1) as f64 } else { 0.0 };
    Ok(McEstimate {
        mean,
        std_error: (var / n_samples as f64).sqrt(),
        n_samples,
    })
}

/// The quadratic tracking stream registered as `paper_quadratic`.
pub fn tracking_objective_stream(n: usize, coeff_seed: u64) -> Result<TrackingQuadratic> {
    TrackingQuadratic::sample(n, coeff_seed)
}
