//! Time-varying local objectives, observable only through point evaluation.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{purpose, RngStream};
use crate::error::{Error, Result};

/// A family of local cost functions `f_i^t`, one per agent and time step.
///
/// Implementations must be convex in `x` on the feasible set and free of side
/// effects; evaluation may happen concurrently from several threads.
pub trait ObjectiveStream: Send + Sync {
    fn n_agents(&self) -> usize;

    fn dim(&self) -> usize;

    fn eval(&self, agent: usize, t: u64, x: &[f64]) -> f64;

    /// Minimizer of the aggregate `sum_i f_i^t` over the feasible set, when
    /// known in closed form.
    fn minimizer(&self, _t: u64) -> Option<Vec<f64>> {
        None
    }

    /// Uniform bound on local subgradient norms over the feasible set.
    fn subgradient_bound(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> &str;

    /// `f^t(x) = sum_i f_i^t(x)`
    fn global_eval(&self, t: u64, x: &[f64]) -> f64 {
        (0..self.n_agents()).map(|i| self.eval(i, t, x)).sum()
    }
}

/// `2 sin(0.008 t) / t`, continuously extended with value 0.016 at `t = 0`.
pub fn reference_signal(t: u64) -> f64 {
    if t == 0 {
        0.016
    } else {
        let t = t as f64;
        2.0 * (0.008 * t).sin() / t
    }
}

/// Scalar quadratic tracking problem
/// `f_i^t(x) = a_i x^2 - 2 b_i d(t) x + c_i d(t)^2` with `d = reference_signal`.
///
/// The coefficient vectors each sum to `N`, so the aggregate is
/// `N (x - d(t))^2` and its minimizer is `d(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingQuadratic {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// Half-width of the interval the subgradient bound is taken over.
    pub domain_radius: f64,
}

impl TrackingQuadratic {
    /// Draws each coefficient uniformly from [0.5, 1.5], then rescales each
    /// family to sum to `n`.
    pub fn sample(n: usize, coeff_seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("stream needs at least one agent"));
        }
        let streams = RngStream::new(coeff_seed);
        let family = |k: u64| {
            let mut rng = streams.substream(0, k, purpose::COEFFICIENTS);
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
            let scale = n as f64 / raw.iter().sum::<f64>();
            raw.into_iter().map(|v| v * scale).collect::<Vec<_>>()
        };
        Ok(Self {
            a: family(0),
            b: family(1),
            c: family(2),
            domain_radius: 5.0,
        })
    }
}

impl ObjectiveStream for TrackingQuadratic {
    fn n_agents(&self) -> usize {
        self.a.len()
    }

    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, agent: usize, t: u64, x: &[f64]) -> f64 {
        let d = reference_signal(t);
        let x = x[0];
        self.a[agent] * x * x - 2.0 * self.b[agent] * d * x + self.c[agent] * d * d
    }

    fn minimizer(&self, t: u64) -> Option<Vec<f64>> {
        Some(vec![reference_signal(t)])
    }

    fn subgradient_bound(&self) -> Option<f64> {
        // |2 a x - 2 b d| with |x| <= radius and |d(t)| <= 0.016
        let amax = self.a.iter().cloned().fold(0.0, f64::max);
        let bmax = self.b.iter().cloned().fold(0.0, f64::max);
        Some(2.0 * amax * self.domain_radius + 2.0 * bmax * 0.016)
    }

    fn name(&self) -> &str {
        "paper_quadratic"
    }
}

/// Time-invariant linear costs `f_i(x) = <d_i, x>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe {
    pub directions: Vec<Vec<f64>>,
}

impl LinearProbe {
    pub fn sample(n: usize, dim: usize, coeff_seed: u64) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::invalid("linear probe needs n >= 1 and dim >= 1"));
        }
        let streams = RngStream::new(coeff_seed);
        let directions = (0..n)
            .map(|i| {
                let mut rng = streams.substream(i, 0, purpose::COEFFICIENTS);
                (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
            })
            .collect();
        Ok(Self { directions })
    }
}

impl ObjectiveStream for LinearProbe {
    fn n_agents(&self) -> usize {
        self.directions.len()
    }

    fn dim(&self) -> usize {
        self.directions[0].len()
    }

    fn eval(&self, agent: usize, _t: u64, x: &[f64]) -> f64 {
        self.directions[agent].iter().zip(x).map(|(d, v)| d * v).sum()
    }

    fn subgradient_bound(&self) -> Option<f64> {
        Some(
            self.directions
                .iter()
                .map(|d| d.iter().map(|v| v * v).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
        )
    }

    fn name(&self) -> &str {
        "linear_probe"
    }
}

/// Every local cost is the same constant; the oracle returns zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub n: usize,
    pub dim: usize,
    pub value: f64,
}

impl ObjectiveStream for Constant {
    fn n_agents(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _agent: usize, _t: u64, _x: &[f64]) -> f64 {
        self.value
    }

    fn subgradient_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    fn name(&self) -> &str {
        "constant"
    }
}

/// `f_i(x) = scale * ||x - c_i||`, a `scale`-Lipschitz convex nonsmooth stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormDistance {
    pub scale: f64,
    pub centers: Vec<Vec<f64>>,
}

impl ObjectiveStream for NormDistance {
    fn n_agents(&self) -> usize {
        self.centers.len()
    }

    fn dim(&self) -> usize {
        self.centers[0].len()
    }

    fn eval(&self, agent: usize, _t: u64, x: &[f64]) -> f64 {
        let d2: f64 = x
            .iter()
            .zip(&self.centers[agent])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        self.scale * d2.sqrt()
    }

    fn subgradient_bound(&self) -> Option<f64> {
        Some(self.scale)
    }

    fn name(&self) -> &str {
        "norm_distance"
    }
}

/// `f_i(x) = x^T Q_i x + <q_i, x>` with `Q_i` positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    /// Row-major `dim x dim` matrices.
    pub q: Vec<Vec<f64>>,
    pub linear: Vec<Vec<f64>>,
    pub dim: usize,
}

impl QuadraticForm {
    /// `Q_i = B B^T` with Gaussian `B`, plus a Gaussian linear term.
    pub fn sample(n: usize, dim: usize, seed: u64) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::invalid("quadratic form needs n >= 1 and dim >= 1"));
        }
        let streams = RngStream::new(seed);
        let mut q = Vec::with_capacity(n);
        let mut linear = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = streams.substream(i, 0, purpose::COEFFICIENTS);
            let b: Vec<f64> = (0..dim * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut m = vec![0.0; dim * dim];
            for r in 0..dim {
                for c in 0..dim {
                    m[r * dim + c] = (0..dim).map(|k| b[r * dim + k] * b[c * dim + k]).sum();
                }
            }
            q.push(m);
            linear.push((0..dim).map(|_| StandardNormal.sample(&mut rng)).collect());
        }
        Ok(Self { q, linear, dim })
    }

    /// `(Q_i + Q_i^T) x + q_i`
    pub fn gradient(&self, agent: usize, x: &[f64]) -> Vec<f64> {
        let (m, d) = (&self.q[agent], self.dim);
        (0..d)
            .map(|r| {
                (0..d).map(|c| (m[r * d + c] + m[c * d + r]) * x[c]).sum::<f64>()
                    + self.linear[agent][r]
            })
            .collect()
    }
}

impl ObjectiveStream for QuadraticForm {
    fn n_agents(&self) -> usize {
        self.q.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, agent: usize, _t: u64, x: &[f64]) -> f64 {
        let (m, d) = (&self.q[agent], self.dim);
        let mut quad = 0.0;
        for r in 0..d {
            for c in 0..d {
                quad += x[r] * m[r * d + c] * x[c];
            }
        }
        quad + self.linear[agent].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    fn name(&self) -> &str {
        "quadratic_form"
    }
}

/// Names accepted by [`builtin_stream`].
pub const BUILTIN_STREAMS: [&str; 3] = ["paper_quadratic", "linear_probe", "constant"];

/// Resolves a registry name into a stream for `n` agents in dimension `dim`.
pub fn builtin_stream(
    name: &str,
    n: usize,
    dim: usize,
    coeff_seed: u64,
) -> Result<Arc<dyn ObjectiveStream>> {
    match name {
        "paper_quadratic" => {
            if dim != 1 {
                return Err(Error::invalid("paper_quadratic is one-dimensional"));
            }
            Ok(Arc::new(TrackingQuadratic::sample(n, coeff_seed)?))
        }
        "linear_probe" => Ok(Arc::new(LinearProbe::sample(n, dim, coeff_seed)?)),
        "constant" => {
            if n == 0 || dim == 0 {
                return Err(Error::invalid("constant stream needs n >= 1 and dim >= 1"));
            }
            Ok(Arc::new(Constant { n, dim, value: 1.0 }))
        }
        other => Err(Error::invalid(format!(
            "unknown stream {other:?}; expected one of {BUILTIN_STREAMS:?}"
        ))),
    }
}
