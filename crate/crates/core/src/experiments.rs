//! Canned experiments: the 10-agent tracking run and the network-size sweep
//! on directed circles, plus the diagnostics tables.

use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    consensus_curve, regret_bound_rhs, regret_ledger, spectral_report, theta_stats, BoundParams,
    ConsensusCurve, MinimizerSource, RegretBound, RegretLedger, SpectralRow, ThetaStats,
    PATH_LENGTH_CONVENTION,
};
use crate::config::{GraphSpec, RunConfig, REFERENCE_GRAPH_SEED};
use crate::error::{Error, Result};
use crate::graph::{delta_hat, equal_neighbor_weights, Digraph, WeightPair};
use crate::oracle::{
    gradient_free_oracle, smoothed_value_mc, DirectionLaw, NormDistance,
    ObjectiveStream, OracleConfig, QuadraticForm, RngStream,
};
use crate::output;
use crate::simulation::{run, RunMetadata, RunOutput};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_HORIZON: u64 = 5000;
pub const FIG4_SIZES: [usize; 4] = [10, 50, 100, 200];

/// Stated in every output built on the substitute topology or horizon.
pub const SUBSTITUTE_NOTE: &str = "the 10-agent topology and the horizon are substitutes: \
random strongly connected digraph (cycle backbone, extra-edge probability 0.3, graph seed 7) and T = 5000 by default";

pub const FIG4_SEED_POLICY: &str = "one master seed for all N: agent i draws its initial decision and \
directions from the same substreams at every N; stream coefficients are regenerated per N because \
their sums are tied to N";

/// Results of the 10-agent tracking experiment.
#[derive(Debug)]
pub struct Fig23 {
    pub run: RunOutput,
    pub ledger: RegretLedger,
    pub consensus: ConsensusCurve,
    pub theta: Option<ThetaStats>,
    pub bound: Option<RegretBound>,
    pub summary: Fig23Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig23Summary {
    pub seed: u64,
    pub horizon: u64,
    pub spread_at_100: Option<f64>,
    pub spread_at_end: f64,
    /// `max_i |x_i(T) - x*(T)|`
    pub tracking_error_at_end: Option<f64>,
    pub regret: Vec<f64>,
    pub time_averaged_regret_at_end: Vec<f64>,
    pub time_averaged_regret_at_tenth: Vec<f64>,
    pub path_length: f64,
    pub path_length_convention: String,
    pub minimizer_source: MinimizerSource,
    pub bound_total: Option<f64>,
    pub bound_note: Option<String>,
    pub notes: Vec<String>,
}

/// Reference configuration at `seed` and `horizon`.
pub fn reference_config(seed: u64, horizon: u64) -> RunConfig {
    let mut cfg = RunConfig::reference(seed);
    cfg.horizon = horizon;
    cfg
}

/// Runs a configuration and derives the regret ledger, consensus curve,
/// residual statistics and regret bound from it.
pub fn analyse_run(cfg: &RunConfig) -> Result<Fig23> {
    let out = run(cfg)?;
    let ledger = regret_ledger(
        &out.trace,
        out.stream.as_ref(),
        &cfg.omega,
        MinimizerSource::default(),
    )?;
    let consensus = consensus_curve(&out.trace)?;
    let theta = theta_stats(&out.trace, 10.min(cfg.horizon.saturating_sub(1))).ok();
    let (bound, bound_note) = match theta.map(|th| bound_for(&out, &ledger, &th)) {
        Some(Ok(b)) => (Some(b), None),
        Some(Err(e)) => (None, Some(e.to_string())),
        None => (None, Some("no steps recorded".into())),
    };
    let t_end = out.trace.len() - 1;
    let tenth = t_end / 10;
    let n = out.trace.n_agents;
    let summary = Fig23Summary {
        seed: cfg.seed,
        horizon: cfg.horizon,
        spread_at_100: out.trace.spread().get(100).copied(),
        spread_at_end: out.trace.spread()[t_end],
        tracking_error_at_end: out.trace.x_star(t_end).map(|xs| {
            (0..n)
                .map(|i| crate::algorithm::norm(&diff(out.trace.x(t_end, i), xs)))
                .fold(0.0, f64::max)
        }),
        regret: ledger.regret(),
        time_averaged_regret_at_end: (0..n).map(|i| ledger.time_averaged(t_end, i)).collect(),
        time_averaged_regret_at_tenth: (0..n).map(|i| ledger.time_averaged(tenth, i)).collect(),
        path_length: ledger.path_length,
        path_length_convention: PATH_LENGTH_CONVENTION.into(),
        minimizer_source: ledger.minimizer_source,
        bound_total: bound.as_ref().map(|b| b.total),
        bound_note,
        notes: vec![SUBSTITUTE_NOTE.into()],
    };
    Ok(Fig23 {
        run: out,
        ledger,
        consensus,
        theta,
        bound,
        summary,
    })
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Regret bound with constants measured on the run itself.
pub fn bound_for(out: &RunOutput, ledger: &RegretLedger, theta: &ThetaStats) -> Result<RegretBound> {
    let cfg = &out.metadata.config;
    let fit = out
        .metadata
        .spectral
        .gap_fit
        .ok_or_else(|| Error::Fit("no gap fit for this network".into()))?;
    let d_hat = out
        .stream
        .subgradient_bound()
        .ok_or_else(|| Error::invalid("stream has no subgradient bound"))?;
    let oracle = cfg.oracle();
    let mu_min = oracle.mu.iter().copied().fold(f64::INFINITY, f64::min);
    let p = cfg.omega.dim();
    let rho = cfg.omega.rho();
    let trace = &out.trace;
    let observed_nu = (0..trace.len())
        .map(|t| 0.5 * crate::algorithm::norm(&diff(trace.augmented_mean(t), &ledger.minimizers[t])).powi(2))
        .fold(0.0, f64::max);
    regret_bound_rhs(&BoundParams {
        n_agents: trace.n_agents,
        dim: p,
        rho,
        d_hat,
        mu_hat: oracle.mu_hat(),
        l_hat: (p as f64).sqrt() * d_hat / mu_min,
        gamma0: cfg.step.gamma0(),
        lambda: fit.lambda,
        c: fit.c,
        g1: theta.g1,
        g2: theta.g2,
        g3: theta.g3,
        nu_hat: (2.0 * rho * rho).max(observed_nu),
        horizon: trace.horizon(),
        path_length: ledger.path_length,
    })
}

pub fn experiment_fig2_3(seed: u64, horizon: u64) -> Result<Fig23> {
    analyse_run(&reference_config(seed, horizon))
}

impl Fig23 {
    /// Writes `trajectory.csv`, `regret.csv`, `consensus.csv`,
    /// `metadata.json`, `summary.json` and `plot.py` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let files = [
            "trajectory.csv",
            "regret.csv",
            "consensus.csv",
            "metadata.json",
            "summary.json",
            "plot.py",
        ]
        .map(|f| dir.join(f));
        output::write_csv_file(&files[0], |f| output::write_trace_csv(&self.run.trace, f))?;
        output::write_csv_file(&files[1], |f| output::write_regret_csv(&self.ledger, f))?;
        output::write_csv_file(&files[2], |f| output::write_consensus_csv(&self.consensus, f))?;
        output::write_json(&self.run.metadata, &files[3])?;
        output::write_json(
            &serde_json::json!({
                "summary": self.summary,
                "theta": self.theta,
                "bound": self.bound,
            }),
            &files[4],
        )?;
        output::write_plot_script(dir)?;
        Ok(files.to_vec())
    }
}

/// Network-size sweep on directed circles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4 {
    pub seed: u64,
    pub horizon: u64,
    pub series: Vec<Fig4Series>,
    pub seed_policy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Series {
    pub n_agents: usize,
    /// `(1/N) sum_i R_i(t) / t` for `t = 0..=T`.
    pub mean_time_averaged_regret: Vec<f64>,
    pub spread_at_end: f64,
    pub metadata: RunMetadata,
}

impl Fig4 {
    pub fn final_values(&self) -> Vec<(usize, f64)> {
        self.series
            .iter()
            .map(|s| (s.n_agents, *s.mean_time_averaged_regret.last().expect("nonempty")))
            .collect()
    }

    /// Writes `fig4_n<N>.csv` per network size and `summary.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        for s in &self.series {
            let path = dir.join(format!("fig4_n{}.csv", s.n_agents));
            output::write_csv_file(&path, |f| {
                output::write_series_csv(
                    &["mean_R_over_t".into()],
                    std::slice::from_ref(&s.mean_time_averaged_regret),
                    f,
                )
            })?;
            files.push(path);
        }
        let path = dir.join("summary.json");
        output::write_json(self, &path)?;
        files.push(path);
        output::write_plot_script(dir)?;
        Ok(files)
    }
}

pub fn fig4_config(n: usize, seed: u64, horizon: u64) -> RunConfig {
    let mut cfg = reference_config(seed, horizon);
    cfg.graph = GraphSpec::Cycle { n };
    cfg
}

/// Runs the sweep for `sizes` in parallel.
pub fn experiment_fig4_sizes(seed: u64, horizon: u64, sizes: &[usize]) -> Result<Fig4> {
    let series = sizes
        .par_iter()
        .map(|&n| {
            let cfg = fig4_config(n, seed, horizon);
            let out = run(&cfg)?;
            let ledger = regret_ledger(&out.trace, out.stream.as_ref(), &cfg.omega, MinimizerSource::default())?;
            Ok(Fig4Series {
                n_agents: n,
                mean_time_averaged_regret: (0..=ledger.horizon()).map(|t| ledger.mean_time_averaged(t)).collect(),
                spread_at_end: *out.trace.spread().last().expect("nonempty"),
                metadata: out.metadata,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Fig4 {
        seed,
        horizon,
        series,
        seed_policy: FIG4_SEED_POLICY.into(),
    })
}

pub fn experiment_fig4(seed: u64, horizon: u64) -> Result<Fig4> {
    experiment_fig4_sizes(seed, horizon, &FIG4_SIZES)
}

/// `delta_hat` for one topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyDeltaHat {
    pub topology: String,
    pub n_agents: usize,
    pub sigma3_modulus: f64,
    pub delta_hat: f64,
    pub ln_delta_hat: f64,
}

pub fn topology_delta_hats(sizes: &[usize]) -> Result<Vec<TopologyDeltaHat>> {
    let mut graphs = vec![(
        "random".to_string(),
        Digraph::random_strongly_connected(10, 0.3, REFERENCE_GRAPH_SEED)?,
    )];
    for &n in sizes {
        graphs.push(("cycle".into(), Digraph::cycle(n)?));
    }
    graphs
        .into_par_iter()
        .map(|(name, g)| {
            let dh = delta_hat(&equal_neighbor_weights(&g)?)?;
            Ok(TopologyDeltaHat {
                topology: name,
                n_agents: g.n_agents(),
                sigma3_modulus: dh.sigma3_modulus,
                delta_hat: dh.value,
                ln_delta_hat: dh.ln_value,
            })
        })
        .collect()
}

/// One point of the smoothing sandwich check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub x: f64,
    pub f: f64,
    pub smoothed: f64,
    pub std_error: f64,
    pub upper: f64,
    pub within: bool,
}

/// `f(x) - 3 sigma <= f_mu(x) <= f(x) + sqrt(p) mu D + 3 sigma` on the
/// one-dimensional stream `scale |x - 0.5|`, at points uniform in [-5, 5].
pub fn sandwich_table(n_points: usize, mu: f64, n_samples: usize, seed: u64) -> Result<Vec<SandwichRow>> {
    let stream = NormDistance {
        scale: 2.0,
        centers: vec![vec![0.5]],
    };
    let d_hat = stream.subgradient_bound().expect("bounded");
    let mut rng = RngStream::new(seed).substream(0, 0, crate::oracle::purpose::INITIAL_STATE);
    let points: Vec<f64> = (0..n_points).map(|_| rng.random_range(-5.0..5.0)).collect();
    points
        .into_par_iter()
        .enumerate()
        .map(|(k, x)| {
            let f = stream.eval(0, 0, &[x]);
            let est = smoothed_value_mc(&stream, 0, k as u64, &[x], mu, n_samples, seed)?;
            let upper = f + mu * d_hat;
            let within = f - 3.0 * est.std_error <= est.mean && est.mean <= upper + 3.0 * est.std_error;
            Ok(SandwichRow {
                x,
                f,
                smoothed: est.mean,
                std_error: est.std_error,
                upper,
                within,
            })
        })
        .collect()
}

/// Oracle mean against the finite-difference gradient of the smoothed cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessRow {
    pub function: String,
    pub x: Vec<f64>,
    pub oracle_mean: Vec<f64>,
    pub oracle_std_error: Vec<f64>,
    pub fd_gradient: Vec<f64>,
    /// `max_k |mean_k - fd_k| / std_error_k`
    pub max_z: f64,
}

fn mean_and_std_error(draws: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = draws.len() as f64;
    let p = draws[0].len();
    let mean: Vec<f64> = (0..p).map(|k| draws.iter().map(|g| g[k]).sum::<f64>() / n).collect();
    let se = (0..p)
        .map(|k| {
            let var = draws.iter().map(|g| (g[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        })
        .collect();
    (mean, se)
}

fn oracle_draws(stream: &dyn ObjectiveStream, x: &[f64], mu: f64, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let cfg = OracleConfig::uniform(1, mu, DirectionLaw::Gaussian, seed);
    (0..n as u64)
        .into_par_iter()
        .map(|t| gradient_free_oracle(stream, &cfg, 0, t, x))
        .collect()
}

/// Central finite differences of the Monte Carlo smoothed value, with common
/// random numbers on both sides.
fn smoothed_gradient_fd(
    stream: &dyn ObjectiveStream,
    x: &[f64],
    mu: f64,
    n: usize,
    seed: u64,
    h: f64,
) -> Result<Vec<f64>> {
    (0..x.len())
        .map(|k| {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[k] += h;
            minus[k] -= h;
            let fp = smoothed_value_mc(stream, 0, 0, &plus, mu, n, seed)?.mean;
            let fm = smoothed_value_mc(stream, 0, 0, &minus, mu, n, seed)?.mean;
            Ok((fp - fm) / (2.0 * h))
        })
        .collect()
}

/// Unbiasedness study on `||x||^2` and one random convex quadratic in R^3.
pub fn unbiasedness_table(n_points: usize, mu: f64, n_samples: usize, seed: u64) -> Result<Vec<UnbiasednessRow>> {
    let dim = 3;
    let identity = QuadraticForm {
        q: vec![(0..dim * dim).map(|k| if k % (dim + 1) == 0 { 1.0 } else { 0.0 }).collect()],
        linear: vec![vec![0.0; dim]],
        dim,
    };
    let random = QuadraticForm::sample(1, dim, seed)?;
    let mut rng = RngStream::new(seed).substream(0, 1, crate::oracle::purpose::INITIAL_STATE);
    let points: Vec<Vec<f64>> = (0..n_points)
        .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let mut rows = Vec::new();
    for (name, stream) in [("squared_norm", &identity), ("random_quadratic", &random)] {
        for (k, x) in points.iter().enumerate() {
            let draws = oracle_draws(stream, x, mu, n_samples, seed.wrapping_add(k as u64))?;
            let (mean, se) = mean_and_std_error(&draws);
            let fd = smoothed_gradient_fd(stream, x, mu, n_samples, seed ^ 0x5eed_0000 ^ k as u64, 1e-3)?;
            let max_z = mean
                .iter()
                .zip(&se)
                .zip(&fd)
                .map(|((m, s), f)| (m - f).abs() / s)
                .fold(0.0, f64::max);
            rows.push(UnbiasednessRow {
                function: name.into(),
                x: x.clone(),
                oracle_mean: mean,
                oracle_std_error: se,
                fd_gradient: fd,
                max_z,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentRow {
    pub dim: usize,
    pub mean_sq_norm: f64,
    pub ceiling: f64,
}

/// Mean `||g||^2` against `(p + 4)^2 D^2` on `scale ||x - c||`.
pub fn second_moment_table(dims: &[usize], mu: f64, n_samples: usize, seed: u64) -> Result<Vec<SecondMomentRow>> {
    dims.iter()
        .map(|&p| {
            let stream = NormDistance {
                scale: 1.5,
                centers: vec![vec![0.25; p]],
            };
            let x = vec![1.0; p];
            let draws = oracle_draws(&stream, &x, mu, n_samples, seed)?;
            let mean_sq_norm = draws.iter().map(|g| g.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / n_samples as f64;
            let d = stream.scale;
            Ok(SecondMomentRow {
                dim: p,
                mean_sq_norm,
                ceiling: ((p as f64 + 4.0) * d).powi(2),
            })
        })
        .collect()
}

/// Coupling values for the spectral tables: fractions of `delta_hat` plus
/// the practical values.
pub fn delta_grid(wp: &WeightPair) -> Vec<f64> {
    let mut grid = vec![0.01, 0.05, 0.1];
    if let Ok(dh) = delta_hat(wp) {
        grid.splice(0..0, [0.5 * dh.value, 0.9 * dh.value]);
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub delta_hats: Vec<TopologyDeltaHat>,
    pub sandwich: Vec<SandwichRow>,
    pub unbiasedness: Vec<UnbiasednessRow>,
    pub second_moment: Vec<SecondMomentRow>,
    pub spectral: Vec<(String, Vec<SpectralRow>)>,
    pub theta: Option<ThetaStats>,
    pub notes: Vec<String>,
}

pub const MC_SAMPLES: usize = 100_000;

pub fn experiment_diagnostics(seed: u64, horizon: u64) -> Result<Diagnostics> {
    let delta_hats = topology_delta_hats(&FIG4_SIZES)?;
    let sandwich = sandwich_table(20, 0.1, MC_SAMPLES, seed)?;
    let unbiasedness = unbiasedness_table(5, 0.05, MC_SAMPLES, seed)?;
    let second_moment = second_moment_table(&[1, 2, 5], 1e-4, MC_SAMPLES, seed)?;
    let mut spectral = Vec::new();
    for (name, g) in [
        ("cycle(10)", Digraph::cycle(10)?),
        ("random(10)", Digraph::random_strongly_connected(10, 0.3, REFERENCE_GRAPH_SEED)?),
    ] {
        let wp = equal_neighbor_weights(&g)?;
        spectral.push((name.to_string(), spectral_report(&wp, &delta_grid(&wp))));
    }
    let run = run(&reference_config(seed, horizon))?;
    let theta = theta_stats(&run.trace, 10).ok();
    Ok(Diagnostics {
        delta_hats,
        sandwich,
        unbiasedness,
        second_moment,
        spectral,
        theta,
        notes: vec![
            SUBSTITUTE_NOTE.into(),
            "theta statistics cover steps t >= 10 of the reference run".into(),
        ],
    })
}

impl Diagnostics {
    /// Writes `diagnostics.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let path = dir.join("diagnostics.json");
        output::write_json(self, &path)?;
        Ok(vec![path])
    }
}
