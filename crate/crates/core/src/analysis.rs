//! Regret, path-length, consensus and spectral diagnostics over traces.

use serde::{Deserialize, Serialize};

use crate::algorithm::norm;
use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::fit::{fit_geometric, GeometricFit};
use crate::graph::{build_augmented, delta_hat, gap_series, WeightPair};
use crate::oracle::ObjectiveStream;
use crate::trace::Trace;

/// Pairs summed by [`path_length`].
pub const PATH_LENGTH_CONVENTION: &str =
    "sum of ||x*(t+1) - x*(t)|| over consecutive recorded pairs t = 0..T-1";

/// Where per-step optimal points come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MinimizerSource {
    /// The stream's closed-form minimizer.
    Analytic,
    /// Golden-section search on a one-dimensional box.
    GoldenSection { tol: f64 },
}

impl Default for MinimizerSource {
    fn default() -> Self {
        MinimizerSource::GoldenSection { tol: 1e-6 }
    }
}

/// Minimizes the aggregate `f^t` over a one-dimensional box to `tol`.
pub fn golden_section_minimizer(
    stream: &dyn ObjectiveStream,
    t: u64,
    omega: &FeasibleSet,
    tol: f64,
) -> Result<Vec<f64>> {
    let (mut lo, mut hi) = match omega {
        FeasibleSet::Box { lo, hi } if lo.len() == 1 => (lo[0], hi[0]),
        _ => {
            return Err(Error::Minimizer {
                t,
                reason: "numeric fallback supports one-dimensional boxes only".into(),
            })
        }
    };
    if !(tol > 0.0) {
        return Err(Error::Minimizer {
            t,
            reason: format!("tolerance must be positive, got {tol}"),
        });
    }
    let f = |x: f64| stream.global_eval(t, &[x]);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    let mut iters = 0;
    while hi - lo > tol {
        if !fa.is_finite() || !fb.is_finite() {
            return Err(Error::Minimizer {
                t,
                reason: "non-finite objective".into(),
            });
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
        iters += 1;
        if iters > 500 {
            return Err(Error::Minimizer {
                t,
                reason: "golden section did not converge".into(),
            });
        }
    }
    // endpoints catch minimizers sitting on the boundary
    let mid = 0.5 * (lo + hi);
    let (l0, h0) = match omega {
        FeasibleSet::Box { lo, hi } => (lo[0], hi[0]),
        FeasibleSet::Ball { .. } => unreachable!(),
    };
    let best = [mid, l0, h0]
        .into_iter()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .expect("nonempty");
    Ok(vec![best])
}

/// Cumulative online and offline costs per agent over a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    pub n_agents: usize,
    /// `sum_{s<=t} f^s(x_i(s))`, row-major `(t, agent)`.
    cumulative_cost: Vec<f64>,
    /// `sum_{s<=t} f^s(x*(s))`
    cumulative_offline: Vec<f64>,
    pub minimizers: Vec<Vec<f64>>,
    pub path_length: f64,
    pub minimizer_source: MinimizerSource,
}

impl RegretLedger {
    pub fn horizon(&self) -> usize {
        self.cumulative_offline.len() - 1
    }

    /// `R_i(t) = sum_{s<=t} f^s(x_i(s)) - sum_{s<=t} f^s(x*(s))`
    pub fn regret_at(&self, t: usize, agent: usize) -> f64 {
        self.cumulative_cost[t * self.n_agents + agent] - self.cumulative_offline[t]
    }

    pub fn cumulative_cost(&self, t: usize, agent: usize) -> f64 {
        self.cumulative_cost[t * self.n_agents + agent]
    }

    pub fn offline_cost(&self, t: usize) -> f64 {
        self.cumulative_offline[t]
    }

    /// Final regret per agent.
    pub fn regret(&self) -> Vec<f64> {
        let t = self.horizon();
        (0..self.n_agents).map(|i| self.regret_at(t, i)).collect()
    }

    /// Regret accumulated over `t in (from, to]` for one agent.
    pub fn regret_between(&self, from: usize, to: usize, agent: usize) -> f64 {
        self.regret_at(to, agent) - self.regret_at(from, agent)
    }

    /// `R_i(t) / t` with the `t = 0` entry reported as `R_i(0)`.
    pub fn time_averaged(&self, t: usize, agent: usize) -> f64 {
        self.regret_at(t, agent) / (t.max(1) as f64)
    }

    /// `(1/N) sum_i R_i(t) / t`
    pub fn mean_time_averaged(&self, t: usize) -> f64 {
        (0..self.n_agents).map(|i| self.time_averaged(t, i)).sum::<f64>() / self.n_agents as f64
    }
}

/// Builds the regret ledger from a trace. Uses recorded optimal points when
/// present, else `source` against `omega`.
pub fn regret_ledger(
    trace: &Trace,
    stream: &dyn ObjectiveStream,
    omega: &FeasibleSet,
    source: MinimizerSource,
) -> Result<RegretLedger> {
    if trace.is_empty() {
        return Err(Error::invalid("empty trace"));
    }
    let n = trace.n_agents;
    let len = trace.len();
    let mut minimizers = Vec::with_capacity(len);
    let mut used = source;
    for t in 0..len {
        let xs = match (trace.x_star(t), source) {
            (Some(xs), _) => {
                used = MinimizerSource::Analytic;
                xs.to_vec()
            }
            (None, MinimizerSource::Analytic) => stream.minimizer(t as u64).ok_or(Error::Minimizer {
                t: t as u64,
                reason: "stream has no analytic minimizer".into(),
            })?,
            (None, MinimizerSource::GoldenSection { tol }) => {
                golden_section_minimizer(stream, t as u64, omega, tol)?
            }
        };
        minimizers.push(xs);
    }
    let mut cumulative_cost = Vec::with_capacity(len * n);
    let mut cumulative_offline = Vec::with_capacity(len);
    let mut run = vec![0.0; n];
    let mut off = 0.0;
    for (t, xs) in minimizers.iter().enumerate() {
        off += stream.global_eval(t as u64, xs);
        cumulative_offline.push(off);
        for (i, r) in run.iter_mut().enumerate() {
            *r += trace.global_cost(t, i);
        }
        cumulative_cost.extend_from_slice(&run);
    }
    let path_length = path_length(&minimizers);
    Ok(RegretLedger {
        n_agents: n,
        cumulative_cost,
        cumulative_offline,
        minimizers,
        path_length,
        minimizer_source: used,
    })
}

/// Final dynamic regret `R_i(T)` per agent.
pub fn dynamic_regret(
    trace: &Trace,
    stream: &dyn ObjectiveStream,
    omega: &FeasibleSet,
    source: MinimizerSource,
) -> Result<Vec<f64>> {
    Ok(regret_ledger(trace, stream, omega, source)?.regret())
}

/// Total movement of the optimal points.
pub fn path_length(minimizers: &[Vec<f64>]) -> f64 {
    minimizers
        .windows(2)
        .map(|w| norm(&w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect::<Vec<_>>()))
        .sum()
}

/// Disagreement across agents over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusCurve {
    /// `max_i ||x_i(t) - mean_j x_j(t)||`
    pub spread: Vec<f64>,
    /// `max_i ||x_i(t) - (1/N) sum_j (x_j(t) + y_j(t))||`
    pub augmented_deviation: Vec<f64>,
}

pub fn consensus_curve(trace: &Trace) -> Result<ConsensusCurve> {
    if trace.is_empty() {
        return Err(Error::invalid("empty trace"));
    }
    let augmented_deviation = (0..trace.len())
        .map(|t| {
            let m = trace.augmented_mean(t);
            (0..trace.n_agents)
                .map(|i| {
                    norm(&trace.x(t, i).iter().zip(m).map(|(a, b)| a - b).collect::<Vec<_>>())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(ConsensusCurve {
        spread: trace.spread().to_vec(),
        augmented_deviation,
    })
}

/// Geometric fit of a positive curve over `t in [from, to]`.
pub fn fit_decay(curve: &[f64], from: usize, to: usize) -> Result<GeometricFit> {
    if to >= curve.len() || from >= to {
        return Err(Error::Fit(format!("bad window [{from}, {to}] for {} points", curve.len())));
    }
    let (ts, ys): (Vec<f64>, Vec<f64>) = (from..=to).map(|t| (t as f64, curve[t])).unzip();
    fit_geometric(&ts, &ys)
}

/// Empirical stand-ins for the projection-residual constants, measured on
/// steps `t >= from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaStats {
    pub from: u64,
    /// `max Theta(t) / gamma(t)`
    pub g1: f64,
    /// `max Theta(t)^2 / gamma(t)^2`
    pub g2: f64,
    /// `max (sum_i ||g_i(t)||) Theta(t) / gamma(t)`
    pub g3: f64,
    /// Running max of `Theta/gamma` at `T/10` and at `T`.
    pub running_max_at_tenth: f64,
    pub running_max_at_end: f64,
}

pub fn theta_stats(trace: &Trace, from: u64) -> Result<ThetaStats> {
    let steps: Vec<_> = trace.steps.iter().filter(|s| s.t >= from).collect();
    if steps.is_empty() {
        return Err(Error::invalid(format!("no steps at or after t={from}")));
    }
    let horizon = trace.steps.last().map_or(0, |s| s.t + 1);
    let tenth = (horizon / 10).max(from);
    let (mut g1, mut g2, mut g3, mut at_tenth) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for s in &steps {
        let r = s.theta_total / s.gamma;
        g1 = g1.max(r);
        g2 = g2.max(r * r);
        g3 = g3.max(s.oracle_norm_sum * r);
        if s.t <= tenth {
            at_tenth = at_tenth.max(r);
        }
    }
    Ok(ThetaStats {
        from,
        g1,
        g2,
        g3,
        running_max_at_tenth: at_tenth,
        running_max_at_end: g1,
    })
}

/// Inputs of the dynamic-regret bound. `mu_hat` and `path_length` may be zero;
/// every other value must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n_agents: usize,
    pub dim: usize,
    /// `sup ||x||` over the feasible set.
    pub rho: f64,
    /// Local subgradient bound.
    pub d_hat: f64,
    pub mu_hat: f64,
    /// Gradient Lipschitz constant of the smoothed costs, `sqrt(p) D / min mu`.
    pub l_hat: f64,
    pub gamma0: f64,
    pub lambda: f64,
    pub c: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub nu_hat: f64,
    pub horizon: u64,
    pub path_length: f64,
}

/// Evaluated bound with its pieces and what each constant stands in for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretBound {
    pub smoothing_term: f64,
    pub c1: f64,
    pub c2: f64,
    pub path_term: f64,
    pub total: f64,
    pub stand_ins: Vec<(String, f64, String)>,
}

pub fn regret_bound_rhs(p: &BoundParams) -> Result<RegretBound> {
    let positive = [
        ("rho", p.rho),
        ("d_hat", p.d_hat),
        ("l_hat", p.l_hat),
        ("gamma0", p.gamma0),
        ("lambda", p.lambda),
        ("c", p.c),
        ("g1", p.g1),
        ("g2", p.g2),
        ("g3", p.g3),
        ("nu_hat", p.nu_hat),
    ];
    for (name, v) in positive {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    for (name, v) in [("mu_hat", p.mu_hat), ("path_length", p.path_length)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be nonnegative, got {v}")));
        }
    }
    if p.n_agents == 0 || p.dim == 0 {
        return Err(Error::invalid("n_agents and dim must be positive"));
    }
    if p.lambda >= 1.0 {
        return Err(Error::invalid(format!("lambda must lie in (0, 1), got {}", p.lambda)));
    }
    let n = p.n_agents as f64;
    let dim = p.dim as f64;
    let c_hat = p.c.max(1.0);
    let one_minus = 1.0 - p.lambda;
    let t1 = (p.horizon + 1) as f64;

    let smoothing_term = t1 * dim.sqrt() * n * p.mu_hat * p.d_hat;
    let c1 = p.gamma0
        * (2.0 * n * p.rho * p.g1 * c_hat
            + 4.0 * n * n * p.rho * p.rho * p.l_hat * c_hat
            + 2.0 * (dim + 5.0) * n * n * p.rho * p.d_hat * c_hat)
        / one_minus;
    let c2 = n * p.nu_hat / p.gamma0
        + p.gamma0 * (dim + 4.0).powi(2) * n * p.d_hat * p.d_hat
        + 2.0 * p.gamma0 * p.g2 * c_hat
        + 2.0 * p.gamma0 * p.g3 * c_hat
        + p.gamma0
            * (2.0 * p.g2 * c_hat
                + 4.0 * n * p.rho * p.l_hat * p.g1 * c_hat
                + 2.0 * (dim + 5.0) * n * p.d_hat * p.g1 * c_hat)
            / one_minus;
    let path_term = 2.0 * n * p.rho * p.path_length / p.gamma0 * t1.sqrt();
    let total = smoothing_term + c1 + path_term + c2 * t1.sqrt();
    let stand_ins = vec![
        ("C".into(), p.c, "log-linear fit of the augmented-matrix power gap".into()),
        ("lambda".into(), p.lambda, "log-linear fit of the augmented-matrix power gap".into()),
        ("G1".into(), p.g1, "observed max Theta(t)/gamma(t)".into()),
        ("G2".into(), p.g2, "observed max Theta(t)^2/gamma(t)^2".into()),
        ("G3".into(), p.g3, "observed max sum_i ||g_i|| Theta(t)/gamma(t)".into()),
        ("nu_hat".into(), p.nu_hat, "max of 2 rho^2 and observed 0.5 ||mean phi - x*||^2".into()),
        ("L_hat".into(), p.l_hat, "sqrt(p) D_hat / min mu".into()),
    ];
    Ok(RegretBound {
        smoothing_term,
        c1,
        c2,
        path_term,
        total,
        stand_ins,
    })
}

/// One row of [`spectral_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralRow {
    pub delta: f64,
    pub delta_hat: Option<f64>,
    pub ln_delta_hat: Option<f64>,
    pub spectral_radius: Option<f64>,
    /// Asymptotic decay rate: modulus of the second eigenvalue of W(delta).
    pub second_modulus: Option<f64>,
    pub fit: Option<GeometricFit>,
    /// `max gap(t+1)/gap(t)` over the ratio window.
    pub max_ratio: Option<f64>,
    pub status: DecayStatus,
    /// `||W^400 - limit||_inf`, reported when decay is geometric.
    pub residual_t400: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayStatus {
    /// Ratio test passed on the whole window.
    Geometric,
    /// Spectral radius above one.
    Diverging,
    /// Second eigenvalue within 1e-9 of the unit circle: decay is too slow
    /// to observe on the window.
    Stalled,
    /// Neither: the gap shrinks too slowly or oscillates.
    Inconclusive,
    Failed,
}

/// Window for the ratio test `gap(t+1)/gap(t) <= RATIO_CEILING`.
pub const RATIO_WINDOW: (usize, usize) = (20, 200);
pub const RATIO_CEILING: f64 = 0.999;

/// Ratio test, fitted `(C, lambda)` over [5, 200] and the `t = 400` residual
/// for each coupling value.
pub fn spectral_report(wp: &WeightPair, delta_grid: &[f64]) -> Vec<SpectralRow> {
    let dh = delta_hat(wp);
    delta_grid
        .iter()
        .map(|&delta| spectral_row(wp, delta, dh.as_ref().ok().copied(), dh.as_ref().err()))
        .collect()
}

fn spectral_row(
    wp: &WeightPair,
    delta: f64,
    dh: Option<crate::graph::DeltaHat>,
    dh_err: Option<&Error>,
) -> SpectralRow {
    let mut row = SpectralRow {
        delta,
        delta_hat: dh.map(|d| d.value),
        ln_delta_hat: dh.map(|d| d.ln_value),
        spectral_radius: None,
        second_modulus: None,
        fit: None,
        max_ratio: None,
        status: DecayStatus::Failed,
        residual_t400: None,
        error: dh_err.map(|e| e.to_string()),
    };
    if !(delta > 0.0) {
        row.error = Some(format!("delta must be positive, got {delta}"));
        return row;
    }
    let am = match build_augmented(wp, delta) {
        Ok(am) => am,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    match am.eigenvalue_moduli() {
        Ok(m) => {
            row.spectral_radius = m.first().copied();
            row.second_modulus = m.get(1).copied();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    let gaps = gap_series(&am, 400);
    let gap = |t: usize| gaps[t - 1];
    let (fa, fb) = crate::simulation::FIT_WINDOW;
    match fit_decay(&gaps_with_offset(&gaps), fa as usize, fb as usize) {
        Ok(f) => row.fit = Some(f),
        Err(e) => row.error = Some(e.to_string()),
    }
    let max_ratio = (RATIO_WINDOW.0..RATIO_WINDOW.1)
        .map(|t| gap(t + 1) / gap(t))
        .fold(0.0, f64::max);
    row.max_ratio = Some(max_ratio);
    row.status = if max_ratio <= RATIO_CEILING {
        DecayStatus::Geometric
    } else if row.spectral_radius.is_some_and(|r| r > 1.0 + 1e-9) {
        DecayStatus::Diverging
    } else if row.second_modulus.is_some_and(|r| r > 1.0 - 1e-9) {
        DecayStatus::Stalled
    } else {
        DecayStatus::Inconclusive
    };
    if row.status == DecayStatus::Geometric {
        row.residual_t400 = Some(gap(400));
    }
    row
}

/// Index-aligned copy so that entry `t` holds the gap at power `t`.
fn gaps_with_offset(gaps: &[f64]) -> Vec<f64> {
    std::iter::once(f64::NAN).chain(gaps.iter().copied()).collect()
}
