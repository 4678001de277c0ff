//! Synchronous surplus-based projected update with gradient-free steps.
//!
//! For every agent `i`, with `m_i = sum_j [W_r]_ij x_j(t)`:
//!
//! ```text
//! x_i(t+1) = P[ m_i + delta y_i(t) - gamma(t) g_i(t) ]
//! y_i(t+1) = sum_j [W_c]_ij y_j(t) - m_i + x_i(t) - delta y_i(t)
//! ```
//!
//! where `P` is the Euclidean projection onto the feasible set and `g_i` is the
//! two-point oracle estimate at `x_i(t)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::graph::WeightPair;
use crate::oracle::{gradient_free_oracle, ObjectiveStream, OracleConfig};

/// Agent counts at or above this update in parallel within a step.
const PARALLEL_AGENTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl AgentState {
    pub fn new(x: Vec<f64>) -> Self {
        let y = vec![0.0; x.len()];
        Self { x, y }
    }
}

/// Nonzero entries of each row of a dense matrix.
#[derive(Debug, Clone)]
struct SparseRows(Vec<Vec<(usize, f64)>>);

impl SparseRows {
    fn from_dense(m: &nalgebra::DMatrix<f64>) -> Self {
        SparseRows(
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .filter(|&j| m[(i, j)] != 0.0)
                        .map(|j| (j, m[(i, j)]))
                        .collect()
                })
                .collect(),
        )
    }

    fn apply<'a>(&self, i: usize, vecs: impl Fn(usize) -> &'a [f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(j, w) in &self.0[i] {
            let v = vecs(j);
            for (o, s) in out.iter_mut().zip(v) {
                *o += w * s;
            }
        }
    }
}

/// Everything about the update that stays fixed over a run.
#[derive(Debug, Clone)]
pub struct UpdateLaw {
    weights: WeightPair,
    delta: f64,
    omega: FeasibleSet,
    row: SparseRows,
    col: SparseRows,
}

/// Result of one synchronous step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub states: Vec<AgentState>,
    /// Oracle estimate used by each agent.
    pub oracle: Vec<Vec<f64>>,
}

/// Projection residuals `theta_i = x_i(t+1) - m_i - delta y_i(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaResidual {
    pub per_agent: Vec<Vec<f64>>,
    /// `sum_i ||theta_i||`
    pub total: f64,
}

impl UpdateLaw {
    pub fn new(weights: WeightPair, delta: f64, omega: FeasibleSet) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::invalid(format!("delta must be positive, got {delta}")));
        }
        omega.validate()?;
        let row = SparseRows::from_dense(weights.row());
        let col = SparseRows::from_dense(weights.col());
        Ok(Self {
            weights,
            delta,
            omega,
            row,
            col,
        })
    }

    pub fn weights(&self) -> &WeightPair {
        &self.weights
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn omega(&self) -> &FeasibleSet {
        &self.omega
    }

    pub fn n_agents(&self) -> usize {
        self.weights.n_agents()
    }

    fn mixed(&self, states: &[AgentState], i: usize) -> Vec<f64> {
        let mut m = vec![0.0; states[i].x.len()];
        self.row.apply(i, |j| states[j].x.as_slice(), &mut m);
        m
    }

    fn check_shapes(&self, states: &[AgentState]) -> Result<usize> {
        if states.len() != self.n_agents() {
            return Err(Error::invalid(format!(
                "expected {} agent states, got {}",
                self.n_agents(),
                states.len()
            )));
        }
        let p = self.omega.dim();
        if states.iter().any(|s| s.x.len() != p || s.y.len() != p) {
            return Err(Error::invalid(format!("agent states must have dimension {p}")));
        }
        Ok(p)
    }

    /// Advances all agents from `t` to `t + 1`. Every agent reads the
    /// time-`t` snapshot only, so the result does not depend on update order.
    pub fn step(
        &self,
        states: &[AgentState],
        gamma: f64,
        stream: &dyn ObjectiveStream,
        cfg: &OracleConfig,
        t: u64,
    ) -> Result<StepOutcome> {
        self.check_shapes(states)?;
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::invalid(format!("step size must be positive, got {gamma}")));
        }
        let update = |i: usize| -> Result<(AgentState, Vec<f64>)> {
            let me = &states[i];
            let g = gradient_free_oracle(stream, cfg, i, t, &me.x)?;
            let m = self.mixed(states, i);
            let mut x_next: Vec<f64> = m
                .iter()
                .zip(&me.y)
                .zip(&g)
                .map(|((mk, yk), gk)| mk + self.delta * yk - gamma * gk)
                .collect();
            self.omega.project_in_place(&mut x_next);
            let mut y_next = vec![0.0; me.y.len()];
            self.col.apply(i, |j| states[j].y.as_slice(), &mut y_next);
            for (k, yk) in y_next.iter_mut().enumerate() {
                *yk += -m[k] + me.x[k] - self.delta * me.y[k];
            }
            if x_next.iter().chain(&y_next).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "agent state",
                    agent: i,
                    t,
                });
            }
            Ok((AgentState { x: x_next, y: y_next }, g))
        };
        let n = states.len();
        let results: Vec<Result<(AgentState, Vec<f64>)>> = if n >= PARALLEL_AGENTS {
            (0..n).into_par_iter().map(update).collect()
        } else {
            (0..n).map(update).collect()
        };
        let mut out = StepOutcome {
            states: Vec::with_capacity(n),
            oracle: Vec::with_capacity(n),
        };
        for r in results {
            let (s, g) = r?;
            out.states.push(s);
            out.oracle.push(g);
        }
        Ok(out)
    }

    pub fn theta_residual(&self, before: &[AgentState], after: &[AgentState]) -> Result<ThetaResidual> {
        self.check_shapes(before)?;
        self.check_shapes(after)?;
        let per_agent: Vec<Vec<f64>> = (0..before.len())
            .map(|i| {
                let m = self.mixed(before, i);
                after[i]
                    .x
                    .iter()
                    .zip(&m)
                    .zip(&before[i].y)
                    .map(|((xn, mk), yk)| xn - mk - self.delta * yk)
                    .collect()
            })
            .collect();
        let total = per_agent.iter().map(|v| norm(v)).sum();
        Ok(ThetaResidual { per_agent, total })
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `(1/N) sum_i (x_i + y_i)`, the mean of the stacked decision/surplus vector.
pub fn augmented_mean(states: &[AgentState]) -> Vec<f64> {
    let n = states.len() as f64;
    let p = states.first().map_or(0, |s| s.x.len());
    let mut m = vec![0.0; p];
    for s in states {
        for ((acc, x), y) in m.iter_mut().zip(&s.x).zip(&s.y) {
            *acc += x + y;
        }
    }
    m.iter_mut().for_each(|v| *v /= n);
    m
}

/// Agent mean of the decisions.
pub fn decision_mean(states: &[AgentState]) -> Vec<f64> {
    let n = states.len() as f64;
    let p = states.first().map_or(0, |s| s.x.len());
    let mut m = vec![0.0; p];
    for s in states {
        for (acc, x) in m.iter_mut().zip(&s.x) {
            *acc += x;
        }
    }
    m.iter_mut().for_each(|v| *v /= n);
    m
}

/// `max_i ||x_i - mean(x)||`
pub fn spread(states: &[AgentState]) -> f64 {
    let mean = decision_mean(states);
    states
        .iter()
        .map(|s| norm(&s.x.iter().zip(&mean).map(|(a, b)| a - b).collect::<Vec<_>>()))
        .fold(0.0, f64::max)
}

/// Norm of the violation of the mean-conservation identity
/// `mean(phi(t+1)) - mean(phi(t)) = (1/N) sum_i theta_i`.
pub fn conservation_residual(before: &[AgentState], after: &[AgentState], theta: &ThetaResidual) -> f64 {
    let n = before.len() as f64;
    let (m0, m1) = (augmented_mean(before), augmented_mean(after));
    let p = m0.len();
    let mut r = vec![0.0; p];
    for k in 0..p {
        let th: f64 = theta.per_agent.iter().map(|v| v[k]).sum::<f64>() / n;
        r[k] = m1[k] - m0[k] - th;
    }
    norm(&r)
}

/// Smallest slack of `||theta_i|| <= gamma ||g_i|| + 2 delta ||y_i(t)||`
/// across agents; negative values are violations.
pub fn theta_bound_slack(
    before: &[AgentState],
    theta: &ThetaResidual,
    oracle: &[Vec<f64>],
    gamma: f64,
    delta: f64,
) -> f64 {
    before
        .iter()
        .zip(&theta.per_agent)
        .zip(oracle)
        .map(|((s, th), g)| gamma * norm(g) + 2.0 * delta * norm(&s.y) - norm(th))
        .fold(f64::INFINITY, f64::min)
}
