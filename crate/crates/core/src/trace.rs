//! Recorded per-step history of a simulation.

use serde::{Deserialize, Serialize};

use crate::algorithm::AgentState;

/// Per-step quantities measured while advancing from `t` to `t + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: u64,
    pub gamma: f64,
    /// `sum_i ||theta_i(t)||`
    pub theta_total: f64,
    /// `sum_i ||g_i(t)||`
    pub oracle_norm_sum: f64,
    /// Violation norm of the stacked-mean conservation identity.
    pub conservation_residual: f64,
    /// `min_i (gamma ||g_i|| + 2 delta ||y_i|| - ||theta_i||)`
    pub theta_bound_slack: f64,
}

/// Decisions, surpluses and costs for `t = 0..=horizon`, stored densely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub n_agents: usize,
    pub dim: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    /// `f^t(x_i(t))`, row-major by `(t, agent)`.
    global_cost: Vec<f64>,
    spread: Vec<f64>,
    augmented_mean: Vec<f64>,
    x_star: Option<Vec<f64>>,
    optimal_cost: Option<Vec<f64>>,
    pub steps: Vec<StepDiagnostics>,
}

impl Trace {
    pub(crate) fn new(n_agents: usize, dim: usize, analytic: bool) -> Self {
        Self {
            n_agents,
            dim,
            x: Vec::new(),
            y: Vec::new(),
            global_cost: Vec::new(),
            spread: Vec::new(),
            augmented_mean: Vec::new(),
            x_star: analytic.then(Vec::new),
            optimal_cost: analytic.then(Vec::new),
            steps: Vec::new(),
        }
    }

    pub(crate) fn record(
        &mut self,
        states: &[AgentState],
        costs: &[f64],
        optimum: Option<(&[f64], f64)>,
    ) {
        for s in states {
            self.x.extend_from_slice(&s.x);
            self.y.extend_from_slice(&s.y);
        }
        self.global_cost.extend_from_slice(costs);
        self.spread.push(crate::algorithm::spread(states));
        self.augmented_mean.extend(crate::algorithm::augmented_mean(states));
        if let (Some(xs), Some(oc), Some((p, c))) = (&mut self.x_star, &mut self.optimal_cost, optimum) {
            xs.extend_from_slice(p);
            oc.push(c);
        }
    }

    /// Number of recorded time points, `horizon + 1`.
    pub fn len(&self) -> usize {
        self.spread.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spread.is_empty()
    }

    pub fn horizon(&self) -> u64 {
        self.len().saturating_sub(1) as u64
    }

    fn at(&self, t: usize, agent: usize) -> std::ops::Range<usize> {
        let start = (t * self.n_agents + agent) * self.dim;
        start..start + self.dim
    }

    pub fn x(&self, t: usize, agent: usize) -> &[f64] {
        &self.x[self.at(t, agent)]
    }

    pub fn y(&self, t: usize, agent: usize) -> &[f64] {
        &self.y[self.at(t, agent)]
    }

    pub fn states(&self, t: usize) -> Vec<AgentState> {
        (0..self.n_agents)
            .map(|i| AgentState {
                x: self.x(t, i).to_vec(),
                y: self.y(t, i).to_vec(),
            })
            .collect()
    }

    /// `f^t(x_i(t))`
    pub fn global_cost(&self, t: usize, agent: usize) -> f64 {
        self.global_cost[t * self.n_agents + agent]
    }

    /// `max_i ||x_i(t) - mean_j x_j(t)||`
    pub fn spread(&self) -> &[f64] {
        &self.spread
    }

    /// `(1/N) sum_i (x_i(t) + y_i(t))`
    pub fn augmented_mean(&self, t: usize) -> &[f64] {
        &self.augmented_mean[t * self.dim..(t + 1) * self.dim]
    }

    pub fn x_star(&self, t: usize) -> Option<&[f64]> {
        self.x_star.as_ref().map(|v| &v[t * self.dim..(t + 1) * self.dim])
    }

    /// `f^t(x*(t))` when the stream's minimizer is known.
    pub fn optimal_cost(&self, t: usize) -> Option<f64> {
        self.optimal_cost.as_ref().map(|v| v[t])
    }

    pub fn has_minimizer(&self) -> bool {
        self.x_star.is_some()
    }
}
