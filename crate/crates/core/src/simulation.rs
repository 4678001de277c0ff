//! The run loop: builds the network from a [`RunConfig`], advances the update
//! law over the horizon and records a [`Trace`].

use std::sync::Arc;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithm::{conservation_residual, theta_bound_slack, AgentState, UpdateLaw};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fit::{fit_geometric, GeometricFit};
use crate::graph::{self, build_augmented, delta_hat, equal_neighbor_weights, DeltaHat, WeightPair};
use crate::oracle::{builtin_stream, purpose, ObjectiveStream, OracleConfig, RngStream};
use crate::schedule::StepSchedule;
use crate::trace::{StepDiagnostics, Trace};

/// Largest network for which the gap fit `(C, lambda)` is computed per run.
pub const FIT_MAX_AGENTS: usize = 64;
/// Largest network for which eigenvalue diagnostics are computed per run.
pub const SPECTRAL_MAX_AGENTS: usize = 256;
/// Time window of the log-linear gap fit.
pub const FIT_WINDOW: (u32, u32) = (5, 200);

/// Spectral facts about the augmented matrix of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub delta_hat: Option<DeltaHat>,
    pub spectral_radius: Option<f64>,
    /// Modulus of the second-largest eigenvalue of W(delta).
    pub second_modulus: Option<f64>,
    pub gap_fit: Option<GeometricFit>,
    /// `min(delta_hat, (1 - lambda) / (2 sqrt(3) N C lambda))` with fitted C, lambda.
    pub delta_bound: Option<f64>,
}

/// Everything needed to reproduce and interpret a run, written next to the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub generator: String,
    pub config: RunConfig,
    pub n_agents: usize,
    pub edges: Vec<(usize, usize)>,
    pub stream: String,
    pub coeff_seed: u64,
    pub spectral: SpectralSummary,
    pub minimizer_source: String,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

pub struct RunOutput {
    pub trace: Trace,
    pub metadata: RunMetadata,
    pub stream: Arc<dyn ObjectiveStream>,
    pub weights: WeightPair,
}

impl std::fmt::Debug for RunOutput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RunOutput")
            .field("metadata", &self.metadata)
            .field("horizon", &self.trace.horizon())
            .finish_non_exhaustive()
    }
}

pub fn generator() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

/// Uniform initial decisions; agent `i` draws from its own substream, so its
/// start point does not depend on the network size.
pub fn initial_states(cfg: &RunConfig) -> Vec<AgentState> {
    match &cfg.initial_x {
        Some(x0) => x0.iter().cloned().map(AgentState::new).collect(),
        None => {
            let rng = RngStream::new(cfg.seed);
            (0..cfg.n_agents())
                .map(|i| AgentState::new(cfg.omega.sample_uniform(&mut rng.substream(i, 0, purpose::INITIAL_STATE))))
                .collect()
        }
    }
}

/// Computes delta_hat, the spectrum of W(delta) and the geometric gap fit as
/// far as the network size allows.
pub fn spectral_summary(wp: &WeightPair, delta: f64) -> SpectralSummary {
    let n = wp.n_agents();
    let mut s = SpectralSummary {
        delta_hat: None,
        spectral_radius: None,
        second_modulus: None,
        gap_fit: None,
        delta_bound: None,
    };
    if n > SPECTRAL_MAX_AGENTS {
        return s;
    }
    s.delta_hat = delta_hat(wp).ok();
    if let Ok(am) = build_augmented(wp, delta) {
        if let Ok(m) = am.eigenvalue_moduli() {
            s.spectral_radius = Some(m[0]);
            s.second_modulus = m.get(1).copied();
        }
        if n <= FIT_MAX_AGENTS {
            let gaps = graph::gap_series(&am, FIT_WINDOW.1);
            let (ts, ys): (Vec<f64>, Vec<f64>) = (FIT_WINDOW.0..=FIT_WINDOW.1)
                .map(|t| (t as f64, gaps[t as usize - 1]))
                .unzip();
            s.gap_fit = fit_geometric(&ts, &ys).ok();
        }
    }
    if let (Some(dh), Some(fit)) = (s.delta_hat, s.gap_fit) {
        let c = fit.c;
        let lam = fit.lambda;
        let coupling = if lam > 0.0 && lam < 1.0 {
            (1.0 - lam) / (2.0 * 3f64.sqrt() * n as f64 * c * lam)
        } else {
            0.0
        };
        s.delta_bound = Some(dh.value.min(coupling));
    }
    s
}

fn delta_warnings(s: &SpectralSummary, delta: f64) -> Vec<String> {
    let mut w = Vec::new();
    if let Some(dh) = s.delta_hat {
        if delta > dh.value {
            w.push(format!(
                "delta = {delta} exceeds delta_hat = {:e} (ln = {:.3})",
                dh.value, dh.ln_value
            ));
        }
    }
    if let Some(b) = s.delta_bound {
        if delta > b {
            w.push(format!("delta = {delta} exceeds min(delta_hat, fitted coupling bound) = {b:e}"));
        }
    }
    if let Some(r) = s.spectral_radius {
        if r > 1.0 + 1e-9 {
            w.push(format!(
                "augmented matrix W(delta) has spectral radius {r:.6} > 1; powers diverge"
            ));
        }
    }
    w
}

/// Advances `initial` through `horizon` steps of `law` against `stream`.
/// Works with any stream, including user-defined ones.
pub fn simulate(
    law: &UpdateLaw,
    stream: &dyn ObjectiveStream,
    oracle: &OracleConfig,
    schedule: &StepSchedule,
    initial: Vec<AgentState>,
    horizon: u64,
) -> Result<Trace> {
    let n = law.n_agents();
    let p = law.omega().dim();
    if stream.n_agents() != n || stream.dim() != p {
        return Err(Error::invalid(format!(
            "stream shape ({} agents, dim {}) does not match network ({n} agents, dim {p})",
            stream.n_agents(),
            stream.dim()
        )));
    }
    oracle.validate()?;
    if oracle.mu.len() != n {
        return Err(Error::invalid("one smoothing parameter per agent required"));
    }
    schedule.validate()?;
    let analytic = stream.minimizer(0).is_some();
    let mut trace = Trace::new(n, p, analytic);
    let mut states = initial;
    record(&mut trace, stream, &states, 0)?;
    for t in 0..horizon {
        let gamma = schedule.gamma(t);
        let out = law.step(&states, gamma, stream, oracle, t)?;
        let theta = law.theta_residual(&states, &out.states)?;
        trace.steps.push(StepDiagnostics {
            t,
            gamma,
            theta_total: theta.total,
            oracle_norm_sum: out.oracle.iter().map(|g| crate::algorithm::norm(g)).sum(),
            conservation_residual: conservation_residual(&states, &out.states, &theta),
            theta_bound_slack: theta_bound_slack(&states, &theta, &out.oracle, gamma, law.delta()),
        });
        states = out.states;
        record(&mut trace, stream, &states, t + 1)?;
    }
    Ok(trace)
}

fn record(trace: &mut Trace, stream: &dyn ObjectiveStream, states: &[AgentState], t: u64) -> Result<()> {
    let cost = |s: &AgentState| stream.global_eval(t, &s.x);
    let costs: Vec<f64> = if states.len() >= 64 {
        states.par_iter().map(cost).collect()
    } else {
        states.iter().map(cost).collect()
    };
    if let Some(i) = costs.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite {
            what: "global cost",
            agent: i,
            t,
        });
    }
    let optimum = stream.minimizer(t).map(|xs| {
        let c = stream.global_eval(t, &xs);
        (xs, c)
    });
    trace.record(states, &costs, optimum.as_ref().map(|(x, c)| (x.as_slice(), *c)));
    Ok(())
}

/// Records externally produced decisions, `decisions[t][i]`, against
/// `stream` so they can be scored like a simulated trace.
pub fn trace_from_decisions(stream: &dyn ObjectiveStream, decisions: &[Vec<AgentState>]) -> Result<Trace> {
    let n = stream.n_agents();
    if decisions.iter().any(|d| d.len() != n || d.iter().any(|s| s.x.len() != stream.dim())) {
        return Err(Error::invalid("decisions must hold one point per agent per step"));
    }
    let mut trace = Trace::new(n, stream.dim(), stream.minimizer(0).is_some());
    for (t, states) in decisions.iter().enumerate() {
        record(&mut trace, stream, states, t as u64)?;
    }
    Ok(trace)
}

/// Runs one configured simulation with a built-in stream.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let graph = cfg.graph.build()?;
    let weights = equal_neighbor_weights(&graph)?;
    let n = graph.n_agents();
    let stream = builtin_stream(&cfg.stream, n, cfg.omega.dim(), cfg.coeff_seed())?;
    let law = UpdateLaw::new(weights.clone(), cfg.delta, cfg.omega.clone())?;
    let spectral = spectral_summary(&weights, cfg.delta);
    let warnings = delta_warnings(&spectral, cfg.delta);
    for w in &warnings {
        warn!("{w}");
    }
    let trace = simulate(
        &law,
        stream.as_ref(),
        &cfg.oracle(),
        &cfg.step,
        initial_states(cfg),
        cfg.horizon,
    )?;
    let mut notes = vec![
        "initial surpluses y_i(0) = 0; initial decisions uniform in omega unless initial_x is set".to_string(),
        "oracle directions drawn once per agent per step from substream (seed, agent, t)".to_string(),
    ];
    if matches!(cfg.graph, crate::config::GraphSpec::Random { .. }) {
        notes.push("random strongly connected topology stands in for an unspecified 10-agent graph".into());
    }
    if n > FIT_MAX_AGENTS {
        notes.push(format!("gap fit skipped for N > {FIT_MAX_AGENTS}"));
    }
    let metadata = RunMetadata {
        generator: generator(),
        config: cfg.clone(),
        n_agents: n,
        edges: graph.edges().collect(),
        stream: cfg.stream.clone(),
        coeff_seed: cfg.coeff_seed(),
        spectral,
        minimizer_source: if trace.has_minimizer() { "analytic" } else { "none recorded" }.into(),
        notes,
        warnings,
    };
    Ok(RunOutput {
        trace,
        metadata,
        stream,
        weights,
    })
}
