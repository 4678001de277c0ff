//! JSON-serializable run configuration with `key=value` overrides.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::graph::Digraph;
use crate::oracle::{DirectionLaw, OracleConfig};
use crate::schedule::StepSchedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Cycle { n: usize },
    Complete { n: usize },
    Random {
        n: usize,
        extra_edge_prob: f64,
        seed: u64,
    },
    /// Explicit edge list, self-loops implied.
    Edges { n: usize, edges: Vec<(usize, usize)> },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Digraph> {
        match self {
            GraphSpec::Cycle { n } => Digraph::cycle(*n),
            GraphSpec::Complete { n } => Digraph::complete(*n),
            GraphSpec::Random {
                n,
                extra_edge_prob,
                seed,
            } => Digraph::random_strongly_connected(*n, *extra_edge_prob, *seed),
            GraphSpec::Edges { n, edges } => Digraph::new(*n, edges.iter().copied()),
        }
    }

    pub fn n_agents(&self) -> usize {
        match self {
            GraphSpec::Cycle { n }
            | GraphSpec::Complete { n }
            | GraphSpec::Random { n, .. }
            | GraphSpec::Edges { n, .. } => *n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    #[default]
    EqualNeighbor,
}

/// Everything needed to reproduce one simulation bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphSpec,
    #[serde(default)]
    pub weights: WeightRule,
    pub delta: f64,
    /// Uniform smoothing parameter, used when `mu` is absent.
    pub mu_hat: f64,
    /// Per-agent smoothing parameters.
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    #[serde(default)]
    pub direction_law: DirectionLaw,
    pub step: StepSchedule,
    /// Number of update steps; the trace covers `t = 0..=horizon`.
    pub horizon: u64,
    pub omega: FeasibleSet,
    pub stream: String,
    /// Master seed for initial states and oracle directions.
    pub seed: u64,
    /// Seed for stream coefficients; defaults to `seed`.
    #[serde(default)]
    pub coeff_seed: Option<u64>,
    /// Explicit initial decisions, one vector per agent. Sampled uniformly
    /// from `omega` when absent.
    #[serde(default)]
    pub initial_x: Option<Vec<Vec<f64>>>,
}

impl RunConfig {
    /// The reference setup: 10 agents on a seeded random digraph, delta = 0.1,
    /// mu = 1e-4, gamma(t) = 1/sqrt(t+1), feasible interval [-5, 5].
    pub fn reference(seed: u64) -> Self {
        Self {
            graph: GraphSpec::Random {
                n: 10,
                extra_edge_prob: 0.3,
                seed: REFERENCE_GRAPH_SEED,
            },
            weights: WeightRule::EqualNeighbor,
            delta: 0.1,
            mu_hat: 1e-4,
            mu: None,
            direction_law: DirectionLaw::Gaussian,
            step: StepSchedule::InvSqrt { gamma0: 1.0 },
            horizon: 5000,
            omega: FeasibleSet::interval(-5.0, 5.0),
            stream: "paper_quadratic".into(),
            seed,
            coeff_seed: None,
            initial_x: None,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.graph.n_agents()
    }

    pub fn coeff_seed(&self) -> u64 {
        self.coeff_seed.unwrap_or(self.seed)
    }

    pub fn oracle(&self) -> OracleConfig {
        let n = self.n_agents();
        match &self.mu {
            Some(mu) => OracleConfig {
                mu: mu.clone(),
                law: self.direction_law,
                seed: self.seed,
            },
            None => OracleConfig::uniform(n, self.mu_hat, self.direction_law, self.seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_agents();
        if n < 2 {
            return Err(Error::invalid("need at least 2 agents"));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if self.mu.is_none() && (!(self.mu_hat > 0.0) || !self.mu_hat.is_finite()) {
            return Err(Error::invalid(format!("mu_hat must be positive, got {}", self.mu_hat)));
        }
        let oracle = self.oracle();
        oracle.validate()?;
        if oracle.mu.len() != n {
            return Err(Error::invalid(format!(
                "expected {n} smoothing parameters, got {}",
                oracle.mu.len()
            )));
        }
        self.step.validate()?;
        self.omega.validate()?;
        if let Some(x0) = &self.initial_x {
            if x0.len() != n || x0.iter().any(|x| x.len() != self.omega.dim()) {
                return Err(Error::invalid("initial_x must hold one point per agent"));
            }
            if x0.iter().any(|x| !self.omega.contains(x, 0.0)) {
                return Err(Error::invalid("initial_x must lie in omega"));
            }
        }
        if !self.graph.build()?.is_strongly_connected() {
            return Err(Error::NotStronglyConnected);
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies dotted `key=value` overrides on the JSON form, e.g.
    /// `delta=0.05`, `graph.n=20`, `step.gamma0=0.5`. Values parse as JSON
    /// first and fall back to a plain string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut doc = serde_json::to_value(self)?;
        for ov in overrides {
            let ov = ov.as_ref();
            let (key, raw) = ov
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {ov:?} is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
            set_path(&mut doc, key, value)?;
        }
        serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Graph seed for the reference 10-agent topology.
pub const REFERENCE_GRAPH_SEED: u64 = 7;

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("cannot descend into {key:?}")))?;
        if k + 1 == parts.len() {
            obj.insert((*part).to_string(), value);
            return Ok(());
        }
        cur = obj.entry((*part).to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Err(Error::Config(format!("empty override key {key:?}")))
}
