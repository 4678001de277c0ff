use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive, non-increasing step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    /// `gamma0 / sqrt(t + 1)`
    InvSqrt { gamma0: f64 },
    Constant { gamma: f64 },
    /// Explicit values; the last entry repeats past the end of the table.
    Table { values: Vec<f64> },
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            StepSchedule::InvSqrt { gamma0: g } | StepSchedule::Constant { gamma: g } => {
                if !(*g > 0.0) || !g.is_finite() {
                    return Err(Error::invalid(format!("step size must be positive, got {g}")));
                }
            }
            StepSchedule::Table { values } => {
                if values.is_empty() {
                    return Err(Error::invalid("step table is empty"));
                }
                if values.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
                    return Err(Error::invalid("step table entries must be positive"));
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::invalid("step table must be non-increasing"));
                }
            }
        }
        Ok(())
    }

    pub fn gamma(&self, t: u64) -> f64 {
        match self {
            StepSchedule::InvSqrt { gamma0 } => gamma0 / ((t + 1) as f64).sqrt(),
            StepSchedule::Constant { gamma } => *gamma,
            StepSchedule::Table { values } => {
                values[(t as usize).min(values.len() - 1)]
            }
        }
    }

    /// Whether the schedule is non-summable by construction. A finite table
    /// extends with a positive constant, so it qualifies too.
    pub fn is_non_summable(&self) -> bool {
        true
    }

    /// `gamma(0)`, the scale that enters regret bounds.
    pub fn gamma0(&self) -> f64 {
        self.gamma(0)
    }
}
