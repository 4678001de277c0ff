//! Simulator and analysis toolkit for randomized gradient-free distributed
//! online optimization over strongly connected digraphs.
//!
//! Each agent keeps a decision `x` and a surplus `y`. Decisions are mixed
//! with a row-stochastic matrix, surpluses are split with a column-stochastic
//! one, and local gradients are replaced by a two-point randomized estimate
//! built from function values alone. The [`analysis`] module turns recorded
//! traces into regret and consensus diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithm;
pub mod analysis;
pub mod config;
pub mod error;
pub mod experiments;
pub mod feasible;
pub mod fit;
pub mod graph;
pub mod oracle;
pub mod output;
pub mod schedule;
pub mod simulation;
pub mod trace;

pub use error::{Error, Result};

#[cfg(test)]
mod properties;
