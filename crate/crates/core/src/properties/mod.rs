//! Cross-module property checks against independent oracles.

mod analysis;
mod graph;
mod oracle;
