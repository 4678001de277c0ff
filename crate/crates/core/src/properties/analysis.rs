use crate::algorithm::{AgentState, UpdateLaw};
use crate::analysis::{
    consensus_curve, dynamic_regret, fit_decay, path_length, regret_ledger, MinimizerSource,
};
use crate::config::REFERENCE_GRAPH_SEED;
use crate::feasible::FeasibleSet;
use crate::graph::{equal_neighbor_weights, Digraph};
use crate::oracle::{Constant, DirectionLaw, ObjectiveStream, OracleConfig, TrackingQuadratic};
use crate::schedule::StepSchedule;
use crate::simulation::{simulate, trace_from_decisions};

fn omega() -> FeasibleSet {
    FeasibleSet::interval(-5.0, 5.0)
}

fn offset_play(stream: &TrackingQuadratic, horizon: u64, eps: f64) -> Vec<Vec<AgentState>> {
    (0..=horizon)
        .map(|t| {
            let xs = stream.minimizer(t).unwrap()[0];
            (0..stream.n_agents()).map(|_| AgentState::new(vec![xs + eps])).collect()
        })
        .collect()
}

#[test]
fn playing_the_optimum_has_zero_regret() {
    let s = TrackingQuadratic::sample(6, 4).unwrap();
    let trace = trace_from_decisions(&s, &offset_play(&s, 300, 0.0)).unwrap();
    let r = dynamic_regret(&trace, &s, &omega(), MinimizerSource::Analytic).unwrap();
    assert!(r.iter().all(|v| v.abs() < 1e-9), "{r:?}");
}

#[test]
fn constant_offset_regret_is_quadratic_in_offset() {
    let (n, horizon, eps) = (6, 300u64, 0.05);
    let s = TrackingQuadratic::sample(n, 4).unwrap();
    let trace = trace_from_decisions(&s, &offset_play(&s, horizon, eps)).unwrap();
    let expected = (horizon + 1) as f64 * n as f64 * eps * eps;
    for r in dynamic_regret(&trace, &s, &omega(), MinimizerSource::Analytic).unwrap() {
        assert!((r - expected).abs() < 1e-9 * expected.max(1.0), "{r} vs {expected}");
    }
}

#[test]
fn regret_is_additive_over_horizon_splits() {
    let s = TrackingQuadratic::sample(5, 8).unwrap();
    let trace = trace_from_decisions(&s, &offset_play(&s, 400, 0.3)).unwrap();
    let ledger = regret_ledger(&trace, &s, &omega(), MinimizerSource::default()).unwrap();
    for split in [0, 1, 137, 399] {
        for i in 0..5 {
            let whole = ledger.regret_at(400, i);
            let parts = ledger.regret_at(split, i) + ledger.regret_between(split, 400, i);
            assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1.0));
        }
    }
}

#[test]
fn numeric_minimizer_agrees_with_closed_form() {
    let s = TrackingQuadratic::sample(5, 8).unwrap();
    let trace = trace_from_decisions(&s, &offset_play(&s, 200, 0.1)).unwrap();
    let analytic = regret_ledger(&trace, &s, &omega(), MinimizerSource::Analytic).unwrap();
    let mut numeric = Vec::new();
    for t in 0..=200u64 {
        numeric.push(crate::analysis::golden_section_minimizer(&s, t, &omega(), 1e-6).unwrap());
    }
    for (t, xs) in numeric.iter().enumerate() {
        assert!((xs[0] - analytic.minimizers[t][0]).abs() < 1e-6);
    }
}

/// Double-double accumulation.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[test]
fn path_length_matches_extended_precision_sum() {
    let s = TrackingQuadratic::sample(10, 1).unwrap();
    let xs: Vec<Vec<f64>> = (0..=5000).map(|t| s.minimizer(t).unwrap()).collect();
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for w in xs.windows(2) {
        let (s1, e1) = two_sum(hi, (w[1][0] - w[0][0]).abs());
        hi = s1;
        lo += e1;
    }
    let reference = hi + lo;
    assert!((path_length(&xs) - reference).abs() <= 1e-14 * reference, "{} vs {reference}", path_length(&xs));
    assert!(reference > 0.0);
}

#[test]
fn pure_consensus_reaches_the_augmented_limit() {
    let g = Digraph::random_strongly_connected(10, 0.3, REFERENCE_GRAPH_SEED).unwrap();
    let law = UpdateLaw::new(equal_neighbor_weights(&g).unwrap(), 0.1, omega()).unwrap();
    let stream = Constant { n: 10, dim: 1, value: 2.0 };
    let init: Vec<AgentState> = (0..10).map(|i| AgentState::new(vec![-1.0 + 0.2 * i as f64])).collect();
    let limit = init.iter().map(|s| s.x[0]).sum::<f64>() / 10.0;
    let oracle = OracleConfig::uniform(10, 1e-4, DirectionLaw::Gaussian, 1);
    let trace = simulate(&law, &stream, &oracle, &StepSchedule::Constant { gamma: 0.1 }, init, 600).unwrap();
    for i in 0..10 {
        assert!((trace.x(600, i)[0] - limit).abs() < 1e-9);
        assert!(trace.y(600, i)[0].abs() < 1e-9);
    }
    let curve = consensus_curve(&trace).unwrap();
    let fit = fit_decay(&curve.spread, 5, 200).unwrap();
    assert!(fit.lambda > 0.0 && fit.lambda < 1.0, "{fit:?}");
}

#[test]
fn identical_agents_have_zero_spread() {
    let s = TrackingQuadratic::sample(4, 2).unwrap();
    let trace = trace_from_decisions(&s, &offset_play(&s, 50, 0.2)).unwrap();
    assert!(consensus_curve(&trace).unwrap().spread.iter().all(|v| *v == 0.0));
}
