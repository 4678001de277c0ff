//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line
//! directly to stdout so the verdicts show without `--nocapture`.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rgf_core::analysis::{RATIO_CEILING, RATIO_WINDOW};
use rgf_core::experiments::{
    experiment_fig2_3, experiment_fig4, sandwich_table, second_moment_table, unbiasedness_table, Fig23,
    DEFAULT_HORIZON, DEFAULT_SEED, MC_SAMPLES,
};
use rgf_core::fit::fit_geometric;
use rgf_core::graph::{build_augmented, delta_hat, equal_neighbor_weights, gap_series, Digraph};
use rgf_core::output::write_trace_csv;

fn verdict(n: u32, pass: bool, detail: String) {
    let line = format!(
        "criterion {n:>2}: {} {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn reference_run() -> &'static (Fig23, Duration) {
    static RUN: OnceLock<(Fig23, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let r = experiment_fig2_3(DEFAULT_SEED, DEFAULT_HORIZON).unwrap();
        (r, start.elapsed())
    })
}

fn topologies() -> Vec<(String, Digraph)> {
    let mut v = vec![
        ("cycle(10)".to_string(), Digraph::cycle(10).unwrap()),
        (
            "random(10)".to_string(),
            Digraph::random_strongly_connected(10, 0.3, rgf_core::config::REFERENCE_GRAPH_SEED).unwrap(),
        ),
    ];
    for n in [50, 100, 200] {
        v.push((format!("cycle({n})"), Digraph::cycle(n).unwrap()));
    }
    v
}

#[test]
fn criterion_01_stochasticity() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (_, g) in topologies() {
        let wp = equal_neighbor_weights(&g).unwrap();
        let n = g.n_agents();
        for i in 0..n {
            let row: f64 = (0..n).map(|j| wp.row()[(i, j)]).sum();
            let col: f64 = (0..n).map(|j| wp.col()[(j, i)]).sum();
            worst = worst.max((row - 1.0).abs()).max((col - 1.0).abs());
        }
        let am = build_augmented(&wp, 0.1).unwrap();
        let m = am.matrix();
        for j in 0..2 * n {
            let col: f64 = (0..2 * n).map(|i| m[(i, j)]).sum();
            worst = worst.max((col - 1.0).abs());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        worst < 1e-12 && elapsed < Duration::from_secs(1),
        format!("max |sum - 1| = {worst:e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_geometric_decay() {
    let wp = equal_neighbor_weights(&Digraph::cycle(10).unwrap()).unwrap();
    let dh = delta_hat(&wp).unwrap();
    let delta = 0.1f64.min(0.9 * dh.value);
    let am = build_augmented(&wp, delta).unwrap();
    let gaps = gap_series(&am, 200);
    let gap = |t: usize| gaps[t - 1];
    let max_ratio = (RATIO_WINDOW.0..RATIO_WINDOW.1)
        .map(|t| gap(t + 1) / gap(t))
        .fold(0.0, f64::max);
    let (ts, ys): (Vec<f64>, Vec<f64>) = (5..=200).map(|t| (t as f64, gap(t))).unzip();
    let fit = fit_geometric(&ts, &ys).unwrap();
    let pass = max_ratio <= RATIO_CEILING && fit.lambda > 0.0 && fit.lambda < 1.0 && fit.r_squared >= 0.98;
    verdict(
        2,
        pass,
        format!(
            "delta = {delta:e}, max gap ratio on [20, 200] = {max_ratio:.4} (limit 0.999), lambda = {:.4}, R^2 = {:.3}, gap(200) = {:.4}",
            fit.lambda,
            fit.r_squared,
            gap(200)
        ),
    );
}

#[test]
fn criterion_03_smoothing_sandwich() {
    let rows = sandwich_table(20, 0.1, MC_SAMPLES, DEFAULT_SEED).unwrap();
    let bad = rows.iter().filter(|r| !r.within).count();
    verdict(3, rows.len() == 20 && bad == 0, format!("{} points, {bad} outside the band", rows.len()));
}

#[test]
fn criterion_04_oracle_unbiasedness() {
    let start = Instant::now();
    let rows = unbiasedness_table(5, 0.05, MC_SAMPLES, DEFAULT_SEED).unwrap();
    let norm_rows: Vec<_> = rows.iter().filter(|r| r.function == "squared_norm").collect();
    let worst = norm_rows.iter().map(|r| r.max_z).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    verdict(
        4,
        norm_rows.len() == 5 && worst <= 4.0 && elapsed < Duration::from_secs(60),
        format!("worst |mean - fd| / sigma = {worst:.2} (limit 4), {elapsed:.2?}"),
    );
}

#[test]
fn criterion_05_second_moment() {
    let rows = second_moment_table(&[1, 2, 5], 1e-4, MC_SAMPLES, DEFAULT_SEED).unwrap();
    let pass = rows.iter().all(|r| r.mean_sq_norm <= r.ceiling);
    let detail = rows
        .iter()
        .map(|r| format!("p={}: {:.2} <= {:.2}", r.dim, r.mean_sq_norm, r.ceiling))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(5, pass, detail);
}

#[test]
fn criterion_06_tracking_and_consensus() {
    let (r, elapsed) = reference_run();
    let trace = &r.run.trace;
    let t_end = trace.len() - 1;
    let s100 = trace.spread()[100];
    let s_end = trace.spread()[t_end];
    let target = rgf_core::oracle::reference_signal(t_end as u64);
    let worst = (0..trace.n_agents)
        .map(|i| (trace.x(t_end, i)[0] - target).abs())
        .fold(0.0, f64::max);
    verdict(
        6,
        s_end < s100 && worst < 0.1 && *elapsed < Duration::from_secs(60),
        format!("spread {s100:.3e} -> {s_end:.3e}, max |x_i(T) - d(T)| = {worst:.3e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_07_time_averaged_regret() {
    let (r, _) = reference_run();
    let l = &r.ledger;
    let t_end = l.horizon();
    let mut worst_ratio = 0.0f64;
    let mut min_avg = f64::INFINITY;
    for i in 0..l.n_agents {
        worst_ratio = worst_ratio.max(l.time_averaged(t_end, i) / l.time_averaged(500, i));
        for t in 0..=t_end {
            min_avg = min_avg.min(l.time_averaged(t, i));
        }
    }
    verdict(
        7,
        worst_ratio < 0.5 && min_avg > 0.0,
        format!("max_i (R_i(5000)/5000) / (R_i(500)/500) = {worst_ratio:.4}, min R_i(t)/t = {min_avg:.3e}"),
    );
}

#[test]
fn criterion_08_network_size_ordering() {
    let start = Instant::now();
    let fig = experiment_fig4(DEFAULT_SEED, DEFAULT_HORIZON).unwrap();
    let finals = fig.final_values();
    let mut ties = 0;
    let mut ordered = true;
    for w in finals.windows(2) {
        if w[1].1 < w[0].1 {
            if w[1].1 >= 0.95 * w[0].1 {
                ties += 1;
            } else {
                ordered = false;
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = finals
        .iter()
        .map(|(n, v)| format!("N={n}: {v:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(
        8,
        ordered && ties <= 1 && finals.len() == 4 && elapsed < Duration::from_secs(600),
        format!("{detail}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_09_conservation_and_step_bound() {
    let (r, _) = reference_run();
    let steps = &r.run.trace.steps;
    let worst_cons = steps.iter().map(|s| s.conservation_residual).fold(0.0, f64::max);
    let worst_slack = steps.iter().map(|s| s.theta_bound_slack).fold(f64::INFINITY, f64::min);
    verdict(
        9,
        steps.len() == DEFAULT_HORIZON as usize && worst_cons <= 1e-10 && worst_slack >= -1e-10,
        format!("max conservation residual = {worst_cons:e}, min bound slack = {worst_slack:e}"),
    );
}

#[test]
fn criterion_10_residual_ratio_boundedness() {
    let (r, _) = reference_run();
    let th = r.theta.expect("theta statistics");
    let ratio = th.running_max_at_end / th.running_max_at_tenth;
    verdict(
        10,
        th.g1.is_finite() && ratio < 2.0,
        format!("max Theta/gamma on [10, 5000] = {:.4}, running max at T / at T/10 = {ratio:.4}", th.g1),
    );
}

#[test]
fn criterion_11_regret_bound_dominance() {
    let (r, _) = reference_run();
    let start = Instant::now();
    let b = r.bound.as_ref().expect("bound");
    let worst = r.ledger.regret().into_iter().fold(f64::NEG_INFINITY, f64::max);
    let elapsed = start.elapsed();
    verdict(
        11,
        worst <= b.total && elapsed < Duration::from_secs(1),
        format!("max_i R_i(T) = {worst:.4} <= bound {:.4e}", b.total),
    );
}

#[test]
fn criterion_12_determinism() {
    let (r, _) = reference_run();
    let again = experiment_fig2_3(DEFAULT_SEED, DEFAULT_HORIZON).unwrap();
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_trace_csv(&r.run.trace, &mut a).unwrap();
    write_trace_csv(&again.run.trace, &mut b).unwrap();
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    r.write(d1.path()).unwrap();
    again.write(d2.path()).unwrap();
    let f1 = std::fs::read(d1.path().join("trajectory.csv")).unwrap();
    let f2 = std::fs::read(d2.path().join("trajectory.csv")).unwrap();
    verdict(
        12,
        a == b && f1 == f2 && f1 == a,
        format!("trajectory CSV {} bytes, identical = {}", f1.len(), f1 == f2),
    );
}
