use crate::fit::fit_geometric;
use crate::graph::{
    build_augmented, delta_hat, delta_hat_formula, equal_neighbor_weights, gap_series, matrix_power_gap,
    Digraph,
};

/// Transitive closure by Floyd-Warshall.
fn reachable_all(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in edges {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                let via = r[k].clone();
                for (dst, v) in r[i].iter_mut().zip(via) {
                    *dst |= v;
                }
            }
        }
    }
    r.iter().all(|row| row.iter().all(|&v| v))
}

#[test]
fn strong_connectivity_matches_closure_on_all_small_digraphs() {
    for n in 1..=5usize {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, e)| *e)
                .collect();
            let g = Digraph::new(n, edges.iter().copied()).unwrap();
            assert_eq!(g.is_strongly_connected(), reachable_all(n, &edges), "n={n} mask={mask}");
        }
    }
}

#[test]
fn cycle_delta_hat_matches_closed_form_spectrum() {
    // W(0) is block lower triangular with both diagonal blocks (I + S)/2, so
    // its moduli are |cos(pi k / N)|, each twice; the third is cos(pi / N).
    let n = 10;
    let wp = equal_neighbor_weights(&Digraph::cycle(n).unwrap()).unwrap();
    let dh = delta_hat(&wp).unwrap();
    let sigma3 = (std::f64::consts::PI / n as f64).cos();
    // repeated eigenvalues sit in Jordan blocks, so the solver is only
    // accurate to about sqrt(machine epsilon)
    assert!((dh.sigma3_modulus - sigma3).abs() < 1e-6, "{} vs {sigma3}", dh.sigma3_modulus);
    let expected = delta_hat_formula(sigma3, n);
    assert!((dh.ln_value - expected.ln()).abs() < 1e-3);
    assert!(dh.value > 0.0 && dh.value < 1.0);
}

#[test]
fn half_delta_hat_fit_rate_is_below_one() {
    let wp = equal_neighbor_weights(&Digraph::cycle(10).unwrap()).unwrap();
    let dh = delta_hat(&wp).unwrap();
    let am = build_augmented(&wp, dh.value / 2.0).unwrap();
    let gaps = gap_series(&am, 200);
    let (ts, ys): (Vec<f64>, Vec<f64>) = (5..=200).map(|t| (t as f64, gaps[t - 1])).unzip();
    let fit = fit_geometric(&ts, &ys).unwrap();
    assert!(fit.lambda > 0.0 && fit.lambda < 1.0, "{fit:?}");
}

#[test]
fn gap_halves_under_doubling_on_reference_graph() {
    let g = Digraph::random_strongly_connected(10, 0.3, crate::config::REFERENCE_GRAPH_SEED).unwrap();
    let am = build_augmented(&equal_neighbor_weights(&g).unwrap(), 0.1).unwrap();
    for t in [50u32, 100, 200] {
        assert!(matrix_power_gap(&am, 2 * t).unwrap() < matrix_power_gap(&am, t).unwrap());
    }
}

#[test]
fn stochasticity_holds_for_random_topologies() {
    for seed in 0..50 {
        let g = Digraph::random_strongly_connected(3 + (seed as usize % 20), 0.2, seed).unwrap();
        let wp = equal_neighbor_weights(&g).unwrap();
        assert!(wp.row_sum_error() < 1e-12);
        assert!(wp.col_sum_error() < 1e-12);
        for delta in [0.01, 0.1, 0.5] {
            assert!(build_augmented(&wp, delta).unwrap().col_sum_error() < 1e-12);
        }
    }
}
