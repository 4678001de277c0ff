//! Directed communication topologies and their stochastic weightings.
//!
//! Node indices are 0-based. An edge `(i, j)` means agent `j` receives from
//! agent `i`. Self-loops are implicit on every node and never stored.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for every stochasticity check on weight matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Digraph {
    /// Builds a digraph on `n` nodes. Self-loop entries in `edges` are dropped.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("digraph needs at least one node"));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("edge ({i},{j}) out of range for n={n}")));
            }
            if i != j {
                set.insert((i, j));
            }
        }
        Ok(Self { n, edges: set })
    }

    /// Directed cycle `i -> i+1 (mod n)`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("cycle needs n >= 2, got {n}")));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Complete digraph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (0..n).map(move |j| (i, j))))
    }

    /// Directed cycle backbone plus every other ordered pair added
    /// independently with probability `extra_edge_prob`.
    pub fn random_strongly_connected(n: usize, extra_edge_prob: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("random digraph needs n >= 2, got {n}")));
        }
        if !(0.0..=1.0).contains(&extra_edge_prob) {
            return Err(Error::invalid(format!(
                "extra edge probability {extra_edge_prob} outside [0, 1]"
            )));
        }
        let mut g = Self::cycle(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..n {
            for j in 0..n {
                // one draw per ordered pair keeps the stream aligned across probabilities
                let u: f64 = rng.random();
                if i != j && u < extra_edge_prob {
                    g.edges.insert((i, j));
                }
            }
        }
        Ok(g)
    }

    pub fn n_agents(&self) -> usize {
        self.n
    }

    /// Edges excluding the implied self-loops, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        from == to && from < self.n || self.edges.contains(&(from, to))
    }

    /// In-neighbors of `i`, including `i` itself, ascending.
    pub fn in_neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.has_edge(j, i)).collect()
    }

    /// Out-neighbors of `i`, including `i` itself, ascending.
    pub fn out_neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.has_edge(i, j)).collect()
    }

    pub fn is_strongly_connected(&self) -> bool {
        let mut fwd = vec![Vec::new(); self.n];
        let mut bwd = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            fwd[i].push(j);
            bwd[j].push(i);
        }
        reaches_all(&fwd) && reaches_all(&bwd)
    }

    /// Serializes as `N` on the first line followed by one `i j` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for (i, j) in self.edges() {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (first, header) = lines.next().ok_or(Error::EdgeList {
            line: 1,
            reason: "missing node count".into(),
        })?;
        let n: usize = header.parse().map_err(|_| Error::EdgeList {
            line: first,
            reason: format!("expected node count, got {header:?}"),
        })?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let mut it = l.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                let tok = tok.ok_or(Error::EdgeList {
                    line,
                    reason: "expected two node indices".into(),
                })?;
                let v: usize = tok.parse().map_err(|_| Error::EdgeList {
                    line,
                    reason: format!("bad node index {tok:?}"),
                })?;
                if v >= n {
                    return Err(Error::EdgeList {
                        line,
                        reason: format!("node {v} out of range for n={n}"),
                    });
                }
                Ok(v)
            };
            let i = parse(it.next())?;
            let j = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::EdgeList {
                    line,
                    reason: "trailing tokens".into(),
                });
            }
            edges.push((i, j));
        }
        Self::new(n, edges)
    }
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Row-stochastic mixing matrix for states and column-stochastic splitting
/// matrix for surpluses, both supported on the graph's edges.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPair {
    row: DMatrix<f64>,
    col: DMatrix<f64>,
}

impl WeightPair {
    /// Validates shapes, nonnegativity and the two stochasticity invariants.
    pub fn new(row: DMatrix<f64>, col: DMatrix<f64>) -> Result<Self> {
        let n = row.nrows();
        if n == 0 || row.ncols() != n || col.shape() != (n, n) {
            return Err(Error::invalid("weight matrices must be square and equally sized"));
        }
        if row.iter().chain(col.iter()).any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let wp = Self { row, col };
        let (r, c) = (wp.row_sum_error(), wp.col_sum_error());
        if r > STOCHASTIC_TOL || c > STOCHASTIC_TOL {
            return Err(Error::invalid(format!(
                "weights not stochastic: row error {r:e}, column error {c:e}"
            )));
        }
        Ok(wp)
    }

    pub fn n_agents(&self) -> usize {
        self.row.nrows()
    }

    pub fn row(&self) -> &DMatrix<f64> {
        &self.row
    }

    pub fn col(&self) -> &DMatrix<f64> {
        &self.col
    }

    /// max_i |sum_j row[i][j] - 1|
    pub fn row_sum_error(&self) -> f64 {
        self.row
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// max_j |sum_i col[i][j] - 1|
    pub fn col_sum_error(&self) -> f64 {
        column_sum_error(&self.col)
    }
}

pub(crate) fn column_sum_error(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| (c.sum() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `row[i][j] = 1/|in(i)|` for `j` in `in(i)` and `col[i][j] = 1/|out(j)|`
/// for `i` in `out(j)`.
pub fn equal_neighbor_weights(g: &Digraph) -> Result<WeightPair> {
    if !g.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let n = g.n_agents();
    let mut row = DMatrix::zeros(n, n);
    let mut col = DMatrix::zeros(n, n);
    for i in 0..n {
        let ins = g.in_neighbors(i);
        let w = 1.0 / ins.len() as f64;
        for j in ins {
            row[(i, j)] = w;
        }
    }
    for j in 0..n {
        let outs = g.out_neighbors(j);
        let w = 1.0 / outs.len() as f64;
        for i in outs {
            col[(i, j)] = w;
        }
    }
    WeightPair::new(row, col)
}

/// The 2N x 2N matrix `[[W_r, dI], [I - W_r, W_c - dI]]` that drives the
/// stacked decision/surplus vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedMatrix {
    w: DMatrix<f64>,
    delta: f64,
    n: usize,
}

impl AugmentedMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_agents(&self) -> usize {
        self.n
    }

    pub fn col_sum_error(&self) -> f64 {
        column_sum_error(&self.w)
    }

    /// Limit of the powers under geometric convergence: `1 1^T / N` in both
    /// top blocks, zeros below.
    pub fn limit(&self) -> DMatrix<f64> {
        consensus_limit(self.n)
    }

    /// Moduli of all 2N eigenvalues, descending, counted with multiplicity.
    pub fn eigenvalue_moduli(&self) -> Result<Vec<f64>> {
        eigenvalue_moduli(&self.w)
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self.eigenvalue_moduli()?[0])
    }
}

pub fn consensus_limit(n: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(2 * n, 2 * n);
    l.rows_mut(0, n).fill(1.0 / n as f64);
    l
}

/// Assembles the augmented matrix. `delta = 0` is accepted since the
/// unperturbed spectrum is what defines the admissible coupling bound.
pub fn build_augmented(wp: &WeightPair, delta: f64) -> Result<AugmentedMatrix> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("delta must be finite and >= 0, got {delta}")));
    }
    let n = wp.n_agents();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    w.view_mut((0, 0), (n, n)).copy_from(wp.row());
    w.view_mut((0, n), (n, n)).copy_from(&(&eye * delta));
    w.view_mut((n, 0), (n, n)).copy_from(&(&eye - wp.row()));
    w.view_mut((n, n), (n, n)).copy_from(&(wp.col() - &eye * delta));
    Ok(AugmentedMatrix { w, delta, n })
}

pub(crate) fn eigenvalue_moduli(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = m.nrows();
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-14, 100 * dim.max(10))
        .ok_or_else(|| Error::Eigen(format!("Schur iteration did not converge ({dim}x{dim})")))?;
    let mut moduli: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    if moduli.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    moduli.sort_by(|a, b| b.total_cmp(a));
    Ok(moduli)
}

/// Admissible surplus-coupling bound and the spectral quantity it derives from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaHat {
    /// Modulus of the third eigenvalue (by modulus, with multiplicity) at delta = 0.
    pub sigma3_modulus: f64,
    pub n_agents: usize,
    /// May underflow to 0 for large N; `ln_value` stays finite.
    pub value: f64,
    pub ln_value: f64,
}

/// `((1 - s) / (20 + 8N))^N`
pub fn delta_hat_formula(sigma3_modulus: f64, n: usize) -> f64 {
    ((1.0 - sigma3_modulus) / (20.0 + 8.0 * n as f64)).powi(n as i32)
}

pub fn delta_hat(wp: &WeightPair) -> Result<DeltaHat> {
    let n = wp.n_agents();
    if n < 2 {
        return Err(Error::invalid("delta_hat needs at least 2 agents"));
    }
    let moduli = build_augmented(wp, 0.0)?.eigenvalue_moduli()?;
    let s = moduli[2];
    let ln_value = n as f64 * ((1.0 - s).ln() - (20.0 + 8.0 * n as f64).ln());
    Ok(DeltaHat {
        sigma3_modulus: s,
        n_agents: n,
        value: delta_hat_formula(s, n),
        ln_value,
    })
}

/// Max absolute row sum.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `||W^t - limit||_inf`.
pub fn matrix_power_gap(am: &AugmentedMatrix, t: u32) -> Result<f64> {
    if t == 0 {
        return Err(Error::invalid("matrix power gap needs t >= 1"));
    }
    let mut acc: Option<DMatrix<f64>> = None;
    let mut base = am.w.clone();
    let mut e = t;
    while e > 0 {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => a * &base,
            });
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    let pow = acc.expect("t >= 1");
    Ok(inf_norm(&(pow - am.limit())))
}

/// Gaps for every `t` in `1..=t_max`; entry `k` holds the gap at `t = k + 1`.
pub fn gap_series(am: &AugmentedMatrix, t_max: u32) -> Vec<f64> {
    let limit = am.limit();
    let mut pow = am.w.clone();
    let mut out = Vec::with_capacity(t_max as usize);
    for t in 1..=t_max {
        if t > 1 {
            pow = &pow * &am.w;
        }
        out.push(inf_norm(&(&pow - &limit)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_edges() {
        let g = Digraph::cycle(4).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!((0..4).all(|i| g.has_edge(i, i)));
        assert_eq!(Digraph::cycle(10).unwrap().n_edges(), 10);
        assert!(Digraph::cycle(1).is_err());
    }

    #[test]
    fn strong_connectivity_basics() {
        assert!(Digraph::cycle(3).unwrap().is_strongly_connected());
        assert!(!Digraph::new(2, [(0, 1)]).unwrap().is_strongly_connected());
        assert!(Digraph::complete(5).unwrap().is_strongly_connected());
        assert!(Digraph::new(1, []).unwrap().is_strongly_connected());
    }

    #[test]
    fn random_digraph_contract() {
        let g0 = Digraph::random_strongly_connected(10, 0.0, 3).unwrap();
        assert_eq!(g0, Digraph::cycle(10).unwrap());
        let a = Digraph::random_strongly_connected(10, 0.3, 7).unwrap();
        let b = Digraph::random_strongly_connected(10, 0.3, 7).unwrap();
        assert!(a.is_strongly_connected());
        assert_eq!(a, b);
        assert!(a.n_edges() > 10);
        assert!(Digraph::random_strongly_connected(1, 0.3, 7).is_err());
        assert!(Digraph::random_strongly_connected(5, 1.5, 7).is_err());
    }

    #[test]
    fn equal_weights_on_cycle_and_complete() {
        let wp = equal_neighbor_weights(&Digraph::cycle(4).unwrap()).unwrap();
        for v in wp.row().iter().filter(|v| **v != 0.0) {
            assert_eq!(*v, 0.5);
        }
        let wp = equal_neighbor_weights(&Digraph::complete(5).unwrap()).unwrap();
        assert!(wp.row().iter().all(|v| *v == 0.2));
        assert!(wp.col_sum_error() < STOCHASTIC_TOL);
    }

    #[test]
    fn weights_follow_sparsity() {
        let g = Digraph::random_strongly_connected(8, 0.25, 11).unwrap();
        let wp = equal_neighbor_weights(&g).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                // row mixes what i receives from j; col splits what j sends to i
                assert_eq!(wp.row()[(i, j)] > 0.0, g.has_edge(j, i));
                assert_eq!(wp.col()[(i, j)] > 0.0, g.has_edge(j, i));
            }
        }
    }

    #[test]
    fn rejects_disconnected_weights() {
        let g = Digraph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert!(matches!(equal_neighbor_weights(&g), Err(Error::NotStronglyConnected)));
    }

    #[test]
    fn augmented_blocks() {
        let wp = equal_neighbor_weights(&Digraph::cycle(3).unwrap()).unwrap();
        let am = build_augmented(&wp, 0.0).unwrap();
        let w = am.matrix();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(w[(i, 3 + j)], 0.0);
                assert_eq!(w[(3 + i, 3 + j)], wp.col()[(i, j)]);
            }
        }
        let am = build_augmented(&wp, 0.1).unwrap();
        assert_eq!(am.matrix()[(0, 3)], 0.1);
        assert!(am.col_sum_error() < STOCHASTIC_TOL);
        assert!(build_augmented(&wp, -0.1).is_err());
        assert!(build_augmented(&wp, f64::NAN).is_err());
    }

    #[test]
    fn delta_hat_formula_is_monotone_in_n() {
        let s = 0.9;
        let mut prev = f64::INFINITY;
        for n in 2..30 {
            let v = delta_hat_formula(s, n);
            assert!(v > 0.0 && v < 1.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn gap_vanishes_at_limit() {
        let n = 4;
        let exact = AugmentedMatrix { w: consensus_limit(n), delta: 1.0, n };
        assert_eq!(matrix_power_gap(&exact, 1).unwrap(), 0.0);
        assert!(matrix_power_gap(&exact, 0).is_err());
    }

    #[test]
    fn squaring_matches_series() {
        let wp = equal_neighbor_weights(&Digraph::random_strongly_connected(6, 0.3, 2).unwrap()).unwrap();
        let am = build_augmented(&wp, 0.1).unwrap();
        let series = gap_series(&am, 37);
        for t in [1u32, 2, 5, 16, 37] {
            let direct = matrix_power_gap(&am, t).unwrap();
            assert!((direct - series[t as usize - 1]).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn edge_list_round_trip_and_errors() {
        let g = Digraph::random_strongly_connected(6, 0.4, 5).unwrap();
        assert_eq!(Digraph::from_edge_list(&g.to_edge_list()).unwrap(), g);
        assert_eq!(
            Digraph::from_edge_list("3\n0 1\n1 1\n\n1 2\n2 0\n").unwrap(),
            Digraph::cycle(3).unwrap()
        );
        assert!(Digraph::from_edge_list("").is_err());
        assert!(Digraph::from_edge_list("x\n").is_err());
        assert!(Digraph::from_edge_list("3\n0 3\n").is_err());
        assert!(Digraph::from_edge_list("3\n0\n").is_err());
        assert!(Digraph::from_edge_list("3\n0 1 2\n").is_err());
    }
}
