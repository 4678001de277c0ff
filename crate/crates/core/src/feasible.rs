//! Compact convex constraint sets with closed-form Euclidean projection.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl FeasibleSet {
    pub fn interval(lo: f64, hi: f64) -> Self {
        FeasibleSet::Box {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FeasibleSet::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::invalid("box bounds must be nonempty and equally sized"));
                }
                for (l, h) in lo.iter().zip(hi) {
                    if !l.is_finite() || !h.is_finite() || l > h {
                        return Err(Error::invalid(format!("bad box side [{l}, {h}]")));
                    }
                }
            }
            FeasibleSet::Ball { center, radius } => {
                if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("ball center must be nonempty and finite"));
                }
                if !(*radius >= 0.0) || !radius.is_finite() {
                    return Err(Error::invalid(format!("bad ball radius {radius}")));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lo, .. } => lo.len(),
            FeasibleSet::Ball { center, .. } => center.len(),
        }
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        self.project_in_place(&mut out);
        out
    }

    pub fn project_in_place(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        match self {
            FeasibleSet::Box { lo, hi } => {
                for ((x, l), h) in v.iter_mut().zip(lo).zip(hi) {
                    *x = x.clamp(*l, *h);
                }
            }
            FeasibleSet::Ball { center, radius } => {
                let dist = v
                    .iter()
                    .zip(center)
                    .map(|(x, c)| (x - c) * (x - c))
                    .sum::<f64>()
                    .sqrt();
                if dist > *radius {
                    let s = radius / dist;
                    for (x, c) in v.iter_mut().zip(center) {
                        *x = c + (*x - c) * s;
                    }
                }
            }
        }
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        match self {
            FeasibleSet::Box { lo, hi } => v
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (l, h))| *x >= l - tol && *x <= h + tol),
            FeasibleSet::Ball { center, radius } => {
                let d2: f64 = v.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
                d2.sqrt() <= radius + tol
            }
        }
    }

    /// `sup_{x in set} ||x||`
    pub fn rho(&self) -> f64 {
        match self {
            FeasibleSet::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| l.abs().max(h.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            FeasibleSet::Ball { center, radius } => {
                center.iter().map(|c| c * c).sum::<f64>().sqrt() + radius
            }
        }
    }

    /// Uniform sample from the set.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            FeasibleSet::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                .collect(),
            FeasibleSet::Ball { center, radius } => {
                let p = center.len();
                let dir: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
                let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let r = radius * rng.random::<f64>().powf(1.0 / p as f64);
                center.iter().zip(&dir).map(|(c, d)| c + r * d / norm).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    #[test]
    fn projection_examples() {
        let b = FeasibleSet::interval(-5.0, 5.0);
        assert_eq!(b.project(&[7.0]), vec![5.0]);
        assert_eq!(b.project(&[3.0]), vec![3.0]);
        let ball = FeasibleSet::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        let p = ball.project(&[3.0, 4.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rho_closed_form() {
        assert_eq!(FeasibleSet::interval(-5.0, 5.0).rho(), 5.0);
        let b = FeasibleSet::Box {
            lo: vec![-1.0, 0.0],
            hi: vec![2.0, 3.0],
        };
        assert!((b.rho() - 13f64.sqrt()).abs() < 1e-15);
        let ball = FeasibleSet::Ball {
            center: vec![3.0, 4.0],
            radius: 1.0,
        };
        assert_eq!(ball.rho(), 6.0);
    }

    #[test]
    fn validation() {
        assert!(FeasibleSet::interval(1.0, -1.0).validate().is_err());
        assert!(FeasibleSet::Box { lo: vec![], hi: vec![] }.validate().is_err());
        assert!(FeasibleSet::Ball { center: vec![0.0], radius: -1.0 }.validate().is_err());
        assert!(FeasibleSet::interval(-5.0, 5.0).validate().is_ok());
    }

    fn sets() -> Vec<FeasibleSet> {
        vec![
            FeasibleSet::Box {
                lo: vec![-1.0, -2.0, 0.5],
                hi: vec![1.0, 0.0, 3.0],
            },
            FeasibleSet::Ball {
                center: vec![0.5, -1.0, 2.0],
                radius: 1.5,
            },
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn projection_is_nonexpansive(
            u in prop::collection::vec(-10.0f64..10.0, 3),
            v in prop::collection::vec(-10.0f64..10.0, 3),
        ) {
            for s in sets() {
                let (pu, pv) = (s.project(&u), s.project(&v));
                prop_assert!(dist(&pu, &pv) <= dist(&u, &v) + 1e-12);
                prop_assert!(s.contains(&pu, 1e-12));
                prop_assert!(dist(&s.project(&pu), &pu) <= 1e-12);
            }
        }
    }

    #[test]
    fn uniform_samples_are_feasible() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for s in sets() {
            for _ in 0..500 {
                assert!(s.contains(&s.sample_uniform(&mut rng), 1e-12));
            }
        }
    }
}
