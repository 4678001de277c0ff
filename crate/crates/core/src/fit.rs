//! Log-linear least squares for geometric decay `y(t) ~ C * lambda^t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricFit {
    pub c: f64,
    pub lambda: f64,
    pub r_squared: f64,
}

/// Fits `ln y = ln C + t ln lambda` by ordinary least squares.
pub fn fit_geometric(ts: &[f64], ys: &[f64]) -> Result<GeometricFit> {
    if ts.len() != ys.len() {
        return Err(Error::Fit("length mismatch".into()));
    }
    if ts.len() < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    if let Some(bad) = ys.iter().find(|y| !(**y > 0.0) || !y.is_finite()) {
        return Err(Error::Fit(format!("log fit needs positive finite values, got {bad}")));
    }
    let n = ts.len() as f64;
    let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mt = ts.iter().sum::<f64>() / n;
    let ml = logs.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (t, l) in ts.iter().zip(&logs) {
        sxx += (t - mt) * (t - mt);
        sxy += (t - mt) * (l - ml);
        syy += (l - ml) * (l - ml);
    }
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = ml - slope * mt;
    // a perfectly flat series is explained exactly by a zero slope
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(GeometricFit {
        c: intercept.exp(),
        lambda: slope.exp(),
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_geometric() {
        let ts: Vec<f64> = (0..50).map(f64::from).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * 0.8f64.powf(*t)).collect();
        let f = fit_geometric(&ts, &ys).unwrap();
        assert!((f.c - 3.0).abs() < 1e-10);
        assert!((f.lambda - 0.8).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_geometric(&[1.0], &[1.0]).is_err());
        assert!(fit_geometric(&[1.0, 2.0], &[1.0, 0.0]).is_err());
        assert!(fit_geometric(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(fit_geometric(&[1.0, 2.0], &[1.0]).is_err());
    }
}
