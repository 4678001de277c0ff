use crate::oracle::{
    gradient_free_oracle, sample_direction, smoothed_value_mc, DirectionLaw, LinearProbe, ObjectiveStream,
    OracleConfig, QuadraticForm,
};

#[test]
fn linear_oracle_mean_recovers_direction() {
    let stream = LinearProbe::sample(1, 3, 11).unwrap();
    let d: Vec<f64> = (0..3)
        .map(|k| {
            let mut e = vec![0.0; 3];
            e[k] = 1.0;
            stream.eval(0, 0, &e)
        })
        .collect();
    let cfg = OracleConfig::uniform(1, 1e-3, DirectionLaw::Gaussian, 5);
    let n = 100_000;
    let x = [0.3, -0.2, 0.1];
    let draws: Vec<Vec<f64>> = (0..n).map(|t| gradient_free_oracle(&stream, &cfg, 0, t, &x).unwrap()).collect();
    for k in 0..3 {
        let mean = draws.iter().map(|g| g[k]).sum::<f64>() / n as f64;
        let var = draws.iter().map(|g| (g[k] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - d[k]).abs() <= 3.0 * se, "coord {k}: {mean} vs {}", d[k]);
    }
}

#[test]
fn squared_norm_smoothing_adds_mu_squared_p() {
    let p = 2;
    let stream = QuadraticForm {
        q: vec![vec![1.0, 0.0, 0.0, 1.0]],
        linear: vec![vec![0.0; p]],
        dim: p,
    };
    let x = [0.7, -1.2];
    let mu = 0.3;
    let est = smoothed_value_mc(&stream, 0, 0, &x, mu, 100_000, 9).unwrap();
    let exact = 0.49 + 1.44 + mu * mu * p as f64;
    assert!((est.mean - exact).abs() <= 3.0 * est.std_error, "{est:?} vs {exact}");
}

#[test]
fn oracle_sequences_are_reproducible() {
    let stream = QuadraticForm::sample(4, 3, 2).unwrap();
    let cfg = OracleConfig::uniform(4, 1e-4, DirectionLaw::Gaussian, 77);
    let a: Vec<Vec<f64>> = (0..200).map(|t| gradient_free_oracle(&stream, &cfg, (t % 4) as usize, t, &[0.1, 0.2, 0.3]).unwrap()).collect();
    let b: Vec<Vec<f64>> = (0..200).map(|t| gradient_free_oracle(&stream, &cfg, (t % 4) as usize, t, &[0.1, 0.2, 0.3]).unwrap()).collect();
    assert_eq!(a, b);
    let other = OracleConfig::uniform(4, 1e-4, DirectionLaw::Gaussian, 78);
    assert_ne!(sample_direction(&cfg, 0, 0, 3), sample_direction(&other, 0, 0, 3));
}

#[test]
fn uniform_sphere_directions_are_unit_and_centred() {
    let cfg = OracleConfig::uniform(1, 1e-4, DirectionLaw::UniformSphere, 3);
    let n = 20_000;
    let mut mean = [0.0; 3];
    for t in 0..n {
        let v = sample_direction(&cfg, 0, t, 3);
        assert!((v.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
        for k in 0..3 {
            mean[k] += v[k] / n as f64;
        }
    }
    // per-coordinate std is 1/sqrt(3)
    assert!(mean.iter().all(|m| m.abs() < 4.0 / (3.0 * n as f64).sqrt()));
}
