//! Second moments of the occupation coefficients against closed forms.

use std::sync::Arc;

use w2lab_core::diffusion::{simulate, DriftSpec, SimConfig};
use w2lab_core::quadrature::{integrate, QuadOptions};
use w2lab_core::spectral::{enumerate_modes, KVec, Parity, TorusGeometry};
use w2lab_core::stats::summarize;

/// `E ψ² = (2/T)∫_0^T (T − t)e^{−λt}cos(bt)dt` for one mode of a constant drift.
fn finite_horizon_moment(lambda: f64, b: f64, horizon: f64) -> f64 {
    let f = |t: f64| (horizon - t) * (-lambda * t).exp() * (b * t).cos();
    2.0 / horizon * integrate(f, 0.0, horizon, QuadOptions::default()).unwrap().value
}

fn check(d: usize, z: &[f64], expected_limit: f64) {
    let g = TorusGeometry::standard(d).unwrap();
    let ms = Arc::new(enumerate_modes(g, 1.0).unwrap());
    let drift = DriftSpec::constant_z(g, z).unwrap();
    let cfg = SimConfig { dt: 0.01, horizon: 50.0, seed: 17, replicas: 2000, record_stride: 0 };
    let i = ms.index_of(&KVec::unit(0), Parity::Cos).unwrap();
    let res = simulate(&cfg, &drift, &ms, &[]).unwrap();
    let psi: Vec<f64> = res.iter().map(|r| r.psi[i]).collect();
    let sq: Vec<f64> = psi.iter().map(|p| p * p).collect();
    let m = summarize(&psi).unwrap();
    let s = summarize(&sq).unwrap();
    let b = z[0];
    let exact = finite_horizon_moment(1.0, b, cfg.horizon);
    assert!((exact - expected_limit).abs() < 0.05);
    assert!(m.mean.abs() < 4.0 * m.stderr, "mean {} ± {}", m.mean, m.stderr);
    assert!((s.mean - exact).abs() < 4.0 * s.stderr, "E ψ² = {} ± {}, exact {exact}", s.mean, s.stderr);
}

#[test]
fn reversible_mode_has_moment_two_over_lambda() {
    check(1, &[0.0], 2.0);
}

#[test]
fn rotating_mode_has_moment_two_lambda_over_lambda_sq_plus_b_sq() {
    check(2, &[1.0, 0.0], 1.0);
}
