use proptest::prelude::*;

use super::*;
use crate::diffusion::{DriftSpec, ShearMode, ZSpec};
use crate::error::Error;
use crate::spectral::{enumerate_modes, KVec, Parity, TorusGeometry};
use crate::trig::TrigTerm;

fn gen_const(z: &[f64], lambda_max: f64) -> GeneratorMatrix {
    let g = TorusGeometry::standard(4).unwrap();
    let drift = DriftSpec::constant_z(g, z).unwrap();
    GeneratorMatrix::assemble(&drift, &enumerate_modes(g, lambda_max).unwrap()).unwrap()
}

fn shear_drift(g: TorusGeometry) -> DriftSpec {
    let modes = vec![
        ShearMode { k: KVec::unit(1), parity: Parity::Sin, amplitude: 0.8, direction: [1.0, 0.0, 0.0, 0.0] },
        ShearMode { k: KVec::unit(0), parity: Parity::Cos, amplitude: 0.5, direction: [0.0, 1.0, 0.0, 0.0] },
        ShearMode {
            k: KVec::from_slice(&[1, 1]),
            parity: Parity::Sin,
            amplitude: 0.3,
            direction: [1.0, -1.0, 0.0, 0.0],
        },
    ];
    DriftSpec::new(g, vec![], ZSpec::Shear { modes }).unwrap()
}

#[test]
fn free_generator_gives_inverse_eigenvalues() {
    let gen = gen_const(&[0.0; 4], 6.0);
    for i in 0..gen.len() {
        let v = v_form(&gen.basis(i), &gen).unwrap();
        assert!((v - 1.0 / gen.lambda(i)).abs() < 1e-14);
        assert_eq!(v_form_z(i, &gen).unwrap(), 0.0);
        assert_eq!(identity_star0_check(i, &gen).unwrap(), 0.0);
    }
    assert!((psi_moment_prediction(0, &gen, 10.0).unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn constant_drift_matches_block_formula() {
    let z = [1.0, 0.0, 0.0, 0.0];
    let gen = gen_const(&z, 12.0);
    for i in 0..gen.len() {
        let p = gen.mode_set.pairs[i];
        let b = p.k.0[0] as f64;
        let v = v_form(&gen.basis(i), &gen).unwrap();
        assert!((v - block_v_form(p.lambda, b)).abs() < 1e-14);
        assert!((v_form_z(i, &gen).unwrap() - block_v_form_z(p.lambda, b)).abs() < 1e-13);
    }
    let i = gen.index_of(&KVec::unit(0), Parity::Cos).unwrap();
    assert!((v_form(&gen.basis(i), &gen).unwrap() - 0.5).abs() < 1e-15);
    assert!((v_form_z(i, &gen).unwrap() - 0.5).abs() < 1e-15);
    assert!((psi_moment_prediction(i, &gen, 200.0).unwrap() - 1.0).abs() < 1e-15);

    let gen2 = gen_const(&[2.0, 0.0, 0.0, 0.0], 1.0);
    let i2 = gen2.index_of(&KVec::unit(0), Parity::Cos).unwrap();
    assert!((v_form_z(i2, &gen2).unwrap() - 0.8).abs() < 1e-15);
}

#[test]
fn resolvent_matches_time_quadrature() {
    let gen = gen_const(&[1.0, 0.5, 0.0, 0.0], 3.0);
    for i in [0, 5, 11, gen.len() - 1] {
        let e = gen.basis(i);
        let a = v_form(&e, &gen).unwrap();
        let b = v_form_time_quadrature(&e, &gen).unwrap();
        assert!((a - b).abs() < 1e-8, "mode {i}: {a} vs {b}");
    }
}

#[test]
fn duhamel_residuals() {
    let free = gen_const(&[0.0; 4], 2.0);
    assert!(duhamel_check(3, &free, 2.0, 10).unwrap() < 1e-12);

    let gen = gen_const(&[1.0, 0.0, 0.0, 0.0], 1.0);
    let i = gen.index_of(&KVec::unit(0), Parity::Cos).unwrap();
    let coarse = duhamel_check(i, &gen, 1.0, 5_000).unwrap();
    let fine = duhamel_check(i, &gen, 1.0, 10_000).unwrap();
    assert!(fine < 1e-6);
    assert!((coarse / fine - 4.0).abs() < 0.1, "refinement ratio {}", coarse / fine);
    let small = duhamel_check(i, &gen, 1e-3, 1).unwrap();
    let smaller = duhamel_check(i, &gen, 5e-4, 1).unwrap();
    assert!(small < 1e-6 && smaller < small);
}

#[test]
fn shear_galerkin_identity_and_cutoff_stability() {
    let g = TorusGeometry::standard(2).unwrap();
    let drift = shear_drift(g);
    let coarse = GeneratorMatrix::assemble(&drift, &enumerate_modes(g, 100.0).unwrap()).unwrap();
    let fine = GeneratorMatrix::assemble(&drift, &enumerate_modes(g, 200.0).unwrap()).unwrap();
    assert!(fine.max_constant_component() < 1e-14);
    for i in 0..8 {
        let r = identity_star0_check(i, &fine).unwrap();
        assert!(r <= 1e-8, "mode {i}: residual {r}");
        let vc = v_form(&coarse.basis(i), &coarse).unwrap();
        let vf = v_form(&fine.basis(i), &fine).unwrap();
        assert!((vc - vf).abs() < 1e-8, "cutoff drift {vc} vs {vf}");
        assert!(vf <= 1.0 / fine.lambda(i) + 1e-14);
    }
}

#[test]
fn escape_and_unsupported_errors() {
    let g = TorusGeometry::standard(2).unwrap();
    let drift = shear_drift(g);
    let gen = GeneratorMatrix::assemble(&drift, &enumerate_modes(g, 4.0).unwrap()).unwrap();
    let last = gen.len() - 1;
    match v_form_z(last, &gen) {
        Err(Error::TruncationEscape { required_lambda_max }) => assert!(required_lambda_max > 4.0),
        other => panic!("expected escape, got {other:?}"),
    }
    let v = vec![TrigTerm { k: KVec::unit(0), parity: Parity::Cos, amplitude: 0.3 }];
    let curved = DriftSpec::new(g, v, ZSpec::Zero).unwrap();
    let ms = enumerate_modes(g, 2.0).unwrap();
    assert!(matches!(GeneratorMatrix::assemble(&curved, &ms), Err(Error::Unsupported(_))));
}

#[test]
fn clt_requires_enough_samples() {
    let gen = gen_const(&[0.0; 4], 1.0);
    assert!(matches!(
        clt_empirics(0, &gen, &[0.0; 100]),
        Err(Error::InsufficientSamples { got: 100, need: 512 })
    ));
}

proptest! {
    #[test]
    fn variance_form_is_nonnegative_and_dominated(
        coeffs in prop::collection::vec(-1.0f64..1.0, 16),
        z0 in -2.0f64..2.0,
        z1 in -2.0f64..2.0,
    ) {
        let gen = gen_const(&[z0, z1, 0.0, 0.0], 2.0);
        let mut phi = vec![0.0; gen.len()];
        phi[..16].copy_from_slice(&coeffs);
        let v = v_form(&phi, &gen).unwrap();
        let sym: f64 = phi.iter().enumerate().map(|(i, c)| c * c / gen.lambda(i)).sum();
        prop_assert!(v >= -1e-14);
        prop_assert!(v <= sym + 1e-12);
        for i in 0..gen.len() {
            let m = mode_variance(i, &gen).unwrap();
            prop_assert!(m.v_form <= 1.0 / m.lambda + 1e-15);
            prop_assert!(m.star0_residual <= 1e-10);
        }
    }
}
