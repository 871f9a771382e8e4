//! The variance form `𝐕(φ) = ∫_0^∞ ⟨φ, e^{tL}φ⟩_μ dt` and its consistency checks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::GeneratorMatrix;
use crate::error::{invalid, Result};
use crate::quadrature::{integrate, QuadOptions};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `𝐕(φ) = ⟨φ, (−L)^{−1}φ⟩` by a linear solve in the truncated space.
pub fn v_form(phi: &[f64], gen: &GeneratorMatrix) -> Result<f64> {
    if phi.len() != gen.len() {
        return Err(invalid("coefficient vector does not match the generator basis"));
    }
    let x = gen.solve_neg(phi)?;
    Ok(dot(phi, &x))
}

/// `𝐕(Zφ_i)`.
pub fn v_form_z(phi_index: usize, gen: &GeneratorMatrix) -> Result<f64> {
    let zphi = gen.z_apply_basis(phi_index)?;
    v_form(&zphi, gen)
}

/// `|𝐕(φ_i) − (1/λ_i − 𝐕(Zφ_i)/λ_i²)|`.
pub fn identity_star0_check(phi_index: usize, gen: &GeneratorMatrix) -> Result<f64> {
    let lam = gen.lambda(phi_index);
    let lhs = v_form(&gen.basis(phi_index), gen)?;
    let rhs = 1.0 / lam - v_form_z(phi_index, gen)? / (lam * lam);
    Ok((lhs - rhs).abs())
}

/// Leading terms `2/λ_i − 2𝐕(Zφ_i)/λ_i²` of `E|ψ_i(T)|²`; the `O(1/T)`
/// remainder is not modelled, so `T` only enters through validation.
pub fn psi_moment_prediction(phi_index: usize, gen: &GeneratorMatrix, horizon: f64) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(invalid("horizon must be positive"));
    }
    let lam = gen.lambda(phi_index);
    Ok(2.0 / lam - 2.0 * v_form_z(phi_index, gen)? / (lam * lam))
}

/// Closed form of `𝐕(√2cos)` (equally `𝐕(√2sin)`) for a constant drift:
/// `λ/(λ² + b²)`, `b = (2π/L)k·z`.
pub fn block_v_form(lambda: f64, b: f64) -> f64 {
    lambda / (lambda * lambda + b * b)
}

/// Closed form of `𝐕(Zφ)` for a constant drift: `b²λ/(λ² + b²)`.
pub fn block_v_form_z(lambda: f64, b: f64) -> f64 {
    b * b * lambda / (lambda * lambda + b * b)
}

/// Duhamel residual `‖e^{tL}φ_i − e^{−λt}φ_i − ∫_0^t e^{−λ(t−s)}e^{sL}Zφ_i ds‖`
/// with the convolution integral by the midpoint rule.
pub fn duhamel_check(phi_index: usize, gen: &GeneratorMatrix, t: f64, quad_steps: usize) -> Result<f64> {
    if !(t > 0.0) || quad_steps == 0 {
        return Err(invalid("duhamel_check needs t > 0 and at least one quadrature step"));
    }
    let e = gen.basis(phi_index);
    let idx = gen.component(&e);
    let l = gen.dense_block(&idx);
    let lam = gen.lambda(phi_index);
    let pos = idx.iter().position(|&i| i == phi_index).expect("φ lies in its own component");
    let mut phi = DVector::zeros(idx.len());
    phi[pos] = 1.0;
    let lhs = (&l * t).exp() * &phi;

    let zfull = gen.z_apply_basis(phi_index)?;
    let zphi = DVector::from_iterator(idx.len(), idx.iter().map(|&i| zfull[i]));
    let h = t / quad_steps as f64;
    let step = (&l * h).exp();
    let mut v: DVector<f64> = (&l * (0.5 * h)).exp() * zphi;
    let mut conv = DVector::zeros(idx.len());
    for m in 0..quad_steps {
        let s = (m as f64 + 0.5) * h;
        conv += &v * ((-lam * (t - s)).exp() * h);
        v = &step * v;
    }
    let rhs = phi * (-lam * t).exp() + conv;
    Ok((lhs - rhs).norm())
}

/// `∫_0^∞ ⟨φ, e^{tL}φ⟩ dt` by adaptive quadrature, an independent route to `𝐕`.
pub fn v_form_time_quadrature(phi: &[f64], gen: &GeneratorMatrix) -> Result<f64> {
    let idx = gen.component(phi);
    if idx.is_empty() {
        return Ok(0.0);
    }
    let l: DMatrix<f64> = gen.dense_block(&idx);
    let p = DVector::from_iterator(idx.len(), idx.iter().map(|&i| phi[i]));
    let lam_min = idx.iter().map(|&i| gen.lambda(i)).fold(f64::INFINITY, f64::min);
    // ⟨φ, e^{tL}φ⟩ ≤ e^{−λ_min t}|φ|², so this horizon leaves < 1e-14 behind
    let horizon = (35.0 + p.norm_squared().ln().max(0.0)) / lam_min;
    let f = |t: f64| p.dot(&((&l * t).exp() * &p));
    let opts = QuadOptions { abs_tol: 1e-11, rel_tol: 1e-13, max_intervals: 2000 };
    Ok(integrate(f, 0.0, horizon, opts)?.value)
}

/// Per-mode comparison of the symmetric variance `2/λ` with `2𝐕(φ_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeVariance {
    pub index: usize,
    pub lambda: f64,
    pub v_form: f64,
    pub v_form_z: f64,
    pub star0_residual: f64,
}

pub fn mode_variance(phi_index: usize, gen: &GeneratorMatrix) -> Result<ModeVariance> {
    Ok(ModeVariance {
        index: phi_index,
        lambda: gen.lambda(phi_index),
        v_form: v_form(&gen.basis(phi_index), gen)?,
        v_form_z: v_form_z(phi_index, gen)?,
        star0_residual: identity_star0_check(phi_index, gen)?,
    })
}
