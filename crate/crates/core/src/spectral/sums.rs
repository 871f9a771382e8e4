//! Theta function, heat trace and inverse-power spectral sums.

use std::f64::consts::PI;

use super::TorusGeometry;
use crate::error::{invalid, Result};
use crate::quadrature::{integrate, QuadOptions};

/// `Θ(t) − 1` where `Θ(t) = Σ_{n∈ℤ} exp(−t(2πn/L)²)`.
///
/// Direct summation when `t(2π/L)² ≥ 1`, otherwise the Poisson-dual series
/// `L/√(4πt)·Σ_m exp(−L²m²/(4t))`; both converge in a handful of terms.
pub fn theta_minus_one(t: f64, side: f64) -> Result<f64> {
    if !(t > 0.0) || !(side > 0.0) {
        return Err(invalid(format!("theta needs t > 0 and L > 0, got t={t}, L={side}")));
    }
    let w = 2.0 * PI / side;
    let a = t * w * w;
    if a >= 1.0 {
        Ok(2.0 * lattice_tail(a))
    } else {
        let b = PI * PI / a;
        let pref = (PI / a).sqrt();
        Ok(pref * (1.0 + 2.0 * lattice_tail(b)) - 1.0)
    }
}

// Σ_{n≥1} exp(−a n²), summed until terms stop contributing.
fn lattice_tail(a: f64) -> f64 {
    let mut acc = 0.0;
    let mut n = 1.0f64;
    loop {
        let term = (-a * n * n).exp();
        acc += term;
        if term <= 1e-18 * acc || term == 0.0 {
            return acc;
        }
        n += 1.0;
    }
}

pub fn theta(t: f64, side: f64) -> Result<f64> {
    Ok(1.0 + theta_minus_one(t, side)?)
}

/// `Σ_i e^{−tλ_i} = Θ(t)^d − 1`, evaluated without cancellation for large `t`.
pub fn heat_trace(t: f64, geom: &TorusGeometry) -> Result<f64> {
    let tm1 = theta_minus_one(t, geom.side())?;
    Ok((geom.dim() as f64 * tm1.ln_1p()).exp_m1())
}

/// `r_d(n) = #{k ∈ ℤ^d : |k|² = n}` for `n = 0..=n_max`.
pub fn shell_counts(d: usize, n_max: usize) -> Vec<u64> {
    let mut one = vec![0u64; n_max + 1];
    let mut m = 0usize;
    while m * m <= n_max {
        one[m * m] += if m == 0 { 1 } else { 2 };
        m += 1;
    }
    let mut acc = vec![0u64; n_max + 1];
    acc[0] = 1;
    for _ in 0..d {
        let mut next = vec![0u64; n_max + 1];
        for (i, &a) in acc.iter().enumerate().filter(|(_, &a)| a != 0) {
            for (j, &b) in one.iter().enumerate().take(n_max + 1 - i) {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    acc
}

const TAIL_SHELLS: usize = 8;

fn switchover(geom: &TorusGeometry) -> f64 {
    50.0 / geom.lambda_min()
}

fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-10, rel_tol: 1e-14, max_intervals: 4000 }
}

/// `Σ_i e^{−sλ_i}/λ_i = ∫_s^∞ heat_trace(t) dt`.
///
/// Adaptive quadrature up to `t* = 50/λ_min`; beyond it the remainder is the
/// closed-form shell sum `Σ_n r_d(n) e^{−t*qn}/(qn)`.
pub fn spectral_sum_inv_lambda(s: f64, geom: &TorusGeometry) -> Result<f64> {
    if !(s > 0.0) {
        return Err(invalid(format!("spectral sum needs s > 0, got {s}")));
    }
    let t_star = switchover(geom).max(s);
    let body = if t_star > s {
        integrate(|t| heat_trace(t, geom).unwrap_or(f64::NAN), s, t_star, quad_opts())?.value
    } else {
        0.0
    };
    let q = geom.spectral_unit();
    let shells = shell_counts(geom.dim(), TAIL_SHELLS);
    let tail: f64 = (1..=TAIL_SHELLS)
        .map(|n| {
            let a = q * n as f64;
            shells[n] as f64 * (-a * t_star).exp() / a
        })
        .sum();
    Ok(body + tail)
}

/// `Σ_i e^{−2ελ_i}/λ_i² = ∫_{2ε}^∞ (t − 2ε)·heat_trace(t) dt`.
///
/// This is the nested integral `∫_{2ε}^∞ Σ e^{−sλ}/λ ds` after swapping the
/// order of integration, so only one adaptive quadrature is needed.
pub fn spectral_sum_inv_lambda_sq(eps: f64, geom: &TorusGeometry) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(invalid(format!("spectral sum needs eps > 0, got {eps}")));
    }
    let s0 = 2.0 * eps;
    let t_star = switchover(geom).max(s0);
    let body = if t_star > s0 {
        integrate(
            |t| (t - s0) * heat_trace(t, geom).unwrap_or(f64::NAN),
            s0,
            t_star,
            quad_opts(),
        )?
        .value
    } else {
        0.0
    };
    let q = geom.spectral_unit();
    let shells = shell_counts(geom.dim(), TAIL_SHELLS);
    let tail: f64 = (1..=TAIL_SHELLS)
        .map(|n| {
            let a = q * n as f64;
            shells[n] as f64 * (-a * t_star).exp() * ((t_star - s0) / a + 1.0 / (a * a))
        })
        .sum();
    Ok(body + tail)
}
