//! Dacorogna–Moser interpolation cost and the Ledoux weighted-H⁻¹ bound.

use super::SpectralEmpirical;
use crate::error::{invalid, Error, Result};
use crate::spectral::{synthesize, ComplexCoeffs};

/// `∫_0^1 ∫ |∇f|²/u_s dμ ds` along `u_s = (1 − s) + s·u_{T,ε}`, midpoint rule in
/// `s` with `steps` nodes and an `n^d` grid in space.
pub fn dm_action(se: &SpectralEmpirical, steps: usize, n: usize) -> Result<f64> {
    if steps == 0 {
        return Err(invalid("dm_action needs at least one s-node"));
    }
    let u = se.density_grid(n);
    let min = u.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NonPositiveDensity { min });
    }
    let grad = se.potential_gradient_grid(n);
    let cells = u.len();
    let h = 1.0 / steps as f64;
    let mut total = 0.0;
    for c in 0..cells {
        let g2: f64 = grad.iter().map(|g| g[c] * g[c]).sum();
        if g2 == 0.0 {
            continue;
        }
        let mut inv = 0.0;
        for m in 0..steps {
            let s = (m as f64 + 0.5) * h;
            inv += 1.0 / (1.0 - s + s * u[c]);
        }
        total += g2 * inv * h;
    }
    Ok(total / cells as f64)
}

/// `4∫|∇(−L̂)^{−1}(u − v)|²/v dμ` for two smoothings over the same mode set.
pub fn ledoux_bound(u: &SpectralEmpirical, v: &SpectralEmpirical, n: usize) -> Result<f64> {
    if u.mode_set.pairs != v.mode_set.pairs {
        return Err(invalid("ledoux_bound needs both densities on one mode set"));
    }
    let denom = v.density_grid(n);
    let min = denom.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NonPositiveDensity { min });
    }
    let diff: Vec<f64> = u
        .density_coeffs()
        .iter()
        .zip(v.density_coeffs())
        .zip(&u.mode_set.pairs)
        .map(|((a, b), p)| (a - b) / p.lambda)
        .collect();
    let g = *u.geometry();
    let f = ComplexCoeffs::from_real(&u.mode_set, &diff);
    let mut acc = vec![0.0; denom.len()];
    for a in 0..g.dim() {
        let da = synthesize(&g, n, &f.derivative(&g, a));
        for (s, x) in acc.iter_mut().zip(da) {
            *s += x * x;
        }
    }
    let total: f64 = acc.iter().zip(&denom).map(|(g2, v)| g2 / v).sum();
    Ok(4.0 * total / denom.len() as f64)
}

/// `∫_{ε'}^{ε} ‖u_{T,s} − 1‖²_{L²(μ)} ds`, in closed form per mode.
pub fn smoothing_integral(se: &SpectralEmpirical, eps_lo: f64, eps_hi: f64) -> f64 {
    se.mode_set
        .pairs
        .iter()
        .zip(&se.psi)
        .map(|(p, psi)| {
            let a2 = psi * psi / se.horizon;
            a2 * ((-2.0 * p.lambda * eps_lo).exp() - (-2.0 * p.lambda * eps_hi).exp()) / (2.0 * p.lambda)
        })
        .sum()
}
