//! Heat and Poisson kernels expanded over a truncated eigenbasis.

use super::{heat_trace, ModeSet};
use crate::error::{invalid, Error, Result};

/// Heat-trace mass `Σ_{λ>λ_max} e^{−tλ}` missing from the mode set.
pub fn truncation_tail(t: f64, mode_set: &ModeSet) -> Result<f64> {
    let total = heat_trace(t, &mode_set.geometry)?;
    let kept: f64 = mode_set.pairs.iter().map(|p| (-t * p.lambda).exp()).sum();
    Ok((total - kept).max(0.0))
}

/// Heat kernel density `p̂_t(x, y)` with respect to normalised Lebesgue measure.
///
/// Fails when the discarded heat-trace tail exceeds `tail_tol`.
pub fn heat_kernel(t: f64, x: &[f64], y: &[f64], mode_set: &ModeSet, tail_tol: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid(format!("heat kernel needs t > 0, got {t}")));
    }
    let d = mode_set.geometry.dim();
    if x.len() != d || y.len() != d {
        return Err(invalid("point dimension does not match the torus"));
    }
    let tail = truncation_tail(t, mode_set)?;
    if tail > tail_tol {
        return Err(Error::TruncationTail { tail, tolerance: tail_tol });
    }
    let g = &mode_set.geometry;
    let sum: f64 = mode_set
        .pairs
        .iter()
        .map(|p| (-t * p.lambda).exp() * p.eval(x, g) * p.eval(y, g))
        .sum();
    Ok(1.0 + sum)
}

/// Spectral coefficients `e^{−ελ_i}/λ_i` of the Poisson kernel `q_ε`.
pub fn poisson_kernel_coeffs(eps: f64, mode_set: &ModeSet) -> Result<Vec<f64>> {
    if !(eps >= 0.0) {
        return Err(invalid(format!("Poisson kernel needs eps ≥ 0, got {eps}")));
    }
    Ok(mode_set.pairs.iter().map(|p| (-eps * p.lambda).exp() / p.lambda).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};
    use crate::spectral::{enumerate_modes, TorusGeometry};
    use std::f64::consts::PI;

    #[test]
    fn matches_wrapped_gaussian() {
        let g = TorusGeometry::standard(1).unwrap();
        let ms = enumerate_modes(g, 80.0).unwrap();
        let t = 0.5;
        let l = g.side();
        let x = 0.7;
        let y = 2.1;
        // wrapped Gaussian density times L (density w.r.t. normalised measure)
        let oracle: f64 = (-20..=20)
            .map(|n| {
                let r = x - y + n as f64 * l;
                l * (-r * r / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
            })
            .sum();
        let v = heat_kernel(t, &[x], &[y], &ms, 1e-12).unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
        let diag = heat_kernel(t, &[0.0], &[0.0], &ms, 1e-12).unwrap();
        let poisson = (l / (4.0 * PI * t).sqrt())
            * (-20..=20).map(|n| (-(n as f64 * l).powi(2) / (4.0 * t)).exp()).sum::<f64>();
        assert!((diag - poisson).abs() < 1e-8);
    }

    #[test]
    fn symmetric_and_normalised() {
        let g = TorusGeometry::new(2, 3.0).unwrap();
        let ms = enumerate_modes(g, 200.0).unwrap();
        let t = 0.2;
        let x = [0.4, 2.2];
        let y = [1.9, 0.3];
        let a = heat_kernel(t, &x, &y, &ms, 1e-8).unwrap();
        let b = heat_kernel(t, &y, &x, &ms, 1e-8).unwrap();
        assert_eq!(a, b);
        let n = 24;
        let h = g.side() / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                total += heat_kernel(t, &x, &[i as f64 * h, j as f64 * h], &ms, 1e-8).unwrap();
            }
        }
        assert!((total / (n * n) as f64 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_heavy_tail() {
        let g = TorusGeometry::standard(2).unwrap();
        let ms = enumerate_modes(g, 4.0).unwrap();
        let err = heat_kernel(0.01, &[0.0, 0.0], &[0.0, 0.0], &ms, 1e-6).unwrap_err();
        assert!(matches!(err, Error::TruncationTail { .. }));
    }

    #[test]
    fn poisson_coefficients() {
        let g = TorusGeometry::standard(3).unwrap();
        let ms = enumerate_modes(g, 30.0).unwrap();
        assert_eq!(poisson_kernel_coeffs(0.0, &ms).unwrap()[0], 1.0);
        let c = poisson_kernel_coeffs(0.3, &ms).unwrap();
        for (w, p) in c.windows(2).zip(ms.pairs.windows(2)) {
            if p[1].lambda > p[0].lambda {
                assert!(w[1] < w[0]);
            }
        }
        let lam = 2.0;
        let eps = 0.1;
        let q = integrate(|t| (-(t + eps) * lam).exp(), 0.0, 40.0, QuadOptions::default()).unwrap();
        assert!((q.value - (-eps * lam).exp() / lam).abs() < 1e-12);
    }
}
