//! The smoothed occupation density `u_{T,ε}` and its potential `f_{T,ε}`.

use std::sync::Arc;

use nalgebra::{Complex, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::GridDensity;
use crate::error::{invalid, Result};
use crate::spectral::{synthesize, truncation_tail, ComplexCoeffs, ModeSet, TorusGeometry};

/// Smoothing time `ε = (log T)^γ / T`.
pub fn epsilon_schedule(horizon: f64, gamma: f64) -> f64 {
    horizon.ln().powf(gamma) / horizon
}

/// Occupation coefficients `ψ_i(T)` together with `(T, ε)`.
///
/// Represents `u_{T,ε} − 1 = T^{−1/2} Σ e^{−λ_iε} ψ_i φ_i`.
#[derive(Debug, Clone)]
pub struct SpectralEmpirical {
    pub mode_set: Arc<ModeSet>,
    pub psi: Vec<f64>,
    pub horizon: f64,
    pub eps: f64,
}

/// Grid maximum of the Hessian operator norm and its certified slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianSup {
    pub grid_value: f64,
    /// `‖∇³f‖_∞·(grid diagonal)/2`, zero when not certifying.
    pub slack: f64,
}

impl HessianSup {
    /// An upper bound on the true supremum when certified.
    pub fn certified(&self) -> f64 {
        self.grid_value + self.slack
    }
}

impl SpectralEmpirical {
    pub fn new(mode_set: Arc<ModeSet>, psi: Vec<f64>, horizon: f64, eps: f64) -> Result<Self> {
        if psi.len() != mode_set.len() {
            return Err(invalid(format!("{} ψ values for {} modes", psi.len(), mode_set.len())));
        }
        if !(horizon > 0.0) || !(eps >= 0.0) {
            return Err(invalid("need T > 0 and ε ≥ 0"));
        }
        Ok(Self { mode_set, psi, horizon, eps })
    }

    /// Same ψ with the schedule `ε = (log T)^γ/T`.
    pub fn with_schedule(mode_set: Arc<ModeSet>, psi: Vec<f64>, horizon: f64, gamma: f64) -> Result<Self> {
        Self::new(mode_set, psi, horizon, epsilon_schedule(horizon, gamma))
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.mode_set.geometry
    }

    /// The same sample at another smoothing time.
    pub fn at_eps(&self, eps: f64) -> Self {
        Self { eps, ..self.clone() }
    }

    /// Coefficients of `u_{T,ε} − 1`.
    pub fn density_coeffs(&self) -> Vec<f64> {
        let s = self.horizon.sqrt();
        self.mode_set
            .pairs
            .iter()
            .zip(&self.psi)
            .map(|(p, psi)| (-p.lambda * self.eps).exp() * psi / s)
            .collect()
    }

    /// Coefficients of `f_{T,ε} = (−L̂)^{−1}(u_{T,ε} − 1)`.
    pub fn potential_coeffs(&self) -> Vec<f64> {
        self.density_coeffs()
            .iter()
            .zip(&self.mode_set.pairs)
            .map(|(c, p)| c / p.lambda)
            .collect()
    }

    /// Discarded heat mass `Σ_{λ>λ_max} e^{−ελ}`; large values mean the
    /// truncation does not resolve `u_{T,ε}`.
    pub fn truncation_tail(&self) -> Result<f64> {
        if self.eps == 0.0 {
            return Ok(f64::INFINITY);
        }
        truncation_tail(self.eps, &self.mode_set)
    }

    /// `u_{T,ε}(x)` at arbitrary points.
    pub fn density_at(&self, points: &[Vec<f64>]) -> Vec<f64> {
        let c = self.density_coeffs();
        let g = self.geometry();
        points
            .iter()
            .map(|x| 1.0 + self.mode_set.pairs.iter().zip(&c).map(|(p, a)| a * p.eval(x, g)).sum::<f64>())
            .collect()
    }

    /// `u_{T,ε}` on the `n^d` grid (raw values, possibly negative).
    pub fn density_grid(&self, n: usize) -> Vec<f64> {
        let coeffs = ComplexCoeffs::from_real(&self.mode_set, &self.density_coeffs());
        let mut v = synthesize(self.geometry(), n, &coeffs);
        for x in &mut v {
            *x += 1.0;
        }
        v
    }

    /// `μ_{T,ε}` as cell masses; see [`GridDensity::from_values`].
    pub fn grid_density(&self, n: usize) -> Result<GridDensity> {
        GridDensity::from_values(*self.geometry(), n, &self.density_grid(n))
    }

    /// `μ(|∇f_{T,ε}|²) = T^{−1} Σ e^{−2λ_iε} ψ_i² / λ_i`.
    pub fn h1_energy(&self) -> f64 {
        let e: f64 = self
            .mode_set
            .pairs
            .iter()
            .zip(&self.psi)
            .map(|(p, psi)| (-2.0 * p.lambda * self.eps).exp() * psi * psi / p.lambda)
            .sum();
        e / self.horizon
    }

    /// `‖u_{T,ε} − 1‖²_{L²(μ)}`.
    pub fn l2_fluctuation(&self) -> f64 {
        self.density_coeffs().iter().map(|c| c * c).sum()
    }

    /// Components of `∇f_{T,ε}` on the grid, one vector per axis.
    pub fn potential_gradient_grid(&self, n: usize) -> Vec<Vec<f64>> {
        let g = *self.geometry();
        let f = ComplexCoeffs::from_real(&self.mode_set, &self.potential_coeffs());
        (0..g.dim()).map(|a| synthesize(&g, n, &f.derivative(&g, a))).collect()
    }

    /// Max over the grid of the operator norm of `∇²f_{T,ε}`, optionally with
    /// the Lipschitz slack that turns it into a rigorous bound.
    pub fn hessian_sup(&self, n: usize, certify: bool) -> HessianSup {
        let g = *self.geometry();
        let d = g.dim();
        let coeffs = self.potential_coeffs();
        let f = ComplexCoeffs::from_real(&self.mode_set, &coeffs);
        let w = g.wavenumber();
        let mut entries: Vec<Vec<f64>> = Vec::new();
        for a in 0..d {
            for b in a..d {
                let h = f.map(|k| Complex::new(-w * w * k.0[a] as f64 * k.0[b] as f64, 0.0));
                entries.push(synthesize(&g, n, &h));
            }
        }
        let cells = n.pow(d as u32);
        let mut best: f64 = 0.0;
        for c in 0..cells {
            let mut m = Matrix4::<f64>::zeros();
            let mut e = 0;
            for a in 0..d {
                for b in a..d {
                    m[(a, b)] = entries[e][c];
                    m[(b, a)] = entries[e][c];
                    e += 1;
                }
            }
            let ev = SymmetricEigen::new(m).eigenvalues;
            best = best.max(ev.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
        }
        let slack = if certify {
            // ‖∇³f‖_∞ ≤ Σ_pairs √2·√(c_cos² + c_sin²)·(2π|k|/L)³
            let third: f64 = self
                .mode_set
                .pairs
                .chunks_exact(2)
                .zip(coeffs.chunks_exact(2))
                .map(|(p, c)| {
                    let kn = w * (p[0].k.norm_sq() as f64).sqrt();
                    std::f64::consts::SQRT_2 * c[0].hypot(c[1]) * kn.powi(3)
                })
                .sum();
            third * (g.side() / n as f64) * (d as f64).sqrt() / 2.0
        } else {
            0.0
        };
        HessianSup { grid_value: best, slack }
    }

    /// The flatness event: certified Hessian sup at most `xi`.
    pub fn flatness_event(&self, xi: f64, n: usize) -> Result<bool> {
        if !(xi > 0.0) {
            return Err(invalid("flatness threshold must be positive"));
        }
        Ok(self.hessian_sup(n, true).certified() <= xi)
    }
}
