//! Generator data: a trigonometric potential `V` and a μ-divergence-free `Z`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral::{grid_points, KVec, Parity, TorusGeometry};
use crate::trig::{TrigField, TrigPoly, TrigTerm};

/// One shear component `amplitude·trig(2πk·x/L)·direction` of the field `W`.
///
/// `direction·k = 0` makes the component divergence free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearMode {
    pub k: KVec,
    pub parity: Parity,
    pub amplitude: f64,
    pub direction: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ZSpec {
    Zero,
    Constant { z: [f64; 4] },
    Shear { modes: Vec<ShearMode> },
}

/// Drift of `L = Δ + ∇V·∇ + Z` with `Z = e^{−Ṽ}W`, where `Ṽ` is the
/// non-constant part of `V`; then `div(e^V Z) ∝ div W = 0`.
#[derive(Debug, Clone)]
pub struct DriftSpec {
    geometry: TorusGeometry,
    v_terms: Vec<TrigTerm>,
    z_spec: ZSpec,
    v: TrigPoly,
    w: TrigField,
    w_constant: Option<[f64; 4]>,
    log_normalizer: f64,
    v_bound: f64,
    acceptance: f64,
    z_sup: f64,
    mu_divergence_residual: f64,
}

// per-dimension check-grid resolution
const CHECK_GRID: [usize; 4] = [64, 64, 24, 12];
const MIN_ACCEPTANCE: f64 = 1e-4;

fn check_grid(geometry: &TorusGeometry) -> Vec<Vec<f64>> {
    let d = geometry.dim();
    let n = CHECK_GRID[d - 1];
    let xs = grid_points(geometry, n);
    (0..n.pow(d as u32))
        .map(|mut flat| {
            let mut x = vec![0.0; d];
            for j in (0..d).rev() {
                x[j] = xs[flat % n] + 0.37 * geometry.side() / n as f64;
                flat /= n;
            }
            x
        })
        .collect()
}

impl DriftSpec {
    /// `V` constant (normalised Lebesgue invariant law) and `Z = 0`.
    pub fn free(geometry: TorusGeometry) -> Self {
        Self::new(geometry, vec![], ZSpec::Zero).expect("the free drift is always valid")
    }

    pub fn constant_z(geometry: TorusGeometry, z: &[f64]) -> Result<Self> {
        let mut arr = [0.0; 4];
        arr[..z.len()].copy_from_slice(z);
        Self::new(geometry, vec![], ZSpec::Constant { z: arr })
    }

    pub fn new(geometry: TorusGeometry, v_terms: Vec<TrigTerm>, z_spec: ZSpec) -> Result<Self> {
        let d = geometry.dim();
        for t in &v_terms {
            if t.k.0[d..].iter().any(|&c| c != 0) {
                return Err(invalid(format!("potential term {} exceeds dimension {d}", t.k)));
            }
        }
        // constant parts of V only shift the normaliser
        let v_tilde: Vec<TrigTerm> = v_terms.iter().copied().filter(|t| !t.k.is_zero()).collect();
        let v = TrigPoly::from_terms(&v_tilde);
        let v_bound = v_tilde.iter().map(|t| t.amplitude.abs()).sum::<f64>();

        let (w, w_constant) = match &z_spec {
            ZSpec::Zero => (TrigField::zero(d), Some([0.0; 4])),
            ZSpec::Constant { z } => {
                if z[d..].iter().any(|&c| c != 0.0) {
                    return Err(invalid("constant drift has components beyond the dimension"));
                }
                let comps = (0..d).map(|j| TrigPoly::constant(z[j])).collect();
                (TrigField { components: comps }, Some(*z))
            }
            ZSpec::Shear { modes } => {
                let mut f = TrigField::zero(d);
                for m in modes {
                    if m.k.0[d..].iter().any(|&c| c != 0) || m.direction[d..].iter().any(|&c| c != 0.0) {
                        return Err(invalid("shear mode exceeds the torus dimension"));
                    }
                    for j in 0..d {
                        if m.direction[j] != 0.0 {
                            let term = TrigTerm { k: m.k, parity: m.parity, amplitude: m.amplitude * m.direction[j] };
                            f.components[j] = f.components[j].add(&TrigPoly::from_terms(&[term]));
                        }
                    }
                }
                (f, None)
            }
        };

        let grid = check_grid(&geometry);
        // normaliser and acceptance rate by grid quadrature (spectrally accurate)
        let mean_exp = grid.iter().map(|x| v.eval(x, &geometry).exp()).sum::<f64>() / grid.len() as f64;
        let log_normalizer = mean_exp.ln() + geometry.volume().ln();
        let acceptance = mean_exp * (-v_bound).exp();

        let div_w = w.divergence(&geometry);
        let mut residual: f64 = 0.0;
        let mut z_sup: f64 = 0.0;
        for x in &grid {
            let ev = v.eval(x, &geometry).exp();
            let gv = v.gradient(x, &geometry);
            let wx = w.eval(x, &geometry);
            // div(e^V Z) = e^{c}(∇Ṽ·W − ∇Ṽ·W + div W) evaluated term by term
            let grad_dot_z: f64 = (0..d).map(|j| gv[j] * wx[j] / ev).sum();
            let div_z = (div_w.eval(x, &geometry) - (0..d).map(|j| gv[j] * wx[j]).sum::<f64>()) / ev;
            residual = residual.max((ev * (grad_dot_z + div_z)).abs());
            z_sup = z_sup.max((0..d).map(|j| (wx[j] / ev).powi(2)).sum::<f64>().sqrt());
        }
        if residual > 1e-8 * (1.0 + z_sup) {
            return Err(Error::Divergence { residual, allowed: 1e-8 * (1.0 + z_sup) });
        }
        Ok(Self {
            geometry,
            v_terms,
            z_spec,
            v,
            w,
            w_constant,
            log_normalizer,
            v_bound,
            acceptance,
            z_sup,
            mu_divergence_residual: residual,
        })
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    pub fn v_terms(&self) -> &[TrigTerm] {
        &self.v_terms
    }

    pub fn z_spec(&self) -> &ZSpec {
        &self.z_spec
    }

    /// `V` without its constant part.
    pub fn potential(&self) -> &TrigPoly {
        &self.v
    }

    /// The divergence-free field `W`.
    pub fn w_field(&self) -> &TrigField {
        &self.w
    }

    pub fn has_constant_potential(&self) -> bool {
        self.v.is_zero()
    }

    /// `Some(z)` when `V` is constant and `Z ≡ z`.
    pub fn constant_drift(&self) -> Option<[f64; 4]> {
        if self.has_constant_potential() {
            self.w_constant
        } else {
            None
        }
    }

    /// `log ∫ e^{Ṽ} dvol`; the normalised potential is `Ṽ − log_normalizer`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn z_sup(&self) -> f64 {
        self.z_sup
    }

    pub fn mu_divergence_residual(&self) -> f64 {
        self.mu_divergence_residual
    }

    /// Invariant density w.r.t. normalised Lebesgue measure.
    pub fn density(&self, x: &[f64]) -> f64 {
        (self.v.eval(x, &self.geometry) - self.log_normalizer).exp() * self.geometry.volume()
    }

    /// `∇V(x) + Z(x)`.
    pub fn drift(&self, x: &[f64], out: &mut [f64; 4]) {
        if let Some(z) = self.constant_drift() {
            *out = z;
            return;
        }
        let g = &self.geometry;
        let gv = self.v.gradient(x, g);
        let wx = self.w.eval(x, g);
        let scale = (-self.v.eval(x, g)).exp();
        for j in 0..g.dim() {
            out[j] = gv[j] + scale * wx[j];
        }
    }

    /// Draws from the invariant law `μ ∝ e^V`: uniform for constant `V`,
    /// otherwise rejection from uniform against the bound `Ṽ ≤ Σ|amplitude|`.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<[f64; 4]> {
        let g = &self.geometry;
        let d = g.dim();
        let mut x = [0.0; 4];
        if self.has_constant_potential() {
            for xj in x.iter_mut().take(d) {
                *xj = g.wrap(rng.random::<f64>() * g.side());
            }
            return Ok(x);
        }
        if self.acceptance < MIN_ACCEPTANCE {
            return Err(Error::AcceptanceRate { rate: self.acceptance });
        }
        loop {
            for xj in x.iter_mut().take(d) {
                *xj = g.wrap(rng.random::<f64>() * g.side());
            }
            let a = (self.v.eval(&x[..d], g) - self.v_bound).exp();
            if rng.random::<f64>() < a {
                return Ok(x);
            }
        }
    }

    /// Expected rejection-sampler acceptance rate.
    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance
    }
}
