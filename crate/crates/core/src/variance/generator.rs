//! Galerkin matrix of `L = Δ + Z` on a truncated real Fourier basis.

use nalgebra::{DMatrix, DVector};

use crate::diffusion::DriftSpec;
use crate::error::{Error, Result};
use crate::spectral::{ModeSet, Parity};
use crate::trig::TrigPoly;

/// Sparse Galerkin representation of the generator for constant `V`.
///
/// The symmetric part is `diag(−λ_i)`; the antisymmetric part is stored by
/// columns: column `i` lists the coefficients of `Zφ_i` inside the mode set.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    pub mode_set: ModeSet,
    z_cols: Vec<Vec<(usize, f64)>>,
    /// Symmetrised sparsity pattern of `Z`, for component searches.
    adjacency: Vec<Vec<usize>>,
    /// L² norm of the part of `Zφ_i` outside the mode set.
    escaped: Vec<f64>,
    /// Largest eigenvalue present in `Zφ_i`.
    required_lambda: Vec<f64>,
    /// `∫Zφ_i dμ`, which vanishes for a μ-divergence-free `Z`.
    constant_component: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn assemble(drift: &DriftSpec, mode_set: &ModeSet) -> Result<Self> {
        if !drift.has_constant_potential() {
            return Err(Error::Unsupported(
                "Galerkin assembly is implemented for constant potentials only".into(),
            ));
        }
        if *drift.geometry() != mode_set.geometry {
            return Err(crate::error::invalid("drift and mode set live on different tori"));
        }
        let n = mode_set.len();
        let geom = &mode_set.geometry;
        let mut z_cols = vec![Vec::new(); n];
        let mut escaped = vec![0.0; n];
        let mut constant_component = vec![0.0; n];
        let mut required_lambda = mode_set.lambdas();
        if let Some(z) = drift.constant_drift() {
            // Zφ_cos = −b φ_sin, Zφ_sin = b φ_cos with b = (2π/L) k·z
            let w = geom.wavenumber();
            for j in 0..mode_set.n_representatives() {
                let k = mode_set.representative(j);
                let b = w * (0..geom.dim()).map(|a| k.0[a] as f64 * z[a]).sum::<f64>();
                if b != 0.0 {
                    z_cols[2 * j].push((2 * j + 1, -b));
                    z_cols[2 * j + 1].push((2 * j, b));
                }
            }
        } else {
            let field = drift.w_field();
            for (i, col) in z_cols.iter_mut().enumerate() {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                let phi = TrigPoly::from_modes(mode_set, &e);
                let zphi = field.apply(&phi, geom).pruned(1e-14);
                constant_component[i] = zphi.mean();
                required_lambda[i] = zphi.max_norm_sq() as f64 * geom.spectral_unit();
                let (coeffs, esc) = zphi.project(mode_set);
                escaped[i] = esc;
                *col = coeffs.into_iter().enumerate().filter(|(_, c)| c.abs() > 1e-14).collect();
            }
        }
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, col) in z_cols.iter().enumerate() {
            for &(r, _) in col {
                adjacency[i].push(r);
                adjacency[r].push(i);
            }
        }
        Ok(Self { mode_set: mode_set.clone(), z_cols, adjacency, escaped, required_lambda, constant_component })
    }

    pub fn len(&self) -> usize {
        self.mode_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mode_set.is_empty()
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.mode_set.pairs[i].lambda
    }

    /// Largest `|∫Zφ_i dμ|` over the basis.
    pub fn max_constant_component(&self) -> f64 {
        self.constant_component.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Coefficients of `Zφ_i`; errors when part of it leaves the truncation.
    pub fn z_apply_basis(&self, i: usize) -> Result<Vec<f64>> {
        if self.escaped[i] > 1e-12 {
            return Err(Error::TruncationEscape { required_lambda_max: self.required_lambda[i] });
        }
        let mut out = vec![0.0; self.len()];
        for &(r, v) in &self.z_cols[i] {
            out[r] = v;
        }
        Ok(out)
    }

    /// `Lv` for a coefficient vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = v.iter().enumerate().map(|(i, x)| -self.lambda(i) * x).collect();
        for (i, col) in self.z_cols.iter().enumerate() {
            if v[i] != 0.0 {
                for &(r, a) in col {
                    out[r] += a * v[i];
                }
            }
        }
        out
    }

    /// Indices coupled to the support of `v` through `Z`, sorted.
    pub fn component(&self, v: &[f64]) -> Vec<usize> {
        let n = self.len();
        let adj = &self.adjacency;
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&i| v[i] != 0.0).collect();
        for &i in &stack {
            seen[i] = true;
        }
        let mut out = Vec::new();
        while let Some(i) = stack.pop() {
            out.push(i);
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Dense `L` restricted to `idx` (rows and columns).
    pub fn dense_block(&self, idx: &[usize]) -> DMatrix<f64> {
        let mut pos = vec![usize::MAX; self.len()];
        for (a, &i) in idx.iter().enumerate() {
            pos[i] = a;
        }
        let m = idx.len();
        let mut mat = DMatrix::zeros(m, m);
        for (a, &i) in idx.iter().enumerate() {
            mat[(a, a)] = -self.lambda(i);
            for &(r, v) in &self.z_cols[i] {
                if pos[r] != usize::MAX {
                    mat[(pos[r], a)] += v;
                }
            }
        }
        mat
    }

    /// Solves `(−L)x = v`; returns `x` in full coordinates.
    pub fn solve_neg(&self, v: &[f64]) -> Result<Vec<f64>> {
        let idx = self.component(v);
        let mut out = vec![0.0; self.len()];
        if idx.is_empty() {
            return Ok(out);
        }
        let a = -self.dense_block(&idx);
        let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]));
        let x = a.lu().solve(&rhs).ok_or(Error::SingularGenerator)?;
        for (a, &i) in idx.iter().enumerate() {
            out[i] = x[a];
        }
        Ok(out)
    }

    /// The basis vector of `(k, parity)` for convenience.
    pub fn basis(&self, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.len()];
        e[i] = 1.0;
        e
    }

    pub fn index_of(&self, k: &crate::spectral::KVec, parity: Parity) -> Option<usize> {
        self.mode_set.index_of(k, parity)
    }
}
