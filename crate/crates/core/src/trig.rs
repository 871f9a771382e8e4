//! Real trigonometric polynomials on the torus, stored as Hermitian
//! complex Fourier coefficients `f(x) = Σ_k c_k e^{i2πk·x/L}` with
//! `c_{−k} = conj(c_k)`.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::spectral::{KVec, ModeSet, Parity, TorusGeometry};

type C64 = Complex<f64>;

/// One raw term `amplitude·cos(2πk·x/L)` or `amplitude·sin(2πk·x/L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: KVec,
    pub parity: Parity,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigPoly {
    coeffs: BTreeMap<KVec, C64>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_coeff(KVec::ZERO, C64::new(c, 0.0));
        p
    }

    pub fn from_terms(terms: &[TrigTerm]) -> Self {
        let mut p = Self::zero();
        for t in terms {
            if t.k.is_zero() {
                if t.parity == Parity::Cos {
                    p.add_coeff(KVec::ZERO, C64::new(t.amplitude, 0.0));
                }
                continue;
            }
            let half = 0.5 * t.amplitude;
            let (ck, cm) = match t.parity {
                Parity::Cos => (C64::new(half, 0.0), C64::new(half, 0.0)),
                Parity::Sin => (C64::new(0.0, -half), C64::new(0.0, half)),
            };
            p.add_coeff(t.k, ck);
            p.add_coeff(t.k.neg(), cm);
        }
        p
    }

    /// `Σ a_i φ_i` for real coefficients over a mode set.
    pub fn from_modes(mode_set: &ModeSet, coeffs: &[f64]) -> Self {
        let terms: Vec<TrigTerm> = mode_set
            .pairs
            .iter()
            .zip(coeffs)
            .filter(|(_, &a)| a != 0.0)
            .map(|(p, &a)| TrigTerm { k: p.k, parity: p.parity, amplitude: SQRT_2 * a })
            .collect();
        Self::from_terms(&terms)
    }

    fn add_coeff(&mut self, k: KVec, c: C64) {
        let e = self.coeffs.entry(k).or_insert(C64::new(0.0, 0.0));
        *e += c;
    }

    pub fn coeff(&self, k: &KVec) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&KVec, &C64)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.norm() == 0.0)
    }

    /// Mean value `∫f dμ`.
    pub fn mean(&self) -> f64 {
        self.coeff(&KVec::ZERO).re
    }

    pub fn max_norm_sq(&self) -> i64 {
        self.coeffs
            .iter()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(k, _)| k.norm_sq())
            .max()
            .unwrap_or(0)
    }

    /// Drops coefficients with modulus below `tol`.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.coeffs.retain(|_, c| c.norm() > tol);
        self
    }

    pub fn eval(&self, x: &[f64], geom: &TorusGeometry) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| {
                let (s, co) = k.phase(x, geom).sin_cos();
                c.re * co - c.im * s
            })
            .sum()
    }

    pub fn gradient(&self, x: &[f64], geom: &TorusGeometry) -> [f64; 4] {
        let w = geom.wavenumber();
        let mut g = [0.0; 4];
        for (k, c) in &self.coeffs {
            let (s, co) = k.phase(x, geom).sin_cos();
            // d/dθ Re(c e^{iθ}) = −c.re sinθ − c.im cosθ
            let dv = -c.re * s - c.im * co;
            for j in 0..geom.dim() {
                g[j] += w * k.0[j] as f64 * dv;
            }
        }
        g
    }

    /// `Σ |c_k|`, an upper bound for `‖f‖_∞`.
    pub fn abs_sum(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|(k, c)| (*k, c * a)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.coeffs {
            out.add_coeff(*k, *c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (k1, c1) in &self.coeffs {
            for (k2, c2) in &other.coeffs {
                out.add_coeff(k1.add(k2), c1 * c2);
            }
        }
        out
    }

    /// `∂_a f`.
    pub fn derivative(&self, geom: &TorusGeometry, a: usize) -> Self {
        let w = geom.wavenumber();
        Self {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(k, _)| k.0[a] != 0)
                .map(|(k, c)| (*k, c * C64::new(0.0, w * k.0[a] as f64)))
                .collect(),
        }
    }

    /// Real coefficients on a mode set plus the L² norm of what falls outside it
    /// (including any constant part).
    pub fn project(&self, mode_set: &ModeSet) -> (Vec<f64>, f64) {
        let mut out = vec![0.0; mode_set.len()];
        let mut escaped = 0.0;
        for (k, c) in &self.coeffs {
            if k.is_zero() {
                escaped += c.norm_sqr();
                continue;
            }
            if !k.is_positive() {
                continue;
            }
            match mode_set.index_of(k, Parity::Cos) {
                Some(i) => {
                    out[i] = SQRT_2 * c.re;
                    out[i + 1] = -SQRT_2 * c.im;
                }
                None => escaped += 2.0 * c.norm_sqr(),
            }
        }
        (out, escaped.sqrt())
    }
}

/// A vector field whose components are trigonometric polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigField {
    pub components: Vec<TrigPoly>,
}

impl TrigField {
    pub fn zero(d: usize) -> Self {
        Self { components: vec![TrigPoly::zero(); d] }
    }

    pub fn divergence(&self, geom: &TorusGeometry) -> TrigPoly {
        self.components
            .iter()
            .enumerate()
            .fold(TrigPoly::zero(), |acc, (j, c)| acc.add(&c.derivative(geom, j)))
    }

    /// The derivation `f ↦ Σ_j Z_j ∂_j f`.
    pub fn apply(&self, f: &TrigPoly, geom: &TorusGeometry) -> TrigPoly {
        self.components
            .iter()
            .enumerate()
            .fold(TrigPoly::zero(), |acc, (j, c)| acc.add(&c.mul(&f.derivative(geom, j))))
    }

    pub fn eval(&self, x: &[f64], geom: &TorusGeometry) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (j, c) in self.components.iter().enumerate() {
            out[j] = c.eval(x, geom);
        }
        out
    }

    /// Upper bound on `sup_x |Z(x)|`.
    pub fn sup_bound(&self) -> f64 {
        self.components.iter().map(|c| c.abs_sum().powi(2)).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::enumerate_modes;

    #[test]
    fn eigenfunction_coefficients() {
        let g = TorusGeometry::standard(2).unwrap();
        let ms = enumerate_modes(g, 5.0).unwrap();
        let mut a = vec![0.0; ms.len()];
        a[3] = 0.7;
        a[6] = -1.2;
        let p = TrigPoly::from_modes(&ms, &a);
        let x = [0.4, 1.9];
        let direct: f64 = ms.pairs.iter().zip(&a).map(|(m, c)| c * m.eval(&x, &g)).sum();
        assert!((p.eval(&x, &g) - direct).abs() < 1e-14);
        let (back, esc) = p.project(&ms);
        assert!(esc < 1e-15);
        for (u, v) in back.iter().zip(&a) {
            assert!((u - v).abs() < 1e-15);
        }
    }

    #[test]
    fn product_and_gradient() {
        let g = TorusGeometry::new(2, 3.0).unwrap();
        let k = KVec::from_slice(&[1, 2]);
        let p = TrigPoly::from_terms(&[TrigTerm { k, parity: Parity::Sin, amplitude: 1.5 }]);
        let q = TrigPoly::from_terms(&[
            TrigTerm { k: KVec::unit(1), parity: Parity::Cos, amplitude: -0.5 },
            TrigTerm { k: KVec::ZERO, parity: Parity::Cos, amplitude: 2.0 },
        ]);
        let x = [1.1, 0.3];
        assert!((p.mul(&q).eval(&x, &g) - p.eval(&x, &g) * q.eval(&x, &g)).abs() < 1e-13);
        let h = 1e-6;
        let grad = p.gradient(&x, &g);
        let fd = (p.eval(&[x[0] + h, x[1]], &g) - p.eval(&[x[0] - h, x[1]], &g)) / (2.0 * h);
        assert!((grad[0] - fd).abs() < 1e-7);
        let dp = p.derivative(&g, 1).eval(&x, &g);
        assert!((dp - grad[1]).abs() < 1e-13);
    }

    #[test]
    fn shear_field_is_divergence_free() {
        let g = TorusGeometry::standard(2).unwrap();
        // W = (sin(x2), 0) depends only on the transverse coordinate
        let w = TrigField {
            components: vec![
                TrigPoly::from_terms(&[TrigTerm { k: KVec::unit(1), parity: Parity::Sin, amplitude: 1.0 }]),
                TrigPoly::zero(),
            ],
        };
        assert!(w.divergence(&g).pruned(1e-15).is_zero());
    }
}
