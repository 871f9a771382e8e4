//! Synthesis of trigonometric polynomials on uniform periodic grids.
//!
//! Grid point `(i_0, …, i_{d−1})` sits at `x_j = i_j·L/n`; storage is
//! row-major with axis 0 slowest. The sum is contracted one axis at a time,
//! which costs `O(n·B·(n+B)^{d−1})` for a coefficient box of side `B`.

use nalgebra::Complex;

use super::{KVec, ModeSet, Parity, TorusGeometry};

/// A real function written as `Re Σ_k c_k e^{i2πk·x/L}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComplexCoeffs {
    pub terms: Vec<(KVec, Complex<f64>)>,
}

impl ComplexCoeffs {
    /// From real coefficients `a_i` over a mode set: `Σ a_i φ_i`.
    pub fn from_real(mode_set: &ModeSet, coeffs: &[f64]) -> Self {
        let sq2 = std::f64::consts::SQRT_2;
        let mut terms = Vec::with_capacity(mode_set.n_representatives());
        for (pair, c) in mode_set.pairs.chunks_exact(2).zip(coeffs.chunks_exact(2)) {
            debug_assert!(pair[0].parity == Parity::Cos && pair[1].parity == Parity::Sin);
            if c[0] != 0.0 || c[1] != 0.0 {
                terms.push((pair[0].k, Complex::new(sq2 * c[0], -sq2 * c[1])));
            }
        }
        Self { terms }
    }

    /// Multiplies each coefficient by a per-frequency factor.
    pub fn map(&self, f: impl Fn(&KVec) -> Complex<f64>) -> Self {
        Self { terms: self.terms.iter().map(|(k, c)| (*k, c * f(k))).collect() }
    }

    /// Coefficients of `∂_a f`.
    pub fn derivative(&self, geom: &TorusGeometry, a: usize) -> Self {
        let w = geom.wavenumber();
        self.map(|k| Complex::new(0.0, w * k.0[a] as f64))
    }
}

/// Coordinates `i·L/n` of one grid axis.
pub fn grid_points(geom: &TorusGeometry, n: usize) -> Vec<f64> {
    let h = geom.side() / n as f64;
    (0..n).map(|i| i as f64 * h).collect()
}

/// Values of the real function on the `n^d` grid.
pub fn synthesize(geom: &TorusGeometry, n: usize, coeffs: &ComplexCoeffs) -> Vec<f64> {
    let d = geom.dim();
    let total = n.pow(d as u32);
    if coeffs.terms.is_empty() {
        return vec![0.0; total];
    }
    let mut lo = [i32::MAX; 4];
    let mut hi = [i32::MIN; 4];
    for (k, _) in &coeffs.terms {
        for j in 0..d {
            lo[j] = lo[j].min(k.0[j]);
            hi[j] = hi[j].max(k.0[j]);
        }
    }
    let mut shape: Vec<usize> = (0..d).map(|j| (hi[j] - lo[j] + 1) as usize).collect();
    let mut cur = vec![Complex::new(0.0, 0.0); shape.iter().product()];
    for (k, c) in &coeffs.terms {
        let mut idx = 0;
        for j in 0..d {
            idx = idx * shape[j] + (k.0[j] - lo[j]) as usize;
        }
        cur[idx] += c;
    }
    let w = geom.wavenumber();
    let xs = grid_points(geom, n);
    for a in 0..d {
        let m = shape[a];
        // table[x][m] = e^{i(lo+m)w x}
        let table: Vec<Complex<f64>> = xs
            .iter()
            .flat_map(|&x| {
                (0..m).map(move |mi| {
                    let (s, c) = ((lo[a] + mi as i32) as f64 * w * x).sin_cos();
                    Complex::new(c, s)
                })
            })
            .collect();
        let outer: usize = shape[..a].iter().product();
        let inner: usize = shape[a + 1..].iter().product();
        let mut next = vec![Complex::new(0.0, 0.0); outer * n * inner];
        for o in 0..outer {
            for xi in 0..n {
                let dst = &mut next[(o * n + xi) * inner..(o * n + xi + 1) * inner];
                for mi in 0..m {
                    let e = table[xi * m + mi];
                    let src = &cur[(o * m + mi) * inner..(o * m + mi + 1) * inner];
                    for (dv, sv) in dst.iter_mut().zip(src) {
                        *dv += e * sv;
                    }
                }
            }
        }
        shape[a] = n;
        cur = next;
    }
    cur.into_iter().map(|z| z.re).collect()
}
