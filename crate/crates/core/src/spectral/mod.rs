//! Exact spectral data of the flat torus `(ℝ/Lℤ)^d`.
//!
//! The Laplacian eigenfunctions are `√2·cos(2πk·x/L)` and `√2·sin(2πk·x/L)`
//! for lattice vectors `k` taken from the lexicographically positive half of
//! `ℤ^d \ {0}`, with eigenvalue `(2π/L)²|k|²`. The constant mode is never part
//! of a [`ModeSet`].

mod eval;
mod grid;
mod kernels;
mod sums;

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use eval::ModeEvaluator;
pub use grid::{grid_points, synthesize, ComplexCoeffs};
pub use kernels::{heat_kernel, poisson_kernel_coeffs, truncation_tail};
pub use sums::{
    heat_trace, shell_counts, spectral_sum_inv_lambda, spectral_sum_inv_lambda_sq, theta,
    theta_minus_one,
};

/// Largest supported dimension.
pub const MAX_DIM: usize = 4;

/// Default cap on the number of enumerated eigenpairs (≈ 100 MB of pairs).
pub const DEFAULT_MODE_BUDGET: usize = 2_000_000;

/// The flat torus `(ℝ/Lℤ)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGeometry {
    d: usize,
    side: f64,
}

impl TorusGeometry {
    pub fn new(d: usize, side: f64) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(invalid(format!("dimension must be in 1..={MAX_DIM}, got {d}")));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(invalid(format!("side length must be positive, got {side}")));
        }
        Ok(Self { d, side })
    }

    /// The `L = 2π` torus, where eigenvalues are plain integers `|k|²`.
    pub fn standard(d: usize) -> Result<Self> {
        Self::new(d, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.d as i32)
    }

    /// Half the main diagonal of the periodic cell.
    pub fn diameter(&self) -> f64 {
        self.side * (self.d as f64).sqrt() / 2.0
    }

    /// Wave-number scale `2π/L`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.side
    }

    /// Spectral unit `(2π/L)²`; also the smallest nonzero eigenvalue.
    pub fn spectral_unit(&self) -> f64 {
        let w = self.wavenumber();
        w * w
    }

    pub fn lambda_min(&self) -> f64 {
        self.spectral_unit()
    }

    pub fn eigenvalue(&self, k: &KVec) -> f64 {
        self.spectral_unit() * k.norm_sq() as f64
    }

    /// `vol/(8π²)`: the limiting constant of the scaled quadratic cost in d = 4.
    pub fn vol_over_8pi2(&self) -> f64 {
        self.volume() / (8.0 * PI * PI)
    }

    /// `vol/(16π²)`: small-time coefficient of the d = 4 heat trace.
    pub fn vol_over_16pi2(&self) -> f64 {
        self.volume() / (16.0 * PI * PI)
    }

    /// `vol/(32π²)`: the d = 4 Weyl coefficient.
    pub fn vol_over_32pi2(&self) -> f64 {
        self.volume() / (32.0 * PI * PI)
    }

    /// Reduces a coordinate into `[0, L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let y = x.rem_euclid(self.side);
        // rem_euclid can round up to exactly L for tiny negative inputs
        if y >= self.side {
            0.0
        } else {
            y
        }
    }

    /// Shortest signed displacement from `a` to `b` along one axis.
    pub fn wrapped_delta(&self, a: f64, b: f64) -> f64 {
        let mut t = (b - a).rem_euclid(self.side);
        if t > 0.5 * self.side {
            t -= self.side;
        }
        t
    }
}

/// A lattice vector; components beyond the torus dimension are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KVec(pub [i32; MAX_DIM]);

impl KVec {
    pub const ZERO: KVec = KVec([0; MAX_DIM]);

    /// Builds from a slice of at most [`MAX_DIM`] components.
    pub fn from_slice(k: &[i32]) -> Self {
        let mut out = [0; MAX_DIM];
        out[..k.len()].copy_from_slice(k);
        KVec(out)
    }

    /// Unit vector along `axis`.
    pub fn unit(axis: usize) -> Self {
        let mut out = [0; MAX_DIM];
        out[axis] = 1;
        KVec(out)
    }

    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|&c| c as i64 * c as i64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// True when the first nonzero component is positive.
    pub fn is_positive(&self) -> bool {
        self.0.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
    }

    pub fn neg(&self) -> Self {
        KVec(self.0.map(|c| -c))
    }

    pub fn add(&self, o: &KVec) -> Self {
        let mut out = self.0;
        for (a, b) in out.iter_mut().zip(o.0) {
            *a += b;
        }
        KVec(out)
    }

    /// The lexicographically positive member of `{k, −k}`.
    pub fn canonical(&self) -> Self {
        if self.is_positive() {
            *self
        } else {
            self.neg()
        }
    }

    pub fn max_abs(&self) -> i32 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// Phase `2πk·x/L`.
    pub fn phase(&self, x: &[f64], geom: &TorusGeometry) -> f64 {
        let w = geom.wavenumber();
        x.iter().zip(self.0).map(|(xi, ki)| w * ki as f64 * xi).sum()
    }
}

impl fmt::Display for KVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.0[0], self.0[1], self.0[2], self.0[3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Cos,
    Sin,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Cos => "cos",
            Parity::Sin => "sin",
        })
    }
}

/// One real, L²(μ)-normalised Laplace eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub k: KVec,
    pub parity: Parity,
    pub lambda: f64,
}

impl EigenPair {
    pub fn eval(&self, x: &[f64], geom: &TorusGeometry) -> f64 {
        let th = self.k.phase(x, geom);
        match self.parity {
            Parity::Cos => 2f64.sqrt() * th.cos(),
            Parity::Sin => 2f64.sqrt() * th.sin(),
        }
    }

    /// Gradient `∇φ(x)`; only the first `d` entries are meaningful.
    pub fn gradient(&self, x: &[f64], geom: &TorusGeometry) -> [f64; MAX_DIM] {
        let th = self.k.phase(x, geom);
        let s = match self.parity {
            Parity::Cos => -2f64.sqrt() * th.sin(),
            Parity::Sin => 2f64.sqrt() * th.cos(),
        };
        let w = geom.wavenumber();
        self.k.0.map(|kj| s * w * kj as f64)
    }
}

/// All eigenpairs with `λ ≤ lambda_max`, ordered by `(|k|², k, parity)`.
///
/// Pairs come in cos/sin couples: `pairs[2j]` is the cosine and `pairs[2j+1]`
/// the sine of representative `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub geometry: TorusGeometry,
    pub lambda_max: f64,
    pub pairs: Vec<EigenPair>,
}

/// Enumerates modes under [`DEFAULT_MODE_BUDGET`].
pub fn enumerate_modes(geometry: TorusGeometry, lambda_max: f64) -> Result<ModeSet> {
    enumerate_modes_with_budget(geometry, lambda_max, DEFAULT_MODE_BUDGET)
}

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI * PI / 2.0,
    }
}

pub fn enumerate_modes_with_budget(
    geometry: TorusGeometry,
    lambda_max: f64,
    budget: usize,
) -> Result<ModeSet> {
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(invalid(format!("lambda_max must be positive, got {lambda_max}")));
    }
    let d = geometry.dim();
    let n_max_f = lambda_max / geometry.spectral_unit() * (1.0 + 1e-12);
    // Weyl estimate screens absurd requests before any allocation.
    let estimate = unit_ball_volume(d) * n_max_f.powf(d as f64 / 2.0);
    if estimate > 2.0 * budget as f64 + 64.0 {
        return Err(Error::ModeBudget { requested: estimate as usize, budget });
    }
    let n_max = n_max_f.floor() as i64;
    let r = (n_max as f64).sqrt().floor() as i32;
    let mut reps: Vec<(i64, KVec)> = Vec::new();
    let mut k = [0i32; MAX_DIM];
    // odometer over [-r, r]^d
    for (j, kj) in k.iter_mut().enumerate().take(d) {
        *kj = if j == 0 { 0 } else { -r };
    }
    'outer: loop {
        let kv = KVec(k);
        let n = kv.norm_sq();
        if n > 0 && n <= n_max && kv.is_positive() {
            reps.push((n, kv));
            if 2 * reps.len() > budget {
                return Err(Error::ModeBudget { requested: 2 * reps.len(), budget });
            }
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                break 'outer;
            }
            axis -= 1;
            if k[axis] < r {
                k[axis] += 1;
                break;
            }
            k[axis] = if axis == 0 { 0 } else { -r };
        }
    }
    reps.sort_unstable();
    let unit = geometry.spectral_unit();
    let mut pairs = Vec::with_capacity(2 * reps.len());
    for (n, kv) in reps {
        let lambda = unit * n as f64;
        pairs.push(EigenPair { k: kv, parity: Parity::Cos, lambda });
        pairs.push(EigenPair { k: kv, parity: Parity::Sin, lambda });
    }
    Ok(ModeSet { geometry, lambda_max, pairs })
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn n_representatives(&self) -> usize {
        self.pairs.len() / 2
    }

    /// Representative `j`'s lattice vector.
    pub fn representative(&self, j: usize) -> KVec {
        self.pairs[2 * j].k
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    /// Index of `(k, parity)`; `k` may be given with either sign.
    pub fn index_of(&self, k: &KVec, parity: Parity) -> Option<usize> {
        let kc = k.canonical();
        let key = (kc.norm_sq(), kc, parity);
        self.pairs
            .binary_search_by(|p| (p.k.norm_sq(), p.k, p.parity).cmp(&key))
            .ok()
    }

    /// Largest `max_j |k_j|` over the set.
    pub fn max_component(&self) -> i32 {
        self.pairs.iter().map(|p| p.k.max_abs()).max().unwrap_or(0)
    }

    /// Eigenvalue counting function `N(λ) = #{i : λ_i ≤ λ}`.
    pub fn weyl_count(&self, lambda: f64) -> Result<usize> {
        if lambda > self.lambda_max {
            return Err(Error::AboveCutoff { lambda, lambda_max: self.lambda_max });
        }
        let cut = lambda * (1.0 + 1e-12);
        Ok(self.pairs.partition_point(|p| p.lambda <= cut))
    }

    /// Restriction to `λ ≤ lambda_max` (a prefix, by ordering).
    pub fn truncate(&self, lambda_max: f64) -> ModeSet {
        let cut = lambda_max * (1.0 + 1e-12);
        let n = self.pairs.partition_point(|p| p.lambda <= cut);
        ModeSet { geometry: self.geometry, lambda_max, pairs: self.pairs[..n].to_vec() }
    }
}

/// Free-function form of [`ModeSet::weyl_count`].
pub fn weyl_count(mode_set: &ModeSet, lambda: f64) -> Result<usize> {
    mode_set.weyl_count(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_count(d: usize, n_max: i64) -> usize {
        let r = (n_max as f64).sqrt() as i32 + 1;
        let mut count = 0;
        let range = |j: usize| if j < d { -r..=r } else { 0..=0 };
        for a in range(0) {
            for b in range(1) {
                for c in range(2) {
                    for e in range(3) {
                        let n = (a * a + b * b + c * c + e * e) as i64;
                        if n > 0 && n <= n_max {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn geometry_invariants() {
        let g = TorusGeometry::new(3, 2.0).unwrap();
        assert_eq!(g.volume(), 8.0);
        assert!((g.diameter() - 3f64.sqrt()).abs() < 1e-15);
        assert!(TorusGeometry::new(0, 1.0).is_err());
        assert!(TorusGeometry::new(5, 1.0).is_err());
        assert!(TorusGeometry::new(2, -1.0).is_err());
    }

    #[test]
    fn one_dimensional_first_shell() {
        let ms = enumerate_modes(TorusGeometry::standard(1).unwrap(), 1.5).unwrap();
        assert_eq!(ms.len(), 2);
        assert_eq!(ms.pairs[0].parity, Parity::Cos);
        assert_eq!(ms.pairs[1].parity, Parity::Sin);
        assert!((ms.pairs[0].lambda - 1.0).abs() < 1e-15);
    }

    #[test]
    fn four_dimensional_first_shell() {
        let ms = enumerate_modes(TorusGeometry::standard(4).unwrap(), 1.0).unwrap();
        assert_eq!(ms.len(), 8);
        assert!(ms.pairs.iter().all(|p| (p.lambda - 1.0).abs() < 1e-15));
    }

    #[test]
    fn count_matches_brute_force() {
        let ms = enumerate_modes(TorusGeometry::standard(4).unwrap(), 100.0).unwrap();
        assert_eq!(ms.len(), brute_count(4, 100));
        let ms3 = enumerate_modes(TorusGeometry::new(3, 2.0 * PI).unwrap(), 30.0).unwrap();
        assert_eq!(ms3.len(), brute_count(3, 30));
    }

    #[test]
    fn ordering_is_strict_and_paired() {
        let ms = enumerate_modes(TorusGeometry::standard(3).unwrap(), 20.0).unwrap();
        for w in ms.pairs.windows(2) {
            let a = (w[0].k.norm_sq(), w[0].k, w[0].parity);
            let b = (w[1].k.norm_sq(), w[1].k, w[1].parity);
            assert!(a < b);
        }
        for j in 0..ms.n_representatives() {
            assert_eq!(ms.pairs[2 * j].k, ms.pairs[2 * j + 1].k);
            assert!(ms.pairs[2 * j].k.is_positive());
        }
        let k = KVec::from_slice(&[0, -1, 2]);
        let i = ms.index_of(&k, Parity::Sin).unwrap();
        assert_eq!(ms.pairs[i].k, k.neg());
    }

    #[test]
    fn weyl_counts() {
        let ms = enumerate_modes(TorusGeometry::standard(4).unwrap(), 400.0).unwrap();
        assert_eq!(ms.weyl_count(0.5).unwrap(), 0);
        assert_eq!(ms.weyl_count(1.0).unwrap(), 8);
        let g = ms.geometry;
        let r100 = ms.weyl_count(100.0).unwrap() as f64 / 1e4;
        assert!((r100 / g.vol_over_32pi2() - 1.0).abs() < 0.08);
        let r400 = ms.weyl_count(400.0).unwrap() as f64 / 1.6e5;
        assert!((r400 / g.vol_over_32pi2() - 1.0).abs() < 0.03);
        assert!(matches!(ms.weyl_count(401.0), Err(Error::AboveCutoff { .. })));
    }

    #[test]
    fn budget_is_enforced() {
        let g = TorusGeometry::standard(4).unwrap();
        let err = enumerate_modes_with_budget(g, 100.0, 1000).unwrap_err();
        assert!(matches!(err, Error::ModeBudget { .. }));
        assert!(enumerate_modes(g, 1e6).is_err());
        assert!(enumerate_modes(g, 0.0).is_err());
    }

    #[test]
    fn wrap_stays_in_cell() {
        let g = TorusGeometry::new(1, 3.0).unwrap();
        for x in [-1e-18, -3.0, 3.0, 7.5, -0.2] {
            let y = g.wrap(x);
            assert!((0.0..3.0).contains(&y), "{x} -> {y}");
        }
        assert!((g.wrapped_delta(0.1, 2.9) + 0.2).abs() < 1e-12);
    }
}
