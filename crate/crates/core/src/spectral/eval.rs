//! Fast evaluation of every eigenfunction of a mode set at one point.

use nalgebra::Complex;

use super::{KVec, ModeSet, TorusGeometry};

/// Evaluates all `φ_i(x)` of a mode set via per-axis power tables.
///
/// For each axis the powers `e^{imθ_j}`, `|m| ≤ R`, are built once per point;
/// every representative then costs `d − 1` complex multiplications. Owns
/// scratch buffers, so keep one evaluator per worker.
#[derive(Debug, Clone)]
pub struct ModeEvaluator {
    geom: TorusGeometry,
    reps: Vec<KVec>,
    radius: usize,
    powers: Vec<Complex<f64>>,
    phases: Vec<Complex<f64>>,
}

impl ModeEvaluator {
    pub fn new(mode_set: &ModeSet) -> Self {
        let reps: Vec<KVec> = (0..mode_set.n_representatives()).map(|j| mode_set.representative(j)).collect();
        Self::from_representatives(mode_set.geometry, reps)
    }

    pub fn from_representatives(geom: TorusGeometry, reps: Vec<KVec>) -> Self {
        let radius = reps.iter().map(|k| k.max_abs()).max().unwrap_or(0) as usize;
        let d = geom.dim();
        Self {
            geom,
            powers: vec![Complex::new(0.0, 0.0); d * (2 * radius + 1)],
            phases: vec![Complex::new(0.0, 0.0); reps.len()],
            reps,
            radius,
        }
    }

    pub fn n_representatives(&self) -> usize {
        self.reps.len()
    }

    pub fn representatives(&self) -> &[KVec] {
        &self.reps
    }

    /// Computes `e^{i2πk·x/L}` for every representative.
    pub fn phases(&mut self, x: &[f64]) -> &[Complex<f64>] {
        let d = self.geom.dim();
        let r = self.radius;
        let w = self.geom.wavenumber();
        let stride = 2 * r + 1;
        for j in 0..d {
            let (s, c) = (w * x[j]).sin_cos();
            let base = Complex::new(c, s);
            let row = &mut self.powers[j * stride..(j + 1) * stride];
            row[r] = Complex::new(1.0, 0.0);
            let mut p = Complex::new(1.0, 0.0);
            for m in 1..=r {
                p *= base;
                row[r + m] = p;
                row[r - m] = p.conj();
            }
        }
        for (out, k) in self.phases.iter_mut().zip(&self.reps) {
            let mut z = self.powers[(k.0[0] + r as i32) as usize];
            for j in 1..d {
                z *= self.powers[j * stride + (k.0[j] + r as i32) as usize];
            }
            *out = z;
        }
        &self.phases
    }

    /// Writes `φ_i(x)` in mode-set order (cos, sin per representative).
    pub fn fill(&mut self, x: &[f64], out: &mut [f64]) {
        let sq2 = std::f64::consts::SQRT_2;
        self.phases(x);
        for (pair, z) in out.chunks_exact_mut(2).zip(&self.phases) {
            pair[0] = sq2 * z.re;
            pair[1] = sq2 * z.im;
        }
    }
}
