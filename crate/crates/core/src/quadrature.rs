//! Globally adaptive Gauss–Kronrod (G7/K15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Sum of per-interval |K15 − G7| estimates.
    pub error: f64,
    pub evaluations: usize,
}

/// Stopping rule for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    /// Relative floor, guards against asking for accuracy below f64 roundoff.
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-14,
            max_intervals: 4000,
        }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        resk += WGK[j] * pair;
        if j % 2 == 1 {
            resg += WG[j / 2] * pair;
        }
    }
    (resk * half, ((resk - resg) * half).abs())
}

/// Integrates `f` over `[a, b]`, bisecting the worst interval until the summed
/// error estimate meets `max(abs_tol, rel_tol·|value|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(invalid("quadrature bounds must be finite"));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    if a > b {
        let r = integrate(f, b, a, opts)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    let (v, e) = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut evaluations = 15;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= target {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature { achieved: err, tolerance: target });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature { achieved: err, tolerance: target });
        }
        let (v1, e1) = kronrod(&f, worst.a, mid);
        let (v2, e2) = kronrod(&f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to shed the drift of the running updates.
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult { value, error, evaluations })
}
