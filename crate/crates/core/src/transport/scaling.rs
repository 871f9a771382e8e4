//! ε-scaling of Poisson-kernel derivative norms.
//!
//! At a fixed point `y`, `‖∇ⁿ_y q_ε(·,y)‖²_{L²(μ)} = Σ_i e^{−2ελ_i} λ_i^{n−2}`
//! (each cos/sin couple contributes `2λⁿ`, i.e. `λⁿ` per eigenpair). The three
//! cases are lattice sums the spectral layer already evaluates exactly:
//! `n = 2` is the heat trace at `2ε`, `n = 1` the inverse sum at `2ε`, `n = 0`
//! the inverse-square sum at `ε`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral::{heat_trace, spectral_sum_inv_lambda, spectral_sum_inv_lambda_sq, TorusGeometry};
use crate::stats::linear_fit;

/// Largest rms residual of a power-law fit in log–log coordinates.
pub const MAX_FIT_RESIDUAL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub n: u32,
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    /// Fitted slope of `log value` against `log ε`.
    pub slope: f64,
    pub fit_rms: f64,
    /// `−((d + n − 2)p − d)/p`, or 0 in the logarithmic case.
    pub expected_slope: f64,
    /// `(d + n − 2)p = d`: growth like `log(1/ε)` instead of a power.
    pub log_case: bool,
    /// For the log case: ratios of successive increments, ≈ the ratios of
    /// `log` spacings (1 for geometric `ε` lists).
    pub increment_ratios: Vec<f64>,
}

/// Squared `L²` norm of `∇ⁿq_ε(·,y)`.
pub fn kernel_norm_sq(n: u32, eps: f64, geom: &TorusGeometry) -> Result<f64> {
    match n {
        2 => heat_trace(2.0 * eps, geom),
        1 => spectral_sum_inv_lambda(2.0 * eps, geom),
        0 => spectral_sum_inv_lambda_sq(eps, geom),
        _ => Err(invalid(format!("derivative order {n} is not supported (0..=2)"))),
    }
}

pub fn kernel_norm_scaling(n: u32, p: u32, eps_list: &[f64], geom: &TorusGeometry) -> Result<ScalingReport> {
    if p != 2 {
        return Err(Error::Unsupported(format!("only p = 2 is implemented, got {p}")));
    }
    if geom.dim() != 4 {
        return Err(invalid("kernel norm scaling is set up for d = 4"));
    }
    if eps_list.len() < 3 {
        return Err(invalid("need at least three ε values"));
    }
    let lo = eps_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps_list.iter().copied().fold(0.0, f64::max);
    if hi / lo < 99.999 {
        return Err(invalid("ε values must span at least two decades"));
    }
    let d = geom.dim() as i64;
    let values = eps_list.iter().map(|&e| kernel_norm_sq(n, e, geom)).collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (slope, _, fit_rms) = linear_fit(&xs, &ys)?;
    let excess = (d + n as i64 - 2) * p as i64 - d;
    let log_case = excess == 0;
    let expected_slope = -(excess as f64) / p as f64;
    let increment_ratios = if log_case {
        values
            .windows(3)
            .zip(xs.windows(3))
            .map(|(v, x)| ((v[2] - v[1]) / (v[1] - v[0])) / ((x[2] - x[1]) / (x[1] - x[0])))
            .collect()
    } else {
        if fit_rms > MAX_FIT_RESIDUAL {
            return Err(Error::FitResidual { residual: fit_rms, tolerance: MAX_FIT_RESIDUAL });
        }
        Vec::new()
    };
    Ok(ScalingReport { n, eps: eps_list.to_vec(), values, slope, fit_rms, expected_slope, log_case, increment_ratios })
}
