//! Gaussian-limit diagnostics for replica samples of `ψ_i(T)`.

use serde::{Deserialize, Serialize};

use super::{v_form, GeneratorMatrix};
use crate::error::{Error, Result};
use crate::stats::{jarque_bera, summarize, variance_stderr};

/// Minimum replica count for [`clt_empirics`].
pub const MIN_CLT_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub samples: usize,
    pub mean: f64,
    pub sample_variance: f64,
    pub variance_stderr: f64,
    /// `2𝐕(φ_i)`.
    pub predicted_variance: f64,
    /// `(sample − predicted)/stderr`.
    pub z_score: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub jarque_bera: f64,
    pub normality_p_value: f64,
}

pub fn clt_empirics(phi_index: usize, gen: &GeneratorMatrix, psi: &[f64]) -> Result<CltReport> {
    if psi.len() < MIN_CLT_SAMPLES {
        return Err(Error::InsufficientSamples { got: psi.len(), need: MIN_CLT_SAMPLES });
    }
    let s = summarize(psi)?;
    let se = variance_stderr(psi)?;
    let predicted = 2.0 * v_form(&gen.basis(phi_index), gen)?;
    let (jb, p) = jarque_bera(psi)?;
    Ok(CltReport {
        samples: s.n,
        mean: s.mean,
        sample_variance: s.variance,
        variance_stderr: se,
        predicted_variance: predicted,
        z_score: (s.variance - predicted) / se,
        skewness: s.skewness,
        excess_kurtosis: s.excess_kurtosis,
        jarque_bera: jb,
        normality_p_value: p,
    })
}
