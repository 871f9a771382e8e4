//! Small-sample statistics shared by the Monte Carlo checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};

/// Moment summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn summarize(xs: &[f64]) -> Result<Summary> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { got: n, need: 2 });
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let variance = m2 * nf / (nf - 1.0);
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Ok(Summary { n, mean, variance, stderr: (variance / nf).sqrt(), skewness, excess_kurtosis })
}

/// Standard error of the unbiased sample variance, `√((m4 − s⁴(n−3)/(n−1))/n)`.
pub fn variance_stderr(xs: &[f64]) -> Result<f64> {
    let s = summarize(xs)?;
    let nf = s.n as f64;
    let m4: f64 = xs.iter().map(|x| (x - s.mean).powi(4)).sum::<f64>() / nf;
    let v = (m4 - s.variance * s.variance * (nf - 3.0) / (nf - 1.0)) / nf;
    Ok(v.max(0.0).sqrt())
}

/// Jarque–Bera normality test; returns `(statistic, p-value)`.
pub fn jarque_bera(xs: &[f64]) -> Result<(f64, f64)> {
    let s = summarize(xs)?;
    let jb = s.n as f64 / 6.0 * (s.skewness.powi(2) + s.excess_kurtosis.powi(2) / 4.0);
    // χ²₂ survival function
    Ok((jb, (-jb / 2.0).exp()))
}

/// One-sided Clopper–Pearson upper limit for a binomial proportion.
pub fn clopper_pearson_upper(successes: u64, trials: u64, confidence: f64) -> Result<f64> {
    if trials == 0 || successes > trials || !(0.0..1.0).contains(&confidence) {
        return Err(invalid("clopper_pearson_upper: need 0 ≤ k ≤ n, n > 0, confidence in (0,1)"));
    }
    if successes == trials {
        return Ok(1.0);
    }
    let beta = Beta::new(successes as f64 + 1.0, (trials - successes) as f64)
        .map_err(|e| invalid(e.to_string()))?;
    Ok(beta.inverse_cdf(confidence))
}

/// One-sided Clopper–Pearson lower limit.
pub fn clopper_pearson_lower(successes: u64, trials: u64, confidence: f64) -> Result<f64> {
    if successes == 0 {
        return Ok(0.0);
    }
    Ok(1.0 - clopper_pearson_upper(trials - successes, trials, confidence)?)
}

/// Pearson χ² goodness-of-fit; returns `(statistic, p-value)`.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(invalid("chi_square_gof: need matching bins, at least two"));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).map_err(|e| invalid(e.to_string()))?;
    Ok((stat, 1.0 - dist.cdf(stat)))
}

/// Least-squares line fit `y ≈ a + b·x`; returns `(slope, intercept, rms residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return Err(invalid("linear_fit: need at least two matching points"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("linear_fit: degenerate abscissae"));
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum::<f64>() / nf).sqrt();
    Ok((b, a, rms))
}
