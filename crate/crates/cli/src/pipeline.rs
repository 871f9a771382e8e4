//! End-to-end pipelines: simulate stationary replicas, smooth their occupation
//! measures, and compare the rescaled transport costs with the spectral
//! prediction and the limit constant `vol/(8π²)`.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use w2lab_core::diffusion::{simulate, DriftSpec};
use w2lab_core::spectral::{enumerate_modes, ModeSet};
use w2lab_core::stats::summarize;
use w2lab_core::transport::{epsilon_schedule, sinkhorn_w2, CostRegistry, GridDensity, SinkhornOptions, SpectralEmpirical};
use w2lab_core::variance::{psi_moment_prediction, GeneratorMatrix};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// `ε` for horizon `T`: the override if set, else `(log T)^γ/T`.
pub fn smoothing_eps(cfg: &ExperimentConfig, horizon: f64) -> f64 {
    cfg.smoothing.eps_override.unwrap_or_else(|| epsilon_schedule(horizon, cfg.smoothing.gamma))
}

/// Truncated spectral prediction of `(T/log T)·E μ(|∇f_{T,ε}|²)`:
/// `(1/log T)Σ_i (e^{−2λ_iε}/λ_i)·E|ψ_i|²` with the leading-order moments.
pub fn prediction_a(gen: &GeneratorMatrix, eps: f64, horizon: f64) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..gen.len() {
        let lam = gen.lambda(i);
        total += (-2.0 * lam * eps).exp() / lam * psi_moment_prediction(i, gen, horizon)?;
    }
    Ok(total / horizon.ln())
}

/// Smoothed empirical measures of `cfg.sim.replicas` stationary replicas.
pub fn simulate_empiricals(
    cfg: &ExperimentConfig,
    drift: &DriftSpec,
    mode_set: &Arc<ModeSet>,
    horizon: f64,
) -> Result<Vec<SpectralEmpirical>> {
    let eps = smoothing_eps(cfg, horizon);
    simulate(&cfg.sim_config(horizon), drift, mode_set, &[])?
        .into_iter()
        .map(|r| Ok(SpectralEmpirical::new(mode_set.clone(), r.psi, horizon, eps)?))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantRow {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub eps: f64,
    pub lambda_max: f64,
    pub n_modes: usize,
    pub replicas: usize,
    /// `(T/log T)·mean μ(|∇f|²)` and its standard error.
    pub scaled_mean: f64,
    pub scaled_stderr: f64,
    pub prediction_a: f64,
    pub limit_constant: f64,
    /// `(scaled_mean − prediction_a)/scaled_stderr`.
    pub z_score: f64,
}

/// Rows of `(T/log T)·E μ(|∇f|²)` from already simulated samples.
pub fn constant_row(samples: &[SpectralEmpirical], gen: &GeneratorMatrix, limit_constant: f64) -> Result<ConstantRow> {
    let first = samples.first().ok_or_else(|| CliError::ConfigInvalid("no replicas".into()))?;
    let (horizon, eps) = (first.horizon, first.eps);
    let scale = horizon / horizon.ln();
    let values: Vec<f64> = samples.iter().map(|s| scale * s.h1_energy()).collect();
    let s = summarize(&values)?;
    let pred = prediction_a(gen, eps, horizon)?;
    Ok(ConstantRow {
        horizon,
        eps,
        lambda_max: gen.mode_set.lambda_max,
        n_modes: gen.len(),
        replicas: samples.len(),
        scaled_mean: s.mean,
        scaled_stderr: s.stderr,
        prediction_a: pred,
        limit_constant,
        z_score: (s.mean - pred) / s.stderr,
    })
}

/// Simulates every horizon of `cfg.sim.T_grid` and tabulates the rescaled
/// H⁻¹ energy against the spectral prediction and `limit_constant`.
pub fn run_constant_pipeline(cfg: &ExperimentConfig, limit_constant: f64) -> Result<Vec<ConstantRow>> {
    let geom = cfg.geometry()?;
    if geom.dim() != 4 {
        return Err(CliError::ConfigInvalid(format!("the constant pipeline needs torus.d = 4, got {}", geom.dim())));
    }
    let drift = cfg.drift_spec()?;
    let ms = Arc::new(enumerate_modes(geom, cfg.modes.lambda_max)?);
    let gen = GeneratorMatrix::assemble(&drift, &ms)?;
    cfg.sim
        .horizons
        .iter()
        .map(|&t| constant_row(&simulate_empiricals(cfg, &drift, &ms, t)?, &gen, limit_constant))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W2Row {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub eps: f64,
    pub replicas: usize,
    pub grid_n: usize,
    pub reg: f64,
    pub mean_w2: f64,
    pub stderr_w2: f64,
    pub mean_h1: f64,
    /// Mean over replicas of `sinkhorn_w2/h1_energy`.
    pub mean_ratio: f64,
    pub ratio_stderr: f64,
    /// `(T/log T)·mean_w2`.
    pub scaled_w2: f64,
    pub limit_constant: f64,
    /// Error budget, all on the `(T/log T)` scale.
    pub err_statistical: f64,
    /// Mean gap between grid quadrature and the spectral H⁻¹ energy.
    pub err_grid: f64,
    /// `|S(reg) − S(reg/2)|` on the first replica.
    pub err_entropic: f64,
    /// `W₂²(μ_T, μ_{T,ε}) ≤ 2dε`: the heat flow moves mass by `√(2ε)` per axis.
    pub err_smoothing: f64,
}

/// Sinkhorn against the uniform law for every sample, compared with the H⁻¹
/// energy; estimators come from the cost registry.
pub fn w2_row(samples: &[SpectralEmpirical], cfg: &ExperimentConfig, limit_constant: f64) -> Result<W2Row> {
    let first = samples.first().ok_or_else(|| CliError::ConfigInvalid("no replicas".into()))?;
    let (horizon, eps) = (first.horizon, first.eps);
    let geom = *first.geometry();
    let registry = CostRegistry::default();
    let sinkhorn = registry.get("sinkhorn")?;
    let h1 = registry.get("h1")?;
    let ctx = cfg.cost_context();
    let n = cfg.ot.grid_n;
    let pairs: Vec<(f64, f64, f64)> = samples
        .par_iter()
        .map(|s| {
            let w = sinkhorn.cost(s, &ctx)?;
            let e = h1.cost(s, &ctx)?;
            let grad = s.potential_gradient_grid(n);
            let cells = grad[0].len() as f64;
            let quad: f64 = (0..grad[0].len()).map(|c| grad.iter().map(|g| g[c] * g[c]).sum::<f64>()).sum::<f64>() / cells;
            Ok((w, e, (quad - e).abs()))
        })
        .collect::<Result<_>>()?;
    let w: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let e: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    // ψ ≡ 0 gives 0/0; such replicas carry no ratio information
    let ratio: Vec<f64> = pairs.iter().filter(|p| p.1 > 0.0).map(|p| p.0 / p.1).collect();
    let sw = summarize(&w)?;
    let (mean_ratio, ratio_stderr) = match ratio.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (ratio[0], f64::NAN),
        _ => {
            let sr = summarize(&ratio)?;
            (sr.mean, sr.stderr)
        }
    };
    let scale = horizon / horizon.ln();

    let opts = cfg.sinkhorn_options();
    let a = first.grid_density(n)?;
    let b = GridDensity::uniform(geom, n);
    let half = SinkhornOptions { reg: 0.5 * opts.reg, max_iters: 4 * opts.max_iters, ..opts };
    let err_entropic = (sinkhorn_w2(&a, &b, &opts)?.divergence - sinkhorn_w2(&a, &b, &half)?.divergence).abs();

    Ok(W2Row {
        horizon,
        eps,
        replicas: samples.len(),
        grid_n: n,
        reg: opts.reg,
        mean_w2: sw.mean,
        stderr_w2: sw.stderr,
        mean_h1: e.iter().sum::<f64>() / e.len() as f64,
        mean_ratio,
        ratio_stderr,
        scaled_w2: scale * sw.mean,
        limit_constant,
        err_statistical: scale * sw.stderr,
        err_grid: scale * pairs.iter().map(|p| p.2).sum::<f64>() / pairs.len() as f64,
        err_entropic: scale * err_entropic,
        err_smoothing: scale * 2.0 * geom.dim() as f64 * eps,
    })
}

pub fn run_w2_pipeline(cfg: &ExperimentConfig, limit_constant: f64) -> Result<Vec<W2Row>> {
    let geom = cfg.geometry()?;
    if geom.dim() != 4 {
        return Err(CliError::ConfigInvalid(format!("the W₂ pipeline needs torus.d = 4, got {}", geom.dim())));
    }
    let drift = cfg.drift_spec()?;
    let ms = Arc::new(enumerate_modes(geom, cfg.modes.lambda_max)?);
    cfg.sim
        .horizons
        .iter()
        .map(|&t| w2_row(&simulate_empiricals(cfg, &drift, &ms, t)?, cfg, limit_constant))
        .collect()
}

/// Serialises rows with a header line.
pub fn write_csv<W: Write, R: Serialize>(w: W, rows: &[R]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    }
    wr.flush()?;
    Ok(())
}
