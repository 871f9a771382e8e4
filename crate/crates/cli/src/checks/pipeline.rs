//! Pipeline surrogates: the rescaled H⁻¹ energy against its spectral
//! prediction and the limit constant, and Sinkhorn against the H⁻¹ energy.

use std::sync::Arc;

use w2lab_core::diffusion::DriftSpec;
use w2lab_core::spectral::{enumerate_modes, spectral_sum_inv_lambda_sq, TorusGeometry};
use w2lab_core::transport::{default_reg, epsilon_schedule, sinkhorn_w2, GridDensity, SinkhornOptions, SpectralEmpirical};
use w2lab_core::variance::GeneratorMatrix;

use super::{Check, Context, Part, Suite};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::lp::exact_transport_cost;
use crate::pipeline::{constant_row, prediction_a, simulate_empiricals, w2_row};

pub(super) fn checks() -> Vec<Box<dyn Check>> {
    vec![Box::new(EnergyConstant), Box::new(SinkhornLinkage)]
}

const GAMMA: f64 = 4.0;

fn energy_config(ctx: &Context) -> ExperimentConfig {
    let p = &ctx.params;
    let mut cfg = ExperimentConfig::default();
    cfg.sim.dt = p.energy_dt;
    cfg.sim.horizon = p.energy_horizon;
    cfg.sim.horizons = vec![p.energy_horizon];
    cfg.sim.replicas = p.energy_replicas;
    cfg.sim.seed = ctx.seed(8);
    cfg.smoothing.gamma = GAMMA;
    cfg.modes.lambda_max = p.energy_lambda_max;
    cfg.ot.grid_n = p.w2_grid;
    cfg
}

fn energy_samples(ctx: &mut Context) -> Result<Arc<Vec<SpectralEmpirical>>> {
    if ctx.cache.energy_samples.is_none() {
        let cfg = energy_config(ctx);
        cfg.validate()?;
        let g = cfg.geometry()?;
        let ms = Arc::new(enumerate_modes(g, cfg.modes.lambda_max)?);
        let samples = simulate_empiricals(&cfg, &DriftSpec::free(g), &ms, cfg.sim.horizon)?;
        ctx.cache.energy_samples = Some(Arc::new(samples));
    }
    Ok(ctx.cache.energy_samples.clone().unwrap())
}

/// Cutoff where `e^{−2λε}` drops below `e^{−30}`.
fn prediction_cutoff(eps: f64) -> f64 {
    15.0 / eps
}

struct EnergyConstant;

impl Check for EnergyConstant {
    fn id(&self) -> &'static str {
        "C8"
    }
    fn title(&self) -> &'static str {
        "(T/log T)·E μ(|∇f_{T,ε}|²): Monte Carlo, spectral prediction, limit constant"
    }
    fn suite(&self) -> Suite {
        Suite::Pipeline
    }
    fn run(&self, ctx: &mut Context) -> Result<Vec<Part>> {
        let g = TorusGeometry::standard(4)?;
        let samples = energy_samples(ctx)?;
        let ms = samples[0].mode_set.clone();
        let gen = GeneratorMatrix::assemble(&DriftSpec::free(g), &ms)?;
        let row = constant_row(&samples, &gen, ctx.limit_constant)?;
        let mut parts = vec![
            Part::sigma("Monte Carlo vs truncated prediction", row.scaled_mean, row.prediction_a, row.scaled_stderr, 3.0),
            Part::rel("truncated prediction vs limit constant", row.prediction_a, ctx.limit_constant, 0.25),
        ];

        // Z-effect: prediction gap between z = e₁ and Z = 0, divided by log T
        let mut gaps = Vec::new();
        for t in [1e3, 1e4, 1e5] {
            let eps = epsilon_schedule(t, GAMMA);
            let ms = enumerate_modes(g, prediction_cutoff(eps))?;
            let free = GeneratorMatrix::assemble(&DriftSpec::free(g), &ms)?;
            let shifted = GeneratorMatrix::assemble(&DriftSpec::constant_z(g, &[1.0, 0.0, 0.0, 0.0])?, &ms)?;
            let gap = prediction_a(&free, eps, t)? - prediction_a(&shifted, eps, t)?;
            parts.push(Part::info(&format!("Z-gap/log T at T = {t:e}"), gap / t.ln()));
            gaps.push(gap / t.ln());
        }
        parts.push(Part::holds(
            "Z-gap/log T decreasing over T ∈ {1e3, 1e4, 1e5}",
            gaps.windows(2).all(|w| w[1] < w[0]),
            "strictly decreasing",
        ));

        // the limit constant is the slope of 2Σe^{−2λε}/λ² in log(1/ε)
        let slope = 2.0 * (spectral_sum_inv_lambda_sq(1e-4, &g)? - spectral_sum_inv_lambda_sq(1e-2, &g)?) / 100f64.ln();
        parts.push(Part::rel("limit constant vs spectral log-slope", ctx.limit_constant, slope, 0.05));
        parts.push(Part::info("replicas", row.replicas as f64));
        parts.push(Part::info("ε", row.eps));
        Ok(parts)
    }
}

struct SinkhornLinkage;

fn wrapped_gaussian(g: TorusGeometry, n: usize, var: f64) -> Result<GridDensity> {
    let l = g.side();
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let x = i as f64 * l / n as f64;
            (-10..=10).map(|m| (-(x - m as f64 * l).powi(2) / (2.0 * var)).exp()).sum::<f64>()
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    Ok(GridDensity::from_values(g, n, &vals.iter().map(|v| v / mean).collect::<Vec<_>>())?)
}

impl Check for SinkhornLinkage {
    fn id(&self) -> &'static str {
        "C9"
    }
    fn title(&self) -> &'static str {
        "Sinkhorn W₂² vs H⁻¹ energy; Sinkhorn vs exact LP in d = 1"
    }
    fn suite(&self) -> Suite {
        Suite::Pipeline
    }
    fn run(&self, ctx: &mut Context) -> Result<Vec<Part>> {
        let samples = energy_samples(ctx)?;
        let n = ctx.params.w2_replicas.min(samples.len());
        let cfg = energy_config(ctx);
        let row = w2_row(&samples[..n], &cfg, ctx.limit_constant)?;
        let mut parts = vec![
            Part::range(&format!("mean sinkhorn/h1 over {n} replicas, grid {}⁴", cfg.ot.grid_n), row.mean_ratio, 0.5, 1.5),
            Part::info("ratio stderr", row.ratio_stderr),
            Part::info("(T/log T)·mean W₂²", row.scaled_w2),
            Part::info("limit constant", row.limit_constant),
            Part::info("error: statistical", row.err_statistical),
            Part::info("error: grid", row.err_grid),
            Part::info("error: entropic", row.err_entropic),
            Part::info("error: smoothing vs raw (bound)", row.err_smoothing),
        ];

        let g1 = TorusGeometry::standard(1)?;
        let m = 64;
        let u = GridDensity::uniform(g1, m);
        let opts = SinkhornOptions { reg: default_reg(g1.side(), m), max_iters: 20_000, tol: 1e-12 };
        let mut worst: f64 = 0.0;
        for eps1 in [0.05, 0.25, 0.5, 1.0] {
            let a = wrapped_gaussian(g1, m, 2.0 * eps1)?;
            let exact = exact_transport_cost(&a, &u)?;
            let s = sinkhorn_w2(&a, &u, &opts)?.divergence;
            worst = worst.max((s / exact - 1.0).abs());
        }
        parts.push(Part::at_most("d=1 worst relative gap to LP (n = 64)", worst, 0.02));
        Ok(parts)
    }
}
