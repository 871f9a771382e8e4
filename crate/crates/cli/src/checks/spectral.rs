//! Deterministic spectral reproductions: heat-trace and Weyl constants, the
//! logarithmic divergence of `Σe^{−2λε}/λ²`, and kernel-norm exponents.

use w2lab_core::spectral::{enumerate_modes, heat_trace, spectral_sum_inv_lambda_sq, weyl_count, TorusGeometry};
use w2lab_core::transport::kernel_norm_scaling;

use super::{Check, Context, Part, Suite};
use crate::error::Result;

pub(super) fn checks() -> Vec<Box<dyn Check>> {
    vec![Box::new(HeatTrace), Box::new(LogDivergence), Box::new(Weyl), Box::new(KernelNorms)]
}

fn torus() -> Result<TorusGeometry> {
    Ok(TorusGeometry::standard(4)?)
}

struct HeatTrace;

impl Check for HeatTrace {
    fn id(&self) -> &'static str {
        "C1"
    }
    fn title(&self) -> &'static str {
        "small-time heat trace: t²·Tr(e^{tΔ}) → vol/(16π²)"
    }
    fn suite(&self) -> Suite {
        Suite::Spectral
    }
    fn run(&self, _: &mut Context) -> Result<Vec<Part>> {
        let g = torus()?;
        let t = 1e-3;
        let v = t * t * heat_trace(t, &g)?;
        Ok(vec![Part::rel("t²·heat_trace(1e-3)", v, g.vol_over_16pi2(), 1e-3)])
    }
}

struct LogDivergence;

impl Check for LogDivergence {
    fn id(&self) -> &'static str {
        "C2"
    }
    fn title(&self) -> &'static str {
        "logarithmic divergence of Σe^{−2λε}/λ²"
    }
    fn suite(&self) -> Suite {
        Suite::Spectral
    }
    fn run(&self, _: &mut Context) -> Result<Vec<Part>> {
        let g = torus()?;
        let diff = spectral_sum_inv_lambda_sq(1e-4, &g)? - spectral_sum_inv_lambda_sq(1e-2, &g)?;
        Ok(vec![Part::rel("S(1e-4) − S(1e-2)", diff, g.vol_over_16pi2() * 100f64.ln(), 0.05)])
    }
}

struct Weyl;

impl Check for Weyl {
    fn id(&self) -> &'static str {
        "C3"
    }
    fn title(&self) -> &'static str {
        "Weyl law N(λ)/λ² → vol/(32π²)"
    }
    fn suite(&self) -> Suite {
        Suite::Spectral
    }
    fn run(&self, _: &mut Context) -> Result<Vec<Part>> {
        let g = torus()?;
        let lam = 400.0;
        let ms = enumerate_modes(g, lam)?;
        let ratio = weyl_count(&ms, lam)? as f64 / (lam * lam);
        Ok(vec![Part::rel("N(400)/400²", ratio, g.vol_over_32pi2(), 0.03)])
    }
}

struct KernelNorms;

/// Half-decade steps from 1e-1 to 1e-3.
fn eps_list() -> Vec<f64> {
    (0..5).map(|i| 10f64.powf(-1.0 - 0.5 * i as f64)).collect()
}

impl Check for KernelNorms {
    fn id(&self) -> &'static str {
        "C7"
    }
    fn title(&self) -> &'static str {
        "kernel-norm exponents in ε (p = 2, d = 4)"
    }
    fn suite(&self) -> Suite {
        Suite::Spectral
    }
    fn run(&self, _: &mut Context) -> Result<Vec<Part>> {
        let g = torus()?;
        let eps = eps_list();
        let n2 = kernel_norm_scaling(2, 2, &eps, &g)?;
        let n1 = kernel_norm_scaling(1, 2, &eps, &g)?;
        let n0 = kernel_norm_scaling(0, 2, &eps, &g)?;
        let worst = n0.increment_ratios.iter().copied().max_by(|a, b| (a - 1.0).abs().total_cmp(&(b - 1.0).abs())).unwrap_or(f64::NAN);
        Ok(vec![
            Part::rel("slope n=2", n2.slope, -2.0, 0.10),
            Part::rel("slope n=1", n1.slope, -1.0, 0.10),
            Part::rel("n=0 worst increment ratio", worst, 1.0, 0.15),
            Part::info("fit rms n=2", n2.fit_rms),
            Part::info("fit rms n=1", n1.fit_rms),
        ])
    }
}
