//! Bernstein-type deviation bounds for time averages `T⁻¹∫g(X_t)dt`, and the
//! Monte Carlo tails they are meant to dominate.
//!
//! The constant `c` in front of `‖g‖_{L^{d/2}}` comes from a Sobolev–Poincaré
//! inequality and has no closed form; it is a parameter here (1 on the flat
//! torus by default) and dominance checks are calibration evidence only.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{simulate, DriftSpec, SimConfig, DT_LAMBDA_GUARD};
use crate::error::{invalid, Error, Result};
use crate::spectral::{enumerate_modes, synthesize, ComplexCoeffs, ModeSet};
use crate::stats::{clopper_pearson_lower, clopper_pearson_upper};
use crate::transport::{epsilon_schedule, SpectralEmpirical};

/// Confidence of the one-sided binomial limits.
pub const CI_LEVEL: f64 = 0.99;

/// Largest grid used for `L^{d/2}` quadrature.
const MAX_QUAD_POINTS: usize = 1 << 22;

/// A zero-mean test function `g = Σ c_i φ_i` over a mode set.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub mode_set: Arc<ModeSet>,
    pub coeffs: Vec<f64>,
    /// `2∫g(−L̂)⁻¹g dμ = 2Σc²/λ` (reversible, constant potential).
    pub sigma_sq: f64,
    /// `‖g‖_{L^{d/2}(μ)}` for normalised Lebesgue μ.
    pub l_half_norm: f64,
}

impl TestFunction {
    /// The constant mode is never part of a mode set, so `μ(g) = 0` exactly.
    pub fn new(mode_set: Arc<ModeSet>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mode_set.len() {
            return Err(invalid(format!("{} coefficients for {} modes", coeffs.len(), mode_set.len())));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("test-function coefficients must be finite"));
        }
        let sigma_sq = 2.0 * coeffs.iter().zip(&mode_set.pairs).map(|(c, p)| c * c / p.lambda).sum::<f64>();
        let l_half_norm = l_half_norm(&mode_set, &coeffs)?;
        Ok(Self { mode_set, coeffs, sigma_sq, l_half_norm })
    }

    /// `g = c·φ_i`.
    pub fn single_mode(mode_set: Arc<ModeSet>, index: usize, coefficient: f64) -> Result<Self> {
        if index >= mode_set.len() {
            return Err(invalid(format!("mode index {index} out of range")));
        }
        let mut c = vec![0.0; mode_set.len()];
        c[index] = coefficient;
        Self::new(mode_set, c)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(&self.mode_set.pairs).map(|(c, p)| c * p.eval(x, &self.mode_set.geometry)).sum()
    }

    /// `Σ √2·√(c_cos² + c_sin²) ≥ ‖g‖_∞`.
    pub fn sup_bound(&self) -> f64 {
        self.coeffs.chunks_exact(2).map(|c| std::f64::consts::SQRT_2 * c[0].hypot(c[1])).sum()
    }

    /// `T⁻¹∫_0^T g(X_t)dt` from the normalised occupation integrals `ψ`.
    pub fn time_average(&self, psi: &[f64], horizon: f64) -> f64 {
        self.coeffs.iter().zip(psi).map(|(c, p)| c * p).sum::<f64>() / horizon.sqrt()
    }
}

fn l_half_norm(ms: &ModeSet, coeffs: &[f64]) -> Result<f64> {
    let d = ms.geometry.dim();
    if d == 4 {
        // L² by Parseval
        return Ok(coeffs.iter().map(|c| c * c).sum::<f64>().sqrt());
    }
    let p = d as f64 / 2.0;
    let mut n = (8 * ms.max_component().max(1) as usize).next_power_of_two().max(128);
    while n.pow(d as u32) > MAX_QUAD_POINTS && n > 16 {
        n /= 2;
    }
    let values = synthesize(&ms.geometry, n, &ComplexCoeffs::from_real(ms, coeffs));
    let total: f64 = values.iter().map(|g| g.abs().powf(p)).sum();
    Ok((total / values.len() as f64).powf(1.0 / p))
}

/// The bound both as the formula gives it and clipped to a probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinBound {
    pub raw: f64,
    pub clipped: f64,
}

/// `2exp(−Tξ²/(2(σ²(g) + c‖g‖_{L^{d/2}}ξ)))`.
pub fn bernstein_bound(g: &TestFunction, xi: f64, horizon: f64, c: f64) -> Result<BernsteinBound> {
    bernstein_formula(g.sigma_sq, g.l_half_norm, xi, horizon, c)
}

/// The same bound from raw `σ²` and norm.
pub fn bernstein_formula(sigma_sq: f64, norm: f64, xi: f64, horizon: f64, c: f64) -> Result<BernsteinBound> {
    if !(xi > 0.0 && horizon > 0.0 && c > 0.0) || !(sigma_sq >= 0.0 && norm >= 0.0) {
        return Err(invalid("bernstein bound needs ξ, T, c > 0 and σ², ‖g‖ ≥ 0"));
    }
    let raw = 2.0 * (-horizon * xi * xi / (2.0 * (sigma_sq + c * norm * xi))).exp();
    Ok(BernsteinBound { raw, clipped: raw.min(1.0) })
}

/// One line of the tail report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub xi: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub replicas: u64,
    pub exceed_count: u64,
    pub freq: f64,
    pub ci_upper: f64,
    pub bound_c1: f64,
}

impl TailRow {
    /// Upper CI at or below the (clipped, c = 1) bound.
    pub fn dominated(&self) -> bool {
        self.ci_upper <= self.bound_c1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub rows: Vec<TailRow>,
    /// Per-replica time averages, in replica order.
    pub averages: Vec<f64>,
}

/// Exceedance counts of `|average| > ξ` with 99% Clopper–Pearson upper limits.
/// All ξ share the same replicas, so counts are exactly monotone in ξ.
pub fn tail_rows(g: &TestFunction, averages: &[f64], xi_list: &[f64], horizon: f64) -> Result<Vec<TailRow>> {
    if averages.is_empty() {
        return Err(Error::InsufficientSamples { got: 0, need: 1 });
    }
    let n = averages.len() as u64;
    xi_list
        .iter()
        .map(|&xi| {
            let exceed_count = averages.iter().filter(|a| a.abs() > xi).count() as u64;
            Ok(TailRow {
                xi,
                horizon,
                replicas: n,
                exceed_count,
                freq: exceed_count as f64 / n as f64,
                ci_upper: clopper_pearson_upper(exceed_count, n, CI_LEVEL)?,
                bound_c1: bernstein_bound(g, xi, horizon, 1.0)?.clipped,
            })
        })
        .collect()
}

/// Simulates `config.replicas` stationary replicas and tabulates the tails.
///
/// Fails with `InsufficientSamples` when even a zero count could not bring the
/// upper confidence limit under the bound at some ξ where exceedance is
/// possible at all (ξ below the sup bound of `g`).
pub fn tail_empirics(g: &TestFunction, xi_list: &[f64], config: &SimConfig, drift: &DriftSpec) -> Result<TailReport> {
    if xi_list.iter().any(|x| !(*x > 0.0)) {
        return Err(invalid("ξ values must be positive"));
    }
    let sup = g.sup_bound();
    let mut need = 0usize;
    for &xi in xi_list.iter().filter(|&&xi| xi < sup) {
        let b = bernstein_bound(g, xi, config.horizon, 1.0)?.clipped;
        if b < 1.0 {
            // zero successes: upper limit 1 − (1 − CI)^{1/n}
            need = need.max(((1.0 - CI_LEVEL).ln() / (1.0 - b).ln()).ceil() as usize);
        }
    }
    if (config.replicas as usize) < need {
        return Err(Error::InsufficientSamples { got: config.replicas as usize, need });
    }
    let results = simulate(config, drift, &g.mode_set, &[])?;
    let averages: Vec<f64> = results.iter().map(|r| g.time_average(&r.psi, config.horizon)).collect();
    Ok(TailReport { rows: tail_rows(g, &averages, xi_list, config.horizon)?, averages })
}

/// CSV with columns `xi,T,replicas,exceed_count,freq,ci_upper,bound_c1`.
pub fn write_tail_csv<W: Write>(w: W, rows: &[TailRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

/// Number of samples that fail the certified flatness event at `xi`.
pub fn flatness_failures(samples: &[SpectralEmpirical], xi: f64, grid_n: usize) -> Result<u64> {
    let fails: Result<Vec<bool>> = samples.par_iter().map(|s| s.flatness_event(xi, grid_n).map(|ok| !ok)).collect();
    Ok(fails?.into_iter().filter(|f| *f).count() as u64)
}

/// Settings of the flatness experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatnessOptions {
    pub seed: u64,
    /// Truncate where `e^{−λε}` falls below this.
    pub tail_tol: f64,
    /// `dt = dt_lambda/λ_max`.
    pub dt_lambda: f64,
    pub grid_n: usize,
    /// Replaces `ξ = 1/log T`.
    pub xi: Option<f64>,
    /// Refuse runs above this many mode-steps (`replicas·T/dt·#representatives`).
    pub work_budget: f64,
}

impl Default for FlatnessOptions {
    fn default() -> Self {
        Self { seed: 0, tail_tol: 1e-6, dt_lambda: DT_LAMBDA_GUARD, grid_n: 8, xi: None, work_budget: 2e10 }
    }
}

/// Resolved discretisation for one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatnessPlan {
    pub horizon: f64,
    pub eps: f64,
    pub xi: f64,
    pub lambda_max: f64,
    pub n_modes: usize,
    pub dt: f64,
    pub work: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatnessRow {
    pub plan: FlatnessPlan,
    pub replicas: u64,
    pub failures: u64,
    pub freq: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

/// Truncation and step size needed at horizon `T`.
pub fn flatness_plan(horizon: f64, gamma: f64, replicas: u64, drift: &DriftSpec, opts: &FlatnessOptions) -> Result<FlatnessPlan> {
    if !(gamma > 3.0) {
        return Err(invalid(format!("flatness needs γ > 3, got {gamma}")));
    }
    let g = *drift.geometry();
    let eps = epsilon_schedule(horizon, gamma);
    let lambda_max = ((1.0 / opts.tail_tol).ln() / eps).max(g.lambda_min());
    let ms = enumerate_modes(g, lambda_max)?;
    let dt = opts.dt_lambda / lambda_max;
    let work = replicas as f64 * (horizon / dt) * ms.n_representatives() as f64;
    Ok(FlatnessPlan {
        horizon,
        eps,
        xi: opts.xi.unwrap_or(1.0 / horizon.ln()),
        lambda_max,
        n_modes: ms.len(),
        dt,
        work,
    })
}

/// Failure frequency of the flatness event with `ξ = 1/log T`, `ε = (log T)^γ/T`.
///
/// Every horizon is planned first; if any exceeds the work budget nothing is
/// simulated and `WorkBudget` reports the largest requirement.
pub fn flatness_tail(
    t_list: &[f64],
    gamma: f64,
    replicas: u64,
    drift: &DriftSpec,
    opts: &FlatnessOptions,
) -> Result<Vec<FlatnessRow>> {
    if t_list.is_empty() || t_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("horizons must be non-empty and increasing"));
    }
    let plans: Vec<FlatnessPlan> =
        t_list.iter().map(|&t| flatness_plan(t, gamma, replicas, drift, opts)).collect::<Result<_>>()?;
    let worst = plans.iter().map(|p| p.work).fold(0.0, f64::max);
    if worst > opts.work_budget {
        return Err(Error::WorkBudget { required: worst, budget: opts.work_budget });
    }
    plans
        .iter()
        .map(|plan| {
            let ms = Arc::new(enumerate_modes(*drift.geometry(), plan.lambda_max)?);
            let config = SimConfig { dt: plan.dt, horizon: plan.horizon, seed: opts.seed, replicas, record_stride: 0 };
            let samples: Vec<SpectralEmpirical> = simulate(&config, drift, &ms, &[])?
                .into_iter()
                .map(|r| SpectralEmpirical::new(ms.clone(), r.psi, plan.horizon, plan.eps))
                .collect::<Result<_>>()?;
            let failures = flatness_failures(&samples, plan.xi, opts.grid_n)?;
            Ok(FlatnessRow {
                plan: *plan,
                replicas,
                failures,
                freq: failures as f64 / replicas as f64,
                ci_lower: clopper_pearson_lower(failures, replicas, CI_LEVEL)?,
                ci_upper: clopper_pearson_upper(failures, replicas, CI_LEVEL)?,
            })
        })
        .collect()
}

/// Non-increasing up to CI overlap: each later lower limit stays at or below
/// the previous upper limit.
pub fn non_increasing_trend(rows: &[FlatnessRow]) -> bool {
    rows.windows(2).all(|w| w[1].ci_lower <= w[0].ci_upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{KVec, Parity, TorusGeometry};
    use crate::variance::{v_form, GeneratorMatrix};

    fn cos_x1(d: usize) -> TestFunction {
        let ms = Arc::new(enumerate_modes(TorusGeometry::standard(d).unwrap(), 1.0).unwrap());
        let i = ms.index_of(&KVec::unit(0), Parity::Cos).unwrap();
        TestFunction::single_mode(ms, i, 1.0).unwrap()
    }

    #[test]
    fn bound_examples() {
        let b = bernstein_formula(2.0, 1.0, 0.1, 1000.0, 1.0).unwrap();
        assert!((b.raw - 2.0 * (-10.0f64 / 4.2).exp()).abs() < 1e-15);
        // the quoted ≈ 0.1848 carries four significant digits
        assert!((b.raw / 0.1848 - 1.0).abs() < 1e-3);
        let tiny = bernstein_formula(2.0, 1.0, 1e-9, 1000.0, 1.0).unwrap();
        assert!(tiny.raw > 1.99 && tiny.clipped == 1.0);
        let (t1, t2) = (1e3, 2e3);
        let r1 = bernstein_formula(2.0, 1.0, 0.1, t1, 1.0).unwrap().raw;
        let r2 = bernstein_formula(2.0, 1.0, 0.1, t2, 1.0).unwrap().raw;
        assert!(((r1 / r2).ln() / (t2 - t1) - 0.01 / 4.2).abs() < 1e-12);
        assert!(bernstein_formula(2.0, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn test_function_constants() {
        let g = cos_x1(4);
        assert_eq!(g.sigma_sq, 2.0);
        assert_eq!(g.l_half_norm, 1.0);
        let b = bernstein_bound(&g, 0.1, 1000.0, 1.0).unwrap();
        // the quoted ≈ 0.1848 carries four significant digits
        assert!((b.raw / 0.1848 - 1.0).abs() < 1e-3);

        // ‖√2cos‖_{L^{3/2}} = √2·(E|cos|^{3/2})^{2/3}, E|cos|^{3/2} = Γ(5/4)/(√π·Γ(7/4))
        let g3 = cos_x1(3);
        let m = statrs::function::gamma::gamma(1.25) / (std::f64::consts::PI.sqrt() * statrs::function::gamma::gamma(1.75));
        let exact = std::f64::consts::SQRT_2 * m.powf(2.0 / 3.0);
        assert!((g3.l_half_norm - exact).abs() < 1e-5, "{} vs {exact}", g3.l_half_norm);

        let ms = Arc::new(enumerate_modes(TorusGeometry::standard(4).unwrap(), 3.0).unwrap());
        let coeffs: Vec<f64> = (0..ms.len()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let g = TestFunction::new(ms.clone(), coeffs).unwrap();
        let direct: f64 = 2.0 * g.coeffs.iter().zip(&ms.pairs).map(|(c, p)| c * c / p.lambda).sum::<f64>();
        assert!((g.sigma_sq - direct).abs() < 1e-12);
        let gen = GeneratorMatrix::assemble(&DriftSpec::free(ms.geometry), &ms).unwrap();
        assert!((g.sigma_sq - 2.0 * v_form(&g.coeffs, &gen).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn exceedance_is_monotone_in_xi() {
        let g = cos_x1(1);
        let averages: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 500.0 - 1.0).collect();
        let xi: Vec<f64> = (1..40).map(|i| i as f64 * 0.05).collect();
        let rows = tail_rows(&g, &averages, &xi, 50.0).unwrap();
        assert!(rows.windows(2).all(|w| w[1].exceed_count <= w[0].exceed_count));
        // ξ ≥ ‖g‖_∞ can never be exceeded
        let big = tail_rows(&g, &[1.4, -1.41], &[std::f64::consts::SQRT_2], 50.0).unwrap();
        assert_eq!(big[0].exceed_count, 0);
    }

    #[test]
    fn replica_budget_is_enforced() {
        let g = cos_x1(1);
        let drift = DriftSpec::free(g.mode_set.geometry);
        let cfg = SimConfig { dt: 0.01, horizon: 200.0, seed: 1, replicas: 100, record_stride: 0 };
        assert!(matches!(tail_empirics(&g, &[0.4], &cfg, &drift), Err(Error::InsufficientSamples { .. })));
        // beyond the sup bound no resolution is required
        let rep = tail_empirics(&g, &[2.0], &SimConfig { horizon: 5.0, ..cfg }, &drift).unwrap();
        assert_eq!(rep.rows[0].exceed_count, 0);
    }

    #[test]
    fn tail_csv_columns() {
        let g = cos_x1(1);
        let rows = tail_rows(&g, &[0.5, -0.1], &[0.2], 10.0).unwrap();
        let mut buf = Vec::new();
        write_tail_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("xi,T,replicas,exceed_count,freq,ci_upper,bound_c1\n0.2,10.0,2,1,0.5,"));
    }

    #[test]
    fn flatness_degenerate_cases() {
        let ms = Arc::new(enumerate_modes(TorusGeometry::standard(4).unwrap(), 2.0).unwrap());
        let zero: Vec<SpectralEmpirical> =
            (0..4).map(|_| SpectralEmpirical::new(ms.clone(), vec![0.0; ms.len()], 1e3, 0.5).unwrap()).collect();
        assert_eq!(flatness_failures(&zero, 1e-6, 8).unwrap(), 0);
        let wild: Vec<SpectralEmpirical> = (0..4)
            .map(|k| SpectralEmpirical::new(ms.clone(), vec![3.0 + k as f64; ms.len()], 1e3, 0.5).unwrap())
            .collect();
        assert_eq!(flatness_failures(&wild, 1e3, 8).unwrap(), 0);
        assert_eq!(flatness_failures(&wild, 1e-3, 8).unwrap(), 4);
    }

    #[test]
    fn flatness_budget_and_guards() {
        let drift = DriftSpec::free(TorusGeometry::standard(4).unwrap());
        let opts = FlatnessOptions { work_budget: 1e6, ..Default::default() };
        assert!(matches!(flatness_tail(&[1e3, 1e5], 4.0, 512, &drift, &opts), Err(Error::WorkBudget { .. })));
        assert!(flatness_tail(&[1e3], 3.0, 4, &drift, &opts).is_err());
        assert!(flatness_tail(&[1e4, 1e3], 4.0, 4, &drift, &opts).is_err());
        let p = flatness_plan(1e3, 4.0, 1, &drift, &opts).unwrap();
        assert!((p.xi - 1.0 / 1e3f64.ln()).abs() < 1e-15 && p.dt * p.lambda_max <= 0.1 + 1e-15);
    }

    #[test]
    fn flatness_small_run() {
        let drift = DriftSpec::free(TorusGeometry::standard(2).unwrap());
        let opts = FlatnessOptions { seed: 3, xi: Some(1e3), ..Default::default() };
        let rows = flatness_tail(&[200.0, 400.0], 4.0, 8, &drift, &opts).unwrap();
        assert!(rows.iter().all(|r| r.failures == 0));
        assert!(non_increasing_trend(&rows));
    }
}
