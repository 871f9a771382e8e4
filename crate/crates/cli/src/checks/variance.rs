//! Variance-form identities and the Monte Carlo moments of `ψ`.

use rayon::prelude::*;
use w2lab_core::diffusion::{simulate, DriftSpec, ReplicaState, ShearMode, SimConfig, ZSpec};
use w2lab_core::spectral::{enumerate_modes, KVec, ModeSet, Parity, TorusGeometry};
use w2lab_core::stats::summarize;
use w2lab_core::trig::{TrigPoly, TrigTerm};
use w2lab_core::variance::{clt_empirics, identity_star0_check, psi_moment_prediction, GeneratorMatrix};

use super::{Check, Context, Part, Suite};
use crate::error::Result;

pub(super) fn checks() -> Vec<Box<dyn Check>> {
    vec![Box::new(Star0), Box::new(LeadingMoments), Box::new(Clt)]
}

const E1: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

/// The λ = 1 modes of the 4-torus and the index of `√2cos x₁`.
pub(super) fn first_shell() -> Result<(ModeSet, usize)> {
    let ms = enumerate_modes(TorusGeometry::standard(4)?, 1.0)?;
    let i = ms.index_of(&KVec::unit(0), Parity::Cos).expect("λ = 1 shell contains e₁");
    Ok((ms, i))
}

fn psi_run(ctx: &Context, z: &[f64; 4], replicas: usize, salt: u64) -> Result<Vec<f64>> {
    let (ms, i) = first_shell()?;
    let drift = DriftSpec::constant_z(ms.geometry, z)?;
    let p = &ctx.params;
    let cfg = SimConfig { dt: p.clt_dt, horizon: p.clt_horizon, seed: ctx.seed(salt), replicas: replicas as u64, record_stride: 0 };
    Ok(simulate(&cfg, &drift, &ms, &[])?.into_iter().map(|r| r.psi[i]).collect())
}

/// `ψ` of `√2cos x₁` under `Z = 0`, enough replicas for every consumer.
pub(super) fn psi_free(ctx: &mut Context) -> Result<Vec<f64>> {
    if ctx.cache.psi_free.is_none() {
        let n = ctx.params.tail_replicas as usize;
        ctx.cache.psi_free = Some(psi_run(ctx, &[0.0; 4], n, 1)?);
    }
    Ok(ctx.cache.psi_free.clone().unwrap())
}

/// `ψ` of `√2cos x₁` under the constant drift `z = e₁`.
pub(super) fn psi_const(ctx: &mut Context) -> Result<Vec<f64>> {
    if ctx.cache.psi_const.is_none() {
        let n = ctx.params.clt_replicas;
        ctx.cache.psi_const = Some(psi_run(ctx, &E1, n, 2)?);
    }
    Ok(ctx.cache.psi_const.clone().unwrap())
}

fn generator(z: &[f64; 4]) -> Result<(GeneratorMatrix, usize)> {
    let (ms, i) = first_shell()?;
    Ok((GeneratorMatrix::assemble(&DriftSpec::constant_z(ms.geometry, z)?, &ms)?, i))
}

struct Star0;

impl Check for Star0 {
    fn id(&self) -> &'static str {
        "C4"
    }
    fn title(&self) -> &'static str {
        "variance identity 𝐕(φ) = 1/λ − 𝐕(Zφ)/λ²"
    }
    fn suite(&self) -> Suite {
        Suite::Variance
    }
    fn run(&self, _: &mut Context) -> Result<Vec<Part>> {
        let g = TorusGeometry::standard(4)?;
        let ms = enumerate_modes(g, 50.0)?;
        let mut parts = Vec::new();
        for (label, z) in [("z = e₁", [1.0, 0.0, 0.0, 0.0]), ("z = 2e₁", [2.0, 0.0, 0.0, 0.0]), ("z = e₁ + e₂", [1.0, 1.0, 0.0, 0.0])] {
            let gen = GeneratorMatrix::assemble(&DriftSpec::constant_z(g, &z)?, &ms)?;
            let mut worst: f64 = 0.0;
            for i in 0..gen.len() {
                worst = worst.max(identity_star0_check(i, &gen)?);
            }
            parts.push(Part::at_most(&format!("max residual, {label}, λ ≤ 50"), worst, 1e-10));
        }
        // divergence-free shear field in the (x₁, x₂) plane, Galerkin cutoff 100
        let shear = vec![
            ShearMode { k: KVec::unit(1), parity: Parity::Sin, amplitude: 0.8, direction: E1 },
            ShearMode { k: KVec::unit(0), parity: Parity::Cos, amplitude: 0.5, direction: [0.0, 1.0, 0.0, 0.0] },
            ShearMode { k: KVec::from_slice(&[1, 1]), parity: Parity::Sin, amplitude: 0.3, direction: [1.0, -1.0, 0.0, 0.0] },
        ];
        let drift = DriftSpec::new(g, vec![], ZSpec::Shear { modes: shear })?;
        let gen = GeneratorMatrix::assemble(&drift, &enumerate_modes(g, 100.0)?)?;
        let mut worst: f64 = 0.0;
        for i in (0..gen.len()).take_while(|&i| gen.lambda(i) <= 2.0) {
            worst = worst.max(identity_star0_check(i, &gen)?);
        }
        parts.push(Part::at_most("max residual, shear Z, λ ≤ 2 (Galerkin)", worst, 1e-8));
        Ok(parts)
    }
}

struct LeadingMoments;

impl LeadingMoments {
    /// `R(T) = E|ψ(T)|² − lim E|ψ|²` for `φ = √2cos x` on the circle, estimated
    /// from `ψ²` minus zero-mean martingale controls so the `O(1/T)` term is
    /// resolved with a few thousand replicas.
    fn remainder(ctx: &Context, horizon: f64, salt: u64) -> Result<(f64, f64)> {
        // the x₁-marginal of the free 4-torus diffusion is the circle diffusion
        let g = TorusGeometry::standard(1)?;
        let ms = enumerate_modes(g, 1.0)?;
        let i = ms.index_of(&KVec::unit(0), Parity::Cos).expect("λ = 1 mode");
        let probe = TrigPoly::from_terms(&[TrigTerm { k: KVec::unit(0), parity: Parity::Cos, amplitude: std::f64::consts::SQRT_2 }]);
        let p = &ctx.params;
        let cfg = SimConfig { dt: p.remainder_dt, horizon, seed: ctx.seed(salt), replicas: p.remainder_replicas, record_stride: 0 };
        cfg.validate(1.0)?;
        let drift = DriftSpec::free(g);
        let n = cfg.n_steps();
        let dt = cfg.dt;
        let split = n - ((CONTROL_LAG / dt).round() as u64).min(n / 2);
        // Euler steps of free Brownian motion are exact: E[g(X_{k+1}) | X_k] = ρg(X_k),
        // so M_k = Σ_{j<k} (g_{j+1} − ρg_j) is a martingale and
        // dt·Σ_{k<N} g_k = c(g_0 − g_N + M_N) with c = dt/(1 − ρ)
        let rho = (-dt).exp();
        let c = dt / (1.0 - rho);
        let lag_decay = rho.powi((n - split) as i32);
        let qv_mean = n as f64 * (1.0 - rho * rho);
        let t = n as f64 * dt;
        let y: Vec<f64> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| -> Result<f64> {
                let mut st = ReplicaState::new(&cfg, r, &drift, &ms, &[], None)?;
                let g0 = probe.eval(st.position(), &g);
                let (mut g_prev, mut m, mut m_split, mut g_split) = (g0, 0.0, 0.0, 0.0);
                for k in 0..n {
                    if k == split {
                        m_split = m;
                        g_split = g_prev;
                    }
                    st.advance(1)?;
                    let g_next = probe.eval(st.position(), &g);
                    m += g_next - rho * g_prev;
                    g_prev = g_next;
                }
                let psi = st.finish().psi[i];
                // subtract zero-mean terms: M² − E M², 2g_0M, and the split control
                // against the −2M·g_N cross term
                let controls = m * m - qv_mean + 2.0 * g0 * m - 2.0 * m_split * (g_prev - lag_decay * g_split);
                Ok(psi * psi - c * c * controls / t)
            })
            .collect::<Result<_>>()?;
        let s = summarize(&y)?;
        // long-horizon limit of E|ψ|² for the sampled chain, dt(1 + ρ)/(1 − ρ) = 2 + O(dt²)
        let limit = dt * (1.0 + rho) / (1.0 - rho);
        Ok((s.mean - limit, s.stderr))
    }
}

/// Lag of the split point used by the remainder control variate.
const CONTROL_LAG: f64 = 5.0;

impl Check for LeadingMoments {
    fn id(&self) -> &'static str {
        "C5"
    }
    fn title(&self) -> &'static str {
        "leading terms of E|ψ|²: 2/λ − 2𝐕(Zφ)/λ², remainder O(1/T)"
    }
    fn suite(&self) -> Suite {
        Suite::Variance
    }
    fn run(&self, ctx: &mut Context) -> Result<Vec<Part>> {
        let n = ctx.params.moment_replicas;
        let horizon = ctx.params.clt_horizon;
        let mut parts = Vec::new();
        for (label, psi, z) in [("Z = 0", psi_free(ctx)?, [0.0; 4]), ("z = e₁", psi_const(ctx)?, E1)] {
            let (gen, i) = generator(&z)?;
            let sq: Vec<f64> = psi[..n].iter().map(|p| p * p).collect();
            let s = summarize(&sq)?;
            let target = psi_moment_prediction(i, &gen, horizon)?;
            parts.push(Part::sigma(&format!("E|ψ|², {label}, {n} replicas"), s.mean, target, s.stderr, 3.0));
        }
        let [t1, t2] = ctx.params.remainder_horizons;
        let (r1, e1) = Self::remainder(ctx, t1, 3)?;
        let (r2, e2) = Self::remainder(ctx, t2, 4)?;
        // R(T) ≈ −2/T, so R(T₁)/R(T₂) ≈ T₂/T₁; allow a factor 2 either way
        let expected = t2 / t1;
        parts.push(Part::range(&format!("R({t1})/R({t2})"), r1 / r2, expected / 2.0, expected * 2.0));
        parts.push(Part::info(&format!("R({t1})"), r1));
        parts.push(Part::info(&format!("stderr R({t1})"), e1));
        parts.push(Part::info(&format!("R({t2})"), r2));
        parts.push(Part::info(&format!("stderr R({t2})"), e2));
        Ok(parts)
    }
}

struct Clt;

impl Check for Clt {
    fn id(&self) -> &'static str {
        "C6"
    }
    fn title(&self) -> &'static str {
        "CLT: Var ψ → 2𝐕(φ), Gaussian shape"
    }
    fn suite(&self) -> Suite {
        Suite::Variance
    }
    fn run(&self, ctx: &mut Context) -> Result<Vec<Part>> {
        let n = ctx.params.clt_replicas;
        let mut parts = Vec::new();
        for (label, psi, z) in [("Z = 0", psi_free(ctx)?, [0.0; 4]), ("z = e₁", psi_const(ctx)?, E1)] {
            let (gen, i) = generator(&z)?;
            let rep = clt_empirics(i, &gen, &psi[..n])?;
            parts.push(Part::sigma(&format!("Var ψ, {label}"), rep.sample_variance, rep.predicted_variance, rep.variance_stderr, 3.0));
            parts.push(Part::at_most(&format!("|excess kurtosis|, {label}"), rep.excess_kurtosis.abs(), 0.3));
            parts.push(Part::info(&format!("Jarque–Bera p, {label}"), rep.normality_p_value));
        }
        Ok(parts)
    }
}
