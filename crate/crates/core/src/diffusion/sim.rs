//! Euler–Maruyama simulation and occupation functionals.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DriftSpec, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::spectral::{ModeEvaluator, ModeSet, TorusGeometry};
use crate::trig::TrigPoly;

/// Largest allowed `dt·λ` for modes whose ψ is used quantitatively.
pub const DT_LAMBDA_GUARD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    /// Horizon `T`.
    pub horizon: f64,
    pub seed: u64,
    pub replicas: u64,
    /// Steps between recorded states; 0 records nothing.
    pub record_stride: u64,
}

impl SimConfig {
    pub fn n_steps(&self) -> u64 {
        (self.horizon / self.dt).round() as u64
    }

    /// Checks `dt > 0`, `T ≥ dt` and the accuracy guard `dt·λ ≤ 0.1`.
    pub fn validate(&self, lambda_of_interest: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt) {
            return Err(invalid(format!("horizon {} is shorter than dt {}", self.horizon, self.dt)));
        }
        if self.replicas == 0 {
            return Err(invalid("at least one replica is required"));
        }
        if self.dt * lambda_of_interest > DT_LAMBDA_GUARD * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "dt·λ = {} exceeds the accuracy guard {DT_LAMBDA_GUARD}",
                self.dt * lambda_of_interest
            )));
        }
        Ok(())
    }
}

/// Independent, reproducible stream for one replica.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// A scalar function sampled along the path.
pub trait Observable: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Observable for F {
    fn value(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// A trigonometric polynomial bound to its torus.
#[derive(Debug, Clone)]
pub struct TrigObservable {
    pub poly: TrigPoly,
    pub geometry: TorusGeometry,
}

impl Observable for TrigObservable {
    fn value(&self, x: &[f64]) -> f64 {
        self.poly.eval(x, &self.geometry)
    }
}

/// One Euler–Maruyama step `x + b(x)dt + √(2dt)ξ mod L`, with `ξ` returned.
pub fn step<R: Rng + ?Sized>(x: &mut [f64; 4], drift: &DriftSpec, dt: f64, rng: &mut R) -> [f64; 4] {
    let g = drift.geometry();
    let mut b = [0.0; 4];
    drift.drift(&x[..g.dim()], &mut b);
    let s = (2.0 * dt).sqrt();
    let mut xi = [0.0; 4];
    for j in 0..g.dim() {
        xi[j] = rng.sample(StandardNormal);
        x[j] = g.wrap(x[j] + b[j] * dt + s * xi[j]);
    }
    xi
}

/// Running `Σ φ_i(X_t)·dt` over a mode set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationAccumulator {
    pub psi_raw: Vec<f64>,
    pub time_elapsed: f64,
}

impl OccupationAccumulator {
    pub fn new(n_modes: usize) -> Self {
        Self { psi_raw: vec![0.0; n_modes], time_elapsed: 0.0 }
    }

    /// `ψ_i(T) = T^{−1/2}∫_0^T φ_i(X_t)dt`.
    pub fn psi(&self) -> Vec<f64> {
        let s = self.time_elapsed.sqrt();
        self.psi_raw.iter().map(|v| if s > 0.0 { v / s } else { 0.0 }).collect()
    }

    /// Adds a contiguous later segment.
    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.psi_raw.iter_mut().zip(&other.psi_raw) {
            *a += b;
        }
        self.time_elapsed += other.time_elapsed;
    }
}

/// Martingale part `M = Σ √2∇g(X_k)·ΔW_k` of `g(X)` and its quadratic variation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeTotals {
    pub g0: f64,
    pub martingale: f64,
    pub quadratic_variation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaResult {
    pub replica: u64,
    pub psi: Vec<f64>,
    /// Time averages `T^{−1}∫_0^T g(X_t)dt`, one per functional.
    pub functionals: Vec<f64>,
    pub x0: [f64; 4],
    pub x_final: [f64; 4],
    pub probe: Option<ProbeTotals>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

/// Resumable state of a single replica.
pub struct ReplicaState<'a> {
    drift: &'a DriftSpec,
    dt: f64,
    replica: u64,
    rng: ChaCha8Rng,
    x: [f64; 4],
    x0: [f64; 4],
    steps: u64,
    evaluator: ModeEvaluator,
    phase_sums: Vec<Complex<f64>>,
    functionals: &'a [&'a dyn Observable],
    func_sums: Vec<f64>,
    probe: Option<&'a TrigPoly>,
    probe_totals: ProbeTotals,
    record_stride: u64,
    recorded: Vec<f64>,
}

impl<'a> ReplicaState<'a> {
    /// Starts replica `replica` from a stationary draw.
    pub fn new(
        config: &SimConfig,
        replica: u64,
        drift: &'a DriftSpec,
        mode_set: &ModeSet,
        functionals: &'a [&'a dyn Observable],
        probe: Option<&'a TrigPoly>,
    ) -> Result<Self> {
        let mut rng = replica_rng(config.seed, replica);
        let x = drift.sample_stationary(&mut rng)?;
        let evaluator = ModeEvaluator::new(mode_set);
        let g = drift.geometry();
        let probe_totals = ProbeTotals { g0: probe.map_or(0.0, |p| p.eval(&x[..g.dim()], g)), ..Default::default() };
        let mut st = Self {
            drift,
            dt: config.dt,
            replica,
            rng,
            x,
            x0: x,
            steps: 0,
            phase_sums: vec![Complex::new(0.0, 0.0); evaluator.n_representatives()],
            evaluator,
            func_sums: vec![0.0; functionals.len()],
            functionals,
            probe,
            probe_totals,
            record_stride: config.record_stride,
            recorded: Vec::new(),
        };
        st.record();
        Ok(st)
    }

    fn record(&mut self) {
        if self.record_stride > 0 && self.steps % self.record_stride == 0 {
            let d = self.drift.geometry().dim();
            self.recorded.extend_from_slice(&self.x[..d]);
        }
    }

    pub fn position(&self) -> &[f64] {
        &self.x[..self.drift.geometry().dim()]
    }

    /// Probe martingale and quadratic variation accumulated so far.
    pub fn probe_totals(&self) -> ProbeTotals {
        self.probe_totals
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    /// Advances `n` steps, accumulating left-endpoint Riemann sums.
    pub fn advance(&mut self, n: u64) -> Result<()> {
        let g = *self.drift.geometry();
        let d = g.dim();
        let dt = self.dt;
        let sdt = (2.0 * dt).sqrt();
        for _ in 0..n {
            let x = &self.x[..d];
            for (acc, z) in self.phase_sums.iter_mut().zip(self.evaluator.phases(x)) {
                *acc += z;
            }
            for (acc, f) in self.func_sums.iter_mut().zip(self.functionals) {
                *acc += f.value(x);
            }
            let grad = self.probe.map(|p| p.gradient(x, &g));
            let xi = step(&mut self.x, self.drift, dt, &mut self.rng);
            if let Some(gr) = grad {
                let noise: f64 = (0..d).map(|j| gr[j] * xi[j]).sum();
                let grad_sq: f64 = (0..d).map(|j| gr[j] * gr[j]).sum();
                self.probe_totals.martingale += sdt * noise;
                self.probe_totals.quadratic_variation += 2.0 * grad_sq * dt;
            }
            self.steps += 1;
            if !self.x[..d].iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteState { replica: self.replica, step: self.steps });
            }
            self.record();
        }
        Ok(())
    }

    /// Occupation sums so far.
    pub fn occupation(&self) -> OccupationAccumulator {
        let sq2 = std::f64::consts::SQRT_2;
        let mut psi_raw = Vec::with_capacity(2 * self.phase_sums.len());
        for z in &self.phase_sums {
            psi_raw.push(sq2 * z.re * self.dt);
            psi_raw.push(sq2 * z.im * self.dt);
        }
        OccupationAccumulator { psi_raw, time_elapsed: self.steps as f64 * self.dt }
    }

    pub fn finish(self) -> ReplicaResult {
        let occ = self.occupation();
        let t = occ.time_elapsed;
        let trajectory = (self.record_stride > 0).then(|| Trajectory {
            geometry: *self.drift.geometry(),
            dt: self.dt,
            record_stride: self.record_stride,
            positions: self.recorded,
        });
        ReplicaResult {
            replica: self.replica,
            psi: occ.psi(),
            functionals: self.func_sums.iter().map(|s| if t > 0.0 { s * self.dt / t } else { 0.0 }).collect(),
            x0: self.x0,
            x_final: self.x,
            probe: self.probe.map(|_| self.probe_totals),
            trajectory,
        }
    }
}

fn run_replica(
    config: &SimConfig,
    replica: u64,
    drift: &DriftSpec,
    mode_set: &ModeSet,
    functionals: &[&dyn Observable],
    probe: Option<&TrigPoly>,
) -> Result<ReplicaResult> {
    let mut st = ReplicaState::new(config, replica, drift, mode_set, functionals, probe)?;
    st.advance(config.n_steps())?;
    Ok(st.finish())
}

/// Runs all replicas in parallel; results are in replica order and do not
/// depend on the number of worker threads.
pub fn simulate(
    config: &SimConfig,
    drift: &DriftSpec,
    mode_set: &ModeSet,
    functionals: &[&dyn Observable],
) -> Result<Vec<ReplicaResult>> {
    simulate_probed(config, drift, mode_set, functionals, None)
}

/// As [`simulate`], also accumulating the martingale part of `probe`.
pub fn simulate_probed(
    config: &SimConfig,
    drift: &DriftSpec,
    mode_set: &ModeSet,
    functionals: &[&dyn Observable],
    probe: Option<&TrigPoly>,
) -> Result<Vec<ReplicaResult>> {
    if mode_set.geometry != *drift.geometry() {
        return Err(invalid("mode set and drift live on different tori"));
    }
    let lam = mode_set.pairs.last().map_or(0.0, |p| p.lambda);
    config.validate(lam)?;
    (0..config.replicas)
        .into_par_iter()
        .map(|r| run_replica(config, r, drift, mode_set, functionals, probe))
        .collect()
}
