//! Acceptance checks behind `verify`.
//!
//! Each check is a trait object in a registry keyed by its id (`C1`...). A
//! check returns ledger parts — measured value, target, tolerance, verdict —
//! and any error it raises marks only its own entry failed. Ledgers carry no
//! timings so that identical seeds give byte-identical files.

mod concentration;
mod pipeline;
mod spectral;
mod variance;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use w2lab_core::transport::SpectralEmpirical;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Spectral,
    Variance,
    Concentration,
    Pipeline,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "spectral" => Suite::Spectral,
            "variance" => Suite::Variance,
            "concentration" => Suite::Concentration,
            "pipeline" => Suite::Pipeline,
            "all" => Suite::All,
            other => return Err(CliError::UnknownSuite(other.to_string())),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Spectral => "spectral",
            Suite::Variance => "variance",
            Suite::Concentration => "concentration",
            Suite::Pipeline => "pipeline",
            Suite::All => "all",
        })
    }
}

/// `Full` runs the pinned acceptance sizes; `Smoke` shrinks every Monte Carlo
/// stage for quick end-to-end exercises (its verdicts are not meaningful).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Smoke,
    Full,
}

impl FromStr for Scale {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoke" => Ok(Scale::Smoke),
            "full" => Ok(Scale::Full),
            other => Err(CliError::ConfigInvalid(format!("unknown scale '{other}' (smoke or full)"))),
        }
    }
}

/// Run sizes of the Monte Carlo checks.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScaleParams {
    /// Stationary `ψ` runs for the variance and concentration checks.
    pub clt_horizon: f64,
    pub clt_dt: f64,
    pub moment_replicas: usize,
    pub clt_replicas: usize,
    pub tail_replicas: u64,
    pub remainder_replicas: u64,
    pub remainder_dt: f64,
    pub remainder_horizons: [f64; 2],
    pub energy_horizon: f64,
    pub energy_replicas: u64,
    pub energy_lambda_max: f64,
    pub energy_dt: f64,
    pub w2_replicas: usize,
    pub w2_grid: usize,
    pub flat_replicas: u64,
    pub flat_horizons: [f64; 3],
    pub flat_budget: f64,
}

impl ScaleParams {
    pub fn for_scale(scale: Scale) -> Self {
        match scale {
            Scale::Full => Self {
                clt_horizon: 200.0,
                clt_dt: 1e-3,
                moment_replicas: 512,
                clt_replicas: 2048,
                tail_replicas: 4096,
                remainder_replicas: 4096,
                remainder_dt: 0.01,
                remainder_horizons: [100.0, 400.0],
                energy_horizon: 1e4,
                energy_replicas: 256,
                energy_lambda_max: 9.6,
                energy_dt: 0.01,
                w2_replicas: 64,
                w2_grid: 16,
                flat_replicas: 512,
                flat_horizons: [1e3, 1e4, 1e5],
                flat_budget: 2e10,
            },
            Scale::Smoke => Self {
                clt_horizon: 20.0,
                clt_dt: 0.01,
                moment_replicas: 64,
                clt_replicas: 128,
                tail_replicas: 256,
                remainder_replicas: 256,
                remainder_dt: 0.05,
                remainder_horizons: [10.0, 40.0],
                energy_horizon: 1e3,
                energy_replicas: 8,
                energy_lambda_max: 4.0,
                energy_dt: 0.02,
                w2_replicas: 2,
                w2_grid: 8,
                flat_replicas: 8,
                flat_horizons: [1e3, 1e4, 1e5],
                flat_budget: 1e8,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Reported but not judged.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub name: String,
    pub measured: f64,
    pub target: Option<f64>,
    pub tolerance: String,
    pub verdict: Verdict,
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

impl Part {
    pub fn rel(name: &str, measured: f64, target: f64, rel: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            target: Some(target),
            tolerance: format!("relative {rel}"),
            verdict: verdict((measured / target - 1.0).abs() <= rel),
        }
    }

    /// `|measured − target| ≤ k·stderr`.
    pub fn sigma(name: &str, measured: f64, target: f64, stderr: f64, k: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            target: Some(target),
            tolerance: format!("{k}·stderr = {}", k * stderr),
            verdict: verdict((measured - target).abs() <= k * stderr),
        }
    }

    pub fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, target: Some(bound), tolerance: "≤ target".into(), verdict: verdict(measured <= bound) }
    }

    pub fn range(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            target: None,
            tolerance: format!("in [{lo}, {hi}]"),
            verdict: verdict((lo..=hi).contains(&measured)),
        }
    }

    /// Boolean property; `measured` is 1 when it holds.
    pub fn holds(name: &str, ok: bool, what: &str) -> Self {
        Self { name: name.into(), measured: if ok { 1.0 } else { 0.0 }, target: Some(1.0), tolerance: what.into(), verdict: verdict(ok) }
    }

    pub fn info(name: &str, measured: f64) -> Self {
        Self { name: name.into(), measured, target: None, tolerance: String::new(), verdict: Verdict::Info }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub id: String,
    pub title: String,
    pub suite: Suite,
    pub passed: bool,
    pub parts: Vec<Part>,
    pub error: Option<String>,
}

impl Entry {
    /// One-line summary, e.g. for the acceptance output.
    pub fn summary(&self) -> String {
        let mut s = format!("{} {} {}", self.id, if self.passed { "PASS" } else { "FAIL" }, self.title);
        for p in &self.parts {
            let tgt = p.target.map_or(String::new(), |t| format!(" target {t:.6e}"));
            s += &format!("; {} = {:.6e}{tgt} ({}) [{:?}]", p.name, p.measured, p.tolerance, p.verdict);
        }
        if let Some(e) = &self.error {
            s += &format!("; error: {e}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub suite: Suite,
    pub scale: Scale,
    pub seed: u64,
    pub limit_constant: f64,
    pub passed: bool,
    pub entries: Vec<Entry>,
}

impl Ledger {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger serialises") + "\n"
    }

    pub fn entry(&self, id: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub scale: Scale,
    pub seed: u64,
    /// Fault injection: replace `vol/(8π²)` by `vol/(4π²)`.
    pub tamper_limit_constant: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { scale: Scale::Full, seed: DEFAULT_SEED, tamper_limit_constant: false }
    }
}

pub const DEFAULT_SEED: u64 = 20_240_611;

/// Simulations shared between checks within one `verify` call.
#[derive(Default)]
pub(crate) struct Cache {
    /// `ψ` of `√2cos x₁` on the 4-torus, `Z = 0` and `z = e₁`.
    pub psi_free: Option<Vec<f64>>,
    pub psi_const: Option<Vec<f64>>,
    pub energy_samples: Option<Arc<Vec<SpectralEmpirical>>>,
}

pub(crate) struct Context {
    pub opts: VerifyOptions,
    pub params: ScaleParams,
    pub limit_constant: f64,
    pub cache: Cache,
}

impl Context {
    fn new(opts: VerifyOptions) -> Self {
        let vol = (2.0 * std::f64::consts::PI).powi(4);
        let pi2 = std::f64::consts::PI.powi(2);
        let limit_constant = if opts.tamper_limit_constant { vol / (4.0 * pi2) } else { vol / (8.0 * pi2) };
        Self { opts, params: ScaleParams::for_scale(opts.scale), limit_constant, cache: Cache::default() }
    }

    /// Per-purpose seed, stable across suites.
    pub fn seed(&self, salt: u64) -> u64 {
        self.opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt)
    }
}

pub(crate) trait Check: Send + Sync {
    fn id(&self) -> &'static str;
    fn title(&self) -> &'static str;
    fn suite(&self) -> Suite;
    fn run(&self, ctx: &mut Context) -> Result<Vec<Part>>;
}

/// Ordered id → check table.
pub struct CheckRegistry {
    checks: Vec<Box<dyn Check>>,
}

impl Default for CheckRegistry {
    fn default() -> Self {
        let mut r = Self { checks: Vec::new() };
        for c in spectral::checks().into_iter().chain(variance::checks()).chain(pipeline::checks()).chain(concentration::checks()) {
            r.register(c);
        }
        r.checks.sort_by_key(|c| c.id()[1..].parse::<u32>().unwrap_or(u32::MAX));
        r
    }
}

impl CheckRegistry {
    fn register(&mut self, check: Box<dyn Check>) {
        assert!(self.checks.iter().all(|c| c.id() != check.id()), "duplicate check {}", check.id());
        self.checks.push(check);
    }

    pub fn ids(&self, suite: Suite) -> Vec<&'static str> {
        self.checks.iter().filter(|c| suite.includes(c.suite())).map(|c| c.id()).collect()
    }
}

/// Wall-clock time of one check; kept out of the ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub id: String,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub ledger: Ledger,
    pub timings: Vec<Timing>,
}

/// Runs every check of `suite`; a failing check never stops the others.
pub fn verify(suite: Suite, opts: VerifyOptions) -> VerifyOutcome {
    verify_with(suite, opts, |_| {})
}

/// As [`verify`], calling `progress` after each entry.
pub fn verify_with(suite: Suite, opts: VerifyOptions, mut progress: impl FnMut(&Entry)) -> VerifyOutcome {
    let registry = CheckRegistry::default();
    let mut ctx = Context::new(opts);
    let mut entries = Vec::new();
    let mut timings = Vec::new();
    for check in registry.checks.iter().filter(|c| suite.includes(c.suite())) {
        let start = Instant::now();
        let (parts, error) = match check.run(&mut ctx) {
            Ok(p) => (p, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        let passed = error.is_none() && !parts.is_empty() && parts.iter().all(|p| p.verdict != Verdict::Fail);
        let entry = Entry { id: check.id().into(), title: check.title().into(), suite: check.suite(), passed, parts, error };
        progress(&entry);
        timings.push(Timing { id: check.id().into(), seconds: start.elapsed().as_secs_f64() });
        entries.push(entry);
    }
    let passed = entries.iter().all(|e| e.passed);
    VerifyOutcome {
        ledger: Ledger { suite, scale: opts.scale, seed: opts.seed, limit_constant: ctx.limit_constant, passed, entries },
        timings,
    }
}

/// Determinism entry: two ledgers of the same suite and seed must match byte for byte.
pub fn determinism_entry(first: &Ledger, second: &Ledger) -> Entry {
    let (a, b) = (first.to_json(), second.to_json());
    let differing = a.lines().zip(b.lines()).filter(|(x, y)| x != y).count() + a.lines().count().abs_diff(b.lines().count());
    let parts = vec![
        Part::holds("ledgers byte-identical", a == b, "identical bytes"),
        Part::info("differing lines", differing as f64),
    ];
    Entry {
        id: "C12".into(),
        title: "verify twice with one seed gives byte-identical ledgers".into(),
        suite: first.suite,
        passed: a == b,
        parts,
        error: None,
    }
}
