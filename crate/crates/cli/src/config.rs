//! Experiment configuration: a flat-key TOML document (`torus.L = 6.28`,
//! `sim.dt = 0.01`, ...) with every cross-field guard checked up front.

use std::path::Path;

use serde::{Deserialize, Serialize};
use w2lab_core::diffusion::{DriftSpec, SimConfig, ZSpec, DT_LAMBDA_GUARD};
use w2lab_core::spectral::{TorusGeometry, MAX_DIM};
use w2lab_core::transport::{CostContext, SinkhornOptions};
use w2lab_core::trig::TrigTerm;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TorusSection {
    pub d: usize,
    #[serde(rename = "L")]
    pub side: f64,
}

impl Default for TorusSection {
    fn default() -> Self {
        Self { d: 4, side: 2.0 * std::f64::consts::PI }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    /// Potential terms; constant when empty.
    #[serde(rename = "V", default)]
    pub potential: Vec<TrigTerm>,
    #[serde(rename = "Z", default = "zero_z")]
    pub z: ZSpec,
}

fn zero_z() -> ZSpec {
    ZSpec::Zero
}

impl Default for DriftSection {
    fn default() -> Self {
        Self { potential: vec![], z: ZSpec::Zero }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Horizons swept by the pipelines.
    #[serde(rename = "T_grid")]
    pub horizons: Vec<f64>,
    pub replicas: u64,
    pub seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self { dt: 0.01, horizon: 1e4, horizons: vec![1e3, 1e4, 1e5], replicas: 64, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothingSection {
    pub gamma: f64,
    pub eps_override: Option<f64>,
}

impl Default for SmoothingSection {
    fn default() -> Self {
        Self { gamma: 4.0, eps_override: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModesSection {
    pub lambda_max: f64,
}

impl Default for ModesSection {
    fn default() -> Self {
        Self { lambda_max: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OtSection {
    pub grid_n: usize,
    pub reg: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for OtSection {
    fn default() -> Self {
        Self { grid_n: 16, reg: None, max_iters: 5000, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into(), formats: vec!["csv".into(), "json".into()] }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub torus: TorusSection,
    pub drift: DriftSection,
    pub sim: SimSection,
    pub smoothing: SmoothingSection,
    pub modes: ModesSection,
    pub ot: OtSection,
    pub output: OutputSection,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::ConfigInvalid(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigIo { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.torus;
        if !(1..=MAX_DIM).contains(&t.d) {
            return Err(bad(format!("torus.d must be in 1..={MAX_DIM}, got {}", t.d)));
        }
        if !(t.side > 0.0 && t.side.is_finite()) {
            return Err(bad(format!("torus.L must be positive, got {}", t.side)));
        }
        let s = &self.sim;
        if !(s.dt > 0.0) || !(s.horizon >= s.dt) || s.replicas == 0 {
            return Err(bad("sim needs dt > 0, T ≥ dt and at least one replica"));
        }
        if s.horizons.iter().any(|&h| !(h > 1.0)) {
            return Err(bad("every sim.T_grid horizon must exceed 1"));
        }
        if !(self.modes.lambda_max > 0.0) {
            return Err(bad("modes.lambda_max must be positive"));
        }
        if s.dt * self.modes.lambda_max > DT_LAMBDA_GUARD * (1.0 + 1e-12) {
            return Err(bad(format!(
                "sim.dt·modes.lambda_max = {} exceeds {DT_LAMBDA_GUARD}: the Euler–Maruyama step would bias the fastest modes",
                s.dt * self.modes.lambda_max
            )));
        }
        let gamma = self.smoothing.gamma;
        if !(gamma > 3.0) {
            return Err(bad(format!(
                "smoothing.gamma = {gamma} must exceed 3: the smoothing schedule ε = (log T)^γ/T needs γ > 3 \
                 for the flatness event to become likely"
            )));
        }
        if let Some(e) = self.smoothing.eps_override {
            if !(e > 0.0) {
                return Err(bad("smoothing.eps_override must be positive"));
            }
        }
        let o = &self.ot;
        if o.grid_n < 2 || !o.grid_n.is_power_of_two() {
            return Err(bad(format!("ot.grid_n must be a power of two, got {}", o.grid_n)));
        }
        if o.reg.is_some_and(|r| !(r > 0.0)) || !(o.tol > 0.0) || o.max_iters == 0 {
            return Err(bad("ot needs reg > 0 (if set), tol > 0 and max_iters > 0"));
        }
        if let Some(f) = self.output.formats.iter().find(|f| !matches!(f.as_str(), "csv" | "json")) {
            return Err(bad(format!("unknown output format '{f}'")));
        }
        // the drift validates its own divergence condition
        self.drift_spec()?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<TorusGeometry> {
        Ok(TorusGeometry::new(self.torus.d, self.torus.side)?)
    }

    pub fn drift_spec(&self) -> Result<DriftSpec> {
        Ok(DriftSpec::new(self.geometry()?, self.drift.potential.clone(), self.drift.z.clone())?)
    }

    pub fn sim_config(&self, horizon: f64) -> SimConfig {
        SimConfig { dt: self.sim.dt, horizon, seed: self.sim.seed, replicas: self.sim.replicas, record_stride: 0 }
    }

    pub fn cost_context(&self) -> CostContext {
        CostContext { grid_n: self.ot.grid_n, reg: self.ot.reg, max_iters: self.ot.max_iters, tol: self.ot.tol, ..Default::default() }
    }

    pub fn sinkhorn_options(&self) -> SinkhornOptions {
        self.cost_context().sinkhorn_options(self.torus.side)
    }

    /// Canonical JSON used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_keys_parse() {
        let cfg = ExperimentConfig::from_toml(
            "torus.d = 2\ntorus.L = 1.0\nsim.dt = 0.001\nsim.T = 10.0\nsmoothing.gamma = 4.5\not.grid_n = 8\n\
             drift.Z = { kind = \"constant\", z = [1.0, 0.0, 0.0, 0.0] }\n\
             drift.V = [{ k = [1, 0, 0, 0], parity = \"cos\", amplitude = 0.2 }]\n",
        )
        .unwrap();
        assert_eq!(cfg.torus.d, 2);
        assert_eq!(cfg.ot.grid_n, 8);
        assert_eq!(cfg.drift.potential.len(), 1);
        assert!(matches!(cfg.drift.z, ZSpec::Constant { .. }));
    }

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
    }
}
