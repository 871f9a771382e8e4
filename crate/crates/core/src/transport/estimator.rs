//! Interchangeable transport-cost estimators, looked up by name.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{default_reg, dm_action, ledoux_bound, sinkhorn_w2, GridDensity, SinkhornOptions, SpectralEmpirical};
use crate::error::{invalid, Result};

/// Numerical settings shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostContext {
    pub grid_n: usize,
    /// `None` selects `2h²`.
    pub reg: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub dm_steps: usize,
}

impl Default for CostContext {
    fn default() -> Self {
        Self { grid_n: 16, reg: None, max_iters: 5000, tol: 1e-9, dm_steps: 32 }
    }
}

impl CostContext {
    pub fn sinkhorn_options(&self, side: f64) -> SinkhornOptions {
        SinkhornOptions {
            reg: self.reg.unwrap_or_else(|| default_reg(side, self.grid_n)),
            max_iters: self.max_iters,
            tol: self.tol,
        }
    }
}

/// An estimate of (a surrogate for) `W₂²(μ_{T,ε}, μ)` from one sample.
pub trait TransportCost: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn cost(&self, se: &SpectralEmpirical, ctx: &CostContext) -> Result<f64>;
}

struct H1Energy;
struct DmAction;
struct Ledoux;
struct Sinkhorn;

impl TransportCost for H1Energy {
    fn name(&self) -> &'static str {
        "h1"
    }
    fn describe(&self) -> &'static str {
        "negative-Sobolev energy μ(|∇f|²), the linearised cost"
    }
    fn cost(&self, se: &SpectralEmpirical, _: &CostContext) -> Result<f64> {
        Ok(se.h1_energy())
    }
}

impl TransportCost for DmAction {
    fn name(&self) -> &'static str {
        "dm-action"
    }
    fn describe(&self) -> &'static str {
        "Dacorogna–Moser interpolation action, an upper bound"
    }
    fn cost(&self, se: &SpectralEmpirical, ctx: &CostContext) -> Result<f64> {
        dm_action(se, ctx.dm_steps, ctx.grid_n)
    }
}

impl TransportCost for Ledoux {
    fn name(&self) -> &'static str {
        "ledoux"
    }
    fn describe(&self) -> &'static str {
        "weighted H⁻¹ upper bound against the invariant density"
    }
    fn cost(&self, se: &SpectralEmpirical, ctx: &CostContext) -> Result<f64> {
        let flat = SpectralEmpirical { psi: vec![0.0; se.psi.len()], ..se.clone() };
        ledoux_bound(se, &flat, ctx.grid_n)
    }
}

impl TransportCost for Sinkhorn {
    fn name(&self) -> &'static str {
        "sinkhorn"
    }
    fn describe(&self) -> &'static str {
        "debiased entropic transport on the grid"
    }
    fn cost(&self, se: &SpectralEmpirical, ctx: &CostContext) -> Result<f64> {
        let a = se.grid_density(ctx.grid_n)?;
        let b = GridDensity::uniform(*se.geometry(), ctx.grid_n);
        Ok(sinkhorn_w2(&a, &b, &ctx.sinkhorn_options(se.geometry().side()))?.divergence)
    }
}

/// Name → estimator table.
pub struct CostRegistry {
    entries: BTreeMap<&'static str, Box<dyn TransportCost>>,
}

impl Default for CostRegistry {
    fn default() -> Self {
        let mut r = Self { entries: BTreeMap::new() };
        r.register(Box::new(H1Energy));
        r.register(Box::new(DmAction));
        r.register(Box::new(Ledoux));
        r.register(Box::new(Sinkhorn));
        r
    }
}

impl CostRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// Adds or replaces an estimator under its own name.
    pub fn register(&mut self, est: Box<dyn TransportCost>) {
        self.entries.insert(est.name(), est);
    }

    pub fn get(&self, name: &str) -> Result<&dyn TransportCost> {
        self.entries.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            invalid(format!("unknown estimator '{name}'; known: {}", self.names().join(", ")))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}
