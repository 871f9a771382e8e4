//! Smoothed empirical densities, energy identities and transport estimates.

mod dm;
mod empirical;
mod estimator;
mod grid;
mod scaling;
mod sinkhorn;

pub use dm::{dm_action, ledoux_bound, smoothing_integral};
pub use empirical::{epsilon_schedule, HessianSup, SpectralEmpirical};
pub use estimator::{CostContext, CostRegistry, TransportCost};
pub use grid::{GridDensity, NEGATIVE_MASS_TOLERANCE};
pub use scaling::{kernel_norm_scaling, kernel_norm_sq, ScalingReport, MAX_FIT_RESIDUAL};
pub use sinkhorn::{default_reg, sinkhorn_w2, SinkhornDiagnostics, SinkhornOptions, SinkhornResult};

#[cfg(test)]
mod tests;
