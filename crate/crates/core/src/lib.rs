//! Numerical laboratory for the quadratic Wasserstein asymptotics of diffusion
//! occupation measures on flat tori.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectral`]: exact Laplace spectrum of `(R/LZ)^d`, theta-function heat
//!   traces, inverse-power spectral sums, kernels and Weyl counting.
//! - [`diffusion`]: Euler–Maruyama simulation of `L = Δ + ∇V·∇ + Z` and the
//!   occupation coefficients `ψ_i(T)`.
//! - [`transport`]: smoothed empirical densities, the H⁻¹ energy, Hessian
//!   flatness, Dacorogna–Moser and Ledoux bounds, debiased Sinkhorn on a grid,
//!   and a name-keyed registry of transport-cost estimators.
//! - [`variance`]: truncated Galerkin generator, the variance form `𝐕`, and
//!   CLT diagnostics.
//! - [`concentration`]: Bernstein-type deviation bounds for time averages and
//!   their empirical counterparts.

pub mod concentration;
pub mod diffusion;
mod error;
pub mod quadrature;
pub mod spectral;
pub mod stats;
pub mod transport;
pub mod trig;
pub mod variance;

pub use error::{Error, Result};
