//! Variance forms of the non-symmetric generator, Galerkin solves and CLT
//! diagnostics.

mod clt;
mod generator;
mod vform;

pub use clt::{clt_empirics, CltReport, MIN_CLT_SAMPLES};
pub use generator::GeneratorMatrix;
pub use vform::{
    block_v_form, block_v_form_z, duhamel_check, identity_star0_check, mode_variance,
    psi_moment_prediction, v_form, v_form_time_quadrature, v_form_z, ModeVariance,
};

#[cfg(test)]
mod tests;
