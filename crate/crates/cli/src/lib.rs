//! Orchestration for w2lab: experiment configuration, run manifests, the
//! energy and W₂ pipelines, and the acceptance ledger behind `verify`.

pub mod checks;
pub mod config;
pub mod error;
pub mod lp;
pub mod manifest;
pub mod pipeline;

pub use error::{CliError, Result};
