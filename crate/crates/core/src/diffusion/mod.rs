//! Stationary diffusion `dX = (∇V + Z)(X)dt + √2 dW` on the torus and its
//! occupation functionals.

mod drift;
mod persist;
mod sim;

pub use drift::{DriftSpec, ShearMode, ZSpec};
pub use persist::{write_psi_csv, Trajectory, TRAJECTORY_MAGIC};
pub use sim::{
    replica_rng, simulate, simulate_probed, step, Observable, OccupationAccumulator, ProbeTotals,
    ReplicaResult, ReplicaState, SimConfig, TrigObservable, DT_LAMBDA_GUARD,
};
