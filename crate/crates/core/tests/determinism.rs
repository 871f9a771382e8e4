//! Results must not depend on the worker-pool size.

use w2lab_core::diffusion::{simulate, DriftSpec, SimConfig};
use w2lab_core::spectral::{enumerate_modes, TorusGeometry};

fn run(threads: usize) -> Vec<Vec<f64>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let g = TorusGeometry::standard(3).unwrap();
    let ms = enumerate_modes(g, 3.0).unwrap();
    let drift = DriftSpec::constant_z(g, &[0.5, -1.0, 0.0]).unwrap();
    let cfg = SimConfig { dt: 0.01, horizon: 5.0, seed: 99, replicas: 12, record_stride: 0 };
    pool.install(|| simulate(&cfg, &drift, &ms, &[]).unwrap()).into_iter().map(|r| r.psi).collect()
}

#[test]
fn thread_count_does_not_change_results() {
    assert_eq!(run(1), run(3));
}
