use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use super::*;
use crate::error::Error;
use crate::quadrature::{integrate, QuadOptions};
use crate::spectral::{enumerate_modes, KVec, Parity, TorusGeometry};

fn modes(d: usize, lambda_max: f64) -> Arc<crate::spectral::ModeSet> {
    Arc::new(enumerate_modes(TorusGeometry::standard(d).unwrap(), lambda_max).unwrap())
}

/// ψ chosen so that `u − 1 = Σ c_i φ_i` exactly.
fn with_density_coeffs(ms: &Arc<crate::spectral::ModeSet>, c: &[f64], horizon: f64, eps: f64) -> SpectralEmpirical {
    let psi = ms.pairs.iter().zip(c).map(|(p, c)| c * horizon.sqrt() * (p.lambda * eps).exp()).collect();
    SpectralEmpirical::new(ms.clone(), psi, horizon, eps).unwrap()
}

fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed;
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

#[test]
fn density_basics() {
    let ms = modes(2, 5.0);
    let zero = SpectralEmpirical::new(ms.clone(), vec![0.0; ms.len()], 10.0, 0.1).unwrap();
    assert!(zero.density_grid(8).iter().all(|&v| v == 1.0));

    let mut c = vec![0.0; ms.len()];
    c[0] = 1.0;
    let one = with_density_coeffs(&ms, &c, 3.0, 0.2);
    let grid = one.density_grid(16);
    let max = grid.iter().copied().fold(f64::MIN, f64::max);
    let min = grid.iter().copied().fold(f64::MAX, f64::min);
    assert!((max - (1.0 + SQRT_2)).abs() < 1e-12 && (min - (1.0 - SQRT_2)).abs() < 1e-12);

    let rnd = with_density_coeffs(&ms, &pseudo_random(ms.len(), 3).iter().map(|v| 0.05 * v).collect::<Vec<_>>(), 5.0, 0.1);
    let g = rnd.density_grid(12);
    assert!((g.iter().sum::<f64>() / g.len() as f64 - 1.0).abs() < 1e-12);
    let pts = vec![vec![0.3, 1.7], vec![5.0, 2.2]];
    let direct = rnd.density_at(&pts);
    assert!(direct.iter().all(|v| (v - 1.0).abs() < 1.0));
}

#[test]
fn potential_inverts_the_generator() {
    let ms = modes(2, 4.0);
    let c = pseudo_random(ms.len(), 9);
    let se = with_density_coeffs(&ms, &c, 2.0, 0.0);
    let f = se.potential_coeffs();
    for ((fi, ci), p) in f.iter().zip(&c).zip(&ms.pairs) {
        assert!((fi * p.lambda - ci).abs() < 1e-12);
        if p.lambda == 1.0 {
            assert!((fi - ci).abs() < 1e-15);
        }
        if p.lambda == 4.0 {
            assert!((fi / ci - 0.25).abs() < 1e-15);
        }
    }
}

#[test]
fn h1_energy_identities() {
    let ms = modes(1, 1.0);
    let single = SpectralEmpirical::new(ms.clone(), vec![1.0, 0.0], 1.0, 0.0).unwrap();
    assert_eq!(single.h1_energy(), 1.0);

    let ms2 = modes(2, 20.0);
    let psi = pseudo_random(ms2.len(), 5);
    let se = SpectralEmpirical::new(ms2.clone(), psi.clone(), 7.0, 0.03).unwrap();
    // Parseval: Σ (coefficient of f)²·λ
    let pars: f64 = se.potential_coeffs().iter().zip(&ms2.pairs).map(|(c, p)| c * c * p.lambda).sum();
    assert!((pars - se.h1_energy()).abs() < 1e-12 * pars.max(1.0));
    // grid quadrature of |∇f|²
    let grad = se.potential_gradient_grid(32);
    let quad: f64 = (0..grad[0].len()).map(|c| grad[0][c].powi(2) + grad[1][c].powi(2)).sum::<f64>() / grad[0].len() as f64;
    assert!((quad - se.h1_energy()).abs() < 1e-8);
    let mut prev = f64::INFINITY;
    for e in [0.0, 0.01, 0.1, 1.0] {
        let v = se.at_eps(e).h1_energy();
        assert!(v <= prev);
        prev = v;
    }
}

#[test]
fn hessian_of_a_single_cosine() {
    let ms = modes(4, 1.0);
    let i = ms.index_of(&KVec::unit(0), Parity::Cos).unwrap();
    let mut c = vec![0.0; ms.len()];
    // f = cos(x₁) = φ/√2 with λ = 1, so u − 1 carries the same coefficient
    c[i] = 1.0 / SQRT_2;
    let se = with_density_coeffs(&ms, &c, 1.0, 0.0);
    let h = se.hessian_sup(16, true);
    assert!(h.grid_value >= 1.0 - 1e-6 && h.grid_value <= 1.0 + 1e-12);
    assert!(h.certified() >= 1.0);
    assert!(!se.flatness_event(0.5, 16).unwrap());
    let zero = SpectralEmpirical::new(ms.clone(), vec![0.0; ms.len()], 1.0, 0.0).unwrap();
    assert_eq!(zero.hessian_sup(8, true).certified(), 0.0);
    assert!(zero.flatness_event(1e-9, 8).unwrap());
}

#[test]
fn certified_hessian_dominates_fine_grids() {
    let ms = modes(2, 5.0);
    for seed in 0..5 {
        let mut c = vec![0.0; ms.len()];
        for (i, v) in pseudo_random(10, seed).into_iter().enumerate() {
            c[(i * 7 + seed as usize) % ms.len()] = v;
        }
        let se = with_density_coeffs(&ms, &c, 1.0, 0.0);
        let coarse = se.hessian_sup(6, true).certified();
        let dense = se.hessian_sup(64, false).grid_value;
        assert!(coarse >= dense, "seed {seed}: {coarse} < {dense}");
    }
}

#[test]
fn dm_action_bounds() {
    let ms = modes(2, 8.0);
    let zero = SpectralEmpirical::new(ms.clone(), vec![0.0; ms.len()], 1.0, 0.0).unwrap();
    assert_eq!(dm_action(&zero, 8, 8).unwrap(), 0.0);

    let c: Vec<f64> = pseudo_random(ms.len(), 11).iter().map(|v| 0.02 * v).collect();
    let se = with_density_coeffs(&ms, &c, 1.0, 0.0);
    let u = se.density_grid(24);
    let eta = u.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    assert!(eta < 1.0);
    let h1 = se.h1_energy();
    let a = dm_action(&se, 64, 24).unwrap();
    assert!(a >= h1 / (1.0 + eta) && a <= h1 / (1.0 - eta), "{a} vs {h1}, η = {eta}");

    let mut big = vec![0.0; ms.len()];
    big[0] = 1.0;
    let neg = with_density_coeffs(&ms, &big, 1.0, 0.0);
    assert!(matches!(dm_action(&neg, 4, 8), Err(Error::NonPositiveDensity { .. })));
}

#[test]
fn dm_action_one_dimensional_oracle() {
    let ms = modes(1, 1.0);
    let se = with_density_coeffs(&ms, &[0.1, 0.0], 1.0, 0.0);
    // u = 1 + δcos x with δ = 0.1√2; f' = −δ sin x; ∫ ds/u_s = ln u/(u − 1)
    let delta = 0.1 * SQRT_2;
    let integrand = |x: f64| {
        let u: f64 = 1.0 + delta * x.cos();
        let w = if (u - 1.0).abs() < 1e-12 { 1.0 } else { u.ln() / (u - 1.0) };
        (delta * x.sin()).powi(2) * w / (2.0 * PI)
    };
    let oracle = integrate(integrand, 0.0, 2.0 * PI, QuadOptions::default()).unwrap().value;
    let v = dm_action(&se, 400, 64).unwrap();
    assert!((v - oracle).abs() < 1e-6, "{v} vs {oracle}");
}

#[test]
fn ledoux_reductions_and_telescoping() {
    let ms = modes(2, 6.0);
    let psi: Vec<f64> = pseudo_random(ms.len(), 21).iter().map(|v| 0.3 * v).collect();
    let se = SpectralEmpirical::new(ms.clone(), psi, 50.0, 0.2).unwrap();
    assert_eq!(ledoux_bound(&se, &se, 16).unwrap(), 0.0);

    // denominator ≡ 1: one λ = 1 mode with coefficient c gives 4c²
    let flat = SpectralEmpirical::new(ms.clone(), vec![0.0; ms.len()], 1.0, 0.0).unwrap();
    let mut c = vec![0.0; ms.len()];
    c[2] = 0.3;
    let single = with_density_coeffs(&ms, &c, 1.0, 0.0);
    assert!((ledoux_bound(&single, &flat, 16).unwrap() - 4.0 * 0.09).abs() < 1e-12);
    let against_flat = ledoux_bound(&se, &flat, 16).unwrap();
    assert!((against_flat - 4.0 * se.h1_energy()).abs() < 1e-12);

    for (lo, hi) in [(0.05, 0.2), (0.01, 0.5), (0.1, 0.1001)] {
        let u_lo = se.at_eps(lo);
        let u_hi = se.at_eps(hi);
        let bound = ledoux_bound(&u_lo, &u_hi, 16).unwrap();
        let min_v = u_hi.density_grid(16).iter().copied().fold(f64::INFINITY, f64::min);
        let rhs = 8.0 / min_v * smoothing_integral(&se, lo, hi);
        assert!(bound <= rhs + 1e-10, "{bound} > {rhs}");
    }
}

#[test]
fn grid_density_clamping_and_io() {
    let g = TorusGeometry::new(2, 1.0).unwrap();
    let mut vals = vec![1.0; 16];
    vals[0] = -1e-6;
    let d = GridDensity::from_values(g, 4, &vals).unwrap();
    assert_eq!(d.cells[0], 0.0);
    assert!((d.total_mass() - 1.0).abs() < 1e-12);
    vals[0] = -0.1;
    assert!(matches!(GridDensity::from_values(g, 4, &vals), Err(Error::NegativeDensity { .. })));

    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("rho");
    d.save(&stem).unwrap();
    assert_eq!(GridDensity::load(&stem).unwrap(), d);
    let side: serde_json::Value = serde_json::from_slice(&std::fs::read(stem.with_extension("json")).unwrap()).unwrap();
    assert_eq!(side["n"], 4);
    assert_eq!(side["L"], 1.0);
}

fn wrapped_gaussian(g: TorusGeometry, n: usize, var: f64) -> GridDensity {
    let l = g.side();
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let x = i as f64 * l / n as f64;
            (-10..=10).map(|m| (-(x - m as f64 * l).powi(2) / (2.0 * var)).exp()).sum::<f64>()
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    GridDensity::from_values(g, n, &vals.iter().map(|v| v / mean).collect::<Vec<_>>()).unwrap()
}

fn lp_transport(a: &GridDensity, b: &GridDensity) -> f64 {
    let g = a.geometry;
    let n = a.n;
    let d = g.dim();
    let cells = a.cells.len();
    let h = g.side() / n as f64;
    let coords = |c: usize| -> Vec<f64> {
        let mut x = vec![0.0; d];
        let mut r = c;
        for j in (0..d).rev() {
            x[j] = (r % n) as f64 * h;
            r /= n;
        }
        x
    };
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let mut vars = Vec::with_capacity(cells * cells);
    for i in 0..cells {
        let xi = coords(i);
        for j in 0..cells {
            let xj = coords(j);
            let cost: f64 = (0..d).map(|k| g.wrapped_delta(xi[k], xj[k]).powi(2)).sum();
            vars.push(pb.add_var(cost, (0.0, f64::INFINITY)));
        }
    }
    for i in 0..cells {
        let row: Vec<_> = (0..cells).map(|j| (vars[i * cells + j], 1.0)).collect();
        pb.add_constraint(&row[..], ComparisonOp::Eq, a.cells[i]);
    }
    // one column constraint is implied by total mass
    for j in 0..cells - 1 {
        let col: Vec<_> = (0..cells).map(|i| (vars[i * cells + j], 1.0)).collect();
        pb.add_constraint(&col[..], ComparisonOp::Eq, b.cells[j]);
    }
    pb.solve().unwrap().objective()
}

fn opts(side: f64, n: usize) -> SinkhornOptions {
    SinkhornOptions { reg: default_reg(side, n), max_iters: 20_000, tol: 1e-12 }
}

#[test]
fn sinkhorn_trivial_cases() {
    let g = TorusGeometry::standard(1).unwrap();
    let n = 64;
    let a = wrapped_gaussian(g, n, 0.3);
    let same = sinkhorn_w2(&a, &a, &opts(g.side(), n)).unwrap();
    assert!(same.divergence.abs() < 1e-8);
    let u = GridDensity::uniform(g, n);
    let shifted = GridDensity { cells: u.cells.iter().cycle().skip(5).take(n).copied().collect(), ..u.clone() };
    assert!(sinkhorn_w2(&u, &shifted, &opts(g.side(), n)).unwrap().divergence.abs() < 1e-8);
    let ab = sinkhorn_w2(&a, &u, &opts(g.side(), n)).unwrap().divergence;
    let ba = sinkhorn_w2(&u, &a, &opts(g.side(), n)).unwrap().divergence;
    assert!((ab - ba).abs() <= 1e-10 * (1.0 + ab));

    let bad = SinkhornOptions { max_iters: 2, ..opts(g.side(), n) };
    assert!(matches!(sinkhorn_w2(&a, &u, &bad), Err(Error::SinkhornNotConverged { .. })));
    let other = GridDensity::uniform(g, 32);
    assert!(sinkhorn_w2(&a, &other, &opts(g.side(), n)).is_err());
}

#[test]
fn sinkhorn_matches_exact_lp_in_one_dimension() {
    let g = TorusGeometry::standard(1).unwrap();
    let n = 64;
    let u = GridDensity::uniform(g, n);
    for eps1 in [0.05, 0.25, 0.5, 1.0] {
        let a = wrapped_gaussian(g, n, 2.0 * eps1);
        let exact = lp_transport(&a, &u);
        let s = sinkhorn_w2(&a, &u, &opts(g.side(), n)).unwrap().divergence;
        assert!((s / exact - 1.0).abs() < 0.02, "ε₁ = {eps1}: {s} vs LP {exact}");
    }
}

#[test]
fn sinkhorn_matches_exact_lp_in_two_dimensions() {
    // Displacements must be large against the cell size, otherwise the
    // lattice LP overstates the continuum cost.
    let g1 = TorusGeometry::standard(1).unwrap();
    let g = TorusGeometry::standard(2).unwrap();
    let n = 16;
    let (x, y) = (wrapped_gaussian(g1, n, 0.5), wrapped_gaussian(g1, n, 1.0));
    let vals: Vec<f64> = (0..n * n).map(|c| x.cells[c / n] * y.cells[c % n] * (n * n) as f64).collect();
    let a = GridDensity::from_values(g, n, &vals).unwrap();
    let u = GridDensity::uniform(g, n);
    let exact = lp_transport(&a, &u);
    let s = sinkhorn_w2(&a, &u, &opts(g.side(), n)).unwrap().divergence;
    assert!((s / exact - 1.0).abs() < 0.05, "{s} vs LP {exact}");
}

#[test]
fn kernel_norm_exponents() {
    let g = TorusGeometry::standard(4).unwrap();
    let eps = [1e-1, 1e-2, 1e-3];
    let n2 = kernel_norm_scaling(2, 2, &eps, &g).unwrap();
    assert!((n2.slope / -2.0 - 1.0).abs() < 0.1, "{n2:?}");
    let n1 = kernel_norm_scaling(1, 2, &eps, &g).unwrap();
    assert!((n1.slope / -1.0 - 1.0).abs() < 0.1, "{n1:?}");
    let n0 = kernel_norm_scaling(0, 2, &eps, &g).unwrap();
    assert!(n0.log_case);
    assert!((n0.increment_ratios[0] - 1.0).abs() < 0.15, "{n0:?}");
    assert!(matches!(kernel_norm_scaling(1, 3, &eps, &g), Err(Error::Unsupported(_))));
    assert!(kernel_norm_scaling(3, 2, &eps, &g).is_err());
    assert!(kernel_norm_scaling(1, 2, &[0.1, 0.05, 0.02], &g).is_err());
}

#[test]
fn estimator_registry() {
    let reg = CostRegistry::default();
    assert_eq!(reg.names(), vec!["dm-action", "h1", "ledoux", "sinkhorn"]);
    assert!(reg.get("exact").is_err());
    let ms = modes(2, 4.0);
    let psi: Vec<f64> = pseudo_random(ms.len(), 2).iter().map(|v| 0.5 * v).collect();
    let se = SpectralEmpirical::new(ms, psi, 100.0, 0.05).unwrap();
    let ctx = CostContext { grid_n: 16, ..Default::default() };
    let h1 = reg.get("h1").unwrap().cost(&se, &ctx).unwrap();
    assert_eq!(h1, se.h1_energy());
    let led = reg.get("ledoux").unwrap().cost(&se, &ctx).unwrap();
    assert!((led - 4.0 * h1).abs() < 1e-12);
    let dm = reg.get("dm-action").unwrap().cost(&se, &ctx).unwrap();
    let sk = reg.get("sinkhorn").unwrap().cost(&se, &ctx).unwrap();
    assert!((dm / h1 - 1.0).abs() < 0.2 && (sk / h1 - 1.0).abs() < 0.2, "dm {dm}, sinkhorn {sk}, h1 {h1}");
}

