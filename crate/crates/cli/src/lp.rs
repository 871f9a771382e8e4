//! Exact discrete optimal transport by linear programming, for small grids.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use w2lab_core::transport::GridDensity;

use crate::error::{CliError, Result};

/// Largest number of cells accepted (the plan has `cells²` variables).
pub const MAX_LP_CELLS: usize = 256;

/// `min Σ π_ij |x_i − x_j|²` over couplings of the two grid masses, with the
/// wrapped torus distance.
pub fn exact_transport_cost(a: &GridDensity, b: &GridDensity) -> Result<f64> {
    if !a.same_grid(b) {
        return Err(CliError::Lp("both densities must share one grid".into()));
    }
    let cells = a.cells.len();
    if cells > MAX_LP_CELLS {
        return Err(CliError::Lp(format!("limited to {MAX_LP_CELLS} cells, got {cells}")));
    }
    let g = a.geometry;
    let (n, d) = (a.n, g.dim());
    let h = g.side() / n as f64;
    let coords = |c: usize| {
        let mut x = [0.0; 4];
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
    // the last column balance follows from equal total mass
    for j in 0..cells - 1 {
        let col: Vec<_> = (0..cells).map(|i| (vars[i * cells + j], 1.0)).collect();
        pb.add_constraint(&col[..], ComparisonOp::Eq, b.cells[j]);
    }
    let sol = pb.solve().map_err(|e| CliError::Lp(e.to_string()))?;
    Ok(sol.objective())
}
