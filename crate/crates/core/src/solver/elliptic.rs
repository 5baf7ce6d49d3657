use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Field, SolverConfig, Stepper};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticOptions {
    /// Target for `max |Δu + |∇u|^p + f|` over interior nodes.
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for EllipticOptions {
    fn default() -> Self {
        EllipticOptions {
            tol: 1e-10,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EllipticSolution {
    pub field: Field,
    /// Discrete residual at the returned field.
    pub residual: f64,
    pub converged: bool,
    pub steps: usize,
    pub pseudo_time: f64,
}

/// Solves `-Δu = |∇u|^p + f` with the configured Dirichlet data by marching
/// `u_t = Δu + |∇u|^p + f` from zero to steady state.
///
/// A non-converged result (budget exhausted or blow-up of the marching) is
/// returned with `converged = false`; large forcings need not admit a solution.
pub fn solve_elliptic(f: &Field, config: &SolverConfig, opts: EllipticOptions) -> Result<EllipticSolution> {
    config.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let grid = f.grid().clone();
    let fv: Arc<Vec<f64>> = Arc::new(f.values().to_vec());
    let g2 = grid.clone();
    let mut cfg = config.clone();
    cfg.source = Some(Arc::new(move |x, _t| fv[g2.nearest_node(x)]));
    cfg.dt_max = config.dt_max;

    let mut u = vec![0.0; grid.len()];
    for k in grid.boundary_nodes() {
        u[k] = cfg.boundary.value(&grid, k, 0.0);
    }
    let mut st = Stepper::new(&grid, &cfg);
    let mut t = 0.0;
    let mut steps = 0;
    let mut last_good = u.clone();
    loop {
        let dt = st.prepare(&u, t);
        let residual = st.k1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !residual.is_finite() {
            return finish(grid, last_good, f64::INFINITY, false, steps, t);
        }
        if residual <= opts.tol {
            return finish(grid, u, residual, true, steps, t);
        }
        if steps >= opts.max_steps {
            return finish(grid, u, residual, false, steps, t);
        }
        last_good.copy_from_slice(&u);
        if !st.advance(&mut u, t, dt) {
            return finish(grid, last_good, f64::INFINITY, false, steps, t);
        }
        t += dt;
        steps += 1;
    }
}

fn finish(
    grid: Arc<crate::geometry::Grid>,
    u: Vec<f64>,
    residual: f64,
    converged: bool,
    steps: usize,
    t: f64,
) -> Result<EllipticSolution> {
    Ok(EllipticSolution {
        field: Field::from_parts_unchecked(grid, u, 0.0),
        residual,
        converged,
        steps,
        pseudo_time: t,
    })
}
