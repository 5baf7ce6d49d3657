//! Steady states of -u'' = |u'|^3 + f sin(pi x): small forcings converge, large
//! ones have no solution and the march blows up.
//!
//! cargo run --release --example elliptic

use std::f64::consts::PI;
use std::sync::Arc;

use gbu_lab::solver::{solve_elliptic, EllipticOptions, Field, SolverConfig};
use gbu_lab::{DomainSpec, Grid};

fn main() -> gbu_lab::Result<()> {
    let grid = Arc::new(Grid::new(DomainSpec::interval(1.0)?, 1.0 / 50.0)?);
    let cfg = SolverConfig::new(3.0, 1.0);
    let opts = EllipticOptions {
        tol: 1e-10,
        max_steps: 400_000,
    };
    for forcing in [0.5, 2.0, 5.0, 20.0] {
        let f = Field::from_fn(grid.clone(), |x| forcing * (PI * x[0]).sin())?;
        let sol = solve_elliptic(&f, &cfg, opts)?;
        println!(
            "forcing {forcing:>5}: converged {:<5} residual {:.2e} after {} steps, max u = {:.5}",
            sol.converged,
            sol.residual,
            sol.steps,
            sol.field.max_abs()
        );
    }
    Ok(())
}
