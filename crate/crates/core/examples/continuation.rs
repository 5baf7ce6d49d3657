//! Continues a blow-up run past T_h with the truncated family and watches the
//! limit detach from the zero boundary value.
//!
//! cargo run --release --example continuation

use std::f64::consts::PI;
use std::sync::Arc;

use gbu_lab::continuation::{boundary_loss, default_k_schedule, default_tol_loss, viscosity_extend};
use gbu_lab::solver::{run, Field, SolverConfig};
use gbu_lab::{DomainSpec, Grid};

fn main() -> gbu_lab::Result<()> {
    let grid = Arc::new(Grid::new(DomainSpec::interval(1.0)?, 1.0 / 100.0)?);
    let u0 = Field::from_fn(grid.clone(), |x| 8.0 * (PI * x[0]).sin())?;
    let horizon = 2e-3;
    let cfg = SolverConfig::new(3.0, horizon);
    let c = cfg.validate()?;

    let classical = run(&u0, &cfg)?;
    println!("classical run: {:?}, T_h = {:?}", classical.stop_reason, classical.t_h);

    let ks = default_k_schedule(&u0)?;
    let ext = viscosity_extend(&u0, horizon, &ks, &cfg)?;
    let tol = default_tol_loss(&c, grid.h());
    let (loss, max_trace) = boundary_loss(&ext, tol);
    println!("levels k = {ks:.1?}");
    println!("loss tolerance {tol:.3}, loss time {loss:?}, largest trace {max_trace:.3}");
    println!(
        "gap between the two largest levels before T_h: {:.2e}",
        ext.gap_until(classical.t_h.unwrap_or(0.0))
    );
    for (t, v) in ext.boundary_trace.iter().step_by(10) {
        println!("  t = {t:.3e}  trace = {v:.4}");
    }
    Ok(())
}
