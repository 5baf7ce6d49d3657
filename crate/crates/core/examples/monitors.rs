//! Profile and gradient monitors on an exact profile field and on a numerical
//! blow-up field, side by side.
//!
//! cargo run --release --example monitors

use std::f64::consts::PI;
use std::sync::Arc;

use gbu_lab::analysis::{
    bernstein_monitor, default_window, fit_normal_profile, gbu_point, ode_dominance, sandwich_check,
};
use gbu_lab::solver::{run, Field, SolverConfig};
use gbu_lab::{Constants, DomainSpec, Grid};

fn report(label: &str, field: &Field, prev: &Field, c: &Constants) -> gbu_lab::Result<()> {
    let a = gbu_point(field)?;
    let window = default_window(field.grid());
    let fit = fit_normal_profile(field, a, window)?;
    let bern = bernstein_monitor(field, 0.25, c, 100.0)?;
    let ode = ode_dominance(field, prev, c, 0.5, 0.25)?;
    let sw = sandwich_check(field, a, c, 0.5, window)?;
    println!("{label}:");
    println!(
        "  fit on [{:.4}, {:.4}]: exponent {:.4} (beta {}), amplitude {:.4} (d_p {:.4})",
        window[0], window[1], fit.exponent, c.beta, fit.amplitude, c.d_p
    );
    println!("  bernstein C = {:.4}", bern.constant("C").unwrap_or(f64::NAN));
    println!(
        "  ODE dominance median |r + 1| = {:.4} over {} active nodes",
        ode.constant("median_dev").unwrap_or(f64::NAN),
        ode.constant("active_nodes").unwrap_or(0.0)
    );
    println!("  sandwich: {} of {} samples inside", sw.inside, sw.samples);
    Ok(())
}

fn main() -> gbu_lab::Result<()> {
    let c = Constants::new(3.0)?;
    let grid = Arc::new(Grid::new(DomainSpec::interval(1.0)?, 1.0 / 1000.0)?);

    // Symmetric profile c_p min(x, 1-x)^(1-beta), the shape the theory
    // predicts at the blow-up time near each wall.
    let exact = Field::from_fn(grid.clone(), |x| c.u(0.0, x[0].min(1.0 - x[0])).unwrap())?;
    let earlier = Field::from_fn(grid.clone(), |x| 0.99 * c.u(0.0, x[0].min(1.0 - x[0])).unwrap())?.with_time(-1e-3);
    report("exact profile", &exact.clone().with_time(0.0), &earlier, &c)?;

    let u0 = Field::from_fn(grid.clone(), |x| 8.0 * (PI * x[0]).sin())?;
    let rec = run(&u0, &SolverConfig::new(3.0, 1e-3))?;
    let last = rec.pre_cap_field.as_ref().unwrap_or(&rec.final_field);
    let prev = rec.snapshot_before_pre_cap().unwrap_or(&u0);
    report(&format!("8 sin(pi x) at t = {:.3e}", last.time()), last, prev, &c)?;
    Ok(())
}
