//! The stationary half-line profiles and their constants.
//!
//! cargo run --example profiles

use gbu_lab::profiles::{ode_residual, ODE_RESIDUAL_STEP};
use gbu_lab::Constants;

fn main() -> gbu_lab::Result<()> {
    for p in [2.5, 3.0, 4.0, 5.0] {
        let c = Constants::new(p)?;
        println!("p = {p}: beta = {:.6}, d_p = {:.6}, c_p = {:.6}", c.beta, c.d_p, c.c_p);
    }

    let c = Constants::new(3.0)?;
    println!("\n{:>8} {:>12} {:>12} {:>12}", "s", "U_0(s)", "U_0'(s)", "ODE resid");
    for s in [0.01, 0.1, 0.5, 1.0, 2.0] {
        let r = ode_residual(|y| c.u(0.0, y).unwrap_or(f64::NAN), s, &c, ODE_RESIDUAL_STEP)?;
        println!("{s:>8} {:>12.6} {:>12.6} {:>12.2e}", c.u(0.0, s)?, c.du(0.0, s)?, r);
    }

    // Shifting the singularity off the wall gives a finite slope there.
    for alpha in [0.0, 0.01, 0.1] {
        let slope = if alpha > 0.0 { c.du(alpha, 0.0)? } else { f64::INFINITY };
        println!(
            "alpha = {alpha}: U_alpha'(0) = {slope:.4}, U_alpha(1) = {:.4}",
            c.u(alpha, 1.0)?
        );
    }

    // Rescaling lambda^(beta-1) U_0(lambda s) leaves U_0 unchanged.
    let lambda: f64 = 0.05;
    let lhs = lambda.powf(c.beta - 1.0) * c.u(0.0, lambda * 0.7)?;
    println!("\nscale check at s = 0.7: {lhs:.15} vs {:.15}", c.u(0.0, 0.7)?);

    // Bounds on the normal derivative near a wall point of slope 40.
    for delta in [0.0, 0.001, 0.01, 0.05] {
        let (lo, hi) = c.spacetime_bounds(40.0, delta, 0.5)?;
        println!("delta = {delta}: u_nu in [{lo:.3}, {hi:.3}]");
    }
    Ok(())
}
