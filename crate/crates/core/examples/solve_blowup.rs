//! Runs u0 = A sin(pi x) on the unit interval for a small and a large
//! amplitude and reports how each run ended.
//!
//! cargo run --release --example solve_blowup [-- <amplitude> <n>]

use std::f64::consts::PI;
use std::sync::Arc;

use gbu_lab::solver::{max_gradient_norm, run, Field, SolverConfig};
use gbu_lab::{DomainSpec, Grid};

fn main() -> gbu_lab::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = args.get(1).copied().unwrap_or(200.0);
    let grid = Arc::new(Grid::new(DomainSpec::interval(1.0)?, 1.0 / n)?);
    let amplitudes = match args.first() {
        Some(&a) => vec![a],
        None => vec![0.5, 8.0],
    };

    for amp in amplitudes {
        let u0 = Field::from_fn(grid.clone(), |x| amp * (PI * x[0]).sin())?;
        let cfg = SolverConfig::new(3.0, 0.2).with_snapshots([0.0, 0.01, 0.05, 0.1]);
        let rec = run(&u0, &cfg)?;
        println!("amplitude {amp}, h = {}:", grid.h());
        println!(
            "  stop reason {:?} after {} steps at t = {:.4e}",
            rec.stop_reason,
            rec.steps,
            rec.final_field.time()
        );
        println!(
            "  gradient cap {:.3}, initial gradient {:.3}",
            rec.gradient_cap,
            max_gradient_norm(&u0)?
        );
        match rec.t_h {
            Some(t) => println!("  numerical blow-up time T_h = {t:.4e}"),
            None => println!("  sup norm {:.4} -> {:.4}", u0.max_abs(), rec.final_field.max_abs()),
        }
        // Sup norm never grows and the max of u_t stays finite up to T_h.
        let ut = rec.ut_max_series.iter().map(|s| s.1).fold(0.0, f64::max);
        println!("  max |u_t| over the run {ut:.4e}");
    }
    Ok(())
}
