//! Brackets the threshold amplitude lambda* of sin(pi x) for p = 3.
//!
//! cargo run --release --example threshold [-- <n>]

use std::f64::consts::PI;
use std::sync::Arc;

use gbu_lab::continuation::{threshold_bisect, ClassifyOptions};
use gbu_lab::solver::{Field, SolverConfig};
use gbu_lab::{DomainSpec, Grid};

fn main() -> gbu_lab::Result<()> {
    let n: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100.0);
    let grid = Arc::new(Grid::new(DomainSpec::interval(1.0)?, 1.0 / n)?);
    let phi = Field::from_fn(grid, |x| (PI * x[0]).sin())?;
    let horizon = 0.3;
    let cfg = SolverConfig::new(3.0, horizon);
    let res = threshold_bisect(&phi, horizon, 0.01, &cfg, ClassifyOptions::default())?;
    for p in &res.classifications {
        println!(
            "lambda = {:.5}: {:?}, T_h {:?}, loss {:?}, decay {:?}",
            p.lambda, p.verdict, p.t_h, p.loss_time, p.decay_ratio
        );
    }
    println!(
        "lambda* in [{:.5}, {:.5}], monotone table: {}",
        res.lambda_lo,
        res.lambda_hi,
        res.is_monotone()
    );
    Ok(())
}
