//! The boundary comparison functions: coefficient sign, barrier residual
//! search over eta, cutoff bounds, and the interior gradient bracket.
//!
//! cargo run --release --example barriers

use gbu_lab::barriers::{
    comparison_coefficient, lemma72_eta_search, lemma72_flux, lemma73_cross_check, BarrierParams, CutoffFit,
};
use gbu_lab::Constants;

fn main() -> gbu_lab::Result<()> {
    for p in [2.5, 3.0, 4.0, 5.0] {
        let d = Constants::new(p)?.d_p;
        println!(
            "p = {p}: coefficient at k = d_p {:.1e}, at k = 0.9 d_p {:.4}",
            comparison_coefficient(p, d, 0.0, 1.0),
            comparison_coefficient(p, 0.9 * d, 0.0, 1.0)
        );
    }

    let d = Constants::new(3.0)?.d_p;
    let base = BarrierParams::new(3.0, 0.5 * d, 0.5, 0.1, 1.0, 0.0, 0.5)?;
    let search = lemma72_eta_search(&base, 0.5, 40, 60, 60)?;
    println!("\nresidual search for p = 3 ({} tries)", search.tried.len());
    for (c1, r) in search.tried.iter().step_by(4) {
        println!("  c1 = {c1:.3e}: min residual {r:.4}");
    }
    if let Some(s) = &search.accepted {
        println!(
            "  accepted c1 = {:.3e}, eta = {:.3e}, min residual {:.4}",
            s.params.c1, s.params.eta, s.min_residual
        );
        println!(
            "  flux through the wall at t = tau/2: {:.4}",
            lemma72_flux(&s.params, 0.5)?
        );
    }

    let fit = CutoffFit::new(2, 2.0 / 3.0)?;
    let s = fit.sample(&[0.7, 0.2], 1.0)?;
    println!(
        "\ncutoff m = 2/3: C_m = {:.4}; at (0.7, 0.2): theta = {:.4}, laplacian = {:.4}, bound holds {}",
        fit.c_m, s.theta, s.laplacian, s.bound_check
    );

    let cc = lemma73_cross_check(3.0, &[0.2, 0.4, 0.6], &[0.01, 0.03, 0.1], 0.5, 0.01)?;
    println!(
        "\ngradient bracket: C_fit = {:.4}, max violation {}",
        cc.c_fit, cc.max_violation
    );
    for b in &cc.samples {
        println!(
            "  A = {} dt = {}: grad {:.4} <= C bracket {:.4}",
            b.amplitude,
            b.dt,
            b.grad,
            cc.c_fit * b.bracket
        );
    }
    Ok(())
}
