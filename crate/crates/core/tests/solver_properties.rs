//! Structural properties of the discrete scheme over randomized instances.

mod common;

use common::*;
use gbu_lab::solver::{run, truncated_power, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn maximum_principle() {
    let excess = maximum_principle_excess(1, INSTANCES);
    assert!(excess <= 1e-10, "sup norm grew by {excess:e}");
}

#[test]
fn comparison_of_ordered_pairs() {
    let excess = comparison_excess(2, INSTANCES);
    assert!(excess <= 1e-8, "ordered pair crossed by {excess:e}");
}

#[test]
fn nonnegative_data_stay_nonnegative() {
    let neg = negativity(3, INSTANCES);
    assert!(neg <= 1e-10, "minimum reached {:e}", -neg);
}

#[test]
fn truncation_levels_are_ordered() {
    let excess = truncation_excess(4, INSTANCES);
    assert!(excess <= 1e-8, "levels crossed by {excess:e}");
}

#[test]
fn truncated_power_lies_below_the_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let p = rng.gen_range(2.01..6.0);
        let k = rng.gen_range(0.1..50.0);
        let g = rng.gen_range(-100.0..100.0);
        let f = truncated_power(g, p, k);
        let full = g.abs().powf(p);
        if g.abs() <= k {
            assert_eq!(f, full);
        } else {
            assert!(f < full, "F_k({g}) = {f} not below {full}");
        }
        // Nondecreasing in k.
        assert!(truncated_power(g, p, k * 1.5) >= f);
    }
}

#[test]
fn runs_are_bit_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let grid = interval(50);
    let u0 = random_nonnegative(&mut rng, &grid, 8.0);
    let cfg = SolverConfig::new(3.0, 0.02).with_snapshots([0.0, 1e-4, 1e-3, 0.01]);
    let (a, b) = (run(&u0, &cfg).unwrap(), run(&u0, &cfg).unwrap());
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(a.steps, b.steps);
    assert_eq!(a.stop_reason, b.stop_reason);
    assert_eq!(a.t_h.map(f64::to_bits), b.t_h.map(f64::to_bits));
    assert_eq!(bits(a.final_field.values()), bits(b.final_field.values()));
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        assert_eq!(bits(x.values()), bits(y.values()));
    }
    let flat = |s: &[(f64, f64)]| {
        s.iter()
            .flat_map(|&(t, g)| [t.to_bits(), g.to_bits()])
            .collect::<Vec<_>>()
    };
    assert_eq!(flat(&a.grad_max_series), flat(&b.grad_max_series));
    assert_eq!(flat(&a.ut_max_series), flat(&b.ut_max_series));
}

#[test]
fn parabolic_manufactured_solution_is_second_order() {
    let e: Vec<f64> = [20, 40, 80].iter().map(|&n| parabolic_mms_error(n)).collect();
    for w in e.windows(2) {
        assert!((3.5..=4.5).contains(&(w[0] / w[1])), "errors {e:?}");
    }
}

#[test]
fn elliptic_manufactured_solution_is_second_order() {
    let (e1, e2) = (elliptic_mms_error(20), elliptic_mms_error(40));
    assert!((3.5..=4.5).contains(&(e1 / e2)), "errors {e1:e} {e2:e}");
}
