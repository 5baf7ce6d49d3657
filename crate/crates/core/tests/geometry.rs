use gbu_lab::{DomainSpec, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POINTS: usize = 10_000;

fn domains() -> Vec<DomainSpec> {
    vec![
        DomainSpec::interval(1.0).unwrap(),
        DomainSpec::interval(4.0).unwrap(),
        DomainSpec::rectangle(2.0, 1.0).unwrap(),
        DomainSpec::rectangle(0.5, 3.0).unwrap(),
        DomainSpec::disk(1.5).unwrap(),
    ]
}

fn random_point(rng: &mut ChaCha8Rng, d: &DomainSpec) -> [f64; 2] {
    let [lx, ly] = d.axis_lengths();
    let x = rng.gen_range(0.0..lx);
    let y = if d.grid_dims() == 2 {
        rng.gen_range(0.0..ly)
    } else {
        0.0
    };
    [x, y]
}

#[test]
fn projection_round_trip_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for d in domains() {
        let mut checked = 0;
        for _ in 0..POINTS {
            let x = random_point(&mut rng, &d);
            let p = d.project(x).unwrap();
            if p.ambiguous {
                continue;
            }
            checked += 1;
            let back = [
                p.foot[0] + p.distance * p.normal[0],
                p.foot[1] + p.distance * p.normal[1],
            ];
            let err = (back[0] - x[0]).hypot(back[1] - x[1]);
            assert!(err <= 1e-12, "{d:?} at {x:?}: round-trip error {err:e}");
            assert!((p.normal[0].hypot(p.normal[1]) - 1.0).abs() <= 1e-14);
            assert!((p.distance - d.distance(x).unwrap()).abs() <= 1e-15);
        }
        assert!(checked > POINTS * 9 / 10, "{d:?}: only {checked} unambiguous points");
    }
}

#[test]
fn distance_is_one_lipschitz_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in domains() {
        for _ in 0..POINTS {
            let (a, b) = (random_point(&mut rng, &d), random_point(&mut rng, &d));
            let lhs = (d.distance(a).unwrap() - d.distance(b).unwrap()).abs();
            assert!(lhs <= (a[0] - b[0]).hypot(a[1] - b[1]) + 1e-12);
        }
    }
}

#[test]
fn normal_rays_stay_on_their_normal() {
    let d = DomainSpec::rectangle(2.0, 1.0).unwrap();
    // Midpoint of the long lower face: the ray meets the centre line at s = 1/2.
    for s in [0.0, 0.1, 0.25, 0.49] {
        let r = d.normal_ray([1.0, 0.0], s).unwrap();
        assert_eq!(r.point, [1.0, s]);
        assert!(!r.ambiguous);
        assert!((d.distance(r.point).unwrap() - s).abs() < 1e-15);
    }
    assert!(d.normal_ray([1.0, 0.0], 0.5).unwrap().ambiguous);
    assert!(d.normal_ray([1.0, 0.5], 0.1).is_err());
}

#[test]
fn grid_nodes_agree_with_the_domain() {
    for d in domains() {
        let grid = Grid::new(d, 0.05).unwrap();
        for k in 0..grid.len() {
            let x = grid.coords(k);
            assert!(d.contains(x));
            assert_eq!(grid.nearest_node(x), k);
            let on_wall = d.distance(x).unwrap() <= 1e-12;
            // The disk centre is a symmetry point, not a boundary node.
            assert_eq!(grid.is_boundary(k), on_wall, "{d:?} node {k}");
        }
    }
}

#[test]
fn points_outside_are_rejected() {
    let d = DomainSpec::rectangle(2.0, 1.0).unwrap();
    assert!(d.project([2.5, 0.5]).is_err());
    assert!(d.distance([f64::NAN, 0.5]).is_err());
    assert!(DomainSpec::interval(-1.0).is_err());
    assert!(DomainSpec::disk(0.0).is_err());
}
