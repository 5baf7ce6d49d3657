//! Distance, projection and normal rays on the three supported domains, and
//! the node classification of a grid.
//!
//! cargo run --example geometry

use gbu_lab::{DomainSpec, Grid};

fn main() -> gbu_lab::Result<()> {
    let rect = DomainSpec::rectangle(2.0, 1.0)?;
    for x in [[0.3, 0.2], [1.0, 0.5], [1.9, 0.9], [0.5, 0.5]] {
        let p = rect.project(x)?;
        println!(
            "x = {x:?}: delta = {:.3}, foot = {:?}, inward normal = {:?}{}",
            p.distance,
            p.foot,
            p.normal,
            if p.ambiguous { " (tie broken)" } else { "" }
        );
    }

    // Walking in along the normal from the middle of the long lower face.
    for s in [0.0, 0.1, 0.3, 0.5] {
        let r = rect.normal_ray([1.0, 0.0], s)?;
        println!("s = {s}: {:?} ambiguous = {}", r.point, r.ambiguous);
    }

    let disk = DomainSpec::disk(1.0)?;
    println!("disk: delta(r = 0.25) = {}", disk.distance([0.25, 0.0])?);

    let grid = Grid::new(rect, 0.25)?;
    let walls = grid.boundary_nodes().count();
    let near = grid.interior_nodes().filter(|&k| grid.is_boundary_adjacent(k)).count();
    println!(
        "grid {:?} with h = {}: {} nodes, {walls} on the wall, {near} one spacing in",
        grid.shape(),
        grid.h(),
        grid.len()
    );
    Ok(())
}
