//! Nodal derivative stencils: central in the interior, second-order one-sided
//! at boundary nodes, symmetric at the disk center.

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Grid};

use super::Field;

/// Minimum nodes per axis for the one-sided stencils.
pub const MIN_NODES: usize = 4;

/// First-derivative weights at position `i` of an axis with `n` intervals,
/// already divided by `h`.
#[inline]
fn d1_weights(i: usize, n: usize, h: f64) -> [(isize, f64); 3] {
    let inv = 1.0 / (2.0 * h);
    if i == 0 {
        [(0, -3.0 * inv), (1, 4.0 * inv), (2, -inv)]
    } else if i == n {
        [(0, 3.0 * inv), (-1, -4.0 * inv), (-2, inv)]
    } else {
        [(-1, -inv), (1, inv), (0, 0.0)]
    }
}

/// Second-derivative weights, divided by `h^2`.
#[inline]
fn d2_weights(i: usize, n: usize, h: f64) -> [(isize, f64); 4] {
    let inv = 1.0 / (h * h);
    if i == 0 {
        [(0, 2.0 * inv), (1, -5.0 * inv), (2, 4.0 * inv), (3, -inv)]
    } else if i == n {
        [(0, 2.0 * inv), (-1, -5.0 * inv), (-2, 4.0 * inv), (-3, -inv)]
    } else {
        [(-1, inv), (0, -2.0 * inv), (1, inv), (0, 0.0)]
    }
}

fn check_resolution(grid: &Grid) -> Result<()> {
    let shape = grid.shape();
    for (axis, &nodes) in shape.iter().enumerate().take(grid.dims()) {
        if nodes < MIN_NODES {
            return Err(Error::GridTooCoarse {
                axis,
                nodes,
                min: MIN_NODES,
            });
        }
    }
    Ok(())
}

#[inline]
fn is_radial(grid: &Grid) -> bool {
    matches!(grid.domain(), DomainSpec::RadialDisk { .. })
}

/// Gradient at one node (`[u_x, u_y]`, or `[u_r, 0]` on the disk).
#[inline]
pub(crate) fn node_gradient(grid: &Grid, u: &[f64], idx: usize) -> [f64; 2] {
    let h = grid.h();
    let [nx, ny] = grid.intervals();
    let (i, j) = grid.ij(idx);
    if is_radial(grid) && i == 0 {
        return [0.0, 0.0];
    }
    let mut g = [0.0; 2];
    for (o, w) in d1_weights(i, nx, h) {
        g[0] += w * u[grid.index((i as isize + o) as usize, j)];
    }
    if grid.dims() == 2 {
        for (o, w) in d1_weights(j, ny, h) {
            g[1] += w * u[grid.index(i, (j as isize + o) as usize)];
        }
    }
    g
}

/// Hessian at one node.
pub(crate) fn node_hessian(grid: &Grid, u: &[f64], idx: usize) -> [[f64; 2]; 2] {
    let h = grid.h();
    let [nx, ny] = grid.intervals();
    let (i, j) = grid.ij(idx);
    let mut hs = [[0.0; 2]; 2];
    if is_radial(grid) && i == 0 {
        let v = 2.0 * (u[1] - u[0]) / (h * h);
        hs[0][0] = v;
        return hs;
    }
    for (o, w) in d2_weights(i, nx, h) {
        hs[0][0] += w * u[grid.index((i as isize + o) as usize, j)];
    }
    if grid.dims() == 2 {
        for (o, w) in d2_weights(j, ny, h) {
            hs[1][1] += w * u[grid.index(i, (j as isize + o) as usize)];
        }
        let mut xy = 0.0;
        for (ox, wx) in d1_weights(i, nx, h) {
            for (oy, wy) in d1_weights(j, ny, h) {
                xy += wx * wy * u[grid.index((i as isize + ox) as usize, (j as isize + oy) as usize)];
            }
        }
        hs[0][1] = xy;
        hs[1][0] = xy;
    }
    hs
}

/// Nodal gradient of a field.
pub fn gradient(field: &Field) -> Result<Vec<[f64; 2]>> {
    let grid = field.grid();
    check_resolution(grid)?;
    let u = field.values();
    Ok((0..grid.len()).map(|k| node_gradient(grid, u, k)).collect())
}

/// Nodal Hessian of a field.
pub fn hessian(field: &Field) -> Result<Vec<[[f64; 2]; 2]>> {
    let grid = field.grid();
    check_resolution(grid)?;
    let u = field.values();
    Ok((0..grid.len()).map(|k| node_hessian(grid, u, k)).collect())
}

/// `max |grad u|` over all nodes.
pub fn max_gradient_norm(field: &Field) -> Result<f64> {
    check_resolution(field.grid())?;
    Ok(grad_norm_max(field.grid(), field.values(), 0..field.grid().len()))
}

pub(crate) fn grad_norm_max(grid: &Grid, u: &[f64], nodes: impl Iterator<Item = usize>) -> f64 {
    nodes.fold(0.0, |m, k| {
        let g = node_gradient(grid, u, k);
        m.max(g[0].hypot(g[1]))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::profiles::Constants;
    use std::sync::Arc;

    fn interval(h: f64) -> Arc<Grid> {
        Arc::new(Grid::new(DomainSpec::interval(1.0).unwrap(), h).unwrap())
    }

    #[test]
    fn affine_gradient_is_exact() {
        let f = Field::from_fn(interval(0.1), |x| x[0]).unwrap();
        for g in gradient(&f).unwrap() {
            assert!((g[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_interior_gradient_is_exact() {
        let grid = interval(0.1);
        let f = Field::from_fn(grid.clone(), |x| x[0] * x[0]).unwrap();
        let g = gradient(&f).unwrap();
        for (k, gk) in g.iter().enumerate().take(grid.len() - 1).skip(1) {
            assert!((gk[0] - 2.0 * grid.coords(k)[0]).abs() < 1e-12);
        }
        // The three-point one-sided stencils are exact on quadratics as well.
        assert!(g[0][0].abs() < 1e-12);
        assert!((g[10][0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn profile_gradient_matches_oracle() {
        let c = Constants::new(3.0).unwrap();
        let f = Field::from_fn(interval(1e-3), |x| c.u(1.0, x[0]).unwrap()).unwrap();
        let g = gradient(&f).unwrap();
        let worst = g
            .iter()
            .enumerate()
            .map(|(k, g)| (g[0] - c.du(1.0, k as f64 * 1e-3).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-5, "{worst}");
    }

    #[test]
    fn coarse_grid_rejected() {
        let f = Field::zeros(interval(0.5));
        assert!(matches!(gradient(&f), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn mixed_derivative_of_bilinear() {
        let grid = Arc::new(Grid::new(DomainSpec::rectangle(1.0, 1.0).unwrap(), 0.1).unwrap());
        let f = Field::from_fn(grid.clone(), |x| x[0] * x[1]).unwrap();
        let hs = hessian(&f).unwrap();
        for (k, hk) in hs.iter().enumerate() {
            assert!((hk[0][1] - 1.0).abs() < 1e-10, "node {k}");
            assert!(hk[0][0].abs() < 1e-9 && hk[1][1].abs() < 1e-9);
        }
    }

    #[test]
    fn radial_center_is_symmetric() {
        let grid = Arc::new(Grid::new(DomainSpec::disk(1.0).unwrap(), 0.1).unwrap());
        let f = Field::from_fn(grid.clone(), |x| 1.0 - x[0] * x[0]).unwrap();
        let g = gradient(&f).unwrap();
        assert_eq!(g[0], [0.0, 0.0]);
        let hs = hessian(&f).unwrap();
        assert!((hs[0][0][0] + 2.0).abs() < 1e-10);
    }
}
