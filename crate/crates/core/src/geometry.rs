//! Domains with closed-form distance, boundary projection and inward normal,
//! plus the uniform node lattice the solver runs on.
//!
//! Points are `[x, y]`; one-dimensional shapes (interval, radial disk) use
//! only the first coordinate and keep `y = 0`. For the radial disk the first
//! coordinate is the radius `r`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 2];

/// Relative tolerance for membership and tie detection.
const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DomainSpec {
    /// `[0, length]`.
    Interval { length: f64 },
    /// `[0, lx] x [0, ly]`.
    Rectangle { lx: f64, ly: f64 },
    /// Disk of the given radius, radially symmetric data only: `r in [0, radius]`.
    #[serde(rename = "disk")]
    RadialDisk { radius: f64 },
}

/// Boundary face of a domain. Interval ends and the disk rim are axis 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    pub axis: u8,
    pub high: bool,
}

impl Face {
    pub const fn new(axis: u8, high: bool) -> Self {
        Face { axis, high }
    }

    /// Inward unit normal of the face.
    pub fn inward_normal(self) -> [f64; 2] {
        let sign = if self.high { -1.0 } else { 1.0 };
        let mut n = [0.0; 2];
        n[self.axis as usize] = sign;
        n
    }
}

/// Result of projecting a point onto the boundary: `x = foot + distance * normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub foot: Point,
    pub normal: [f64; 2],
    pub distance: f64,
    pub face: Face,
    /// Set when the nearest boundary point is not unique; the tie-break was applied.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayPoint {
    pub point: Point,
    pub ambiguous: bool,
}

impl DomainSpec {
    pub fn interval(length: f64) -> Result<Self> {
        check_length("length", length)?;
        Ok(DomainSpec::Interval { length })
    }

    pub fn rectangle(lx: f64, ly: f64) -> Result<Self> {
        check_length("lx", lx)?;
        check_length("ly", ly)?;
        Ok(DomainSpec::Rectangle { lx, ly })
    }

    pub fn disk(radius: f64) -> Result<Self> {
        check_length("radius", radius)?;
        Ok(DomainSpec::RadialDisk { radius })
    }

    /// Re-checks the length invariants (used after deserialization).
    pub fn validate(&self) -> Result<()> {
        match *self {
            DomainSpec::Interval { length } => check_length("length", length),
            DomainSpec::Rectangle { lx, ly } => {
                check_length("lx", lx)?;
                check_length("ly", ly)
            }
            DomainSpec::RadialDisk { radius } => check_length("radius", radius),
        }
    }

    /// Number of lattice axes (the radial disk is stored as its 1D reduction).
    pub fn grid_dims(&self) -> usize {
        match self {
            DomainSpec::Rectangle { .. } => 2,
            _ => 1,
        }
    }

    /// Spatial dimension of the underlying PDE (the disk is planar).
    pub fn space_dims(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn axis_lengths(&self) -> [f64; 2] {
        match *self {
            DomainSpec::Interval { length } => [length, 0.0],
            DomainSpec::Rectangle { lx, ly } => [lx, ly],
            DomainSpec::RadialDisk { radius } => [radius, 0.0],
        }
    }

    fn scale(&self) -> f64 {
        let [a, b] = self.axis_lengths();
        a.max(b)
    }

    /// Width of the boundary strip where the projection is unique.
    pub fn unique_projection_width(&self) -> f64 {
        match *self {
            DomainSpec::Interval { length } => length / 2.0,
            DomainSpec::Rectangle { lx, ly } => lx.min(ly) / 2.0,
            DomainSpec::RadialDisk { radius } => radius,
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        let tol = GEOM_TOL * self.scale();
        let finite = x[0].is_finite() && x[1].is_finite();
        finite
            && match *self {
                DomainSpec::Interval { length } | DomainSpec::RadialDisk { radius: length } => {
                    x[0] >= -tol && x[0] <= length + tol
                }
                DomainSpec::Rectangle { lx, ly } => {
                    x[0] >= -tol && x[0] <= lx + tol && x[1] >= -tol && x[1] <= ly + tol
                }
            }
    }

    fn check_inside(&self, x: Point) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: x })
        }
    }

    /// Distance to the boundary.
    pub fn distance(&self, x: Point) -> Result<f64> {
        self.check_inside(x)?;
        Ok(self.distance_unchecked(x))
    }

    pub(crate) fn distance_unchecked(&self, x: Point) -> f64 {
        let d = match *self {
            DomainSpec::Interval { length } => x[0].min(length - x[0]),
            DomainSpec::Rectangle { lx, ly } => x[0].min(lx - x[0]).min(x[1]).min(ly - x[1]),
            DomainSpec::RadialDisk { radius } => radius - x[0],
        };
        d.max(0.0)
    }

    /// Nearest boundary point, inward normal and distance.
    pub fn project(&self, x: Point) -> Result<Projection> {
        self.check_inside(x)?;
        let tol = GEOM_TOL * self.scale();
        let proj = match *self {
            DomainSpec::Interval { length } => {
                let (dl, dh) = (x[0].max(0.0), (length - x[0]).max(0.0));
                let high = dh < dl;
                let face = Face::new(0, high);
                let distance = if high { dh } else { dl };
                Projection {
                    foot: [if high { length } else { 0.0 }, 0.0],
                    normal: face.inward_normal(),
                    distance,
                    face,
                    ambiguous: (dl - dh).abs() <= tol,
                }
            }
            DomainSpec::Rectangle { lx, ly } => {
                let cands = [
                    (Face::new(0, false), x[0]),
                    (Face::new(0, true), lx - x[0]),
                    (Face::new(1, false), x[1]),
                    (Face::new(1, true), ly - x[1]),
                ];
                // First minimum in (axis, low-before-high) order is the tie-break.
                let mut best = cands[0];
                for &c in &cands[1..] {
                    if c.1 < best.1 - tol {
                        best = c;
                    }
                }
                let ties = cands.iter().filter(|c| (c.1 - best.1).abs() <= tol).count();
                let (face, d) = best;
                let distance = d.max(0.0);
                let mut foot = x;
                foot[face.axis as usize] = if face.high { [lx, ly][face.axis as usize] } else { 0.0 };
                Projection {
                    foot,
                    normal: face.inward_normal(),
                    distance,
                    face,
                    ambiguous: ties > 1,
                }
            }
            DomainSpec::RadialDisk { radius } => {
                let face = Face::new(0, true);
                Projection {
                    foot: [radius, 0.0],
                    normal: face.inward_normal(),
                    distance: (radius - x[0]).max(0.0),
                    face,
                    ambiguous: x[0] <= tol,
                }
            }
        };
        Ok(proj)
    }

    /// Boundary face containing `a` (tie-broken at rectangle corners).
    pub fn face_of(&self, a: Point) -> Result<(Face, bool)> {
        let p = self.project(a)?;
        if p.distance > GEOM_TOL * self.scale() {
            return Err(Error::NotOnBoundary { point: a });
        }
        Ok((p.face, p.ambiguous))
    }

    /// Point at distance `s` from the boundary point `a` along its inward normal.
    pub fn normal_ray(&self, a: Point, s: f64) -> Result<RayPoint> {
        let (face, _) = self.face_of(a)?;
        let reach = match *self {
            DomainSpec::Interval { length } => length,
            DomainSpec::Rectangle { lx, ly } => [lx, ly][face.axis as usize],
            DomainSpec::RadialDisk { radius } => radius,
        };
        let tol = GEOM_TOL * self.scale();
        if !(s >= 0.0 && s <= reach + tol) {
            return Err(invalid("s", format!("{s} outside [0, {reach}]")));
        }
        let n = face.inward_normal();
        let mut point = [a[0] + s * n[0], a[1] + s * n[1]];
        if self.grid_dims() == 1 {
            point[1] = 0.0;
        }
        let ambiguous = self.project(point)?.ambiguous;
        Ok(RayPoint { point, ambiguous })
    }
}

fn check_length(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

/// Uniform lattice over a domain. Nodes are numbered `i + j * (nx + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    domain: DomainSpec,
    h: f64,
    requested_h: f64,
    intervals: [usize; 2],
}

impl Grid {
    /// Builds the lattice, shrinking `h` until it divides every axis length.
    pub fn new(domain: DomainSpec, h: f64) -> Result<Self> {
        domain.validate()?;
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid("h", format!("must be finite and > 0, got {h}")));
        }
        let [lx, ly] = domain.axis_lengths();
        let nx0 = (lx / h - 1e-9).ceil().max(1.0) as usize;
        let grid = if domain.grid_dims() == 1 {
            Grid {
                domain,
                h: lx / nx0 as f64,
                requested_h: h,
                intervals: [nx0, 0],
            }
        } else {
            let mut found = None;
            for nx in nx0..nx0.saturating_mul(64).max(nx0 + 1) {
                let hx = lx / nx as f64;
                let ny = ly / hx;
                if (ny - ny.round()).abs() <= 1e-9 * ny.max(1.0) && ny.round() >= 1.0 {
                    found = Some((nx, ny.round() as usize, hx));
                    break;
                }
            }
            let (nx, ny, hh) =
                found.ok_or_else(|| invalid("h", format!("no common spacing <= {h} divides {lx} and {ly}")))?;
            Grid {
                domain,
                h: hh,
                requested_h: h,
                intervals: [nx, ny],
            }
        };
        Ok(grid)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// Node spacing after snapping.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn requested_h(&self) -> f64 {
        self.requested_h
    }

    pub fn dims(&self) -> usize {
        self.domain.grid_dims()
    }

    /// Intervals per axis (`[n, 0]` in 1D).
    pub fn intervals(&self) -> [usize; 2] {
        self.intervals
    }

    /// Nodes per axis.
    pub fn shape(&self) -> [usize; 2] {
        [self.intervals[0] + 1, self.intervals[1] + 1]
    }

    pub fn len(&self) -> usize {
        let [a, b] = self.shape();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * (self.intervals[0] + 1)
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        let nx1 = self.intervals[0] + 1;
        (idx % nx1, idx / nx1)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> Point {
        let (i, j) = self.ij(idx);
        [i as f64 * self.h, j as f64 * self.h]
    }

    /// Dirichlet nodes. The disk center is not a boundary node.
    pub fn is_boundary(&self, idx: usize) -> bool {
        self.face(idx).is_some()
    }

    /// Boundary face of a boundary node (corners take the axis-0 face).
    pub fn face(&self, idx: usize) -> Option<Face> {
        let (i, j) = self.ij(idx);
        let [nx, ny] = self.intervals;
        match self.domain {
            DomainSpec::Interval { .. } => match i {
                0 => Some(Face::new(0, false)),
                _ if i == nx => Some(Face::new(0, true)),
                _ => None,
            },
            DomainSpec::RadialDisk { .. } => (i == nx).then_some(Face::new(0, true)),
            DomainSpec::Rectangle { .. } => {
                if i == 0 {
                    Some(Face::new(0, false))
                } else if i == nx {
                    Some(Face::new(0, true))
                } else if j == 0 {
                    Some(Face::new(1, false))
                } else if j == ny {
                    Some(Face::new(1, true))
                } else {
                    None
                }
            }
        }
    }

    /// Distance of a node to the boundary.
    pub fn node_distance(&self, idx: usize) -> f64 {
        self.domain.distance_unchecked(self.coords(idx))
    }

    /// Projection data of a node (always inside the closed domain).
    pub fn node_projection(&self, idx: usize) -> Projection {
        self.domain
            .project(self.coords(idx))
            .expect("grid nodes lie in the closed domain")
    }

    /// Boundary nodes and nodes one spacing away from the boundary.
    pub fn is_boundary_adjacent(&self, idx: usize) -> bool {
        self.node_distance(idx) <= self.h * (1.0 + 1e-9)
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| !self.is_boundary(k))
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.is_boundary(k))
    }

    /// Nearest node to a point of the closed domain.
    pub fn nearest_node(&self, x: Point) -> usize {
        let [nx, ny] = self.intervals;
        let i = ((x[0] / self.h).round().max(0.0) as usize).min(nx);
        let j = if self.dims() == 2 {
            ((x[1] / self.h).round().max(0.0) as usize).min(ny)
        } else {
            0
        };
        self.index(i, j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        let d = DomainSpec::interval(1.0).unwrap();
        assert!((d.distance([0.3, 0.0]).unwrap() - 0.3).abs() < 1e-15);
        let r = DomainSpec::rectangle(1.0, 1.0).unwrap();
        assert!((r.distance([0.5, 0.2]).unwrap() - 0.2).abs() < 1e-15);
        let c = DomainSpec::disk(1.0).unwrap();
        assert!((c.distance([0.9, 0.0]).unwrap() - 0.1).abs() < 1e-15);
        assert!(matches!(d.distance([1.5, 0.0]), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn projection_examples() {
        let r = DomainSpec::rectangle(1.0, 1.0).unwrap();
        let p = r.project([0.5, 0.2]).unwrap();
        assert_eq!(p.foot, [0.5, 0.0]);
        assert_eq!(p.normal, [0.0, 1.0]);
        assert!((p.distance - 0.2).abs() < 1e-15);
        assert!(!p.ambiguous);

        let i = DomainSpec::interval(1.0).unwrap();
        let p = i.project([0.7, 0.0]).unwrap();
        assert_eq!(p.foot, [1.0, 0.0]);
        assert_eq!(p.normal, [-1.0, 0.0]);
        assert!((p.distance - 0.3).abs() < 1e-15);

        let c = DomainSpec::disk(1.0).unwrap();
        let p = c.project([0.4, 0.0]).unwrap();
        assert_eq!(p.foot, [1.0, 0.0]);
        assert_eq!(p.normal, [-1.0, 0.0]);
        assert!((p.distance - 0.6).abs() < 1e-15);
    }

    #[test]
    fn corner_bisector_ties_to_lower_axis() {
        let r = DomainSpec::rectangle(1.0, 1.0).unwrap();
        let p = r.project([0.2, 0.2]).unwrap();
        assert!(p.ambiguous);
        assert_eq!(p.face, Face::new(0, false));
        let mid = DomainSpec::interval(1.0).unwrap().project([0.5, 0.0]).unwrap();
        assert!(mid.ambiguous);
        assert_eq!(mid.face, Face::new(0, false));
        assert!(DomainSpec::disk(1.0).unwrap().project([0.0, 0.0]).unwrap().ambiguous);
    }

    #[test]
    fn normal_ray_examples() {
        let i = DomainSpec::interval(1.0).unwrap();
        assert_eq!(i.normal_ray([0.0, 0.0], 0.25).unwrap().point, [0.25, 0.0]);
        let r = DomainSpec::rectangle(2.0, 1.0).unwrap();
        assert_eq!(r.normal_ray([1.0, 0.0], 0.5).unwrap().point, [1.0, 0.5]);
        let c = DomainSpec::disk(1.0).unwrap();
        let rp = c.normal_ray([1.0, 0.0], 1.0).unwrap();
        assert_eq!(rp.point, [0.0, 0.0]);
        assert!(rp.ambiguous);
        assert!(i.normal_ray([0.0, 0.0], 1.5).is_err());
        assert!(i.normal_ray([0.3, 0.0], 0.1).is_err());
    }

    #[test]
    fn grid_snaps_spacing() {
        let g = Grid::new(DomainSpec::interval(1.0).unwrap(), 0.3).unwrap();
        assert_eq!(g.intervals(), [4, 0]);
        assert!((g.h() - 0.25).abs() < 1e-15);
        let g = Grid::new(DomainSpec::rectangle(2.0, 1.0).unwrap(), 0.3).unwrap();
        assert_eq!(g.intervals(), [8, 4]);
        assert!(g.is_boundary(g.index(0, 2)));
        assert!(!g.is_boundary(g.index(3, 2)));
        assert_eq!(g.face(g.index(3, 4)), Some(Face::new(1, true)));
        let d = Grid::new(DomainSpec::disk(1.0).unwrap(), 0.1).unwrap();
        assert!(!d.is_boundary(0));
        assert!(d.is_boundary(10));
    }

    proptest! {
        #[test]
        fn projection_round_trip(x in 0.0f64..2.0, y in 0.0f64..1.0) {
            let r = DomainSpec::rectangle(2.0, 1.0).unwrap();
            let p = r.project([x, y]).unwrap();
            prop_assume!(!p.ambiguous);
            let back = [p.foot[0] + p.distance * p.normal[0], p.foot[1] + p.distance * p.normal[1]];
            prop_assert!((back[0] - x).hypot(back[1] - y) <= 1e-12);
            prop_assert!(((p.normal[0].hypot(p.normal[1])) - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn distance_is_one_lipschitz(a in 0.0f64..2.0, b in 0.0f64..1.0, c in 0.0f64..2.0, d in 0.0f64..1.0) {
            let r = DomainSpec::rectangle(2.0, 1.0).unwrap();
            let lhs = (r.distance([a, b]).unwrap() - r.distance([c, d]).unwrap()).abs();
            prop_assert!(lhs <= (a - c).hypot(b - d) + 1e-12);
        }
    }
}
