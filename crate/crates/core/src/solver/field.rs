use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Grid, Point};

/// Nodal values on a grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("non-finite value at node {k}")));
        }
        Ok(Field { grid, values, time })
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<Grid>, values: Vec<f64>, time: f64) -> Self {
        Field { grid, values, time }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Field {
            grid,
            values: vec![0.0; n],
            time: 0.0,
        }
    }

    /// Samples `f` at every node (time 0).
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.coords(k))).collect();
        Field::new(grid, values, 0.0)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest boundary value in absolute terms.
    pub fn boundary_max_abs(&self) -> f64 {
        self.grid.boundary_nodes().fold(0.0, |m, k| m.max(self.values[k].abs()))
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
            time: self.time,
        }
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Largest nodewise `self - other` (positive when `self` exceeds `other`).
    pub fn max_excess_over(&self, other: &Field) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b)))
    }

    pub fn sup_distance(&self, other: &Field) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Piecewise-linear (bilinear in 2D) interpolation.
    pub fn interpolate(&self, x: Point) -> Result<f64> {
        let g = &*self.grid;
        if !g.domain().contains(x) {
            return Err(Error::OutsideDomain { point: x });
        }
        let h = g.h();
        let [nx, ny] = g.intervals();
        let locate = |c: f64, n: usize| -> (usize, f64) {
            let s = (c / h).clamp(0.0, n as f64);
            let i = (s.floor() as usize).min(n.saturating_sub(1));
            (i, s - i as f64)
        };
        let (i, fx) = locate(x[0], nx);
        if g.dims() == 1 {
            let v0 = self.values[g.index(i, 0)];
            let v1 = self.values[g.index(i + 1, 0)];
            return Ok(v0 + fx * (v1 - v0));
        }
        let (j, fy) = locate(x[1], ny);
        let v = |a, b| self.values[g.index(a, b)];
        let lo = v(i, j) + fx * (v(i + 1, j) - v(i, j));
        let hi = v(i, j + 1) + fx * (v(i + 1, j + 1) - v(i, j + 1));
        Ok(lo + fy * (hi - lo))
    }
}
