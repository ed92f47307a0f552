//! Uniform Cartesian grids on `[-1,1]^n` and node masks.
//!
//! The grid is the carrier for every sampled function in the crate. It is
//! deliberately small: dimension `n` in {1,2,3}, an odd per-axis resolution
//! `N` so that the origin is a node, and spacing `h = 2/(N-1)`. Node
//! coordinates are computed as `(2i - (N-1))/(N-1)` so that the endpoints
//! are exactly -1 and 1 and the center is exactly 0 in floating point.

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Uniform grid covering `[-1,1]^dim` with `resolution` nodes per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    dim: usize,
    resolution: usize,
}

impl Grid {
    /// `dim` must be 1, 2 or 3; `resolution` must be odd and at least 9.
    pub fn new(dim: usize, resolution: usize) -> Result<Grid> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim {} not in 1..=3", dim)));
        }
        if resolution < 9 || resolution % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "resolution {} must be odd and >= 9",
                resolution
            )));
        }
        Ok(Grid { dim, resolution })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Grid spacing `h = 2/(N-1)`.
    pub fn spacing(&self) -> f64 {
        2.0 / (self.resolution as f64 - 1.0)
    }

    pub fn node_count(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    /// Coordinate of the i-th node along one axis; exact at -1, 0 and 1.
    pub fn axis_coord(&self, i: usize) -> f64 {
        let m = (self.resolution - 1) as f64;
        (2.0 * i as f64 - m) / m
    }

    /// Linear index of the multi-index (unused axes must be 0).
    pub fn linear(&self, idx: [usize; MAX_DIM]) -> usize {
        let n = self.resolution;
        match self.dim {
            1 => idx[0],
            2 => idx[0] + n * idx[1],
            _ => idx[0] + n * (idx[1] + n * idx[2]),
        }
    }

    /// Multi-index of a linear node index (unused axes are 0).
    pub fn multi(&self, linear: usize) -> [usize; MAX_DIM] {
        let n = self.resolution;
        match self.dim {
            1 => [linear, 0, 0],
            2 => [linear % n, linear / n, 0],
            _ => [linear % n, (linear / n) % n, linear / (n * n)],
        }
    }

    /// Coordinates of a node (unused axes are 0).
    pub fn coord(&self, linear: usize) -> [f64; MAX_DIM] {
        let m = self.multi(linear);
        let mut x = [0.0; MAX_DIM];
        for d in 0..self.dim {
            x[d] = self.axis_coord(m[d]);
        }
        x
    }

    /// Euclidean norm of the node coordinates.
    pub fn node_norm(&self, linear: usize) -> f64 {
        let x = self.coord(linear);
        norm(&x)
    }

    /// Linear index of the center node x = 0.
    pub fn center(&self) -> usize {
        let mid = (self.resolution - 1) / 2;
        self.linear([mid, if self.dim > 1 { mid } else { 0 }, if self.dim > 2 { mid } else { 0 }])
    }

    /// Nearest node to an arbitrary point, componentwise rounding with
    /// clamping to the grid box.
    pub fn nearest_node(&self, point: [f64; MAX_DIM]) -> usize {
        let m = (self.resolution - 1) as f64;
        let mut idx = [0usize; MAX_DIM];
        for d in 0..self.dim {
            let raw = (point[d] + 1.0) * m / 2.0;
            idx[d] = raw.round().clamp(0.0, m) as usize;
        }
        self.linear(idx)
    }

    /// Distance between two nodes.
    pub fn node_dist(&self, a: usize, b: usize) -> f64 {
        let xa = self.coord(a);
        let xb = self.coord(b);
        let mut s = 0.0;
        for d in 0..self.dim {
            let t = xa[d] - xb[d];
            s += t * t;
        }
        s.sqrt()
    }

    pub fn nodes(&self) -> std::ops::Range<usize> {
        0..self.node_count()
    }

    /// True if the multi-index keeps `margin` nodes to every box face.
    pub fn has_box_margin(&self, linear: usize, margin: usize) -> bool {
        let m = self.multi(linear);
        (0..self.dim).all(|d| m[d] >= margin && m[d] + margin < self.resolution)
    }

    /// Offset between neighbouring linear indices along an axis.
    pub fn stride(&self, axis: usize) -> usize {
        self.resolution.pow(axis as u32)
    }
}

pub fn norm(x: &[f64; MAX_DIM]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

pub fn dist(x: &[f64; MAX_DIM], y: &[f64; MAX_DIM]) -> f64 {
    let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    norm(&d)
}

/// Boolean membership per node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    grid: Grid,
    bits: Vec<bool>,
}

impl Mask {
    pub fn empty(grid: Grid) -> Mask {
        Mask { grid, bits: vec![false; grid.node_count()] }
    }

    pub fn full(grid: Grid) -> Mask {
        Mask { grid, bits: vec![true; grid.node_count()] }
    }

    /// Closed ball `|x - center| <= r`. Ball masks are closed throughout the
    /// crate, matching closed-ball touching arguments.
    pub fn ball(grid: Grid, center: [f64; MAX_DIM], r: f64) -> Mask {
        let mut m = Mask::empty(grid);
        for i in grid.nodes() {
            let x = grid.coord(i);
            if dist(&x, &center) <= r {
                m.bits[i] = true;
            }
        }
        m
    }

    /// Closed unit ball around the origin: the default domain.
    pub fn unit_ball(grid: Grid) -> Mask {
        Mask::ball(grid, [0.0; MAX_DIM], 1.0)
    }

    pub fn from_predicate(grid: Grid, pred: impl Fn([f64; MAX_DIM]) -> bool) -> Mask {
        let mut m = Mask::empty(grid);
        for i in grid.nodes() {
            if pred(grid.coord(i)) {
                m.bits[i] = true;
            }
        }
        m
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn insert(&mut self, i: usize) {
        self.bits[i] = true;
    }

    pub fn remove(&mut self, i: usize) {
        self.bits[i] = false;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    /// Measure as `h^n * count` (midpoint rule, no partial-cell correction).
    pub fn measure(&self) -> f64 {
        let h = self.grid.spacing();
        self.count() as f64 * h.powi(self.grid.dim() as i32)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    fn check(&self, other: &Mask) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn union(&self, other: &Mask) -> Result<Mask> {
        self.check(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        Ok(Mask { grid: self.grid, bits })
    }

    pub fn intersect(&self, other: &Mask) -> Result<Mask> {
        self.check(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect();
        Ok(Mask { grid: self.grid, bits })
    }

    pub fn complement(&self) -> Mask {
        let bits = self.bits.iter().map(|b| !b).collect();
        Mask { grid: self.grid, bits }
    }

    pub fn minus(&self, other: &Mask) -> Result<Mask> {
        self.check(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a && !*b).collect();
        Ok(Mask { grid: self.grid, bits })
    }

    pub fn is_subset_of(&self, other: &Mask) -> Result<bool> {
        self.check(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_exact() {
        for n in [9usize, 11, 65, 513] {
            let g = Grid::new(2, n).unwrap();
            assert_eq!(g.axis_coord(0), -1.0);
            assert_eq!(g.axis_coord(n - 1), 1.0);
            assert_eq!(g.axis_coord((n - 1) / 2), 0.0);
        }
    }

    #[test]
    fn grid_rejects_bad_params() {
        assert!(Grid::new(0, 9).is_err());
        assert!(Grid::new(4, 9).is_err());
        assert!(Grid::new(2, 8).is_err());
        assert!(Grid::new(2, 7).is_err());
    }

    #[test]
    fn linear_multi_roundtrip() {
        for dim in 1..=3 {
            let g = Grid::new(dim, 9).unwrap();
            for i in g.nodes() {
                assert_eq!(g.linear(g.multi(i)), i);
            }
        }
    }

    #[test]
    fn center_is_origin() {
        for dim in 1..=3 {
            let g = Grid::new(dim, 17).unwrap();
            let c = g.coord(g.center());
            assert_eq!(c, [0.0; MAX_DIM]);
        }
    }

    #[test]
    fn mask_measure_additivity_exact_in_counts() {
        let g = Grid::new(2, 33).unwrap();
        let a = Mask::ball(g, [0.3, 0.0, 0.0], 0.4);
        let b = Mask::ball(g, [-0.2, 0.1, 0.0], 0.5);
        let u = a.union(&b).unwrap();
        let i = a.intersect(&b).unwrap();
        assert_eq!(u.count() + i.count(), a.count() + b.count());
    }

    #[test]
    fn mask_grid_mismatch_rejected() {
        let a = Mask::full(Grid::new(2, 9).unwrap());
        let b = Mask::full(Grid::new(2, 11).unwrap());
        assert!(matches!(a.union(&b), Err(Error::GridMismatch)));
    }
}
