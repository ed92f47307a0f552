//! Sampled functions on a grid plus the discrete calculus used everywhere:
//! central second differences, gradients, oscillation and superlevel
//! measures.

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, MAX_DIM};
use crate::sym::SymMatrix;

/// A real function sampled at grid nodes, with a domain mask
/// (default: the closed unit ball).
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    domain: Mask,
}

impl GridFunction {
    /// Sample a closure at every node; domain defaults to the closed unit ball.
    pub fn sample(grid: Grid, f: impl Fn([f64; MAX_DIM]) -> f64) -> GridFunction {
        let values = grid.nodes().map(|i| f(grid.coord(i))).collect();
        GridFunction { grid, values, domain: Mask::unit_ball(grid) }
    }

    /// Sample with an explicit domain mask.
    pub fn sample_on(grid: Grid, domain: Mask, f: impl Fn([f64; MAX_DIM]) -> f64) -> GridFunction {
        assert_eq!(domain.grid(), grid);
        let values = grid.nodes().map(|i| f(grid.coord(i))).collect();
        GridFunction { grid, values, domain }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>, domain: Option<Mask>) -> Result<GridFunction> {
        if values.len() != grid.node_count() {
            return Err(Error::Format(format!(
                "value count {} does not match grid node count {}",
                values.len(),
                grid.node_count()
            )));
        }
        let domain = domain.unwrap_or_else(|| Mask::unit_ball(grid));
        if domain.grid() != grid {
            return Err(Error::GridMismatch);
        }
        Ok(GridFunction { grid, values, domain })
    }

    pub fn constant(grid: Grid, c: f64) -> GridFunction {
        GridFunction::sample(grid, |_| c)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn domain(&self) -> &Mask {
        &self.domain
    }

    pub fn set_domain(&mut self, domain: Mask) {
        assert_eq!(domain.grid(), self.grid);
        self.domain = domain;
    }

    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Checks that the two functions live on the same grid.
    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Sup norm over the domain mask.
    pub fn sup_norm(&self) -> f64 {
        self.domain.iter().map(|i| self.values[i].abs()).fold(0.0, f64::max)
    }

    pub fn min_over(&self, m: &Mask) -> Result<f64> {
        let mut best = f64::INFINITY;
        for i in m.iter() {
            if self.domain.contains(i) {
                best = best.min(self.values[i]);
            }
        }
        if best.is_infinite() {
            return Err(Error::EmptyRegion("min over mask".into()));
        }
        Ok(best)
    }

    pub fn max_over(&self, m: &Mask) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for i in m.iter() {
            if self.domain.contains(i) {
                best = best.max(self.values[i]);
            }
        }
        if best.is_infinite() {
            return Err(Error::EmptyRegion("max over mask".into()));
        }
        Ok(best)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
            domain: self.domain.clone(),
        }
    }

    pub fn zip(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        self.same_grid(other)?;
        let values =
            self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        Ok(GridFunction { grid: self.grid, values, domain: self.domain.clone() })
    }

    /// Multilinear interpolation at an arbitrary point of the box.
    pub fn interpolate(&self, point: [f64; MAX_DIM]) -> f64 {
        let g = self.grid;
        let n = g.resolution();
        let m = (n - 1) as f64;
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        for d in 0..g.dim() {
            let raw = ((point[d] + 1.0) * m / 2.0).clamp(0.0, m);
            let lo = raw.floor().min(m - 1.0).max(0.0);
            base[d] = lo as usize;
            frac[d] = raw - lo;
        }
        let mut acc = 0.0;
        let corners = 1usize << g.dim();
        for c in 0..corners {
            let mut w = 1.0;
            let mut idx = base;
            for d in 0..g.dim() {
                if c >> d & 1 == 1 {
                    idx[d] += 1;
                    w *= frac[d];
                } else {
                    w *= 1.0 - frac[d];
                }
            }
            acc += w * self.values[g.linear(idx)];
        }
        acc
    }
}

/// Central-difference gradient; node needs a 1-node box margin.
pub fn gradient_at(u: &GridFunction, i: usize) -> Result<[f64; MAX_DIM]> {
    let g = u.grid();
    if !g.has_box_margin(i, 1) {
        return Err(Error::StencilOutOfRange { node: i, margin: 1 });
    }
    let h = g.spacing();
    let mut grad = [0.0; MAX_DIM];
    for d in 0..g.dim() {
        let s = g.stride(d);
        grad[d] = (u.values[i + s] - u.values[i - s]) / (2.0 * h);
    }
    Ok(grad)
}

/// Discrete Hessian by central second differences: diagonal three-point,
/// off-diagonal four-point cross. Exact on quadratics. The node must keep a
/// 2-node margin to the grid box in every axis.
pub fn hessian_at(u: &GridFunction, i: usize) -> Result<SymMatrix> {
    let g = u.grid();
    if !g.has_box_margin(i, 2) {
        return Err(Error::StencilOutOfRange { node: i, margin: 2 });
    }
    let h = g.spacing();
    let h2 = h * h;
    let mut m = SymMatrix::zero(g.dim());
    for a in 0..g.dim() {
        let sa = g.stride(a);
        let dd = (u.values[i + sa] - 2.0 * u.values[i] + u.values[i - sa]) / h2;
        m.set(a, a, dd);
        for b in (a + 1)..g.dim() {
            let sb = g.stride(b);
            let cross = (u.values[i + sa + sb] - u.values[i + sa - sb] - u.values[i - sa + sb]
                + u.values[i - sa - sb])
                / (4.0 * h2);
            m.set(a, b, cross);
        }
    }
    Ok(m)
}

/// max - min of `u` over a mask; errors on an empty region.
pub fn oscillation(u: &GridFunction, m: &Mask) -> Result<f64> {
    let lo = u.min_over(m)?;
    let hi = u.max_over(m)?;
    Ok(hi - lo)
}

/// `h^n * #{ i in m : u(i) > t }`, restricted to the domain of `u`.
pub fn distribution_measure(u: &GridFunction, m: &Mask, t: f64) -> f64 {
    let g = u.grid();
    let h = g.spacing();
    let count = m
        .iter()
        .filter(|i| u.domain().contains(*i) && u.at(*i) > t)
        .count();
    count as f64 * h.powi(g.dim() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hessian_exact_on_axis_quadratic() {
        let g = Grid::new(2, 33).unwrap();
        let u = GridFunction::sample(g, |x| x[0] * x[0]);
        for i in g.nodes() {
            if !g.has_box_margin(i, 2) {
                continue;
            }
            let m = hessian_at(&u, i).unwrap();
            assert_abs_diff_eq!(m.get(0, 0), 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m.get(1, 1), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m.get(0, 1), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn hessian_exact_on_cross_term() {
        let g = Grid::new(2, 17).unwrap();
        let u = GridFunction::sample(g, |x| x[0] * x[1]);
        let i = g.center();
        let m = hessian_at(&u, i).unwrap();
        assert_abs_diff_eq!(m.get(0, 1), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.get(0, 0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.get(1, 1), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hessian_quartic_taylor_remainder() {
        // u = x1^4 at x1 = 0.5 with h = 0.01: entry (1,1) = 3.0 +- 1e-3.
        // Central second difference error is h^2 * sup|u''''| / 12 = h^2.
        let g = Grid::new(1, 201).unwrap(); // h = 0.01
        let u = GridFunction::sample(g, |x| x[0].powi(4));
        // x = 0.5 -> index with (2i - 200)/200 = 0.5 -> i = 150
        let i = 150;
        assert_eq!(g.axis_coord(i), 0.5);
        let m = hessian_at(&u, i).unwrap();
        let exact = 12.0 * 0.5f64.powi(2); // 3.0
        assert!((m.get(0, 0) - exact).abs() <= 1e-3, "got {}", m.get(0, 0));
    }

    #[test]
    fn hessian_margin_enforced() {
        let g = Grid::new(2, 9).unwrap();
        let u = GridFunction::sample(g, |x| x[0]);
        let edge = g.linear([1, 4, 0]);
        assert!(matches!(
            hessian_at(&u, edge),
            Err(Error::StencilOutOfRange { .. })
        ));
    }

    #[test]
    fn oscillation_examples() {
        let g = Grid::new(2, 65).unwrap();
        let c = GridFunction::constant(g, 4.2);
        let ball = Mask::ball(g, [0.0; MAX_DIM], 0.5);
        assert_eq!(oscillation(&c, &ball).unwrap(), 0.0);

        // u = x1 over B_r: osc = 2r up to 2h
        let u = GridFunction::sample(g, |x| x[0]);
        for r in [0.25, 0.5, 0.75] {
            let m = Mask::ball(g, [0.0; MAX_DIM], r);
            let osc = oscillation(&u, &m).unwrap();
            assert!((osc - 2.0 * r).abs() <= 2.0 * g.spacing());
        }

        // u = x1 x2 over B_r in n = 2: extrema +-r^2/2 at the diagonals
        let v = GridFunction::sample(g, |x| x[0] * x[1]);
        let r = 0.5;
        let m = Mask::ball(g, [0.0; MAX_DIM], r);
        let osc = oscillation(&v, &m).unwrap();
        assert!((osc - r * r).abs() <= 4.0 * g.spacing() * r);
    }

    #[test]
    fn oscillation_empty_region() {
        let g = Grid::new(2, 9).unwrap();
        let u = GridFunction::sample(g, |x| x[0]);
        let empty = Mask::empty(g);
        assert!(matches!(oscillation(&u, &empty), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn distribution_measure_annulus() {
        // u = |x| on B_1 (n=2), t = 0.5: area of the annulus is 3pi/4,
        // discretization within 8h of it.
        let g = Grid::new(2, 257).unwrap();
        let u = GridFunction::sample(g, |x| (x[0] * x[0] + x[1] * x[1]).sqrt());
        let b1 = Mask::unit_ball(g);
        let meas = distribution_measure(&u, &b1, 0.5);
        let exact = std::f64::consts::PI * (1.0 - 0.25);
        assert!((meas - exact).abs() <= 8.0 * g.spacing(), "{meas} vs {exact}");

        // step-function endpoints
        assert_eq!(distribution_measure(&u, &b1, -1.0), b1.measure());
        assert_eq!(distribution_measure(&u, &b1, 1.0), 0.0);
    }

    #[test]
    fn distribution_measure_monotone_in_t() {
        let g = Grid::new(2, 33).unwrap();
        let u = GridFunction::sample(g, |x| x[0] + 0.3 * x[1]);
        let b1 = Mask::unit_ball(g);
        let mut prev = f64::INFINITY;
        let mut t = -2.0;
        while t <= 2.0 {
            let m = distribution_measure(&u, &b1, t);
            assert!(m <= prev);
            prev = m;
            t += 0.05;
        }
    }

    #[test]
    fn interpolation_reproduces_linear() {
        let g = Grid::new(2, 17).unwrap();
        let u = GridFunction::sample(g, |x| 2.0 * x[0] - x[1] + 0.5);
        for &p in &[[0.13, -0.41, 0.0], [0.0, 0.0, 0.0], [-0.99, 0.98, 0.0]] {
            let exact = 2.0 * p[0] - p[1] + 0.5;
            assert_abs_diff_eq!(u.interpolate(p), exact, epsilon = 1e-12);
        }
    }
}
