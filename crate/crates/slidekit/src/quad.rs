//! Quadratic polynomials `P(x) = a0 + b.x + x^T C x` with the scale-weighted
//! norm `|a0| + r|b| + r^2 ||C||`, and concave paraboloids `P_{a,y}`.
//!
//! Note the convention: the Hessian of `P` is `2C`.

use crate::grid::{norm, MAX_DIM};
use crate::sym::SymMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadratic {
    pub a0: f64,
    pub b: [f64; MAX_DIM],
    pub c: SymMatrix,
}

impl Quadratic {
    pub fn zero(dim: usize) -> Quadratic {
        Quadratic { a0: 0.0, b: [0.0; MAX_DIM], c: SymMatrix::zero(dim) }
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    pub fn eval(&self, x: &[f64; MAX_DIM]) -> f64 {
        let mut s = self.a0 + self.c.quad_form(x);
        for d in 0..self.dim() {
            s += self.b[d] * x[d];
        }
        s
    }

    /// Gradient b + 2Cx.
    pub fn gradient(&self, x: &[f64; MAX_DIM]) -> [f64; MAX_DIM] {
        let cx = self.c.mul_vec(x);
        let mut g = [0.0; MAX_DIM];
        for d in 0..self.dim() {
            g[d] = self.b[d] + 2.0 * cx[d];
        }
        g
    }

    /// Constant Hessian 2C.
    pub fn hessian(&self) -> SymMatrix {
        self.c.scale(2.0)
    }

    /// Scale-weighted norm `|a0| + r|b| + r^2 ||C||` (spectral norm on C).
    pub fn norm_r(&self, r: f64) -> f64 {
        self.a0.abs() + r * norm(&self.b) + r * r * self.c.spectral_norm()
    }

    pub fn add(&self, other: &Quadratic) -> Quadratic {
        Quadratic {
            a0: self.a0 + other.a0,
            b: [self.b[0] + other.b[0], self.b[1] + other.b[1], self.b[2] + other.b[2]],
            c: self.c.add(&other.c),
        }
    }

    pub fn sub(&self, other: &Quadratic) -> Quadratic {
        Quadratic {
            a0: self.a0 - other.a0,
            b: [self.b[0] - other.b[0], self.b[1] - other.b[1], self.b[2] - other.b[2]],
            c: self.c.sub(&other.c),
        }
    }

    /// The rescaled polynomial x -> P(s x); satisfies `||P(s.)||_r = ||P||_{rs}`.
    pub fn precompose_scaling(&self, s: f64) -> Quadratic {
        Quadratic {
            a0: self.a0,
            b: [self.b[0] * s, self.b[1] * s, self.b[2] * s],
            c: self.c.scale(s * s),
        }
    }
}

/// Concave paraboloid `P_{a,y}(x) = -(a/2)|x-y|^2 + offset` of opening `a > 0`
/// centered at `y`.
#[derive(Clone, Copy, Debug)]
pub struct Paraboloid {
    pub opening: f64,
    pub center: [f64; MAX_DIM],
    pub offset: f64,
    pub dim: usize,
}

impl Paraboloid {
    pub fn new(dim: usize, opening: f64, center: [f64; MAX_DIM], offset: f64) -> Paraboloid {
        assert!(opening > 0.0, "paraboloid opening must be positive");
        Paraboloid { opening, center, offset, dim }
    }

    pub fn eval(&self, x: &[f64; MAX_DIM]) -> f64 {
        let mut d2 = 0.0;
        for d in 0..self.dim {
            let t = x[d] - self.center[d];
            d2 += t * t;
        }
        -0.5 * self.opening * d2 + self.offset
    }

    /// As a general quadratic: C = -(a/2) I, b = a y, a0 = offset - (a/2)|y|^2.
    pub fn as_quadratic(&self) -> Quadratic {
        let a = self.opening;
        let mut b = [0.0; MAX_DIM];
        let mut y2 = 0.0;
        for d in 0..self.dim {
            b[d] = a * self.center[d];
            y2 += self.center[d] * self.center[d];
        }
        Quadratic {
            a0: self.offset - 0.5 * a * y2,
            b,
            c: SymMatrix::identity(self.dim).scale(-0.5 * a),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_quadratic() -> Quadratic {
        let mut c = SymMatrix::zero(2);
        c.set(0, 0, 1.5);
        c.set(1, 1, -0.5);
        c.set(0, 1, 0.25);
        Quadratic { a0: 2.0, b: [1.0, -3.0, 0.0], c }
    }

    #[test]
    fn norm_scaling_identity_exact() {
        let p = sample_quadratic();
        for &(r, s) in &[(1.0, 0.5), (0.25, 2.0), (0.125, 4.0)] {
            // powers of two keep the identity exact in floating point
            assert_eq!(p.precompose_scaling(s).norm_r(r), p.norm_r(r * s));
        }
    }

    #[test]
    fn norm_monotone_in_r() {
        let p = sample_quadratic();
        let mut prev = 0.0;
        for k in 0..20 {
            let r = 0.05 * k as f64;
            let n = p.norm_r(r);
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn norm_triangle_inequality() {
        let p = sample_quadratic();
        let q = Quadratic {
            a0: -1.0,
            b: [0.5, 2.0, 0.0],
            c: SymMatrix::from_diag(&[0.3, 0.7]),
        };
        for &r in &[0.1, 0.5, 1.0, 2.0] {
            assert!(p.add(&q).norm_r(r) <= p.norm_r(r) + q.norm_r(r) + 1e-12);
        }
    }

    #[test]
    fn norm_zero_iff_zero() {
        assert_eq!(Quadratic::zero(3).norm_r(1.0), 0.0);
        let p = sample_quadratic();
        assert!(p.norm_r(1.0) > 0.0);
    }

    #[test]
    fn paraboloid_quadratic_agreement() {
        let p = Paraboloid::new(2, 3.0, [0.25, -0.5, 0.0], 1.0);
        let q = p.as_quadratic();
        for &x in &[[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [-1.0, 0.25, 0.0]] {
            assert_abs_diff_eq!(p.eval(&x), q.eval(&x), epsilon = 1e-14);
        }
        // Hessian of P_{a,y} is -a I
        let h = q.hessian();
        assert_eq!(h.get(0, 0), -3.0);
        assert_eq!(h.get(1, 1), -3.0);
        assert_eq!(h.get(0, 1), 0.0);
    }
}
