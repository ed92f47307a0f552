//! Small symmetric matrices (n <= 3) with eigenvalue support.
//!
//! Symmetry is exact by storage: only the upper triangle is kept.
//! Eigenvalues are closed-form for n <= 2 and cyclic-Jacobi for n = 3,
//! which lands at essentially machine precision for these sizes.

use crate::grid::MAX_DIM;

/// Packed symmetric matrix; entry order (0,0),(1,1),(2,2),(0,1),(0,2),(1,2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    a: [f64; 6],
}

fn pack(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) => 3,
        (0, 2) => 4,
        (1, 2) => 5,
        _ => unreachable!(),
    }
}

impl SymMatrix {
    pub fn zero(dim: usize) -> SymMatrix {
        assert!((1..=MAX_DIM).contains(&dim));
        SymMatrix { dim, a: [0.0; 6] }
    }

    pub fn identity(dim: usize) -> SymMatrix {
        let mut m = SymMatrix::zero(dim);
        for d in 0..dim {
            m.set(d, d, 1.0);
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> SymMatrix {
        let mut m = SymMatrix::zero(diag.len());
        for (d, v) in diag.iter().enumerate() {
            m.set(d, d, *v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[pack(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[pack(i, j)] = v;
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for k in 0..6 {
            out.a[k] += other.a[k];
        }
        out
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for k in 0..6 {
            out.a[k] -= other.a[k];
        }
        out
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        let mut out = *self;
        for k in 0..6 {
            out.a[k] *= s;
        }
        out
    }

    /// self + s*I.
    pub fn shift(&self, s: f64) -> SymMatrix {
        let mut out = *self;
        for d in 0..self.dim {
            out.a[d] += s;
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|d| self.a[d]).sum()
    }

    pub fn quad_form(&self, x: &[f64; MAX_DIM]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            s += self.get(i, i) * x[i] * x[i];
            for j in (i + 1)..self.dim {
                s += 2.0 * self.get(i, j) * x[i] * x[j];
            }
        }
        s
    }

    pub fn mul_vec(&self, x: &[f64; MAX_DIM]) -> [f64; MAX_DIM] {
        let mut y = [0.0; MAX_DIM];
        for i in 0..self.dim {
            for j in 0..self.dim {
                y[i] += self.get(i, j) * x[j];
            }
        }
        y
    }

    /// Ascending eigenvalues; unused slots are 0. Closed form for n <= 2,
    /// cyclic Jacobi for n = 3.
    pub fn eigenvalues(&self) -> [f64; MAX_DIM] {
        match self.dim {
            1 => [self.a[0], 0.0, 0.0],
            2 => {
                let (a, c, b) = (self.a[0], self.a[1], self.a[3]);
                let tr = a + c;
                let gap = ((a - c) * (a - c) + 4.0 * b * b).max(0.0).sqrt();
                [(tr - gap) / 2.0, (tr + gap) / 2.0, 0.0]
            }
            _ => {
                let mut m = [
                    [self.get(0, 0), self.get(0, 1), self.get(0, 2)],
                    [self.get(0, 1), self.get(1, 1), self.get(1, 2)],
                    [self.get(0, 2), self.get(1, 2), self.get(2, 2)],
                ];
                jacobi3(&mut m);
                let mut e = [m[0][0], m[1][1], m[2][2]];
                e.sort_by(|x, y| x.partial_cmp(y).unwrap());
                e
            }
        }
    }

    /// Spectral norm: largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        let e = self.eigenvalues();
        e[..self.dim].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn det(&self) -> f64 {
        match self.dim {
            1 => self.a[0],
            2 => self.a[0] * self.a[1] - self.a[3] * self.a[3],
            _ => {
                let (a, b, c) = (self.get(0, 0), self.get(0, 1), self.get(0, 2));
                let (d, e) = (self.get(1, 1), self.get(1, 2));
                let f = self.get(2, 2);
                a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)
            }
        }
    }
}

/// Cyclic Jacobi on a 3x3 symmetric matrix; diagonalizes in place.
fn jacobi3(m: &mut [[f64; 3]; 3]) {
    for _ in 0..64 {
        let off = m[0][1].abs() + m[0][2].abs() + m[1][2].abs();
        let scale = m[0][0].abs() + m[1][1].abs() + m[2][2].abs() + off;
        if off <= 1e-300 || off <= 1e-16 * scale {
            return;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = m[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
            let t = if theta >= 0.0 {
                1.0 / (theta + (1.0 + theta * theta).sqrt())
            } else {
                1.0 / (theta - (1.0 + theta * theta).sqrt())
            };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            // rotate rows/columns p and q
            let (app, aqq) = (m[p][p], m[q][q]);
            m[p][p] = app - t * apq;
            m[q][q] = aqq + t * apq;
            m[p][q] = 0.0;
            m[q][p] = 0.0;
            let r = 3 - p - q;
            let (arp, arq) = (m[r][p], m[r][q]);
            m[r][p] = c * arp - s * arq;
            m[p][r] = m[r][p];
            m[r][q] = s * arp + c * arq;
            m[q][r] = m[r][q];
        }
    }
}
