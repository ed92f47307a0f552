//! Sliding paraboloids: Jensen envelopes, contact sets with touching maps,
//! vertex recovery and the contact Hessian bound.
//!
//! A concave paraboloid of opening `a` centered at `y` touches `u` from
//! below exactly at the minimizers of `u(z) + (a/2)|z-y|^2`, so every
//! operation here reduces to the lower-envelope transform of `sweep`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, MAX_DIM};
use crate::gridfn::{gradient_at, hessian_at, GridFunction};
use crate::sweep::lower_envelope_transform;

/// Touch points of sliding paraboloids of one opening, with the map from
/// touch nodes back to the centers they serve.
#[derive(Clone, Debug)]
pub struct ContactSet {
    grid: Grid,
    pub opening: f64,
    /// All touch nodes.
    pub touch: Mask,
    /// Touch nodes with |x| < 1 - 2h (safe for derivative stencils).
    pub interior: Mask,
    /// touch node -> centers served (each center appears exactly once).
    pub vertex_map: BTreeMap<usize, Vec<usize>>,
    /// Contact value u(x) + (a/2)|x-y|^2 per center, in center order.
    pub contact_values: Vec<(usize, f64)>,
    pub center_count: usize,
}

impl ContactSet {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Count of touch nodes excluded by the interiority requirement.
    pub fn boundary_touch_count(&self) -> usize {
        self.touch.count() - self.interior.count()
    }

    /// Measure of the touch set; `interior_only` applies the |x| < 1-2h cut
    /// used by all measure-lemma checks.
    pub fn touch_measure(&self, interior_only: bool) -> f64 {
        if interior_only {
            self.interior.measure()
        } else {
            self.touch.measure()
        }
    }
}

/// Interiority cut for touch nodes: strictly inside the unit ball with room
/// for second-difference stencils.
pub fn is_interior_touch(grid: Grid, node: usize) -> bool {
    grid.node_norm(node) < 1.0 - 2.0 * grid.spacing()
}

fn masked_values(u: &GridFunction) -> Vec<f64> {
    u.grid()
        .nodes()
        .map(|i| if u.domain().contains(i) { u.at(i) } else { f64::INFINITY })
        .collect()
}

/// Jensen's epsilon-envelope `u_eps(x) = inf_y { u(y) + (1/eps)|y-x|^2 }`,
/// the infimum running over the domain mask of `u`.
pub fn jensen_envelope(u: &GridFunction, eps: f64) -> Result<GridFunction> {
    if eps <= 0.0 {
        return Err(Error::Precondition(format!("envelope eps must be positive, got {eps}")));
    }
    let grid = u.grid();
    let src = masked_values(u);
    let res = lower_envelope_transform(grid, &src, 1.0 / eps);
    GridFunction::from_values(grid, res.values, Some(u.domain().clone()))
}

/// Slide the paraboloid of opening `a` centered at `y` from below until it
/// touches `u`: returns every minimizer of `u(z) + (a/2)|z-y|^2` over the
/// domain mask, together with the contact value. This is the per-center
/// reference path; `contact_set` is the fast route.
pub fn slide_contact(
    u: &GridFunction,
    a: f64,
    y: [f64; MAX_DIM],
) -> Result<(Vec<usize>, f64)> {
    if a <= 0.0 {
        return Err(Error::Precondition(format!("opening must be positive, got {a}")));
    }
    let grid = u.grid();
    let mut best = f64::INFINITY;
    let mut nodes = Vec::new();
    for z in u.domain().iter() {
        let xz = grid.coord(z);
        let mut d2 = 0.0;
        for d in 0..grid.dim() {
            let t = xz[d] - y[d];
            d2 += t * t;
        }
        let v = u.at(z) + 0.5 * a * d2;
        if v < best {
            best = v;
            nodes.clear();
            nodes.push(z);
        } else if v == best {
            nodes.push(z);
        }
    }
    if nodes.is_empty() {
        return Err(Error::EmptyRegion("slide_contact over empty domain".into()));
    }
    Ok((nodes, best))
}

/// Contact set `T_a(V)`: one sweep computes the touching map for every
/// center in `V` simultaneously. Each center contributes its argmin witness
/// (deterministic tie-breaking inside the sweep).
pub fn contact_set(u: &GridFunction, a: f64, centers: &Mask) -> Result<ContactSet> {
    if a <= 0.0 {
        return Err(Error::Precondition(format!("opening must be positive, got {a}")));
    }
    let grid = u.grid();
    if centers.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if u.domain().is_empty() {
        return Err(Error::EmptyRegion("contact_set over empty domain".into()));
    }
    let src = masked_values(u);
    let res = lower_envelope_transform(grid, &src, 0.5 * a);

    let mut touch = Mask::empty(grid);
    let mut interior = Mask::empty(grid);
    let mut vertex_map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut contact_values = Vec::new();
    let mut center_count = 0;

    for y in centers.iter() {
        center_count += 1;
        let z = res
            .witness(y)
            .ok_or_else(|| Error::EmptyRegion("contact_set over empty domain".into()))?;
        touch.insert(z);
        if is_interior_touch(grid, z) {
            interior.insert(z);
        }
        vertex_map.entry(z).or_default().push(y);
        contact_values.push((y, res.values[y]));
    }

    Ok(ContactSet {
        grid,
        opening: a,
        touch,
        interior,
        vertex_map,
        contact_values,
        center_count,
    })
}

/// Recover the paraboloid center from an interior touch node:
/// `y = x + Du(x)/a` with the central-difference gradient.
pub fn vertex_recovery(u: &GridFunction, a: f64, node: usize) -> Result<[f64; MAX_DIM]> {
    let grid = u.grid();
    if !is_interior_touch(grid, node) {
        return Err(Error::Precondition(format!(
            "node {node} is not interior (needs |x| < 1 - 2h)"
        )));
    }
    let g = gradient_at(u, node)?;
    let x = grid.coord(node);
    let mut y = [0.0; MAX_DIM];
    for d in 0..grid.dim() {
        y[d] = x[d] + g[d] / a;
    }
    Ok(y)
}

/// One touch-node entry of a Hessian-bound report.
#[derive(Clone, Debug)]
pub struct HessianViolation {
    pub node: usize,
    pub eigenvalues: [f64; MAX_DIM],
    /// Positive amounts by which [-a, Gamma a] was overrun (lower, upper).
    pub lower_excess: f64,
    pub upper_excess: f64,
}

/// Report of the contact Hessian bound `-aI <= D^2 u <= Gamma a I` on the
/// interior touch nodes, with tolerance `tol` on both sides.
#[derive(Clone, Debug)]
pub struct HessianCheckReport {
    pub checked: usize,
    pub skipped_boundary: usize,
    pub violations: Vec<HessianViolation>,
    pub tolerance: f64,
}

impl HessianCheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check the eigenvalue bounds of the discrete Hessian over the interior
/// touch nodes of a contact set. `c_tol` scales the grid tolerance
/// `tol = c_tol * h`.
pub fn contact_hessian_check(
    cs: &ContactSet,
    u: &GridFunction,
    a: f64,
    gamma: f64,
    c_tol: f64,
) -> Result<HessianCheckReport> {
    let grid = u.grid();
    if cs.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let tol = c_tol * grid.spacing();
    let mut report = HessianCheckReport {
        checked: 0,
        skipped_boundary: cs.boundary_touch_count(),
        violations: Vec::new(),
        tolerance: tol,
    };
    for node in cs.interior.iter() {
        let hess = hessian_at(u, node)?;
        let e = hess.eigenvalues();
        let lo = e[0];
        let hi = e[grid.dim() - 1];
        let lower_excess = (-a - tol) - lo;
        let upper_excess = hi - (gamma * a + tol);
        report.checked += 1;
        if lower_excess > 0.0 || upper_excess > 0.0 {
            report.violations.push(HessianViolation {
                node,
                eigenvalues: e,
                lower_excess: lower_excess.max(0.0),
                upper_excess: upper_excess.max(0.0),
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::dist;

    #[test]
    fn envelope_constant_is_exact() {
        let g = Grid::new(1, 129).unwrap();
        let u = GridFunction::constant(g, 3.5);
        let v = jensen_envelope(&u, 0.3).unwrap();
        for i in u.domain().iter() {
            assert_eq!(v.at(i), 3.5);
        }
    }

    #[test]
    fn envelope_quadratic_closed_form() {
        // u = x^2/2 in 1D: u_eps(x) = x^2/(eps+2) with argmin error
        // at most (1/eps + 1/2) h^2.
        let g = Grid::new(1, 513).unwrap();
        let u = GridFunction::sample(g, |x| 0.5 * x[0] * x[0]);
        for &eps in &[0.25, 0.5, 1.0] {
            let v = jensen_envelope(&u, eps).unwrap();
            let tol = (1.0 / eps + 0.5) * g.spacing() * g.spacing();
            for i in u.domain().iter() {
                let x = g.coord(i)[0];
                let exact = x * x / (eps + 2.0);
                assert!(
                    (v.at(i) - exact).abs() <= tol,
                    "eps={eps} x={x}: {} vs {exact}",
                    v.at(i)
                );
            }
        }
    }

    #[test]
    fn envelope_abs_closed_form() {
        // u = |x| in 1D: for x >= eps/2 the envelope is x - eps/4,
        // minimizer y* = x - eps/2.
        let g = Grid::new(1, 1025).unwrap();
        let u = GridFunction::sample(g, |x| x[0].abs());
        let eps = 0.25;
        let v = jensen_envelope(&u, eps).unwrap();
        let tol = 2.0 * g.spacing() * g.spacing() / eps;
        for i in u.domain().iter() {
            let x = g.coord(i)[0];
            if x >= eps / 2.0 && x <= 0.75 {
                assert!((v.at(i) - (x - eps / 4.0)).abs() <= tol);
            }
        }
    }

    #[test]
    fn envelope_below_and_shift_equivariant() {
        let g = Grid::new(2, 33).unwrap();
        let u = GridFunction::sample(g, |x| (4.0 * x[0]).cos() + x[1]);
        let v = jensen_envelope(&u, 0.7).unwrap();
        for i in u.domain().iter() {
            assert!(v.at(i) <= u.at(i) + 1e-14);
        }
        // (u + c)_eps = u_eps + c
        let c = 2.25;
        let w = jensen_envelope(&u.map(|t| t + c), 0.7).unwrap();
        for i in u.domain().iter() {
            assert!((w.at(i) - v.at(i) - c).abs() <= 1e-12);
        }
    }

    #[test]
    fn slide_contact_flat_function() {
        let g = Grid::new(2, 65).unwrap();
        let u = GridFunction::constant(g, 0.0);
        let y = [0.31, -0.22, 0.0];
        let (nodes, _) = slide_contact(&u, 2.0, y).unwrap();
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0], g.nearest_node(y));
    }

    #[test]
    fn slide_contact_quadratic_touch_map() {
        // u = (b/2)|z|^2: touch at the node nearest a y/(a+b).
        let g = Grid::new(2, 129).unwrap();
        let (a, b) = (1.0, 2.0);
        let u = GridFunction::sample(g, |x| 0.5 * b * (x[0] * x[0] + x[1] * x[1]));
        for &y in &[[0.5, 0.25, 0.0], [-0.75, 0.1, 0.0], [0.0, 0.9, 0.0]] {
            let (nodes, _) = slide_contact(&u, a, y).unwrap();
            let expect = [a * y[0] / (a + b), a * y[1] / (a + b), 0.0];
            let got = g.coord(nodes[0]);
            assert!(dist(&got, &expect) <= g.spacing());
        }
    }

    #[test]
    fn slide_contact_linear_touch_map() {
        // u = l . z: touch near y - l/a (interior case).
        let g = Grid::new(2, 129).unwrap();
        let l = [0.3, -0.1, 0.0];
        let u = GridFunction::sample(g, |x| l[0] * x[0] + l[1] * x[1]);
        let a = 2.0;
        let y = [0.2, 0.3, 0.0];
        let (nodes, _) = slide_contact(&u, a, y).unwrap();
        let expect = [y[0] - l[0] / a, y[1] - l[1] / a, 0.0];
        assert!(dist(&g.coord(nodes[0]), &expect) <= g.spacing());
    }

    #[test]
    fn contact_set_flat_is_identity() {
        let g = Grid::new(2, 65).unwrap();
        let u = GridFunction::constant(g, 0.0);
        let v = Mask::ball(g, [0.1, 0.0, 0.0], 0.3);
        let cs = contact_set(&u, 1.5, &v).unwrap();
        assert_eq!(cs.touch.count(), v.count());
        for y in v.iter() {
            assert!(cs.touch.contains(y));
        }
    }

    #[test]
    fn contact_set_monotone_and_additive_in_centers() {
        let g = Grid::new(2, 33).unwrap();
        let u = GridFunction::sample(g, |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos());
        let v1 = Mask::ball(g, [0.3, 0.0, 0.0], 0.2);
        let v2 = Mask::ball(g, [-0.3, 0.1, 0.0], 0.25);
        let cs1 = contact_set(&u, 2.0, &v1).unwrap();
        let cs2 = contact_set(&u, 2.0, &v2).unwrap();
        let cs12 = contact_set(&u, 2.0, &v1.union(&v2).unwrap()).unwrap();
        let expected = cs1.touch.union(&cs2.touch).unwrap();
        assert_eq!(cs12.touch, expected);
    }

    #[test]
    fn contact_set_scaling_covariance_exact() {
        // argmin of c*u + (a/2)d^2 equals argmin of u + (a/(2c))d^2; with c a
        // power of two the floating-point computation scales exactly.
        let g = Grid::new(2, 33).unwrap();
        let u = GridFunction::sample(g, |x| (2.0 * x[0]).sin() + 0.3 * x[1]);
        let cu = u.map(|t| 4.0 * t);
        let v = Mask::ball(g, [0.0; MAX_DIM], 0.5);
        let a = 2.0;
        let cs_scaled = contact_set(&cu, a, &v).unwrap();
        let cs_base = contact_set(&u, a / 4.0, &v).unwrap();
        assert_eq!(cs_scaled.touch, cs_base.touch);
    }

    #[test]
    fn contact_surjectivity() {
        let g = Grid::new(2, 33).unwrap();
        let u = GridFunction::sample(g, |x| x[0] * x[0] - 0.2 * x[1]);
        let v = Mask::ball(g, [0.0; MAX_DIM], 0.4);
        let cs = contact_set(&u, 1.0, &v).unwrap();
        let served: usize = cs.vertex_map.values().map(|c| c.len()).sum();
        assert_eq!(served, v.count());
        assert_eq!(cs.center_count, v.count());
    }

    #[test]
    fn vertex_recovery_quadratic() {
        // u = (b/2)|z|^2 at touch x: y = x (a+b)/a up to h/2 per axis.
        let g = Grid::new(2, 129).unwrap();
        let (a, b) = (1.0, 2.0);
        let u = GridFunction::sample(g, |x| 0.5 * b * (x[0] * x[0] + x[1] * x[1]));
        let y = [0.45, -0.3, 0.0];
        let (nodes, _) = slide_contact(&u, a, y).unwrap();
        let x = nodes[0];
        let yr = vertex_recovery(&u, a, x).unwrap();
        let xc = g.coord(x);
        for d in 0..2 {
            let expect = xc[d] * (a + b) / a;
            assert!((yr[d] - expect).abs() <= 1e-10, "axis {d}");
        }
        // and the recovered center is within the node-rounding cell of y
        for d in 0..2 {
            assert!((yr[d] - y[d]).abs() <= 0.5 * g.spacing() * (a + b) / a + 1e-12);
        }
    }

    #[test]
    fn vertex_recovery_flat_and_linear() {
        let g = Grid::new(2, 65).unwrap();
        let u0 = GridFunction::constant(g, 1.0);
        let x = g.center();
        let y = vertex_recovery(&u0, 2.0, x).unwrap();
        assert_eq!(y[0], 0.0);
        assert_eq!(y[1], 0.0);

        let l = [0.4, -0.2, 0.0];
        let ul = GridFunction::sample(g, |x| l[0] * x[0] + l[1] * x[1]);
        let y = vertex_recovery(&ul, 2.0, x).unwrap();
        assert!((y[0] - l[0] / 2.0).abs() <= 1e-12);
        assert!((y[1] - l[1] / 2.0).abs() <= 1e-12);
    }

    #[test]
    fn vertex_recovery_rejects_boundary() {
        let g = Grid::new(2, 65).unwrap();
        let u = GridFunction::constant(g, 0.0);
        let edge = g.nearest_node([1.0, 0.0, 0.0]);
        assert!(vertex_recovery(&u, 1.0, edge).is_err());
    }

    #[test]
    fn hessian_check_quadratic_families() {
        let g = Grid::new(2, 65).unwrap();
        let a = 1.0;
        let gamma = 3.0;
        let v = Mask::ball(g, [0.0; MAX_DIM], 0.25);

        // b <= Gamma a: no violations (D^2 u = b I everywhere)
        let ok = GridFunction::sample(g, |x| 0.5 * 2.0 * (x[0] * x[0] + x[1] * x[1]));
        let cs = contact_set(&ok, a, &v).unwrap();
        let rep = contact_hessian_check(&cs, &ok, a, gamma, 10.0).unwrap();
        assert!(rep.passed());
        assert!(rep.checked > 0);

        // b > Gamma a: upper-bound violations at every interior touch node
        let b_bad = 5.0;
        let bad = GridFunction::sample(g, |x| 0.5 * b_bad * (x[0] * x[0] + x[1] * x[1]));
        let cs = contact_set(&bad, a, &v).unwrap();
        let rep = contact_hessian_check(&cs, &bad, a, gamma, 10.0).unwrap();
        assert_eq!(rep.violations.len(), rep.checked);
        assert!(rep.violations.iter().all(|viol| viol.upper_excess > 0.0));
        assert!(rep.violations.iter().all(|viol| viol.lower_excess == 0.0));
    }

    #[test]
    fn line_second_differences_bounded_below_at_touch() {
        // Touching from below forces (u(x+v) + u(x-v) - 2u(x))/|v|^2 >= -a
        // along every line through the touch node; exact from the
        // minimization property, checked here up to rounding.
        let g = Grid::new(2, 65).unwrap();
        let v = Mask::ball(g, [0.0; MAX_DIM], 0.5);
        let funcs: Vec<GridFunction> = vec![
            GridFunction::sample(g, |x| (5.0 * x[0]).sin() + (3.0 * x[1]).cos()),
            GridFunction::sample(g, |x| x[0].abs() + x[1] * x[1]),
            GridFunction::sample(g, |x| -x[0] * x[0] * 0.4 + 0.1 * x[1]),
        ];
        let h = g.spacing();
        let steps: [(isize, isize, f64); 4] = [
            (1, 0, h * h),
            (0, 1, h * h),
            (1, 1, 2.0 * h * h),
            (1, -1, 2.0 * h * h),
        ];
        for u in &funcs {
            let a = 1.0;
            let cs = contact_set(u, a, &v).unwrap();
            for node in cs.interior.iter() {
                let m = g.multi(node);
                for &(di, dj, len2) in &steps {
                    let plus = g.linear([
                        (m[0] as isize + di) as usize,
                        (m[1] as isize + dj) as usize,
                        0,
                    ]);
                    let minus = g.linear([
                        (m[0] as isize - di) as usize,
                        (m[1] as isize - dj) as usize,
                        0,
                    ]);
                    let dd = (u.at(plus) + u.at(minus) - 2.0 * u.at(node)) / len2;
                    assert!(dd >= -a - 1e-9, "node {node}: {dd} < -a");
                }
            }
        }
    }
}
