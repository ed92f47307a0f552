//! Separable lower-envelope-of-paraboloids transform.
//!
//! Computes, for every grid node q,
//!
//! ```text
//! m(q) = min_s  f(s) + w * |x_s - x_q|^2
//! ```
//!
//! together with an argmin witness, one axis at a time with the
//! Felzenszwalb-Huttenlocher envelope of parabolas (linear time per line).
//! Sources with `f = +inf` are skipped, which is how domain masks enter.
//!
//! Witnesses: pass d stores, per output node, the winning source coordinate
//! along axis d. Backtracking through the stored pass arrays recovers a full
//! argmin for any query node. Ties inside a line resolve to the parabola
//! with the smaller source index (the envelope keeps the earlier parabola at
//! an exact boundary), so the recovered witness is deterministic.

use crate::grid::Grid;

pub const NO_WITNESS: u32 = u32::MAX;

pub struct SweepResult {
    grid: Grid,
    /// Transform values at every node.
    pub values: Vec<f64>,
    /// Per-pass winning axis coordinate; indexed like the pass output.
    passes: Vec<Vec<u32>>,
}

impl SweepResult {
    /// Linear index of the argmin source for query node `q`, or `None`
    /// when every source was masked out.
    pub fn witness(&self, q: usize) -> Option<usize> {
        let g = self.grid;
        let mut idx = g.multi(q);
        // Walk passes backwards: pass d was indexed by
        // (q_0..q_d, s_{d+1}..s_{n-1}); replace axis d with its winner.
        for d in (0..g.dim()).rev() {
            let w = self.passes[d][g.linear(idx)];
            if w == NO_WITNESS {
                return None;
            }
            idx[d] = w as usize;
        }
        Some(g.linear(idx))
    }
}

/// Run the transform. `source[i]` may be `f64::INFINITY` to exclude node i.
/// `weight` must be positive.
pub fn lower_envelope_transform(grid: Grid, source: &[f64], weight: f64) -> SweepResult {
    assert!(weight > 0.0, "envelope weight must be positive");
    assert_eq!(source.len(), grid.node_count());

    let n = grid.resolution();
    let coords: Vec<f64> = (0..n).map(|i| grid.axis_coord(i)).collect();

    let mut values = source.to_vec();
    let mut passes = Vec::with_capacity(grid.dim());

    let mut line_in = vec![0.0f64; n];
    let mut line_out = vec![0.0f64; n];
    let mut line_wit = vec![NO_WITNESS; n];
    let mut verts = vec![0usize; n + 1];
    let mut bounds = vec![0.0f64; n + 2];

    for axis in 0..grid.dim() {
        let stride = grid.stride(axis);
        let mut wit = vec![NO_WITNESS; grid.node_count()];
        for base in line_bases(grid, axis) {
            for j in 0..n {
                line_in[j] = values[base + j * stride];
            }
            line_envelope(
                &coords,
                &line_in,
                weight,
                &mut line_out,
                &mut line_wit,
                &mut verts,
                &mut bounds,
            );
            for j in 0..n {
                values[base + j * stride] = line_out[j];
                wit[base + j * stride] = line_wit[j];
            }
        }
        passes.push(wit);
    }

    SweepResult { grid, values, passes }
}

/// Base indices (axis coordinate = 0) of every grid line along `axis`.
fn line_bases(grid: Grid, axis: usize) -> Vec<usize> {
    let n = grid.resolution();
    let mut bases = Vec::new();
    match grid.dim() {
        1 => bases.push(0),
        2 => {
            let other = 1 - axis;
            let so = grid.stride(other);
            for k in 0..n {
                bases.push(k * so);
            }
        }
        _ => {
            let others: Vec<usize> = (0..3).filter(|d| *d != axis).collect();
            let (s1, s2) = (grid.stride(others[0]), grid.stride(others[1]));
            for k1 in 0..n {
                for k2 in 0..n {
                    bases.push(k1 * s1 + k2 * s2);
                }
            }
        }
    }
    bases
}

/// One-dimensional envelope: out[q] = min_j g[j] + w (x_j - x_q)^2.
#[allow(clippy::too_many_arguments)]
fn line_envelope(
    xs: &[f64],
    g: &[f64],
    w: f64,
    out: &mut [f64],
    wit: &mut [u32],
    verts: &mut [usize],
    bounds: &mut [f64],
) {
    let n = xs.len();
    let mut k = 0usize;
    let mut started = false;

    for j in 0..n {
        if !g[j].is_finite() {
            continue;
        }
        if !started {
            verts[0] = j;
            bounds[0] = f64::NEG_INFINITY;
            bounds[1] = f64::INFINITY;
            started = true;
            continue;
        }
        // intersection of parabola j with the current top of the envelope;
        // pop envelope entries it dominates
        loop {
            let v = verts[k];
            let s = ((g[j] + w * xs[j] * xs[j]) - (g[v] + w * xs[v] * xs[v]))
                / (2.0 * w * (xs[j] - xs[v]));
            if s <= bounds[k] && k > 0 {
                k -= 1;
            } else {
                k += 1;
                verts[k] = j;
                bounds[k] = s;
                bounds[k + 1] = f64::INFINITY;
                break;
            }
        }
    }

    if !started {
        out.fill(f64::INFINITY);
        wit.fill(NO_WITNESS);
        return;
    }

    let mut k = 0usize;
    for q in 0..n {
        while bounds[k + 1] < xs[q] {
            k += 1;
        }
        let v = verts[k];
        let d = xs[q] - xs[v];
        out[q] = g[v] + w * d * d;
        wit[q] = v as u32;
    }
}
