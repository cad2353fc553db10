//! Test fields: the half-vortex and simple analytic profiles.

use std::f64::consts::PI;

use crate::error::{BvError, Result};
use crate::field::{GridField, ValueKind};

/// Polar angle in `[0, 2π)`.
fn polar_angle(x: f64, y: f64) -> f64 {
    let t = y.atan2(x);
    if t < 0.0 {
        t + 2.0 * PI
    } else {
        t
    }
}

fn half_vortex_grid(grid: usize, d: usize, axes: usize, kind: ValueKind) -> Result<GridField> {
    if grid < 32 || axes < 2 || d < 2 {
        return Err(BvError::InvalidArgument(format!(
            "half-vortex needs grid >= 32, N >= 2, d >= 2 (got {grid}, {axes}, {d})"
        )));
    }
    let h = 2.0 / grid as f64;
    let height_cells = (1.0 / h).round() as usize;
    let mut dims = vec![grid, grid];
    let mut origin = vec![-1.0, -1.0];
    for _ in 2..axes {
        dims.push(height_cells);
        origin.push(0.0);
    }
    let hole = 2.0 * h;
    let inside = move |x: &[f64]| {
        let r = x[0].hypot(x[1]);
        r < 1.0 && r >= hole
    };
    GridField::from_fn(dims, h, origin, d, kind, Some(&inside), |x| {
        let t = polar_angle(x[0], x[1]) / 2.0;
        let mut v = vec![0.0; d];
        v[0] = t.cos();
        v[1] = t.sin();
        v
    })
}

/// The line field `u = [e^{iθ/2}]` on the unit disk, sampled on a `grid × grid` mesh of
/// `[-1,1]²` (spacing `2/grid`), in the first two of `d` coordinates. Cells within `2h`
/// of the defect are outside the mask. For `N > 2` the field is extended constantly in
/// the extra variables over a height of 1.
pub fn make_half_vortex(grid: usize, d: usize, axes: usize) -> Result<GridField> {
    half_vortex_grid(grid, d, axes, ValueKind::Proj)
}

/// The lifting `n = e^{iθ/2}`, `θ ∈ [0, 2π)`, of [`make_half_vortex`]; it jumps between
/// antipodal values across the ray `θ = 0`.
pub fn half_vortex_lifting(grid: usize, d: usize, axes: usize) -> Result<GridField> {
    half_vortex_grid(grid, d, axes, ValueKind::Unit)
}

/// `[(cos g, sin g)]` with `g = slope·x₀` on a box of `n` cells per axis and side `side`.
pub fn linear_twist(n: usize, axes: usize, side: f64, slope: f64) -> Result<GridField> {
    GridField::from_fn(
        vec![n; axes],
        side / n as f64,
        vec![0.0; axes],
        2,
        ValueKind::Proj,
        None,
        |x| {
            let g = slope * x[0];
            vec![g.cos(), g.sin()]
        },
    )
}

/// `[a]` for `x₀ < side/2`, `[b]` otherwise, on a box of `n` cells per axis.
pub fn straight_jump(n: usize, axes: usize, side: f64, a: &[f64], b: &[f64]) -> Result<GridField> {
    let mid = side / 2.0;
    GridField::from_fn(
        vec![n; axes],
        side / n as f64,
        vec![0.0; axes],
        a.len(),
        ValueKind::Proj,
        None,
        |x| if x[0] < mid { a.to_vec() } else { b.to_vec() },
    )
}
