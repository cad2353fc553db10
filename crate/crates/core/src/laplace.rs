//! Discrete Dirichlet problem on a masked 2D grid by red-black SOR.

use crate::error::{BvError, Result};

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const MAX_SWEEPS: usize = 1_000_000;

/// Solves `Δ_h f = 0` (five-point stencil) on the cells where `free` is true, holding the
/// other entries of `values` fixed. Every free cell must have its four neighbors inside
/// the grid. Returns the number of sweeps.
pub fn solve_dirichlet(
    rows: usize,
    cols: usize,
    free: &[bool],
    values: &mut [f64],
    tol: f64,
    max_sweeps: usize,
) -> Result<usize> {
    let n = rows * cols;
    if free.len() != n || values.len() != n {
        return Err(BvError::DimensionMismatch {
            expected: n,
            got: free.len().min(values.len()),
        });
    }
    for (c, &is_free) in free.iter().enumerate() {
        let (i, j) = (c / cols, c % cols);
        if is_free && (i == 0 || j == 0 || i + 1 == rows || j + 1 == cols) {
            return Err(BvError::InvalidArgument(format!(
                "free cell {c} lies on the grid edge"
            )));
        }
    }
    let red: Vec<usize> = (0..n)
        .filter(|&c| free[c] && (c / cols + c % cols) % 2 == 0)
        .collect();
    let black: Vec<usize> = (0..n)
        .filter(|&c| free[c] && (c / cols + c % cols) % 2 == 1)
        .collect();
    if red.is_empty() && black.is_empty() {
        return Ok(0);
    }
    let size = rows.max(cols) as f64;
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / size).sin());
    let neighbors = |v: &[f64], c: usize| v[c - 1] + v[c + 1] + v[c - cols] + v[c + cols];
    let mut residual = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        for set in [&red, &black] {
            for &c in set.iter() {
                let target = 0.25 * neighbors(values, c);
                values[c] += omega * (target - values[c]);
            }
        }
        if sweep % 16 == 0 || sweep == max_sweeps {
            residual = red
                .iter()
                .chain(&black)
                .map(|&c| (4.0 * values[c] - neighbors(values, c)).abs())
                .fold(0.0, f64::max);
            if residual < tol {
                return Ok(sweep);
            }
        }
    }
    Err(BvError::NonConvergent {
        iterations: max_sweeps,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_a_discrete_harmonic_function() {
        // f = x² - y² is exactly harmonic for the five-point stencil
        let (rows, cols) = (40, 30);
        let exact: Vec<f64> = (0..rows * cols)
            .map(|c| {
                let (i, j) = ((c / cols) as f64, (c % cols) as f64);
                (i * i - j * j) / 100.0
            })
            .collect();
        let free: Vec<bool> = (0..rows * cols)
            .map(|c| {
                let (i, j) = (c / cols, c % cols);
                i > 0 && j > 0 && i + 1 < rows && j + 1 < cols
            })
            .collect();
        let mut v: Vec<f64> = exact
            .iter()
            .zip(&free)
            .map(|(&e, &f)| if f { 0.0 } else { e })
            .collect();
        let sweeps = solve_dirichlet(rows, cols, &free, &mut v, 1e-12, MAX_SWEEPS).unwrap();
        assert!(sweeps > 0);
        let err = v
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn reports_non_convergence() {
        let (rows, cols) = (50, 50);
        let free: Vec<bool> = (0..rows * cols)
            .map(|c| {
                let (i, j) = (c / cols, c % cols);
                i > 0 && j > 0 && i + 1 < rows && j + 1 < cols
            })
            .collect();
        let mut v: Vec<f64> = free.iter().map(|&f| if f { 0.0 } else { 1.0 }).collect();
        assert!(matches!(
            solve_dirichlet(rows, cols, &free, &mut v, 1e-12, 5),
            Err(BvError::NonConvergent { iterations: 5, .. })
        ));
    }

    #[test]
    fn rejects_free_cells_on_the_edge() {
        let free = vec![true; 9];
        let mut v = vec![0.0; 9];
        assert!(solve_dirichlet(3, 3, &free, &mut v, 1e-12, 10).is_err());
    }
}
