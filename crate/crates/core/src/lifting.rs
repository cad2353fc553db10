//! Orientations of line fields: rotation search, greedy 1D lifting, boundary-prescribed
//! lifting and the ε-regularized liftings.
//!
//! Every lifting here multiplies the stored representative by a sign, so the output
//! projects back onto the input exactly.

use rayon::prelude::*;
use serde_json::json;

use crate::energy::{avg_directional_energy, embedded_tv, EnergyReport};
use crate::error::{BvError, Result};
use crate::field::{GridField, Metric, ValueKind};
use crate::geometry::{
    self, f_eps_scale, haar_sample, lr_sign, mix_seed, proj_angle, ProjPoint, Rotation, UnitVector,
};
use crate::laplace;

pub const DEFAULT_TRIALS: usize = 64;
pub const DEFAULT_DIRECTIONS: usize = 16;

#[derive(Debug, Clone)]
pub struct LiftResult {
    pub field: GridField,
    pub rotation: Option<Rotation>,
    pub energy: EnergyReport,
    /// Largest projective distance between `[n(x)]` and `u(x)` over all cells.
    pub projection_check: f64,
}

fn require_proj(u: &GridField) -> Result<()> {
    if u.kind() != ValueKind::Proj {
        return Err(BvError::InvalidArgument(format!(
            "expected a line field, got {} values",
            u.kind().name()
        )));
    }
    Ok(())
}

/// `max_x dist_proj([n(x)], u(x))`.
pub fn projection_check(u: &GridField, n: &GridField) -> Result<f64> {
    if u.len() != n.len() || u.d() != n.d() {
        return Err(BvError::DimensionMismatch {
            expected: u.len() * u.d(),
            got: n.len() * n.d(),
        });
    }
    Ok((0..u.len())
        .map(|c| proj_angle(u.value(c), n.value(c)))
        .fold(0.0, f64::max))
}

/// The cellwise lifting `L_R(u)`.
pub fn lift_with_rotation(u: &GridField, rotation: &Rotation) -> Result<GridField> {
    require_proj(u)?;
    if rotation.dim() != u.d() {
        return Err(BvError::DimensionMismatch {
            expected: u.d(),
            got: rotation.dim(),
        });
    }
    Ok(lift_with_rows(u, rotation.rows()))
}

fn lift_with_rows(u: &GridField, rows: &[f64]) -> GridField {
    let mut values = u.values().to_vec();
    for v in values.chunks_mut(u.d()) {
        if lr_sign(rows, v) < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    u.with_values(ValueKind::Unit, u.d(), values)
        .expect("sign flips keep values on the sphere")
}

/// Energy used to rank candidate liftings: the direction-averaged geodesic energy for
/// the geodesic metric, the embedded Euclidean TV otherwise.
fn lifting_energy(n: &GridField, metric: Metric, directions: usize, dir_seed: u64) -> Result<EnergyReport> {
    match metric {
        Metric::Geodesic => avg_directional_energy(n, directions, dir_seed, Metric::Geodesic),
        Metric::EuclideanSphere | Metric::EuclideanTensor => embedded_tv(n, Metric::EuclideanSphere),
    }
}

/// Parameters of [`RotationSearch::run`].
#[derive(Debug, Clone)]
pub struct RotationSearch {
    pub trials: usize,
    pub seed: u64,
    pub metric: Metric,
    /// Directions of the averaged energy used for the geodesic metric.
    pub directions: usize,
}

impl RotationSearch {
    pub fn new(trials: usize, seed: u64, metric: Metric) -> Self {
        Self {
            trials,
            seed,
            metric,
            directions: DEFAULT_DIRECTIONS,
        }
    }

    /// Samples `trials` Haar rotations, lifts with each, and keeps the lowest energy.
    /// All trials share the same direction sample so their energies are comparable.
    pub fn run(&self, u: &GridField) -> Result<LiftResult> {
        require_proj(u)?;
        if self.trials == 0 {
            return Err(BvError::InvalidArgument("need at least one trial".into()));
        }
        let d = u.d();
        let dir_seed = mix_seed(self.seed, u64::MAX);
        let scores: Vec<f64> = (0..self.trials)
            .into_par_iter()
            .map(|k| {
                let r = haar_sample(mix_seed(self.seed, k as u64), d)?;
                let n = lift_with_rows(u, r.rows());
                Ok(lifting_energy(&n, self.metric, self.directions, dir_seed)?.total)
            })
            .collect::<Result<_>>()?;
        let (best, &best_score) = scores
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(a.0.cmp(&b.0)))
            .expect("at least one trial");
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let rotation = haar_sample(mix_seed(self.seed, best as u64), d)?;
        let field = lift_with_rows(u, rotation.rows());
        let energy = lifting_energy(&field, self.metric, self.directions, dir_seed)?
            .with_param("trials", json!(self.trials))
            .with_param("best_trial", json!(best))
            .with_param("min_energy", json!(best_score))
            .with_param("mean_energy", json!(mean))
            .with_param("seed", json!(self.seed));
        let projection_check = projection_check(u, &field)?;
        Ok(LiftResult {
            field,
            rotation: Some(rotation),
            energy,
            projection_check,
        })
    }
}

/// Rotation-search lifting with the default number of averaging directions.
pub fn lift_rotation_search(u: &GridField, trials: usize, seed: u64, metric: Metric) -> Result<LiftResult> {
    RotationSearch::new(trials, seed, metric).run(u)
}

/// Greedy lifting of a sequence: start from the canonical representative, then pick for
/// each next line the representative closest to the previous vector (`+rep` on ties).
pub fn lift_1d(seq: &[ProjPoint]) -> Result<Vec<UnitVector>> {
    let first = seq
        .first()
        .ok_or_else(|| BvError::InvalidArgument("empty sequence".into()))?;
    let d = first.dim();
    let mut out: Vec<UnitVector> = Vec::with_capacity(seq.len());
    out.push(first.rep().clone());
    for u in &seq[1..] {
        if u.dim() != d {
            return Err(BvError::DimensionMismatch {
                expected: d,
                got: u.dim(),
            });
        }
        let prev = out.last().expect("nonempty");
        let rep = u.rep();
        out.push(if geometry::dot(rep.coords(), prev.coords()) < 0.0 {
            -rep
        } else {
            rep.clone()
        });
    }
    Ok(out)
}

/// [`lift_1d`] applied to a one-dimensional grid field. Runs of in-mask cells are lifted
/// independently; cells outside the mask keep their canonical representative.
pub fn lift_1d_field(u: &GridField) -> Result<LiftResult> {
    require_proj(u)?;
    if u.axes() != 1 {
        return Err(BvError::InvalidArgument(format!(
            "greedy lifting needs a one-dimensional grid, got {} axes",
            u.axes()
        )));
    }
    let d = u.d();
    let mut values = u.values().to_vec();
    let mut run: Vec<usize> = Vec::new();
    let flush = |run: &mut Vec<usize>, values: &mut Vec<f64>| -> Result<()> {
        if run.is_empty() {
            return Ok(());
        }
        let seq: Vec<ProjPoint> = run.iter().map(|&c| u.proj_point(c)).collect();
        for (&c, n) in run.iter().zip(lift_1d(&seq)?) {
            values[c * d..(c + 1) * d].copy_from_slice(n.coords());
        }
        run.clear();
        Ok(())
    };
    for c in 0..u.len() {
        if u.in_mask(c) {
            run.push(c);
        } else {
            flush(&mut run, &mut values)?;
        }
    }
    flush(&mut run, &mut values)?;
    let field = u.with_values(ValueKind::Unit, d, values)?;
    let geodesic = avg_directional_energy(&field, 4, 0, Metric::Geodesic)?;
    let euclidean = avg_directional_energy(&field, 4, 0, Metric::EuclideanSphere)?;
    let energy = geodesic.with_param("euclidean_tv", json!(euclidean.total));
    let projection_check = projection_check(u, &field)?;
    Ok(LiftResult {
        field,
        rotation: None,
        energy,
        projection_check,
    })
}

/// In-mask cells with a four-neighbor outside the mask or the grid.
pub fn boundary_cells(f: &GridField) -> Vec<bool> {
    let dims = f.dims();
    let strides = f.strides();
    (0..f.len())
        .map(|c| {
            if !f.in_mask(c) {
                return false;
            }
            (0..dims.len()).any(|a| {
                let k = (c / strides[a]) % dims[a];
                k == 0 || k + 1 == dims[a] || !f.in_mask(c - strides[a]) || !f.in_mask(c + strides[a])
            })
        })
        .collect()
}

/// Lifting with prescribed boundary orientation `n0` (a unit field on the same grid; only
/// its boundary cells are read).
///
/// A first lifting `ñ` comes from rotation search. The signs `ñ·n0 = ±1` on the boundary
/// are extended harmonically to the interior, thresholded at 0, and multiply `ñ`.
/// Boundary cells receive `n0` unchanged.
pub fn lift_with_boundary(u: &GridField, n0: &GridField, trials: usize, seed: u64) -> Result<LiftResult> {
    require_proj(u)?;
    if u.axes() != 2 {
        return Err(BvError::InvalidArgument(
            "boundary lifting needs a 2D grid".into(),
        ));
    }
    if n0.dims() != u.dims() || n0.d() != u.d() {
        return Err(BvError::DimensionMismatch {
            expected: u.len() * u.d(),
            got: n0.len() * n0.d(),
        });
    }
    if n0.kind() != ValueKind::Unit {
        return Err(BvError::InvalidArgument(
            "boundary data must be unit vectors".into(),
        ));
    }
    u.require_nonempty_mask()?;
    let boundary = boundary_cells(u);
    for (c, _) in boundary.iter().enumerate().filter(|(_, &b)| b) {
        if proj_angle(n0.value(c), u.value(c)) > 1e-10 {
            return Err(BvError::BoundaryMismatch { cell: c });
        }
    }
    let first = lift_rotation_search(u, trials, seed, Metric::Geodesic)?;
    let lifted = &first.field;
    let (rows, cols) = (u.dims()[0], u.dims()[1]);
    let free: Vec<bool> = (0..u.len()).map(|c| u.in_mask(c) && !boundary[c]).collect();
    let mut f: Vec<f64> = (0..u.len())
        .map(|c| {
            if boundary[c] {
                if geometry::dot(lifted.value(c), n0.value(c)) < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            } else {
                0.0
            }
        })
        .collect();
    let sweeps = laplace::solve_dirichlet(
        rows,
        cols,
        &free,
        &mut f,
        laplace::RESIDUAL_TOL,
        laplace::MAX_SWEEPS,
    )?;
    let d = u.d();
    let mut values = lifted.values().to_vec();
    for c in 0..u.len() {
        let v = &mut values[c * d..(c + 1) * d];
        if boundary[c] {
            v.copy_from_slice(n0.value(c));
        } else if free[c] && f[c] <= 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let field = u.with_values(ValueKind::Unit, d, values)?;
    let energy = embedded_tv(&field, Metric::EuclideanSphere)?
        .with_param("sweeps", json!(sweeps))
        .with_param("boundary_cells", json!(boundary.iter().filter(|&&b| b).count()))
        .with_param("threshold", json!(0.0));
    let projection_check = projection_check(u, &field)?;
    Ok(LiftResult {
        field,
        rotation: first.rotation,
        energy,
        projection_check,
    })
}

/// The regularized lifting `x ↦ R⁻¹F_ε(R u(x))`, an ℝ^d-valued field with norm ≤ 1.
pub fn lift_eps_regularized(u: &GridField, rotation: &Rotation, eps: f64) -> Result<GridField> {
    require_proj(u)?;
    geometry::check_eps(eps)?;
    if rotation.dim() != u.d() {
        return Err(BvError::DimensionMismatch {
            expected: u.d(),
            got: rotation.dim(),
        });
    }
    let d = u.d();
    let rows = rotation.rows();
    let mut values = u.values().to_vec();
    let mut rotated = vec![0.0; d];
    for v in values.chunks_mut(d) {
        geometry::mat_vec(rows, v, &mut rotated);
        let c = f_eps_scale(eps, &rotated);
        v.iter_mut().for_each(|x| *x *= c);
    }
    u.with_values(ValueKind::Vector, d, values)
}
