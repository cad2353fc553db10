//! BV-energy estimators on grid fields.
//!
//! * [`mollified_energy`]: the double integral `∬ dist(u(x),u(y))/|x-y| ρ_ε(|x-y|)` with a
//!   ball-indicator kernel, optionally extrapolated in ε.
//! * [`avg_directional_energy`]: the average over directions ω of `|D_ω u|(Ω)`, each
//!   evaluated by [`directional_tv`] on a bundle of lines parallel to ω.
//! * [`embedded_tv`]: finite-difference total variation of the embedded field, split
//!   into an absolutely continuous part and a jump part.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{BvError, Result};
use crate::field::{GridField, Metric, ValueKind};
use crate::geometry::{self, chord, proj_angle, sphere_angle, tensor_chord, tensor_embed_into};

const BLOCK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierKind {
    BallIndicator,
}

/// Radial kernel `ρ_ε`: the normalized indicator of the ε-ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub kind: MollifierKind,
    pub eps: f64,
}

impl Mollifier {
    pub fn ball(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(BvError::InvalidArgument(format!(
                "mollifier radius must be positive, got {eps}"
            )));
        }
        Ok(Self {
            kind: MollifierKind::BallIndicator,
            eps,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Mollified,
    DirectionalAvg,
    EmbeddedTv,
    AnalyticRepr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `None` when the estimator does not decompose.
    pub ac_part: Option<f64>,
    pub jump_part: Option<f64>,
    pub total: f64,
    pub metric: Metric,
    pub estimator: Estimator,
    pub params: BTreeMap<String, Value>,
}

impl EnergyReport {
    pub fn decomposed(ac: f64, jump: f64, metric: Metric, estimator: Estimator) -> Self {
        // empty float sums are -0.0
        let (ac, jump) = (ac + 0.0, jump + 0.0);
        Self {
            ac_part: Some(ac),
            jump_part: Some(jump),
            total: ac + jump,
            metric,
            estimator,
            params: BTreeMap::new(),
        }
    }

    pub fn total_only(total: f64, metric: Metric, estimator: Estimator) -> Self {
        Self {
            ac_part: None,
            jump_part: None,
            total,
            metric,
            estimator,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: Value) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

/// Pointwise distance selected by metric and value kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kernel {
    ProjAngle,
    SphereAngle,
    Chord,
    TensorChord,
}

impl Kernel {
    pub(crate) fn select(metric: Metric, kind: ValueKind) -> Result<Self> {
        let unsupported = || BvError::MetricUnsupported {
            metric: metric.name(),
            kind: kind.name(),
        };
        match (metric, kind) {
            (Metric::Geodesic, ValueKind::Proj) => Ok(Kernel::ProjAngle),
            (Metric::Geodesic, ValueKind::Unit) => Ok(Kernel::SphereAngle),
            (Metric::EuclideanSphere, ValueKind::Unit | ValueKind::Vector) => Ok(Kernel::Chord),
            (Metric::EuclideanTensor, ValueKind::Proj | ValueKind::Unit) => Ok(Kernel::TensorChord),
            _ => Err(unsupported()),
        }
    }

    #[inline]
    pub(crate) fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::ProjAngle => proj_angle(a, b),
            Kernel::SphereAngle => sphere_angle(a, b),
            Kernel::Chord => chord(a, b),
            Kernel::TensorChord => tensor_chord(a, b),
        }
    }

    /// The metric length of a jump between lines at angle π/4.
    fn base_threshold(self) -> f64 {
        match self {
            Kernel::ProjAngle | Kernel::SphereAngle => FRAC_PI_4,
            Kernel::Chord => 2.0 * (FRAC_PI_4 / 2.0).sin(),
            Kernel::TensorChord => FRAC_PI_4.sin(),
        }
    }
}

/// Sums `f(block)` over cell blocks in block order.
fn block_sum<T, F>(cells: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync,
{
    let blocks = cells.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| f(b * BLOCK..((b + 1) * BLOCK).min(cells)))
        .collect()
}

/// Nonzero integer offsets `o` with `|o| ≤ radius`, restricted to the half-space whose
/// first nonzero coordinate is positive. Returns the offsets and the full-ball count.
fn half_ball_offsets(axes: usize, radius: f64) -> (Vec<Vec<i64>>, usize) {
    let r = radius.floor() as i64;
    let r2 = radius * radius;
    let mut out = Vec::new();
    let mut full = 0usize;
    let mut o = vec![-r; axes];
    loop {
        let n2: i64 = o.iter().map(|x| x * x).sum();
        if n2 > 0 && (n2 as f64) <= r2 + 1e-9 {
            full += 1;
            if o.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0) {
                out.push(o.clone());
            }
        }
        let mut a = axes;
        loop {
            if a == 0 {
                return (out, full);
            }
            a -= 1;
            o[a] += 1;
            if o[a] <= r {
                break;
            }
            o[a] = -r;
        }
    }
}

/// One ε of the mollified energy.
///
/// The kernel is normalized on the lattice: each cell sees its `count` neighbors within ε
/// with weight `1/count`, which matches `∫ρ_ε = 1` exactly on the grid.
pub fn mollified_energy(f: &GridField, moll: &Mollifier, metric: Metric) -> Result<EnergyReport> {
    let h = f.spacing();
    if moll.eps < 2.0 * h {
        return Err(BvError::UnderResolved {
            eps: moll.eps,
            min: 2.0 * h,
        });
    }
    f.require_nonempty_mask()?;
    let kernel = Kernel::select(metric, f.kind())?;
    let axes = f.axes();
    let dims = f.dims().to_vec();
    let strides = f.strides();
    let (offsets, count) = half_ball_offsets(axes, moll.eps / h);
    let prepared: Vec<(Vec<i64>, isize, f64)> = offsets
        .into_iter()
        .map(|o| {
            let lin: isize = o
                .iter()
                .zip(&strides)
                .map(|(a, s)| *a as isize * *s as isize)
                .sum();
            let len = o.iter().map(|x| (x * x) as f64).sum::<f64>().sqrt();
            (o, lin, 1.0 / len)
        })
        .collect();
    let d = f.d();
    let partial = block_sum(f.len(), |range| {
        let mut s = 0.0;
        let mut idx = vec![0i64; axes];
        for cell in range {
            if !f.in_mask(cell) {
                continue;
            }
            for a in 0..axes {
                idx[a] = ((cell / strides[a]) % dims[a]) as i64;
            }
            let a_val = &f.values()[cell * d..(cell + 1) * d];
            for (o, lin, inv) in &prepared {
                let inside = (0..axes).all(|a| {
                    let k = idx[a] + o[a];
                    k >= 0 && (k as usize) < dims[a]
                });
                if !inside {
                    continue;
                }
                let other = (cell as isize + lin) as usize;
                if !f.in_mask(other) {
                    continue;
                }
                s += kernel.dist(a_val, &f.values()[other * d..(other + 1) * d]) * inv;
            }
        }
        s
    });
    let sum: f64 = partial.into_iter().sum();
    let total = 2.0 * sum * h.powi(axes as i32 - 1) / count as f64;
    Ok(EnergyReport::total_only(total, metric, Estimator::Mollified)
        .with_param("eps", json!(moll.eps))
        .with_param("kernel_count", json!(count)))
}

/// Mollified energy at `ε = k·h` for each `k` in `eps_over_h`, extrapolated to ε → 0 by a
/// least-squares line in ε (a single ε is returned as is).
pub fn mollified_energy_extrapolated(
    f: &GridField,
    eps_over_h: &[f64],
    metric: Metric,
) -> Result<EnergyReport> {
    if eps_over_h.is_empty() {
        return Err(BvError::InvalidArgument(
            "need at least one mollifier radius".into(),
        ));
    }
    let h = f.spacing();
    let mut eps = Vec::new();
    let mut values = Vec::new();
    for &k in eps_over_h {
        let e = k * h;
        let r = mollified_energy(f, &Mollifier::ball(e)?, metric)?;
        eps.push(e);
        values.push(r.total);
    }
    let (intercept, slope) = if eps.len() == 1 {
        (values[0], 0.0)
    } else {
        linear_fit(&eps, &values)
    };
    Ok(EnergyReport::total_only(intercept, metric, Estimator::Mollified)
        .with_param("eps", json!(eps))
        .with_param("values", json!(values))
        .with_param("slope", json!(slope))
        .with_param("extrapolated", json!(eps.len() > 1)))
}

/// Least-squares `y ≈ a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Interp {
    /// Corners sign-aligned to the nearest cell, averaged, normalized.
    AlignedProj,
    /// Corners averaged and normalized.
    Sphere,
    /// Linear in ℝ^d.
    Linear,
    /// Linear in the tensor embedding.
    Tensor,
}

/// Samples a field at arbitrary points by multilinear interpolation over in-mask corners.
struct Sampler<'a> {
    f: &'a GridField,
    interp: Interp,
    strides: Vec<usize>,
    flags: Option<&'a [bool]>,
    width: usize,
}

impl<'a> Sampler<'a> {
    fn new(f: &'a GridField, kernel: Kernel, flags: Option<&'a [bool]>) -> Self {
        let interp = match kernel {
            Kernel::ProjAngle => Interp::AlignedProj,
            Kernel::SphereAngle => Interp::Sphere,
            Kernel::Chord => Interp::Linear,
            Kernel::TensorChord => Interp::Tensor,
        };
        let width = if interp == Interp::Tensor {
            f.d() * f.d()
        } else {
            f.d()
        };
        Self {
            f,
            interp,
            strides: f.strides(),
            flags,
            width,
        }
    }

    /// Evaluates at `y` (cell units, box `[0, dims)`). Returns `None` when the cell
    /// containing `y` is outside the box or the mask; otherwise whether any stencil
    /// corner is flagged.
    fn eval(&self, y: &[f64], out: &mut [f64], tensor: &mut [f64]) -> Option<bool> {
        let f = self.f;
        let dims = f.dims();
        let axes = dims.len();
        let mut nearest = 0usize;
        for a in 0..axes {
            if !(y[a] >= 0.0 && y[a] < dims[a] as f64) {
                return None;
            }
            nearest += (y[a] as usize).min(dims[a] - 1) * self.strides[a];
        }
        if !f.in_mask(nearest) {
            return None;
        }
        let mut base = [0usize; 8];
        let mut frac = [0f64; 8];
        let mut base_lin = 0usize;
        for a in 0..axes {
            let q = (y[a] - 0.5).clamp(0.0, (dims[a] - 1) as f64);
            let b = (q.floor() as usize).min(dims[a].saturating_sub(2));
            base[a] = b;
            frac[a] = q - b as f64;
            base_lin += b * self.strides[a];
        }
        let d = f.d();
        let reference = f.value(nearest);
        out.iter_mut().for_each(|x| *x = 0.0);
        let mut wsum = 0.0;
        let mut flagged = false;
        for corner in 0..(1usize << axes) {
            let mut w = 1.0;
            let mut lin = base_lin;
            for a in 0..axes {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    lin += self.strides[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 || !f.in_mask(lin) {
                continue;
            }
            if let Some(fl) = self.flags {
                flagged |= fl[lin];
            }
            let v = f.value(lin);
            wsum += w;
            match self.interp {
                Interp::AlignedProj => {
                    let s = if geometry::dot(v, reference) < 0.0 { -w } else { w };
                    out.iter_mut().zip(v).for_each(|(o, x)| *o += s * x);
                }
                Interp::Sphere | Interp::Linear => {
                    out.iter_mut().zip(v).for_each(|(o, x)| *o += w * x);
                }
                Interp::Tensor => {
                    tensor_embed_into(v, tensor);
                    out.iter_mut().zip(tensor.iter()).for_each(|(o, x)| *o += w * x);
                }
            }
        }
        match self.interp {
            Interp::AlignedProj | Interp::Sphere => {
                let n = geometry::norm(out);
                if n > 1e-9 {
                    out.iter_mut().for_each(|x| *x /= n);
                } else {
                    out[..d].copy_from_slice(reference);
                }
            }
            Interp::Linear | Interp::Tensor => {
                out.iter_mut().for_each(|x| *x /= wsum);
            }
        }
        Some(flagged)
    }

    fn step(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.interp {
            Interp::AlignedProj => proj_angle(a, b),
            Interp::Sphere => sphere_angle(a, b),
            Interp::Linear | Interp::Tensor => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Directional variation split by whether a step touches a flagged (jump) cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DirectionalParts {
    pub ac: f64,
    pub jump: f64,
}

impl DirectionalParts {
    pub fn total(&self) -> f64 {
        self.ac + self.jump
    }
}

/// Orthonormal basis of `ω^⊥` by Gram-Schmidt against the coordinate axes.
fn complement_basis(omega: &[f64]) -> Vec<Vec<f64>> {
    let n = omega.len();
    let mut basis: Vec<Vec<f64>> = vec![omega.to_vec()];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| omega[i].abs().partial_cmp(&omega[j].abs()).unwrap());
    for &k in &order {
        if basis.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for b in &basis {
            let p = geometry::dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let nv = geometry::norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            basis.push(v);
        }
    }
    basis.remove(0);
    basis
}

/// `|D_ω u|(Ω)` summed over lines parallel to ω spaced `h` apart in every transverse
/// direction, each line sampled every `h` with multilinear interpolation.
pub fn directional_tv(f: &GridField, omega: &[f64], metric: Metric) -> Result<f64> {
    Ok(directional_tv_parts(f, omega, metric, None)?.total())
}

/// [`directional_tv`] with steps touching a cell in `jump_cells` accounted as jump part.
pub fn directional_tv_parts(
    f: &GridField,
    omega: &[f64],
    metric: Metric,
    jump_cells: Option<&[bool]>,
) -> Result<DirectionalParts> {
    let axes = f.axes();
    if omega.len() != axes {
        return Err(BvError::DimensionMismatch {
            expected: axes,
            got: omega.len(),
        });
    }
    if (geometry::norm(omega) - 1.0).abs() > 1e-12 {
        return Err(BvError::NotUnit {
            norm: geometry::norm(omega),
        });
    }
    if axes > 8 {
        return Err(BvError::InvalidArgument(
            "at most 8 spatial axes are supported".into(),
        ));
    }
    f.require_nonempty_mask()?;
    let kernel = Kernel::select(metric, f.kind())?;
    let sampler = Sampler::new(f, kernel, jump_cells);
    let dims = f.dims();
    let center: Vec<f64> = dims.iter().map(|&n| n as f64 / 2.0).collect();
    let basis = complement_basis(omega);
    let half = |v: &[f64]| -> f64 { v.iter().zip(dims).map(|(x, &n)| x.abs() * n as f64 / 2.0).sum() };
    let along = half(omega);
    let steps = (2.0 * along - 1e-9).ceil().max(1.0) as usize;
    let transverse: Vec<(f64, usize)> = basis
        .iter()
        .map(|b| {
            let r = half(b);
            (r, (2.0 * r - 1e-9).ceil().max(1.0) as usize)
        })
        .collect();
    let lines: usize = transverse.iter().map(|t| t.1).product();
    let parts = block_sum(lines, |range| {
        let mut acc = DirectionalParts::default();
        let width = sampler.width;
        let mut prev = vec![0.0; width];
        let mut cur = vec![0.0; width];
        let mut tensor = vec![0.0; f.d() * f.d()];
        let mut origin = vec![0.0; axes];
        let mut y = vec![0.0; axes];
        for line in range {
            origin.copy_from_slice(&center);
            let mut rest = line;
            for (b, &(r, m)) in basis.iter().zip(&transverse) {
                let k = rest % m;
                rest /= m;
                let t = -r + k as f64 + 0.5;
                origin.iter_mut().zip(b).for_each(|(o, x)| *o += t * x);
            }
            let mut have_prev = false;
            let mut prev_flag = false;
            for k in 0..steps {
                let s = -along + k as f64 + 0.5;
                y.iter_mut()
                    .zip(&origin)
                    .zip(omega)
                    .for_each(|((yy, o), w)| *yy = o + s * w);
                match sampler.eval(&y, &mut cur, &mut tensor) {
                    Some(flag) => {
                        if have_prev {
                            let step = sampler.step(&prev, &cur);
                            if flag || prev_flag {
                                acc.jump += step;
                            } else {
                                acc.ac += step;
                            }
                        }
                        std::mem::swap(&mut prev, &mut cur);
                        prev_flag = flag;
                        have_prev = true;
                    }
                    None => have_prev = false,
                }
            }
        }
        acc
    });
    let scale = f.spacing().powi(axes as i32 - 1);
    let mut total = DirectionalParts::default();
    for p in parts {
        total.ac += p.ac;
        total.jump += p.jump;
    }
    total.ac *= scale;
    total.jump *= scale;
    Ok(total)
}

/// Directions for the average over 𝕊^{N-1}: stratified angles on a half circle for
/// `N = 2`, a randomly rotated Fibonacci lattice for `N = 3`, i.i.d. otherwise.
pub fn sample_directions(axes: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match axes {
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|k| {
                let u: f64 = rng.random();
                let a = (k as f64 + u) * PI / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let r = geometry::haar_sample(rng.random(), 3).expect("d = 3");
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    r.apply(&[rho * phi.cos(), rho * phi.sin(), z])
                })
                .collect()
        }
        _ => (0..count)
            .map(|_| loop {
                let v: Vec<f64> = (0..axes).map(|_| StandardNormal.sample(&mut rng)).collect();
                let n = geometry::norm(&v);
                if n > 1e-8 {
                    break v.into_iter().map(|x| x / n).collect();
                }
            })
            .collect(),
    }
}

/// `⨍_{𝕊^{N-1}} |D_ω u|(Ω) dω` estimated over `directions` sampled directions.
pub fn avg_directional_energy(
    f: &GridField,
    directions: usize,
    seed: u64,
    metric: Metric,
) -> Result<EnergyReport> {
    if directions < 4 {
        return Err(BvError::InvalidArgument(format!(
            "need at least 4 directions, got {directions}"
        )));
    }
    f.require_nonempty_mask()?;
    let kernel = Kernel::select(metric, f.kind())?;
    let threshold = default_threshold(f, kernel);
    let faces = jump_faces(f, kernel, threshold);
    let mut flags = vec![false; f.len()];
    let strides = f.strides();
    for face in &faces {
        flags[face.cell] = true;
        flags[face.cell + strides[face.axis]] = true;
    }
    let dirs = sample_directions(f.axes(), directions, seed);
    let per_dir: Vec<DirectionalParts> = dirs
        .par_iter()
        .map(|w| directional_tv_parts(f, w, metric, Some(&flags)))
        .collect::<Result<_>>()?;
    let n = per_dir.len() as f64;
    let ac = per_dir.iter().map(|p| p.ac).sum::<f64>() / n;
    let jump = per_dir.iter().map(|p| p.jump).sum::<f64>() / n;
    let mean = ac + jump;
    let std_error = if per_dir.len() > 1 {
        let var = per_dir.iter().map(|p| (p.total() - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(
        EnergyReport::decomposed(ac, jump, metric, Estimator::DirectionalAvg)
            .with_param("directions", json!(per_dir.len()))
            .with_param("seed", json!(seed))
            .with_param("std_error", json!(std_error))
            .with_param("jump_threshold", json!(threshold)),
    )
}

/// A grid face between `cell` and its neighbor `cell + e_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpFace {
    pub cell: usize,
    pub axis: usize,
    pub cost: f64,
}

/// Calls `visit(cell, axis, neighbor)` for every face with both cells in the mask.
fn for_each_face(f: &GridField, cells: std::ops::Range<usize>, mut visit: impl FnMut(usize, usize, usize)) {
    let dims = f.dims();
    let strides = f.strides();
    for cell in cells {
        if !f.in_mask(cell) {
            continue;
        }
        for a in 0..dims.len() {
            if (cell / strides[a]) % dims[a] + 1 < dims[a] {
                let nb = cell + strides[a];
                if f.in_mask(nb) {
                    visit(cell, a, nb);
                }
            }
        }
    }
}

/// Median metric step over all in-mask faces (0 when there are none).
fn median_face_step(f: &GridField, kernel: Kernel) -> f64 {
    let parts = block_sum(f.len(), |range| {
        let mut v = Vec::new();
        for_each_face(f, range, |c, _, nb| v.push(kernel.dist(f.value(c), f.value(nb))));
        v
    });
    let mut steps: Vec<f64> = parts.into_iter().flatten().collect();
    if steps.is_empty() {
        return 0.0;
    }
    let mid = steps.len() / 2;
    let (_, m, _) = steps.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
    *m
}

fn default_threshold(f: &GridField, kernel: Kernel) -> f64 {
    kernel.base_threshold().max(8.0 * median_face_step(f, kernel))
}

/// The scale-aware jump threshold: `max(base, 8·median face step)`, where the base is the
/// metric length of a π/4 rotation.
pub fn default_jump_threshold(f: &GridField, metric: Metric) -> Result<f64> {
    Ok(default_threshold(f, Kernel::select(metric, f.kind())?))
}

fn jump_faces(f: &GridField, kernel: Kernel, threshold: f64) -> Vec<JumpFace> {
    block_sum(f.len(), |range| {
        let mut v = Vec::new();
        for_each_face(f, range, |c, a, nb| {
            let cost = kernel.dist(f.value(c), f.value(nb));
            if cost > threshold {
                v.push(JumpFace {
                    cell: c,
                    axis: a,
                    cost,
                });
            }
        });
        v
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Faces whose metric step exceeds `threshold`, in cell order.
pub fn detect_jumps(f: &GridField, metric: Metric, threshold: f64) -> Result<Vec<JumpFace>> {
    if !(threshold > 0.0) {
        return Err(BvError::InvalidArgument(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let kernel = Kernel::select(metric, f.kind())?;
    Ok(jump_faces(f, kernel, threshold))
}

/// Finite-difference TV of the embedded field with the default jump threshold.
pub fn embedded_tv(f: &GridField, metric: Metric) -> Result<EnergyReport> {
    let kernel = Kernel::select(metric, f.kind())?;
    embedded_tv_with_threshold(f, metric, default_threshold(f, kernel))
}

/// Finite-difference TV of the embedded field.
///
/// The ac part sums `h^N |∇_h E(u)|_F` over cells without a jump on a forward face, with
/// one-sided differences where a neighbor is missing. Each jump face contributes
/// `cost · h^{N-1}` scaled by `|c|₂/|c|₁`, where `c` counts jump faces per axis in a
/// window around the face, so that staircase interfaces are measured by their length.
pub fn embedded_tv_with_threshold(f: &GridField, metric: Metric, threshold: f64) -> Result<EnergyReport> {
    f.require_nonempty_mask()?;
    let kernel = Kernel::select(metric, f.kind())?;
    let faces = jump_faces(f, kernel, threshold);
    let axes = f.axes();
    let dims = f.dims().to_vec();
    let strides = f.strides();
    let h = f.spacing();
    let mut jump_face = vec![vec![false; f.len()]; axes];
    for face in &faces {
        jump_face[face.axis][face.cell] = true;
    }
    let d = f.d();
    let width = if kernel == Kernel::TensorChord { d * d } else { d };

    let ac_parts = block_sum(f.len(), |range| {
        let mut s = 0.0;
        let mut ea = vec![0.0; width];
        let mut eb = vec![0.0; width];
        for cell in range {
            if !f.in_mask(cell) || (0..axes).any(|a| jump_face[a][cell]) {
                continue;
            }
            let mut sq = 0.0;
            for a in 0..axes {
                let k = (cell / strides[a]) % dims[a];
                let fwd = (k + 1 < dims[a])
                    .then(|| cell + strides[a])
                    .filter(|&c| f.in_mask(c));
                let pair = match fwd {
                    Some(nb) => Some((cell, nb)),
                    None => (k > 0)
                        .then(|| cell - strides[a])
                        .filter(|&c| f.in_mask(c) && !jump_face[a][c])
                        .map(|c| (c, cell)),
                };
                if let Some((lo, hi)) = pair {
                    sq += match kernel {
                        Kernel::ProjAngle | Kernel::SphereAngle => {
                            kernel.dist(f.value(lo), f.value(hi)).powi(2)
                        }
                        Kernel::Chord => chord(f.value(lo), f.value(hi)).powi(2),
                        Kernel::TensorChord => {
                            tensor_embed_into(f.value(lo), &mut ea);
                            tensor_embed_into(f.value(hi), &mut eb);
                            ea.iter().zip(&eb).map(|(x, y)| (x - y) * (x - y)).sum()
                        }
                    };
                }
            }
            s += sq.sqrt();
        }
        s
    });
    let ac = ac_parts.into_iter().sum::<f64>() * h.powi(axes as i32 - 1);

    let radius = 3i64;
    let jump: f64 = faces
        .iter()
        .map(|face| {
            let idx: Vec<i64> = (0..axes)
                .map(|a| ((face.cell / strides[a]) % dims[a]) as i64)
                .collect();
            let mut counts = vec![0.0f64; axes];
            let mut o = vec![-radius; axes];
            'window: loop {
                let inside = (0..axes).all(|a| {
                    let k = idx[a] + o[a];
                    k >= 0 && (k as usize) < dims[a]
                });
                if inside {
                    let c: usize = (0..axes).map(|a| (idx[a] + o[a]) as usize * strides[a]).sum();
                    for (a, cnt) in counts.iter_mut().enumerate() {
                        if jump_face[a][c] {
                            *cnt += 1.0;
                        }
                    }
                }
                let mut a = axes;
                loop {
                    if a == 0 {
                        break 'window;
                    }
                    a -= 1;
                    o[a] += 1;
                    if o[a] <= radius {
                        break;
                    }
                    o[a] = -radius;
                }
            }
            let l1: f64 = counts.iter().sum();
            let l2 = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
            face.cost * l2 / l1
        })
        .sum::<f64>()
        * h.powi(axes as i32 - 1);

    Ok(EnergyReport::decomposed(ac, jump, metric, Estimator::EmbeddedTv)
        .with_param("jump_threshold", json!(threshold))
        .with_param("jump_faces", json!(faces.len())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridField;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn unit_square(n: usize, d: usize, kind: ValueKind, f: impl Fn(&[f64]) -> Vec<f64>) -> GridField {
        GridField::from_fn(vec![n, n], 1.0 / n as f64, vec![0.0, 0.0], d, kind, None, f).unwrap()
    }

    fn x_jump(n: usize) -> GridField {
        unit_square(n, 2, ValueKind::Proj, |x| {
            if x[0] < 0.5 {
                vec![1.0, 0.0]
            } else {
                vec![0.0, 1.0]
            }
        })
    }

    #[test]
    fn constant_field_has_zero_energy() {
        let f = unit_square(32, 3, ValueKind::Proj, |_| vec![0.0, 0.6, 0.8]);
        for m in [Metric::Geodesic, Metric::EuclideanTensor] {
            // interpolation weights round at the ulp level
            assert!(directional_tv(&f, &[0.6, 0.8], m).unwrap() < 1e-12);
            assert!(avg_directional_energy(&f, 8, 1, m).unwrap().total < 1e-12);
            assert_eq!(embedded_tv(&f, m).unwrap().total, 0.0);
            let r = mollified_energy(&f, &Mollifier::ball(4.0 / 32.0).unwrap(), m).unwrap();
            assert_eq!(r.total, 0.0);
        }
    }

    #[test]
    fn directional_jump_field() {
        let f = x_jump(64);
        let v = directional_tv(&f, &[1.0, 0.0], Metric::Geodesic).unwrap();
        assert!((v - FRAC_PI_2).abs() < 0.02 * FRAC_PI_2, "{v}");
        assert_eq!(directional_tv(&f, &[0.0, 1.0], Metric::Geodesic).unwrap(), 0.0);
        let w = [FRAC_PI_4.cos(), FRAC_PI_4.sin()];
        let v = directional_tv(&f, &w, Metric::Geodesic).unwrap();
        assert!((v - FRAC_PI_2 * w[0]).abs() < 0.03 * FRAC_PI_2, "{v}");
        let avg = avg_directional_energy(&f, 64, 3, Metric::Geodesic).unwrap();
        let expected = 2.0 / PI * FRAC_PI_2;
        assert!((avg.total - expected).abs() < 0.03 * expected, "{avg:?}");
        assert!(avg.jump_part.unwrap() > 0.95 * avg.total);
    }

    #[test]
    fn directional_smooth_field() {
        let s = 1.3;
        let f = unit_square(64, 2, ValueKind::Proj, |x| {
            let g = s * x[0];
            vec![g.cos(), g.sin()]
        });
        let avg = avg_directional_energy(&f, 64, 5, Metric::Geodesic).unwrap();
        let expected = 2.0 / PI * s;
        assert!((avg.total - expected).abs() < 0.03 * expected, "{avg:?}");
        assert_eq!(avg.jump_part.unwrap(), 0.0);
    }

    #[test]
    fn embedded_sphere_jump() {
        let f = unit_square(64, 2, ValueKind::Unit, |x| {
            if x[0] < 0.5 {
                vec![1.0, 0.0]
            } else {
                vec![-1.0, 0.0]
            }
        });
        let r = embedded_tv(&f, Metric::EuclideanSphere).unwrap();
        assert!((r.total - 2.0).abs() < 0.06, "{r:?}");
        assert_eq!(r.ac_part, Some(0.0));
        assert!(matches!(
            embedded_tv(&f.project().unwrap(), Metric::EuclideanSphere),
            Err(BvError::MetricUnsupported { .. })
        ));
    }

    #[test]
    fn diagonal_seam_is_measured_by_length() {
        let f = unit_square(128, 2, ValueKind::Unit, |x| {
            if x[0] + x[1] < 1.0 {
                vec![1.0, 0.0]
            } else {
                vec![-1.0, 0.0]
            }
        });
        let r = embedded_tv(&f, Metric::EuclideanSphere).unwrap();
        let expected = 2.0 * 2f64.sqrt();
        assert!((r.total - expected).abs() < 0.03 * expected, "{r:?}");
    }

    #[test]
    fn mollified_one_dimensional_jump() {
        let f = GridField::from_fn(
            vec![256],
            2.0 / 256.0,
            vec![-1.0],
            2,
            ValueKind::Proj,
            None,
            |x| {
                if x[0] < 0.0 {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                }
            },
        )
        .unwrap();
        let r = mollified_energy_extrapolated(&f, &[8.0, 16.0, 32.0], Metric::Geodesic).unwrap();
        assert!((r.total - FRAC_PI_2).abs() < 0.05 * FRAC_PI_2, "{r:?}");
        assert!(matches!(
            mollified_energy(&f, &Mollifier::ball(f.spacing()).unwrap(), Metric::Geodesic),
            Err(BvError::UnderResolved { .. })
        ));
        let avg = avg_directional_energy(&f, 4, 0, Metric::Geodesic).unwrap();
        assert!((avg.total - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn half_ball_offsets_cover_the_ball() {
        let (half, full) = half_ball_offsets(2, 2.0);
        assert_eq!(full, 12);
        assert_eq!(half.len(), 6);
        let (half, full) = half_ball_offsets(1, 3.0);
        assert_eq!((half.len(), full), (3, 6));
    }

    #[test]
    fn detect_jumps_finds_the_seam() {
        let f = x_jump(16);
        let faces = detect_jumps(&f, Metric::Geodesic, FRAC_PI_4).unwrap();
        assert_eq!(faces.len(), 16);
        assert!(faces
            .iter()
            .all(|j| j.axis == 0 && (j.cost - FRAC_PI_2).abs() < 1e-12));
        assert!(detect_jumps(&f, Metric::Geodesic, 0.0).is_err());
    }
}
