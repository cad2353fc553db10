//! Pointwise geometry of the sphere and of real projective space.
//!
//! Points of 𝕊^{d-1} are [`UnitVector`]s, points of ℝP^{d-1} are [`ProjPoint`]s
//! stored through a canonical representative. The lifting maps `F`, `F_R = R⁻¹F(R·)`
//! and their regularizations only ever flip or rescale the representative they are
//! given, so every lifting produced here projects back onto its input exactly.
//!
//! Most functions come in two flavors: a typed one working on the domain types and a
//! slice one (`*_slice`, or taking `&[f64]`) used by the grid estimators in inner loops.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{BvError, Result};

const UNIT_TOL: f64 = 1e-12;
const ROTATION_TOL: f64 = 1e-10;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `|a - b|` and `|a + b|` in one pass.
#[inline]
fn diff_sum_norms(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut dm = 0.0;
    let mut dp = 0.0;
    for (x, y) in a.iter().zip(b) {
        dm += (x - y) * (x - y);
        dp += (x + y) * (x + y);
    }
    (dm.sqrt(), dp.sqrt())
}

/// Angle between two unit vectors.
///
/// Uses `2·atan2(|a-b|, |a+b|)`, which equals `arccos(a·b)` on the sphere but stays
/// accurate near 0 and π and returns exactly 0 for identical inputs.
#[inline]
pub fn sphere_angle(a: &[f64], b: &[f64]) -> f64 {
    let (dm, dp) = diff_sum_norms(a, b);
    2.0 * dm.atan2(dp)
}

/// Projective angle `min(θ, π-θ)` between the lines spanned by `a` and `b`.
#[inline]
pub fn proj_angle(a: &[f64], b: &[f64]) -> f64 {
    let (dm, dp) = diff_sum_norms(a, b);
    if dm <= dp {
        2.0 * dm.atan2(dp)
    } else {
        2.0 * dp.atan2(dm)
    }
}

/// `(1/√2)|a⊗a - b⊗b|_F = sin θ`, evaluated as `|a-b||a+b|/2`.
#[inline]
pub fn tensor_chord(a: &[f64], b: &[f64]) -> f64 {
    let (dm, dp) = diff_sum_norms(a, b);
    0.5 * dm * dp
}

#[inline]
pub fn chord(a: &[f64], b: &[f64]) -> f64 {
    diff_sum_norms(a, b).0
}

/// Sign `s` such that `s·v` is the canonical representative of `[v]`: the first
/// coordinate of largest absolute value is made nonnegative.
#[inline]
pub fn canonical_sign(v: &[f64]) -> f64 {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (i, x) in v.iter().enumerate() {
        let a = x.abs();
        if a > best_abs {
            best_abs = a;
            best = i;
        }
    }
    if v[best] < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Writes `(1/√2) v⊗v` (row-major, `d²` entries) into `out`.
#[inline]
pub fn tensor_embed_into(v: &[f64], out: &mut [f64]) {
    let d = v.len();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = s * v[i] * v[j];
        }
    }
}

/// Sign `s` with `F(v) = s·v`, where `F` keeps the upper hemisphere (`v·e_d > 0`).
/// On the equator the canonical representative is returned.
#[inline]
pub fn f_sign(v: &[f64]) -> f64 {
    let last = v[v.len() - 1];
    if last > 0.0 {
        1.0
    } else if last < 0.0 {
        -1.0
    } else {
        canonical_sign(v)
    }
}

/// Sign `s` with `L_R([rep]) = R⁻¹F(R·rep) = s·rep`.
///
/// `rotation` is a row-major `d×d` buffer. Only the last row is needed unless
/// `R·rep` falls on the equator.
#[inline]
pub fn lr_sign(rotation: &[f64], rep: &[f64]) -> f64 {
    let d = rep.len();
    let last = dot(&rotation[(d - 1) * d..d * d], rep);
    if last > 0.0 {
        1.0
    } else if last < 0.0 {
        -1.0
    } else {
        let mut rotated = vec![0.0; d];
        mat_vec(rotation, rep, &mut rotated);
        canonical_sign(&rotated)
    }
}

/// Row-major `d×d` matrix times vector.
#[inline]
pub fn mat_vec(m: &[f64], v: &[f64], out: &mut [f64]) {
    let d = v.len();
    for i in 0..d {
        out[i] = dot(&m[i * d..(i + 1) * d], v);
    }
}

/// A point of the unit sphere 𝕊^{d-1}, `d ≥ 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(BvError::InvalidArgument(format!(
                "ambient dimension must be at least 2, got {}",
                coords.len()
            )));
        }
        let n = norm(&coords);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(BvError::NotUnit { norm: n });
        }
        Ok(Self { coords })
    }

    /// Normalizes `v` onto the sphere.
    pub fn normalized(v: Vec<f64>) -> Result<Self> {
        let n = norm(&v);
        if !(n > 0.0) || !n.is_finite() {
            return Err(BvError::NotUnit { norm: n });
        }
        Self::new(v.into_iter().map(|x| x / n).collect())
    }

    /// The `k`-th standard basis vector of ℝ^d (0-based).
    pub fn basis(d: usize, k: usize) -> Self {
        let mut coords = vec![0.0; d];
        coords[k] = 1.0;
        Self { coords }
    }

    /// `cos(a) e_i + sin(a) e_j`.
    pub fn in_plane(d: usize, i: usize, j: usize, angle: f64) -> Self {
        let mut coords = vec![0.0; d];
        coords[i] = angle.cos();
        coords[j] = angle.sin();
        Self { coords }
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.coords, &other.coords)
    }
}

impl std::ops::Neg for &UnitVector {
    type Output = UnitVector;
    fn neg(self) -> UnitVector {
        UnitVector {
            coords: self.coords.iter().map(|x| -x).collect(),
        }
    }
}

impl std::ops::Neg for UnitVector {
    type Output = UnitVector;
    fn neg(self) -> UnitVector {
        -&self
    }
}

/// A point `[n] = {±n}` of ℝP^{d-1}, stored by its canonical representative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjPoint {
    rep: UnitVector,
}

impl ProjPoint {
    pub fn new(n: UnitVector) -> Self {
        let s = canonical_sign(n.coords());
        if s < 0.0 {
            Self { rep: -n }
        } else {
            Self { rep: n }
        }
    }

    pub fn from_coords(v: Vec<f64>) -> Result<Self> {
        UnitVector::new(v).map(Self::new)
    }

    pub fn rep(&self) -> &UnitVector {
        &self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    /// Whether `n` is one of the two representatives of this class.
    pub fn contains(&self, n: &UnitVector) -> bool {
        n.dim() == self.dim() && proj_angle(n.coords(), self.rep.coords()) == 0.0
    }
}

impl From<UnitVector> for ProjPoint {
    fn from(n: UnitVector) -> Self {
        ProjPoint::new(n)
    }
}

/// An element of SO(d).
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    matrix: DMatrix<f64>,
    /// Row-major copy for the slice kernels.
    rows: Vec<f64>,
}

impl Rotation {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d {
            return Err(BvError::DimensionMismatch {
                expected: d,
                got: matrix.ncols(),
            });
        }
        let residual = (matrix.transpose() * &matrix - DMatrix::<f64>::identity(d, d)).norm();
        if residual > ROTATION_TOL {
            return Err(BvError::InvalidArgument(format!(
                "matrix is not orthogonal (residual {residual:e})"
            )));
        }
        let det = matrix.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(BvError::InvalidArgument(format!(
                "rotation must have determinant +1, got {det}"
            )));
        }
        Ok(Self::from_matrix_unchecked(matrix))
    }

    fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        let d = matrix.nrows();
        let mut rows = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                rows[i * d + j] = matrix[(i, j)];
            }
        }
        Self { matrix, rows }
    }

    fn from_rows(rows: Vec<f64>, d: usize) -> Self {
        let matrix = DMatrix::from_row_slice(d, d, &rows);
        Self { matrix, rows }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::identity(d, d))
    }

    /// Rotation by `angle` in the oriented `(e_i, e_j)` plane, identity elsewhere.
    pub fn plane(d: usize, i: usize, j: usize, angle: f64) -> Self {
        let mut m = DMatrix::identity(d, d);
        let (s, c) = angle.sin_cos();
        m[(i, i)] = c;
        m[(j, j)] = c;
        m[(j, i)] = s;
        m[(i, j)] = -s;
        Self::from_matrix_unchecked(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Row-major entries.
    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        mat_vec(&self.rows, v, &mut out);
        out
    }

    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        let d = v.len();
        (0..d)
            .map(|j| (0..d).map(|i| self.rows[i * d + j] * v[i]).sum())
            .collect()
    }

    pub fn orthogonality_residual(&self) -> f64 {
        let d = self.dim();
        (self.matrix.transpose() * &self.matrix - DMatrix::<f64>::identity(d, d)).norm()
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|i| self.rows[i * d..(i + 1) * d].to_vec()).collect()
    }
}

/// A symmetric `d×d` matrix, used for `Φ([n]) = n⊗n/√2` and for uniaxial Q-tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct QTensor {
    matrix: DMatrix<f64>,
}

impl QTensor {
    /// Uniaxial tensor `s(n⊗n - I/d)` with order parameter `s ≠ 0`.
    pub fn uniaxial(u: &ProjPoint, s: f64) -> Self {
        let n = u.rep().coords();
        let d = n.len();
        let v = nalgebra::DVector::from_column_slice(n);
        let m = (&v * v.transpose() - DMatrix::identity(d, d) / d as f64) * s;
        Self { matrix: m }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn frobenius_distance(&self, other: &QTensor) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(BvError::DimensionMismatch { expected: a, got: b })
    } else {
        Ok(())
    }
}

/// Geodesic distance on 𝕊^{d-1}, in `[0, π]`.
pub fn dist_sphere(n: &UnitVector, m: &UnitVector) -> Result<f64> {
    check_dims(n.dim(), m.dim())?;
    Ok(sphere_angle(n.coords(), m.coords()))
}

/// Geodesic distance on ℝP^{d-1}, in `[0, π/2]`.
pub fn dist_proj(u: &ProjPoint, v: &ProjPoint) -> Result<f64> {
    check_dims(u.dim(), v.dim())?;
    Ok(proj_angle(u.rep().coords(), v.rep().coords()))
}

/// The tensor embedding `Φ([n]) = n⊗n/√2`.
pub fn embed_tensor(u: &ProjPoint) -> QTensor {
    let n = u.rep().coords();
    let d = n.len();
    let mut buf = vec![0.0; d * d];
    tensor_embed_into(n, &mut buf);
    QTensor {
        matrix: DMatrix::from_row_slice(d, d, &buf),
    }
}

/// Euclidean jump cost `|Φ(u) - Φ(v)|_F = sin θ`.
pub fn eucl_jump_cost(u: &ProjPoint, v: &ProjPoint) -> Result<f64> {
    check_dims(u.dim(), v.dim())?;
    Ok(tensor_chord(u.rep().coords(), v.rep().coords()))
}

/// The symmetric hemisphere map `F`.
pub fn lift_map_f(n: &UnitVector) -> UnitVector {
    let s = f_sign(n.coords());
    UnitVector::from_raw(n.coords().iter().map(|x| s * x).collect())
}

/// The lifting `L_R([n]) = R⁻¹F(R n)`; always returns `±rep`.
pub fn lift_map_lr(rotation: &Rotation, u: &ProjPoint) -> Result<UnitVector> {
    check_dims(rotation.dim(), u.dim())?;
    let rep = u.rep().coords();
    let s = lr_sign(rotation.rows(), rep);
    Ok(UnitVector::from_raw(rep.iter().map(|x| s * x).collect()))
}

/// Scalar `c` with `F_ε(v) = c·v`.
#[inline]
pub fn f_eps_scale(eps: f64, v: &[f64]) -> f64 {
    let t = v[v.len() - 1];
    if t >= eps {
        1.0
    } else if t <= -eps {
        -1.0
    } else {
        t / eps
    }
}

/// The Lipschitz regularization `F_ε` of `F`; ℝ^d-valued with norm ≤ 1.
pub fn lift_map_f_eps(eps: f64, n: &UnitVector) -> Result<Vec<f64>> {
    check_eps(eps)?;
    let c = f_eps_scale(eps, n.coords());
    Ok(n.coords().iter().map(|x| c * x).collect())
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(BvError::InvalidArgument(format!(
            "regularization parameter must lie in (0, 1], got {eps}"
        )));
    }
    Ok(())
}

/// Haar-distributed rotations of SO(d) from a seeded stream.
///
/// A Gaussian matrix is orthonormalized column by column (QR with positive diagonal
/// in the triangular factor), and the first column is negated when the result has
/// determinant −1.
pub struct HaarSampler {
    rng: ChaCha8Rng,
    d: usize,
    scratch: Vec<f64>,
}

impl HaarSampler {
    pub fn new(seed: u64, d: usize) -> Self {
        assert!(d >= 2, "SO(d) needs d >= 2");
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            d,
            scratch: vec![0.0; d * d],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Fills `out` (row-major `d×d`) with the next rotation.
    pub fn sample_into(&mut self, out: &mut [f64]) {
        let d = self.d;
        for x in out.iter_mut() {
            *x = StandardNormal.sample(&mut self.rng);
        }
        // Modified Gram-Schmidt on columns, two passes so that orthogonality holds to
        // rounding even for ill-conditioned draws.
        for j in 0..d {
            for _ in 0..2 {
                for k in 0..j {
                    let mut p = 0.0;
                    for i in 0..d {
                        p += out[i * d + k] * out[i * d + j];
                    }
                    for i in 0..d {
                        out[i * d + j] -= p * out[i * d + k];
                    }
                }
            }
            let mut nn = 0.0;
            for i in 0..d {
                nn += out[i * d + j] * out[i * d + j];
            }
            let nn = nn.sqrt();
            for i in 0..d {
                out[i * d + j] /= nn;
            }
        }
        if determinant_sign(out, d, &mut self.scratch) < 0.0 {
            for i in 0..d {
                out[i * d] = -out[i * d];
            }
        }
    }

    pub fn sample(&mut self) -> Rotation {
        let mut rows = vec![0.0; self.d * self.d];
        self.sample_into(&mut rows);
        Rotation::from_rows(rows, self.d)
    }
}

/// Sign of the determinant by Gaussian elimination with partial pivoting.
fn determinant_sign(m: &[f64], d: usize, scratch: &mut [f64]) -> f64 {
    scratch.copy_from_slice(m);
    let a = scratch;
    let mut sign = 1.0;
    for col in 0..d {
        let mut piv = col;
        for r in col + 1..d {
            if a[r * d + col].abs() > a[piv * d + col].abs() {
                piv = r;
            }
        }
        if a[piv * d + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for k in 0..d {
                a.swap(piv * d + k, col * d + k);
            }
            sign = -sign;
        }
        let p = a[col * d + col];
        if p < 0.0 {
            sign = -sign;
        }
        for r in col + 1..d {
            let f = a[r * d + col] / p;
            for k in col..d {
                a[r * d + k] -= f * a[col * d + k];
            }
        }
    }
    sign
}

/// One Haar rotation, deterministic in `seed`.
pub fn haar_sample(seed: u64, d: usize) -> Result<Rotation> {
    if d < 2 {
        return Err(BvError::InvalidArgument(format!("SO(d) needs d >= 2, got {d}")));
    }
    Ok(HaarSampler::new(seed, d).sample())
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn e(d: usize, k: usize) -> UnitVector {
        UnitVector::basis(d, k)
    }

    #[test]
    fn sphere_distance_examples() {
        assert_eq!(dist_sphere(&e(3, 0), &e(3, 0)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            dist_sphere(&e(3, 0), &e(3, 1)).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(dist_sphere(&e(3, 0), &-e(3, 0)).unwrap(), PI, epsilon = 1e-15);
        assert!(matches!(
            dist_sphere(&e(2, 0), &e(3, 0)),
            Err(BvError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projective_distance_examples() {
        let p = |v: UnitVector| ProjPoint::new(v);
        assert_eq!(dist_proj(&p(e(2, 0)), &p(-e(2, 0))).unwrap(), 0.0);
        assert_abs_diff_eq!(
            dist_proj(&p(e(2, 0)), &p(e(2, 1))).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        let a = UnitVector::in_plane(2, 0, 1, 0.0);
        let b = UnitVector::in_plane(2, 0, 1, 2.0 * FRAC_PI_3);
        assert_abs_diff_eq!(dist_proj(&p(a), &p(b)).unwrap(), FRAC_PI_3, epsilon = 1e-14);
    }

    #[test]
    fn canonical_representative_rule() {
        let u = ProjPoint::from_coords(vec![0.6, -0.8]).unwrap();
        assert_eq!(u.rep().coords(), &[-0.6, 0.8]);
        // tie on |x| goes to the lowest index
        let t = ProjPoint::from_coords(vec![-FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert_eq!(t.rep().coords(), &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]);
    }

    #[test]
    fn tensor_embedding_examples() {
        let q = embed_tensor(&ProjPoint::new(e(2, 0)));
        assert_abs_diff_eq!(q.matrix()[(0, 0)], FRAC_1_SQRT_2, epsilon = 1e-16);
        assert_eq!(q.matrix()[(0, 1)], 0.0);
        assert_eq!(q.matrix()[(1, 1)], 0.0);
        let diag = ProjPoint::from_coords(vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let q = embed_tensor(&diag);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(q.matrix()[(i, j)], FRAC_1_SQRT_2 * 0.5, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(q.matrix().norm(), FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn uniaxial_q_tensor_is_traceless() {
        let u = ProjPoint::from_coords(vec![0.0, 0.6, 0.8]).unwrap();
        let q = QTensor::uniaxial(&u, 0.7);
        assert_abs_diff_eq!(q.trace(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((q.matrix() - q.matrix().transpose()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn euclidean_jump_cost_examples() {
        let a = ProjPoint::new(e(3, 0));
        assert_abs_diff_eq!(
            eucl_jump_cost(&a, &ProjPoint::new(e(3, 2))).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(eucl_jump_cost(&a, &ProjPoint::new(-e(3, 0))).unwrap(), 0.0);
        // θ = π/4 against the Frobenius distance of the embedded tensors
        let b = ProjPoint::new(UnitVector::in_plane(3, 0, 1, FRAC_PI_4));
        let frob = embed_tensor(&a).frobenius_distance(&embed_tensor(&b));
        let cost = eucl_jump_cost(&a, &b).unwrap();
        assert_abs_diff_eq!(frob, 2f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cost, frob, epsilon = 1e-12);
    }

    #[test]
    fn hemisphere_map_examples() {
        assert_eq!(lift_map_f(&e(3, 2)), e(3, 2));
        assert_eq!(lift_map_f(&-e(3, 2)), e(3, 2));
        let n = UnitVector::normalized(vec![0.5, 0.0, -0.3]).unwrap();
        assert!(n.coords()[2] < 0.0);
        assert_eq!(lift_map_f(&n), -&n);
        // equator: canonical representative
        assert_eq!(lift_map_f(&-e(3, 0)), e(3, 0));
    }

    #[test]
    fn rotated_lifting_examples() {
        let u = ProjPoint::new(e(3, 2));
        assert_eq!(lift_map_lr(&Rotation::identity(3), &u).unwrap(), e(3, 2));
        // rotation by π in the (e_{d-1}, e_d) plane sends e_d to -e_d; F flips it back up,
        // and R⁻¹ e_d = -e_d
        let r = Rotation::plane(3, 1, 2, PI);
        let direct = {
            let rn = r.apply(u.rep().coords());
            let f = lift_map_f(&UnitVector::from_raw(rn));
            r.apply_inverse(f.coords())
        };
        let lifted = lift_map_lr(&r, &u).unwrap();
        for (a, b) in lifted.coords().iter().zip(&direct) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(lifted.coords()[2], -1.0, epsilon = 0.0);
    }

    #[test]
    fn regularized_map_examples() {
        assert_eq!(lift_map_f_eps(0.1, &e(3, 2)).unwrap(), vec![0.0, 0.0, 1.0]);
        let n = UnitVector::normalized(vec![(1.0f64 - 0.0625).sqrt(), 0.0, 0.25]).unwrap();
        let out = lift_map_f_eps(0.5, &n).unwrap();
        for (a, b) in out.iter().zip(n.coords()) {
            assert_abs_diff_eq!(*a, 0.5 * b, epsilon = 1e-15);
        }
        assert_eq!(lift_map_f_eps(0.5, &e(3, 0)).unwrap(), vec![0.0, 0.0, 0.0]);
        assert!(lift_map_f_eps(0.0, &e(3, 0)).is_err());
        assert!(lift_map_f_eps(1.5, &e(3, 0)).is_err());
    }

    #[test]
    fn haar_samples_are_rotations() {
        for d in 2..=5 {
            let mut s = HaarSampler::new(17, d);
            for _ in 0..2000 {
                let r = s.sample();
                assert!(r.orthogonality_residual() < 1e-10);
                assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-10);
            }
        }
        assert_eq!(haar_sample(5, 3).unwrap(), haar_sample(5, 3).unwrap());
        assert!(haar_sample(5, 1).is_err());
    }

    #[test]
    fn rotation_validation() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(Rotation::from_matrix(m).is_err());
        let r = Rotation::plane(4, 0, 3, 0.3);
        assert!(Rotation::from_matrix(r.matrix().clone()).is_ok());
    }

    fn unit_strategy(d: usize) -> impl Strategy<Value = UnitVector> {
        proptest::collection::vec(-1.0f64..1.0, d)
            .prop_filter("nonzero", |v| norm(v) > 1e-3)
            .prop_map(|v| UnitVector::normalized(v).unwrap())
    }

    proptest! {
        #[test]
        fn canonicalization_is_sign_invariant_and_idempotent(n in unit_strategy(4)) {
            let a = ProjPoint::new(n.clone());
            let b = ProjPoint::new(-&n);
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(ProjPoint::new(a.rep().clone()), a.clone());
        }

        #[test]
        fn projective_distance_bounds((n, m) in (unit_strategy(3), unit_strategy(3))) {
            let ds = dist_sphere(&n, &m).unwrap();
            let dp = dist_proj(&ProjPoint::new(n.clone()), &ProjPoint::new(m.clone())).unwrap();
            prop_assert!(dp <= ds + 1e-15);
            prop_assert!((0.0..=FRAC_PI_2 + 1e-15).contains(&dp));
            let flipped = dist_proj(&ProjPoint::new(-&n), &ProjPoint::new(m.clone())).unwrap();
            prop_assert!((flipped - dp).abs() < 1e-14);
        }

        #[test]
        fn jump_cost_matches_tensor_distance((n, m) in (unit_strategy(3), unit_strategy(3))) {
            let u = ProjPoint::new(n);
            let v = ProjPoint::new(m);
            let frob = embed_tensor(&u).frobenius_distance(&embed_tensor(&v));
            prop_assert!((eucl_jump_cost(&u, &v).unwrap() - frob).abs() < 1e-12);
        }

        #[test]
        fn hemisphere_map_is_symmetric(n in unit_strategy(3)) {
            prop_assert_eq!(lift_map_f(&n), lift_map_f(&-&n));
        }

        #[test]
        fn rotated_lifting_is_exact(n in unit_strategy(3), seed in 0u64..1000) {
            let r = haar_sample(seed, 3).unwrap();
            let u = ProjPoint::new(n);
            let lifted = lift_map_lr(&r, &u).unwrap();
            prop_assert!(u.contains(&lifted));
            prop_assert_eq!(ProjPoint::new(lifted), u);
        }

        #[test]
        fn regularized_map_converges_off_equator(n in unit_strategy(3)) {
            prop_assume!(n.coords()[2].abs() > 1e-6);
            let f = lift_map_f(&n);
            let fe = lift_map_f_eps(1e-7, &n).unwrap();
            prop_assert_eq!(fe, f.coords().to_vec());
            for eps in [1.0, 0.5, 0.1] {
                prop_assert!(norm(&lift_map_f_eps(eps, &n).unwrap()) <= 1.0 + 1e-15);
            }
        }
    }
}
