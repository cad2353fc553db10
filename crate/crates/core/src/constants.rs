//! Constants of the lifting estimates: spherical averages, Haar-averaged jump
//! costs, and the optimal-constant suprema `C^a(N,d)`, `C^j(Φ)` and the 1D constant.

use std::f64::consts::{FRAC_PI_2, PI};
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{BvError, Result};
use crate::geometry::{self, f_sign, mat_vec, sphere_angle, UnitVector};
use crate::montecarlo::{haar_mean, MeanEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
    Optimization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantResult {
    pub value: f64,
    pub method: Method,
    pub error_estimate: f64,
    pub samples_or_nodes: u64,
}

impl ConstantResult {
    fn from_mc(est: MeanEstimate) -> Self {
        Self {
            value: est.mean,
            method: Method::MonteCarlo,
            error_estimate: est.std_error,
            samples_or_nodes: est.samples as u64,
        }
    }
}

/// `ℋ^k(𝕊^k) = 2π^{(k+1)/2} / Γ((k+1)/2)`; `ℋ^0(𝕊^0) = 2`.
pub fn sphere_area(k: usize) -> f64 {
    let a = (k as f64 + 1.0) / 2.0;
    2.0 * PI.powf(a) / gamma(a)
}

/// `ℋ^k(B^k) = π^{k/2} / Γ(k/2 + 1)`; `ℋ^0(B^0) = 1`.
pub fn ball_volume(k: usize) -> f64 {
    let a = k as f64 / 2.0;
    PI.powf(a) / gamma(a + 1.0)
}

/// `∫_0^{π/2} cos φ sin^p φ dφ` by double-exponential quadrature.
fn cos_sin_power_integral(p: usize) -> (f64, f64, u32) {
    let out = quadrature::double_exponential::integrate(
        |phi: f64| phi.cos() * phi.sin().powi(p as i32),
        0.0,
        FRAC_PI_2,
        1e-14,
    );
    (out.integral, out.error_estimate, out.num_function_evaluations)
}

/// `K_N`, the average of `|ω·e|` over 𝕊^{N-1}.
///
/// For `N ≥ 2` the average is `∫|cos φ| sin^{N-2}φ dφ / ∫ sin^{N-2}φ dφ` over `[0, π]`,
/// both integrals taken by quadrature on `[0, π/2]` and doubled by symmetry.
pub fn k_const(n: usize) -> Result<ConstantResult> {
    if n == 0 {
        return Err(BvError::InvalidArgument("K_N needs N >= 1".into()));
    }
    if n == 1 {
        return Ok(ConstantResult {
            value: 1.0,
            method: Method::ClosedForm,
            error_estimate: 0.0,
            samples_or_nodes: 0,
        });
    }
    let p = n - 2;
    let (num, num_err, num_evals) = cos_sin_power_integral(p);
    let den =
        quadrature::double_exponential::integrate(|phi: f64| phi.sin().powi(p as i32), 0.0, FRAC_PI_2, 1e-14);
    let value = num / den.integral;
    let error_estimate = (num_err / den.integral) + value * den.error_estimate / den.integral;
    Ok(ConstantResult {
        value,
        method: Method::Quadrature,
        error_estimate,
        samples_or_nodes: (num_evals + den.num_function_evaluations) as u64,
    })
}

/// `M(d) = ∫_{𝕊^{d-2}} |b·ω| dℋ^{d-2}(ω)`; independent of the unit vector `b`.
pub fn m_const(d: usize) -> Result<ConstantResult> {
    if d < 2 {
        return Err(BvError::InvalidArgument("M(d) needs d >= 2".into()));
    }
    if d == 2 {
        // 𝕊^0 = {±1} with counting measure
        return Ok(ConstantResult {
            value: 2.0,
            method: Method::ClosedForm,
            error_estimate: 0.0,
            samples_or_nodes: 2,
        });
    }
    // ω = cos φ b + sin φ η with η ∈ 𝕊^{d-3}
    let (half, err, evals) = cos_sin_power_integral(d - 3);
    let area = sphere_area(d - 3);
    Ok(ConstantResult {
        value: 2.0 * half * area,
        method: Method::Quadrature,
        error_estimate: 2.0 * err * area,
        samples_or_nodes: evals as u64,
    })
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) {
        return Err(BvError::InvalidArgument(format!(
            "angle must lie in [0, π], got {theta}"
        )));
    }
    Ok(())
}

fn check_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        return Err(BvError::InvalidArgument("need at least one sample".into()));
    }
    Ok(())
}

/// The pair `n = e_d`, `m = cos θ e_d + sin θ e_{d-1}`.
pub fn reference_pair(theta: f64, d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut n = vec![0.0; d];
    n[d - 1] = 1.0;
    let mut m = vec![0.0; d];
    m[d - 1] = theta.cos();
    m[d - 2] = theta.sin();
    (n, m)
}

/// Signs `F(Rn) = s_n Rn`, `F(Rm) = s_m Rm`, returned with the rotated vectors.
#[inline]
fn hemisphere_signs(r: &[f64], n: &[f64], m: &[f64], rn: &mut [f64], rm: &mut [f64]) -> (f64, f64) {
    mat_vec(r, n, rn);
    mat_vec(r, m, rm);
    (f_sign(rn), f_sign(rm))
}

/// Monte Carlo estimate of `∫_G dist_{𝕊}(F(Rn), F(Rm)) dμ(R)`.
pub fn avg_lifted_dist(n: &UnitVector, m: &UnitVector, samples: usize, seed: u64) -> Result<ConstantResult> {
    check_samples(samples)?;
    if n.dim() != m.dim() {
        return Err(BvError::DimensionMismatch {
            expected: n.dim(),
            got: m.dim(),
        });
    }
    let d = n.dim();
    let (n, m) = (n.coords().to_vec(), m.coords().to_vec());
    let est = haar_mean(samples, seed, d, move |r| {
        let mut rn = vec![0.0; d];
        let mut rm = vec![0.0; d];
        let (sn, sm) = hemisphere_signs(r, &n, &m, &mut rn, &mut rm);
        lifted_angle(&rn, &rm, sn, sm)
    });
    Ok(ConstantResult::from_mc(est))
}

#[inline]
fn lifted_angle(rn: &[f64], rm: &[f64], sn: f64, sm: f64) -> f64 {
    let t = sphere_angle(rn, rm);
    if sn == sm {
        t
    } else {
        PI - t
    }
}

/// Monte Carlo estimate of `ψ(θ) = μ({R : Rn·e_d > 0, Rm·e_d < 0})` for a pair at angle θ.
pub fn psi_estimate(theta: f64, d: usize, samples: usize, seed: u64) -> Result<ConstantResult> {
    check_theta(theta)?;
    check_samples(samples)?;
    check_d(d)?;
    let (n, m) = reference_pair(theta, d);
    let est = haar_mean(samples, seed, d, move |r| {
        let last = &r[(d - 1) * d..];
        let a = geometry::dot(last, &n);
        let b = geometry::dot(last, &m);
        if a > 0.0 && b < 0.0 {
            1.0
        } else {
            0.0
        }
    });
    Ok(ConstantResult::from_mc(est))
}

/// Monte Carlo estimate of `∫_G |F(Rn) - F(Rm)| dμ(R)` for a pair at angle θ.
pub fn avg_eucl_jump(theta: f64, samples: usize, seed: u64, d: usize) -> Result<ConstantResult> {
    check_theta(theta)?;
    check_samples(samples)?;
    check_d(d)?;
    let (n, m) = reference_pair(theta, d);
    let est = haar_mean(samples, seed, d, move |r| {
        let mut rn = vec![0.0; d];
        let mut rm = vec![0.0; d];
        let (sn, sm) = hemisphere_signs(r, &n, &m, &mut rn, &mut rm);
        rn.iter()
            .zip(&rm)
            .map(|(a, b)| (sn * a - sm * b).powi(2))
            .sum::<f64>()
            .sqrt()
    });
    Ok(ConstantResult::from_mc(est))
}

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(BvError::InvalidArgument(format!("need d >= 2, got {d}")));
    }
    Ok(())
}

/// Closed form `(2/π) θ (π - θ)` of the Haar-averaged lifted geodesic distance.
pub fn avg_lifted_dist_closed(theta: f64) -> f64 {
    2.0 / PI * theta * (PI - theta)
}

/// Closed form `(2/π)((π - θ) sin(θ/2) + θ cos(θ/2))` of the averaged chord.
pub fn avg_eucl_jump_closed(theta: f64) -> f64 {
    2.0 / PI * ((PI - theta) * (theta / 2.0).sin() + theta * (theta / 2.0).cos())
}

/// Product Gauss-Legendre rule on the positive orthant of 𝕊^{k-1} in hyperspherical
/// angles. Each node carries `ω²` (componentwise) and its weight.
struct OrthantRule {
    k: usize,
    sq: Vec<f64>,
    weights: Vec<f64>,
}

impl OrthantRule {
    fn new(k: usize, per_angle: usize) -> Self {
        if k == 1 {
            return Self {
                k,
                sq: vec![1.0],
                weights: vec![1.0],
            };
        }
        let rule = GaussLegendre::new(NonZeroUsize::new(per_angle).unwrap());
        let pairs: Vec<(f64, f64)> = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| ((x + 1.0) * FRAC_PI_2 / 2.0, w * FRAC_PI_2 / 2.0))
            .collect();
        let angles = k - 1;
        let total = per_angle.pow(angles as u32);
        let mut sq = Vec::with_capacity(total * k);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; angles];
        for _ in 0..total {
            let mut w = 1.0;
            let mut prod_sin = 1.0;
            let mut omega = vec![0.0; k];
            for (a, &i) in idx.iter().enumerate() {
                let (phi, wi) = pairs[i];
                let (s, c) = phi.sin_cos();
                omega[a] = prod_sin * c;
                // Jacobian sin^{k-2-a} φ_a
                w *= wi * s.powi((k - 2 - a) as i32);
                prod_sin *= s;
            }
            omega[k - 1] = prod_sin;
            sq.extend(omega.iter().map(|x| x * x));
            weights.push(w);
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < per_angle {
                    break;
                }
                *slot = 0;
            }
        }
        Self { k, sq, weights }
    }

    fn len(&self) -> usize {
        self.weights.len()
    }

    /// `∫_{𝕊^{k-1}} sqrt(Σ λ_i ω_i²)` and its gradient in λ.
    fn integrate(&self, lambda: &[f64], grad: &mut [f64]) -> f64 {
        let k = self.k;
        let scale = (1u64 << k) as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for (j, &w) in self.weights.iter().enumerate() {
            let s = &self.sq[j * k..(j + 1) * k];
            let q: f64 = s.iter().zip(lambda).map(|(a, b)| a * b).sum();
            let r = q.max(0.0).sqrt();
            total += w * r;
            if r > 0.0 {
                for i in 0..k {
                    grad[i] += w * s[i] / (2.0 * r);
                }
            }
        }
        grad.iter_mut().for_each(|g| *g *= scale);
        total * scale
    }
}

fn nodes_per_angle(k: usize) -> usize {
    match k {
        0 | 1 => 1,
        2 => 128,
        3 => 48,
        4 => 20,
        _ => 10,
    }
}

/// Objective `J(V) = ∫ |Vᵀω|` over 𝕊^{k-1} for `V` stored as a `k×N` matrix, and `∂J/∂V`.
fn ca_objective(rule: &OrthantRule, v: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let k = v.nrows();
    let h = v * v.transpose();
    let eig = SymmetricEigen::new(h);
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|x| x.max(0.0)).collect();
    let mut g = vec![0.0; k];
    let value = rule.integrate(&lambda, &mut g);
    let q = &eig.eigenvectors;
    let dh = q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(g)) * q.transpose();
    (value, 2.0 * dh * v)
}

/// Restarts of the `C^a` ascent unless the caller asks otherwise.
pub const DEFAULT_RESTARTS: usize = 64;

/// `C^a(N,d) = 1 + 2 sup J / ℋ^{d-1}(𝕊^{d-1})` with the supremum over `v_1..v_N ∈ ℝ^{d-1}`,
/// `Σ|v_k|² = 1`, by multi-start projected gradient ascent. `error_estimate` is the
/// largest final projected-gradient norm among restarts, scaled like the value.
pub fn ca_const(n: usize, d: usize, restarts: usize, seed: u64) -> Result<ConstantResult> {
    if n == 0 || d < 2 || restarts == 0 {
        return Err(BvError::InvalidArgument(format!(
            "C^a needs N >= 1, d >= 2, restarts >= 1 (got {n}, {d}, {restarts})"
        )));
    }
    let k = d - 1;
    let rule = OrthantRule::new(k, nodes_per_angle(k));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    let mut worst_stationarity: f64 = 0.0;
    for _ in 0..restarts {
        let mut v = DMatrix::from_fn(k, n, |_, _| StandardNormal.sample(&mut rng));
        let nv = v.norm();
        v /= nv;
        let (value, stationarity) = ascend(&rule, v);
        best = best.max(value);
        worst_stationarity = worst_stationarity.max(stationarity);
    }
    let area = sphere_area(d - 1);
    Ok(ConstantResult {
        value: 1.0 + 2.0 * best / area,
        method: Method::Optimization,
        error_estimate: 2.0 * worst_stationarity / area,
        samples_or_nodes: (rule.len() * restarts) as u64,
    })
}

fn ascend(rule: &OrthantRule, mut v: DMatrix<f64>) -> (f64, f64) {
    let (mut value, mut grad) = ca_objective(rule, &v);
    let mut step = 1.0;
    let mut stationarity = f64::INFINITY;
    for _ in 0..2000 {
        let radial = grad.dot(&v);
        let tangent = &grad - &v * radial;
        stationarity = tangent.norm();
        if stationarity < 1e-11 {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand = &v + &tangent * step;
            let nc = cand.norm();
            cand /= nc;
            let (cv, cg) = ca_objective(rule, &cand);
            if cv >= value + 1e-4 * step * stationarity * stationarity {
                v = cand;
                value = cv;
                grad = cg;
                step = (step * 2.0).min(1e3);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (value, stationarity)
}

/// An isometric embedding of ℝP^{d-1}, evaluated on representatives.
pub enum Embedding<'a> {
    /// `Φ([n]) = n⊗n/√2`.
    Tensor,
    /// A user map on unit representatives of ℝ^d; must agree on `±n`.
    Custom {
        d: usize,
        map: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
    },
}

/// Numerator of the jump-constant ratio: `θ cos(θ/2) + (π - θ) sin(θ/2)`.
pub fn cj_numerator(theta: f64) -> f64 {
    theta * (theta / 2.0).cos() + (PI - theta) * (theta / 2.0).sin()
}

/// Log-spaced grid on `(0, π)` refined near both endpoints, with `points` entries.
fn endpoint_refined_grid(points: usize, smallest: f64) -> Vec<f64> {
    let half = points / 2;
    let lo = smallest.ln();
    let hi = FRAC_PI_2.ln();
    let mut grid: Vec<f64> = (0..half)
        .map(|i| (lo + (hi - lo) * i as f64 / (half - 1) as f64).exp())
        .collect();
    let upper: Vec<f64> = grid.iter().rev().map(|t| PI - t).collect();
    grid.extend(upper);
    grid
}

/// `C^j(Φ) = (2/π) sup (θ cos(θ/2) + (π-θ) sin(θ/2)) / |Φ̄(n) - Φ̄(m)|`.
///
/// For the tensor embedding the denominator is `sin θ` and the supremum is a 1D search
/// over θ. For a custom embedding pairs `(n, m)` are sampled, so the result is a lower
/// bound of the true supremum.
pub fn cj_estimate(embedding: &Embedding<'_>, grid_points: usize, seed: u64) -> Result<ConstantResult> {
    if grid_points < 100 {
        return Err(BvError::InvalidArgument(format!(
            "need at least 100 grid points, got {grid_points}"
        )));
    }
    match embedding {
        Embedding::Tensor => {
            let best = endpoint_refined_grid(grid_points, 1e-12)
                .into_iter()
                .map(|t| cj_numerator(t) / t.sin())
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(ConstantResult {
                value: 2.0 / PI * best,
                method: Method::Optimization,
                // first-order deficit at the smallest grid angle
                error_estimate: 1e-12,
                samples_or_nodes: grid_points as u64,
            })
        }
        Embedding::Custom { d, map } => cj_sampled(*d, *map, grid_points, seed),
    }
}

fn cj_sampled(
    d: usize,
    map: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    pairs: usize,
    seed: u64,
) -> Result<ConstantResult> {
    check_d(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles = endpoint_refined_grid(pairs, 1e-7);
    let mut best = f64::NEG_INFINITY;
    let mut max_gap: f64 = 0.0;
    for &theta in &angles {
        let n = random_unit(&mut rng, d);
        let t = random_tangent(&mut rng, &n);
        let m: Vec<f64> = n
            .iter()
            .zip(&t)
            .map(|(a, b)| theta.cos() * a + theta.sin() * b)
            .collect();
        let pn = map(&n);
        let pm = map(&m);
        let neg: Vec<f64> = n.iter().map(|x| -x).collect();
        let gap = geometry::chord(&pn, &map(&neg));
        max_gap = max_gap.max(gap);
        let dist = geometry::chord(&pn, &pm);
        if dist > 0.0 {
            best = best.max(cj_numerator(theta) / dist);
        }
    }
    if max_gap > 1e-10 {
        return Err(BvError::AsymmetricEmbedding { gap: max_gap });
    }
    Ok(ConstantResult {
        value: 2.0 / PI * best,
        method: Method::Optimization,
        error_estimate: 0.0,
        samples_or_nodes: angles.len() as u64,
    })
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = geometry::norm(&v);
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn random_tangent(rng: &mut ChaCha8Rng, n: &[f64]) -> Vec<f64> {
    loop {
        let v = random_unit(rng, n.len());
        let p = geometry::dot(&v, n);
        let t: Vec<f64> = v.iter().zip(n).map(|(a, b)| a - p * b).collect();
        let nt = geometry::norm(&t);
        if nt > 1e-6 {
            return t.into_iter().map(|x| x / nt).collect();
        }
    }
}

/// Whether `θ cos(θ/2) + (π-θ) sin(θ/2) ≤ (1 + π/2) sin θ` holds on a uniform grid of
/// `points` angles in `[0, π]`; returns the largest violation (≤ 0 when it holds).
pub fn tensor_jump_bound_margin(points: usize) -> f64 {
    (0..points)
        .map(|i| {
            let t = PI * i as f64 / (points - 1) as f64;
            cj_numerator(t) - (1.0 + FRAC_PI_2) * t.sin()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The 1D Euclidean constant `sup_{0<θ≤π/2} 2 sin(θ/2) / sin θ`.
pub fn c1d_const() -> ConstantResult {
    let points = 10_000;
    let value = (1..=points)
        .map(|i| {
            let t = FRAC_PI_2 * i as f64 / points as f64;
            c1d_ratio(t)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    ConstantResult {
        value,
        method: Method::Optimization,
        error_estimate: 0.0,
        samples_or_nodes: points as u64,
    }
}

/// `2 sin(θ/2) / sin θ`, with its limit 1 at θ = 0.
pub fn c1d_ratio(theta: f64) -> f64 {
    if theta == 0.0 {
        1.0
    } else {
        2.0 * (theta / 2.0).sin() / theta.sin()
    }
}

/// A random point of 𝕊^{d-1} from `seed`; convenience for examples and tests.
pub fn random_unit_vector(seed: u64, d: usize) -> UnitVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let _: u64 = rng.random();
    UnitVector::normalized(random_unit(&mut rng, d)).expect("nonzero")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3, FRAC_PI_4, SQRT_2};

    #[test]
    fn k_const_values() {
        assert_eq!(k_const(1).unwrap().value, 1.0);
        // (1/2π)∮|cos φ| dφ
        assert_abs_diff_eq!(k_const(2).unwrap().value, 2.0 / PI, epsilon = 1e-12);
        assert_abs_diff_eq!(k_const(3).unwrap().value, 0.5, epsilon = 1e-12);
        for n in 2..9 {
            let closed = gamma(n as f64 / 2.0) / (PI.sqrt() * gamma((n as f64 + 1.0) / 2.0));
            assert_abs_diff_eq!(k_const(n).unwrap().value, closed, epsilon = 1e-11);
        }
    }

    #[test]
    fn measures() {
        assert_abs_diff_eq!(sphere_area(0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sphere_area(1), 2.0 * PI, epsilon = 1e-13);
        assert_abs_diff_eq!(sphere_area(2), 4.0 * PI, epsilon = 1e-13);
        assert_abs_diff_eq!(ball_volume(0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ball_volume(2), PI, epsilon = 1e-13);
        assert_abs_diff_eq!(ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn m_const_values() {
        assert_eq!(m_const(2).unwrap().value, 2.0);
        assert_abs_diff_eq!(m_const(3).unwrap().value, 4.0, epsilon = 1e-12);
        for d in 2..=6 {
            let m = m_const(d).unwrap().value;
            assert_abs_diff_eq!(m, 2.0 * ball_volume(d - 2), epsilon = 1e-9);
            assert_abs_diff_eq!(1.0 + 2.0 * m / sphere_area(d - 1), 1.0 + 2.0 / PI, epsilon = 1e-9);
        }
    }

    #[test]
    fn lifted_distance_identical_points() {
        let n = random_unit_vector(1, 3);
        assert_eq!(avg_lifted_dist(&n, &n, 10_000, 0).unwrap().value, 0.0);
    }

    #[test]
    fn lifted_distance_right_angle() {
        let n = UnitVector::basis(3, 2);
        let m = UnitVector::basis(3, 1);
        let r = avg_lifted_dist(&n, &m, 200_000, 4).unwrap();
        assert!((r.value - FRAC_PI_2).abs() < 4.0 * r.error_estimate, "{r:?}");
        assert!(r.error_estimate > 0.0);
    }

    #[test]
    fn psi_values() {
        assert_eq!(psi_estimate(0.0, 3, 10_000, 1).unwrap().value, 0.0);
        let r = psi_estimate(FRAC_PI_4, 4, 200_000, 2).unwrap();
        assert!((r.value - 0.125).abs() < 4.0 * r.error_estimate);
        assert!(psi_estimate(4.0, 3, 10, 1).is_err());
    }

    #[test]
    fn eucl_jump_values() {
        assert_eq!(avg_eucl_jump(0.0, 1000, 1, 3).unwrap().value, 0.0);
        assert_abs_diff_eq!(avg_eucl_jump_closed(PI), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(avg_eucl_jump_closed(FRAC_PI_2), SQRT_2, epsilon = 1e-15);
        let r = avg_eucl_jump(FRAC_PI_3, 200_000, 3, 3).unwrap();
        let closed = 2.0 / PI * (2.0 * PI / 3.0 * 0.5 + PI / 3.0 * 3f64.sqrt() / 2.0);
        assert!((r.value - closed).abs() < 4.0 * r.error_estimate);
    }

    #[test]
    fn ca_known_values() {
        let target = 1.0 + 2.0 / PI;
        for n in 1..=3 {
            assert_abs_diff_eq!(ca_const(n, 2, 4, 1).unwrap().value, target, epsilon = 1e-9);
        }
        for d in 3..=4 {
            assert_abs_diff_eq!(ca_const(1, d, 4, 1).unwrap().value, target, epsilon = 1e-6);
        }
        let c23 = ca_const(2, 3, 8, 1).unwrap().value;
        assert!(c23 >= 1.0 + FRAC_1_SQRT_2 - 1e-6, "{c23}");
        assert_abs_diff_eq!(c23, 1.0 + FRAC_1_SQRT_2, epsilon = 1e-8);
    }

    #[test]
    fn cj_tensor() {
        let r = cj_estimate(&Embedding::Tensor, 100_000, 0).unwrap();
        assert_abs_diff_eq!(r.value, 1.0 + 2.0 / PI, epsilon = 1e-9);
        assert!(tensor_jump_bound_margin(100_000) <= 1e-15);
        assert!(cj_estimate(&Embedding::Tensor, 10, 0).is_err());
    }

    #[test]
    fn cj_custom_embeddings() {
        let tensor = |n: &[f64]| {
            let mut out = vec![0.0; n.len() * n.len()];
            geometry::tensor_embed_into(n, &mut out);
            out
        };
        let r = cj_estimate(&Embedding::Custom { d: 3, map: &tensor }, 2000, 5).unwrap();
        assert!(r.value >= 1.0 + 2.0 / PI - 1e-6);
        assert!(r.value <= 1.0 + 2.0 / PI + 1e-9);

        // an isometric, non-tensor embedding of ℝP¹
        let curve = |n: &[f64]| {
            let t = n[1].atan2(n[0]);
            vec![
                0.3 * (2.0 * t).cos(),
                0.3 * (2.0 * t).sin(),
                0.2 * (4.0 * t).cos(),
                0.2 * (4.0 * t).sin(),
            ]
        };
        let r = cj_estimate(&Embedding::Custom { d: 2, map: &curve }, 2000, 5).unwrap();
        assert!(r.value >= 1.0 + 2.0 / PI - 1e-6, "{r:?}");

        let identity = |n: &[f64]| n.to_vec();
        assert!(matches!(
            cj_estimate(&Embedding::Custom { d: 2, map: &identity }, 200, 5),
            Err(BvError::AsymmetricEmbedding { .. })
        ));
    }

    #[test]
    fn c1d_values() {
        assert_abs_diff_eq!(c1d_const().value, SQRT_2, epsilon = 1e-12);
        assert_eq!(c1d_ratio(0.0), 1.0);
        assert_abs_diff_eq!(c1d_ratio(1e-8), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c1d_ratio(FRAC_PI_2), SQRT_2, epsilon = 1e-15);
    }
}
