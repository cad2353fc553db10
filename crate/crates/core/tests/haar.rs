//! Distributional checks of the Haar sampler on SO(d).

use std::f64::consts::{FRAC_PI_4, PI};

use bvlift::geometry::{haar_sample, mix_seed, HaarSampler, UnitVector};
use bvlift::montecarlo::haar_mean;

/// CDF of one coordinate of a uniform point on `𝕊^{d-1}`.
fn coordinate_cdf(d: usize, t: f64) -> f64 {
    match d {
        2 => 0.5 + t.asin() / PI,
        3 => (t + 1.0) / 2.0,
        4 => 0.5 + (t * (1.0 - t * t).sqrt() + t.asin()) / PI,
        _ => unreachable!(),
    }
}

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x.clamp(-1.0, 1.0));
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn matrix_entries_have_the_spherical_coordinate_law() {
    let n = 1_000_000;
    // 1% critical value of the one-sample KS statistic
    let critical = 1.628 / (n as f64).sqrt();
    for d in 2..=4 {
        let mut sampler = HaarSampler::new(11 + d as u64, d);
        let mut r = vec![0.0; d * d];
        let mut first = Vec::with_capacity(n);
        let mut last = Vec::with_capacity(n);
        for _ in 0..n {
            sampler.sample_into(&mut r);
            first.push(r[0]);
            last.push(r[d * d - 1]);
        }
        for (name, xs) in [("R[0][0]", first), ("R[d-1][d-1]", last)] {
            let stat = ks_statistic(xs, |t| coordinate_cdf(d, t));
            assert!(stat < critical, "d={d} {name}: KS {stat} >= {critical}");
        }
    }
}

#[test]
fn samples_are_proper_rotations() {
    for d in 2..=5 {
        for k in 0..10_000u64 {
            let r = haar_sample(mix_seed(3, k), d).unwrap();
            assert!(r.orthogonality_residual() < 1e-12, "d={d} seed {k}");
            assert!((r.determinant() - 1.0).abs() < 1e-12, "d={d} seed {k}");
        }
    }
}

/// Normalized area of the cap of radius π/4 around a pole of `𝕊^{d-1}`.
fn cap_fraction(d: usize) -> f64 {
    match d {
        2 => 0.25,
        3 => (1.0 - FRAC_PI_4.cos()) / 2.0,
        4 => 0.25 - 1.0 / (2.0 * PI),
        _ => unreachable!(),
    }
}

#[test]
fn cap_frequency_does_not_depend_on_the_rotated_vector() {
    let samples = 400_000;
    for d in 2..=4 {
        let pole = d - 1;
        let vectors = [
            UnitVector::basis(d, 0),
            UnitVector::basis(d, pole),
            UnitVector::normalized((1..=d).map(|i| i as f64).collect()).unwrap(),
        ];
        for (i, n) in vectors.iter().enumerate() {
            let n = n.coords().to_vec();
            let est = haar_mean(samples, mix_seed(d as u64, i as u64), d, move |r: &[f64]| {
                // (Rn)_pole ≥ cos(π/4)
                let z: f64 = (0..d).map(|k| r[pole * d + k] * n[k]).sum();
                if z >= FRAC_PI_4.cos() {
                    1.0
                } else {
                    0.0
                }
            });
            let exact = cap_fraction(d);
            assert!(
                (est.mean - exact).abs() <= 4.0 * est.std_error,
                "d={d} vector {i}: {} vs {exact} (se {})",
                est.mean,
                est.std_error
            );
        }
    }
}
