//! Scripted checks of the closed-form identities and optimal constants, with
//! plot-ready traces.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};
use std::io::Write;
use std::num::NonZeroUsize;
use std::path::Path;
use std::time::Instant;

use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::constants::{
    avg_eucl_jump, avg_eucl_jump_closed, avg_lifted_dist, avg_lifted_dist_closed, k_const, psi_estimate,
    reference_pair,
};
use crate::energy::{
    avg_directional_energy, directional_tv, embedded_tv, mollified_energy_extrapolated, sample_directions,
};
use crate::error::Result;
use crate::field::{GridField, Metric, ValueKind};
use crate::generators::{half_vortex_lifting, linear_twist, make_half_vortex};
use crate::geometry::{self, mix_seed, UnitVector};
use crate::lifting::RotationSearch;

pub use crate::generators::make_half_vortex as half_vortex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|measured - claimed| ≤ tolerance`.
    Absolute,
    /// `|measured - claimed| ≤ tolerance·|claimed|`.
    Relative,
    /// `measured ≤ claimed + tolerance`.
    AtMost,
    /// `measured ≥ claimed - tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub claimed: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
    /// The statement being checked, in words.
    pub anchor: String,
    /// Wall time; not part of `report.json` so that reports are reproducible.
    #[serde(skip_serializing, default)]
    pub runtime_ms: u64,
}

impl CheckReport {
    pub fn new(
        name: impl Into<String>,
        claimed: f64,
        measured: f64,
        tolerance: f64,
        comparison: Comparison,
        anchor: impl Into<String>,
    ) -> Self {
        let passed = measured.is_finite()
            && match comparison {
                Comparison::Absolute => (measured - claimed).abs() <= tolerance,
                Comparison::Relative => (measured - claimed).abs() <= tolerance * claimed.abs(),
                Comparison::AtMost => measured <= claimed + tolerance,
                Comparison::AtLeast => measured >= claimed - tolerance,
            };
        Self {
            name: name.into(),
            claimed,
            measured,
            tolerance,
            comparison,
            passed,
            anchor: anchor.into(),
            runtime_ms: 0,
        }
    }

    fn timed(mut self, start: Instant) -> Self {
        self.runtime_ms = start.elapsed().as_millis() as u64;
        self
    }
}

/// A table of numbers for external plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Trace {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOutput {
    pub checks: Vec<CheckReport>,
    pub traces: Vec<Trace>,
}

impl SuiteOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn extend(&mut self, other: SuiteOutput) {
        self.checks.extend(other.checks);
        self.traces.extend(other.traces);
    }

    /// Writes `report.json` and one CSV per trace into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(&self.checks)?;
        std::fs::write(dir.join("report.json"), json + "\n")?;
        for t in &self.traces {
            let file = std::fs::File::create(dir.join(format!("{}.csv", t.name)))?;
            t.write_csv(std::io::BufWriter::new(file))?;
        }
        Ok(())
    }
}

/// Direction count for the averaged energies in the half-vortex suite.
pub const HALF_VORTEX_DIRECTIONS: usize = 16;

/// Sign changes of a planar unit field along a circle of radius `r` around the origin.
fn sign_flips_on_circle(n: &GridField, r: f64, samples: usize) -> usize {
    let h = n.spacing();
    let o = n.origin();
    let cols = n.dims()[1];
    let cell_at = |t: f64| {
        let (x, y) = (r * t.cos(), r * t.sin());
        let i = ((x - o[0]) / h) as usize;
        let j = ((y - o[1]) / h) as usize;
        i * cols + j
    };
    let mut flips = 0;
    let mut prev = n.value(cell_at(0.0)).to_vec();
    for k in 1..=samples {
        let t = 2.0 * PI * k as f64 / samples as f64;
        let v = n.value(cell_at(t));
        if geometry::dot(&prev, v) < 0.0 {
            flips += 1;
        }
        prev = v.to_vec();
    }
    flips
}

/// Energies and optimal lifting ratios of the half-vortex `[e^{iθ/2}]` on the unit disk.
pub fn run_half_vortex_suite(grid: usize, trials: usize, seed: u64) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let k2 = k_const(2)?.value;

    let start = Instant::now();
    let u = make_half_vortex(grid, 2, 2)?;
    let search = RotationSearch {
        directions: HALF_VORTEX_DIRECTIONS,
        ..RotationSearch::new(trials, seed, Metric::Geodesic)
    };
    let dir_seed = mix_seed(seed, u64::MAX);
    let proj = avg_directional_energy(&u, HALF_VORTEX_DIRECTIONS, dir_seed, Metric::Geodesic)?;
    out.checks.push(
        CheckReport::new(
            "half_vortex.projective_geodesic_energy",
            k2 * PI,
            proj.total,
            0.05,
            Comparison::Relative,
            "the intrinsic geodesic energy of the half-vortex line field is K_2·π = 2",
        )
        .timed(start),
    );
    let start = Instant::now();
    let geo = search.run(&u)?;
    out.checks.push(
        CheckReport::new(
            "half_vortex.geodesic_lifting_ratio",
            2.0,
            geo.energy.total / proj.total,
            0.05,
            Comparison::Relative,
            "the best lifting doubles the geodesic energy: constant 2 is attained",
        )
        .timed(start),
    );
    let flips = [0.25, 0.5, 0.75]
        .iter()
        .map(|&r| sign_flips_on_circle(&geo.field, r, 4096))
        .min()
        .unwrap_or(0);
    out.checks.push(CheckReport::new(
        "half_vortex.seams_per_circle",
        1.0,
        flips as f64,
        0.0,
        Comparison::AtLeast,
        "every lifting of the half-vortex flips sign at least once on each circle around the defect",
    ));

    let start = Instant::now();
    let tensor = embedded_tv(&u, Metric::EuclideanTensor)?;
    out.checks.push(
        CheckReport::new(
            "half_vortex.tensor_energy",
            PI,
            tensor.total,
            0.03,
            Comparison::Relative,
            "the tensor-embedded energy of the half-vortex is the integral of |∇n|, equal to π",
        )
        .timed(start),
    );
    let start = Instant::now();
    let eucl = RotationSearch::new(trials, seed, Metric::EuclideanSphere).run(&u)?;
    out.checks.push(
        CheckReport::new(
            "half_vortex.euclidean_lifting_ratio",
            1.0 + 2.0 / PI,
            eucl.energy.total / tensor.total,
            0.03,
            Comparison::Relative,
            "the best Euclidean lifting has energy π + 2 = (1 + 2/π)·π",
        )
        .timed(start),
    );

    let mut trace = Trace::new(
        "half_vortex_energies",
        &[
            "grid",
            "projective_geodesic",
            "lifted_geodesic",
            "tensor",
            "lifted_euclidean",
        ],
    );
    trace.rows.push(vec![
        grid as f64,
        proj.total,
        geo.energy.total,
        tensor.total,
        eucl.energy.total,
    ]);
    out.traces.push(trace);
    Ok(out)
}

/// Four standard errors, floored at rounding level for zero-variance integrands
/// (at θ = π/2 every lifted pair is at distance π/2).
fn mc_tolerance(std_error: f64) -> f64 {
    (4.0 * std_error).max(1e-12)
}

/// The θ grid of the averaging identities.
pub const IDENTITY_THETAS: [f64; 4] = [FRAC_PI_6, FRAC_PI_3, FRAC_PI_2, 2.0 * FRAC_PI_3];
pub const IDENTITY_DIMS: [usize; 3] = [2, 3, 4];

/// Haar-averaged identities against their closed forms, at 4 standard errors.
pub fn run_identity_suite(samples: usize, seed: u64) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let mut trace = Trace::new(
        "identities",
        &[
            "theta",
            "d",
            "lifted_dist",
            "lifted_dist_se",
            "psi",
            "psi_se",
            "eucl_jump",
            "eucl_jump_se",
        ],
    );
    let mut stream = 0u64;
    let mut next_seed = || {
        stream += 1;
        mix_seed(seed, stream)
    };
    for &d in &IDENTITY_DIMS {
        for &theta in &IDENTITY_THETAS {
            let tag = format!("theta={theta:.6},d={d}");
            let (n, m) = reference_pair(theta, d);
            let n = UnitVector::new(n)?;
            let m = UnitVector::new(m)?;

            let start = Instant::now();
            let ld = avg_lifted_dist(&n, &m, samples, next_seed())?;
            out.checks.push(
                CheckReport::new(
                    format!("identity.lifted_dist[{tag}]"),
                    avg_lifted_dist_closed(theta),
                    ld.value,
                    mc_tolerance(ld.error_estimate),
                    Comparison::Absolute,
                    "the Haar average of dist(F(Rn), F(Rm)) is (2/π)·dist(n,m)·dist(-n,m)",
                )
                .timed(start),
            );

            let start = Instant::now();
            let psi = psi_estimate(theta, d, samples, next_seed())?;
            out.checks.push(
                CheckReport::new(
                    format!("identity.psi[{tag}]"),
                    theta / (2.0 * PI),
                    psi.value,
                    mc_tolerance(psi.error_estimate),
                    Comparison::Absolute,
                    "the measure of rotations separating n and m by the equator is θ/(2π)",
                )
                .timed(start),
            );

            let start = Instant::now();
            let ej = avg_eucl_jump(theta, samples, next_seed(), d)?;
            out.checks.push(
                CheckReport::new(
                    format!("identity.eucl_jump[{tag}]"),
                    avg_eucl_jump_closed(theta),
                    ej.value,
                    mc_tolerance(ej.error_estimate),
                    Comparison::Absolute,
                    "the Haar average of |F(Rn) - F(Rm)| is (2/π)((π-θ)sin(θ/2) + θcos(θ/2))",
                )
                .timed(start),
            );
            out.checks.push(CheckReport::new(
                format!("identity.eucl_jump_bound[{tag}]"),
                (1.0 + 2.0 / PI) * theta.sin(),
                ej.value,
                mc_tolerance(ej.error_estimate),
                Comparison::AtMost,
                "the averaged chord is at most (1 + 2/π)·sin θ",
            ));
            out.checks.push(CheckReport::new(
                format!("identity.eucl_jump_bound_closed[{tag}]"),
                (1.0 + 2.0 / PI) * theta.sin(),
                avg_eucl_jump_closed(theta),
                0.0,
                Comparison::AtMost,
                "θcos(θ/2) + (π-θ)sin(θ/2) ≤ (1 + π/2)·sin θ",
            ));
            trace.rows.push(vec![
                theta,
                d as f64,
                ld.value,
                ld.error_estimate,
                psi.value,
                psi.error_estimate,
                ej.value,
                ej.error_estimate,
            ]);
        }
    }
    let start = Instant::now();
    let quarter = psi_estimate(FRAC_PI_2, 3, samples, next_seed())?;
    out.checks.push(
        CheckReport::new(
            "identity.psi_right_angle",
            0.25,
            quarter.value,
            0.002,
            Comparison::Absolute,
            "ψ(π/2) = 1/4",
        )
        .timed(start),
    );
    out.traces.push(trace);
    Ok(out)
}

/// A geodesic test field with its analytic intrinsic energy.
struct ReprField {
    name: &'static str,
    field: GridField,
    analytic: f64,
}

fn twist_with_jump(n: usize, slope: f64, jump: f64) -> Result<GridField> {
    GridField::from_fn(
        vec![n, n],
        1.0 / n as f64,
        vec![0.0, 0.0],
        2,
        ValueKind::Proj,
        None,
        |x| {
            let g = slope * x[0] + if x[0] < 0.5 { 0.0 } else { jump };
            vec![g.cos(), g.sin()]
        },
    )
}

fn repr_fields() -> Result<Vec<ReprField>> {
    let k2 = k_const(2)?.value;
    let slope = 1.3;
    let line = |a: f64| vec![a.cos(), a.sin()];
    let one_d_jump = GridField::from_fn(
        vec![512],
        2.0 / 512.0,
        vec![-1.0],
        2,
        ValueKind::Proj,
        None,
        |x| {
            if x[0] < 0.0 {
                line(0.0)
            } else {
                line(FRAC_PI_2)
            }
        },
    )?;
    Ok(vec![
        ReprField {
            name: "jump_1d",
            field: one_d_jump,
            analytic: FRAC_PI_2,
        },
        ReprField {
            name: "smooth_1d",
            field: linear_twist(512, 1, 1.0, slope)?,
            analytic: slope,
        },
        ReprField {
            name: "jump_2d",
            field: crate::generators::straight_jump(128, 2, 1.0, &line(0.0), &line(FRAC_PI_2))?,
            analytic: k2 * FRAC_PI_2,
        },
        ReprField {
            name: "smooth_2d",
            field: linear_twist(128, 2, 1.0, slope)?,
            analytic: k2 * slope,
        },
        ReprField {
            name: "mixed_2d",
            field: twist_with_jump(128, slope, FRAC_PI_3)?,
            analytic: k2 * (slope + FRAC_PI_3),
        },
    ])
}

pub const REPR_EPS_OVER_H: [f64; 3] = [8.0, 16.0, 32.0];
pub const REPR_DIRECTIONS: usize = 64;

/// Mollified energy (extrapolated in ε), direction-averaged energy, and the analytic
/// value `∫⨍|∇_ω u| + K_N ∫_J dist(u⁻,u⁺)` on piecewise smooth geodesic test fields.
pub fn run_repr_formula_suite(seed: u64) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let mut trace = Trace::new("repr_formula", &["field", "eps", "mollified"]);
    for (idx, rf) in repr_fields()?.into_iter().enumerate() {
        let start = Instant::now();
        let moll = mollified_energy_extrapolated(&rf.field, &REPR_EPS_OVER_H, Metric::Geodesic)?;
        let dirs = avg_directional_energy(
            &rf.field,
            REPR_DIRECTIONS,
            mix_seed(seed, idx as u64),
            Metric::Geodesic,
        )?;
        let eps = moll.params["eps"].as_array().cloned().unwrap_or_default();
        let vals = moll.params["values"].as_array().cloned().unwrap_or_default();
        for (e, v) in eps.iter().zip(&vals) {
            trace.rows.push(vec![
                idx as f64,
                e.as_f64().unwrap_or(f64::NAN),
                v.as_f64().unwrap_or(f64::NAN),
            ]);
        }
        trace.rows.push(vec![idx as f64, 0.0, moll.total]);
        let anchor = "the mollified energy, the direction average and the representation formula agree";
        out.checks.push(
            CheckReport::new(
                format!("repr.{}.mollified_vs_analytic", rf.name),
                rf.analytic,
                moll.total,
                0.05,
                Comparison::Relative,
                anchor,
            )
            .timed(start),
        );
        out.checks.push(CheckReport::new(
            format!("repr.{}.directional_vs_analytic", rf.name),
            rf.analytic,
            dirs.total,
            0.05,
            Comparison::Relative,
            anchor,
        ));
        out.checks.push(CheckReport::new(
            format!("repr.{}.mollified_vs_directional", rf.name),
            dirs.total,
            moll.total,
            0.05,
            Comparison::Relative,
            anchor,
        ));
    }
    let constant = linear_twist(64, 2, 1.0, 0.0)?;
    let moll = mollified_energy_extrapolated(&constant, &REPR_EPS_OVER_H[..1], Metric::Geodesic)?;
    let dirs = avg_directional_energy(&constant, 8, seed, Metric::Geodesic)?;
    out.checks.push(CheckReport::new(
        "repr.constant.mollified",
        0.0,
        moll.total,
        1e-12,
        Comparison::Absolute,
        "a constant field has zero energy",
    ));
    out.checks.push(CheckReport::new(
        "repr.constant.directional",
        0.0,
        dirs.total,
        1e-12,
        Comparison::Absolute,
        "a constant field has zero energy",
    ));
    out.traces.push(trace);
    Ok(out)
}

/// A smooth random map `[0,1]² → 𝕊²`: the normalization of `a₀ + Σ_k sin(k·x + φ_k) A_k`.
#[derive(Debug, Clone)]
pub struct SmoothSphereField {
    a0: [f64; 3],
    waves: Vec<([f64; 2], f64, [f64; 3])>,
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

impl SmoothSphereField {
    /// Draws modes until `|v|` stays above 1/2 on a 64² sampling grid.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let mut a0 = [0.0; 3];
            a0.iter_mut().for_each(|x| *x = gauss(&mut rng));
            let na = geometry::norm(&a0);
            a0.iter_mut().for_each(|x| *x *= 2.0 / na);
            let waves = (0..4)
                .map(|_| {
                    let k: [f64; 2] = [3.0 * gauss(&mut rng), 3.0 * gauss(&mut rng)];
                    let phase = rng.random::<f64>() * 2.0 * PI;
                    let amp: [f64; 3] = [
                        0.5 * gauss(&mut rng),
                        0.5 * gauss(&mut rng),
                        0.5 * gauss(&mut rng),
                    ];
                    (k, phase, amp)
                })
                .collect();
            let f = Self { a0, waves };
            let ok = (0..64 * 64).all(|i| {
                let x = [(i / 64) as f64 / 63.0, (i % 64) as f64 / 63.0];
                geometry::norm(&f.raw(&x).0) > 0.5
            });
            if ok {
                return f;
            }
        }
    }

    /// `v(x)` and its partial derivatives.
    fn raw(&self, x: &[f64]) -> ([f64; 3], [[f64; 3]; 2]) {
        let mut v = self.a0;
        let mut dv = [[0.0; 3]; 2];
        for (k, phase, amp) in &self.waves {
            let arg = k[0] * x[0] + k[1] * x[1] + phase;
            let (s, c) = arg.sin_cos();
            for i in 0..3 {
                v[i] += s * amp[i];
                dv[0][i] += c * k[0] * amp[i];
                dv[1][i] += c * k[1] * amp[i];
            }
        }
        (v, dv)
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        let (v, _) = self.raw(x);
        let n = geometry::norm(&v);
        v.iter().map(|a| a / n).collect()
    }

    /// `|∇n(x)|_F` from `∂n = (∂v - n(n·∂v))/|v|`.
    pub fn gradient_norm(&self, x: &[f64]) -> f64 {
        let (v, dv) = self.raw(x);
        let nv = geometry::norm(&v);
        let n: Vec<f64> = v.iter().map(|a| a / nv).collect();
        let mut sq = 0.0;
        for d in &dv {
            let p = geometry::dot(&n, d);
            for i in 0..3 {
                let g = (d[i] - p * n[i]) / nv;
                sq += g * g;
            }
        }
        sq.sqrt()
    }

    /// `∫_{[0,1]²} |∇n|` by composite Gauss-Legendre quadrature.
    pub fn exact_energy(&self) -> f64 {
        let rule = GaussLegendre::new(NonZeroUsize::new(8).expect("nonzero"));
        let panels = 64;
        let nodes: Vec<(f64, f64)> = (0..panels)
            .flat_map(|p| {
                let a = p as f64 / panels as f64;
                let half = 0.5 / panels as f64;
                rule.as_node_weight_pairs()
                    .iter()
                    .map(move |&(t, w)| (a + half * (t + 1.0), w * half))
                    .collect::<Vec<_>>()
            })
            .collect();
        nodes
            .iter()
            .map(|&(x, wx)| {
                nodes
                    .iter()
                    .map(|&(y, wy)| wy * self.gradient_norm(&[x, y]))
                    .sum::<f64>()
                    * wx
            })
            .sum()
    }

    pub fn sample(&self, n: usize) -> Result<GridField> {
        GridField::from_fn(
            vec![n, n],
            1.0 / n as f64,
            vec![0.0, 0.0],
            3,
            ValueKind::Unit,
            None,
            |x| self.value(x),
        )
    }
}

pub const DIFFUSE_FIELDS: usize = 10;
pub const DIFFUSE_GRIDS: [usize; 2] = [512, 1024];
/// Fields that also get the per-direction comparison.
pub const DIFFUSE_DIRECTIONAL_FIELDS: usize = 3;

/// Absolutely continuous energies of a smooth unit field `n` and of `Φ(n)`.
///
/// Both finite-difference estimates converge at first order to the same integral
/// `∫|∇n|`; each discrepancy to the quadrature value must halve with `h`, and the gap
/// between the two estimates must shrink at least as fast.
pub fn run_diffuse_invariance_suite(seed: u64) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let mut trace = Trace::new(
        "diffuse_invariance",
        &["field", "grid", "exact", "sphere_ac", "tensor_ac"],
    );
    for k in 0..DIFFUSE_FIELDS {
        let start = Instant::now();
        let field = SmoothSphereField::random(mix_seed(seed, k as u64));
        let exact = field.exact_energy();
        let mut sphere = Vec::new();
        let mut tensor = Vec::new();
        for &g in &DIFFUSE_GRIDS {
            let n = field.sample(g)?;
            let s = embedded_tv(&n, Metric::EuclideanSphere)?;
            let t = embedded_tv(&n, Metric::EuclideanTensor)?;
            sphere.push(s.ac_part.unwrap_or(f64::NAN));
            tensor.push(t.ac_part.unwrap_or(f64::NAN));
            trace.rows.push(vec![
                k as f64,
                g as f64,
                exact,
                *sphere.last().unwrap(),
                *tensor.last().unwrap(),
            ]);
        }
        let anchor = "the diffuse energy of a lifting equals that of its line field: |D^a n| = |D^a u|";
        let ratio = |e: &[f64]| (e[1] - exact).abs() / (e[0] - exact).abs();
        out.checks.push(
            CheckReport::new(
                format!("diffuse.field{k}.sphere_order"),
                0.5,
                ratio(&sphere),
                0.1,
                Comparison::Absolute,
                anchor,
            )
            .timed(start),
        );
        out.checks.push(CheckReport::new(
            format!("diffuse.field{k}.tensor_order"),
            0.5,
            ratio(&tensor),
            0.1,
            Comparison::Absolute,
            anchor,
        ));
        if k < DIFFUSE_DIRECTIONAL_FIELDS {
            let n = field.sample(256)?;
            let u = n.project()?;
            let mut worst = 0.0f64;
            for omega in sample_directions(2, 4, mix_seed(seed, 1000 + k as u64)) {
                let a = directional_tv(&n, &omega, Metric::EuclideanSphere)?;
                let b = directional_tv(&u, &omega, Metric::EuclideanTensor)?;
                worst = worst.max((a - b).abs() / b.max(f64::MIN_POSITIVE));
            }
            out.checks.push(CheckReport::new(
                format!("diffuse.field{k}.directional_gap"),
                0.0,
                worst,
                1e-3,
                Comparison::AtMost,
                "the diffuse directional energies of a lifting and its line field agree: |D_ω^a n| = |D_ω^a u|",
            ));
        }
        let gap = |i: usize| (sphere[i] - tensor[i]).abs();
        out.checks.push(CheckReport::new(
            format!("diffuse.field{k}.gap_shrinks"),
            0.6,
            gap(1) / gap(0),
            0.0,
            Comparison::AtMost,
            anchor,
        ));
    }

    let constant = linear_twist(32, 2, 1.0, 0.0)?.as_unit()?;
    let s = embedded_tv(&constant, Metric::EuclideanSphere)?;
    let t = embedded_tv(&constant, Metric::EuclideanTensor)?;
    out.checks.push(CheckReport::new(
        "diffuse.constant",
        0.0,
        s.total + t.total,
        0.0,
        Comparison::Absolute,
        "a constant field has zero energy in both embeddings",
    ));

    let grid = 256;
    let u = make_half_vortex(grid, 2, 2)?;
    let n = half_vortex_lifting(grid, 2, 2)?;
    let lifted_ac = embedded_tv(&n, Metric::EuclideanSphere)?
        .ac_part
        .unwrap_or(f64::NAN);
    let line_ac = embedded_tv(&u, Metric::EuclideanTensor)?
        .ac_part
        .unwrap_or(f64::NAN);
    out.checks.push(CheckReport::new(
        "diffuse.half_vortex_off_seam",
        line_ac,
        lifted_ac,
        0.02,
        Comparison::Relative,
        "off the seam the half-vortex lifting and its line field have equal gradients",
    ));
    out.traces.push(trace);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Halfvortex,
    Identities,
    Repr,
    Diffuse,
    All,
}

/// Settings for [`run_suites`].
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    pub grid: usize,
    pub trials: usize,
    pub samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            grid: 256,
            trials: 64,
            samples: 1_000_000,
        }
    }
}

/// Runs the selected suites in declaration order.
pub fn run_suites(suite: Suite, cfg: &VerifyConfig) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let all = suite == Suite::All;
    if all || suite == Suite::Halfvortex {
        out.extend(run_half_vortex_suite(cfg.grid, cfg.trials, cfg.seed)?);
    }
    if all || suite == Suite::Identities {
        out.extend(run_identity_suite(cfg.samples, cfg.seed)?);
    }
    if all || suite == Suite::Repr {
        out.extend(run_repr_formula_suite(cfg.seed)?);
    }
    if all || suite == Suite::Diffuse {
        out.extend(run_diffuse_invariance_suite(cfg.seed)?);
    }
    Ok(out)
}
