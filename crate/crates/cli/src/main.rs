mod config;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use bvlift::constants::{
    c1d_const, ca_const, cj_estimate, k_const, m_const, ConstantResult, Embedding, DEFAULT_RESTARTS,
};
use bvlift::energy::{
    avg_directional_energy, embedded_tv, embedded_tv_with_threshold, mollified_energy,
    mollified_energy_extrapolated, EnergyReport, Mollifier,
};
use bvlift::error::BvError;
use bvlift::field::{load_field, write_field, GridField, Metric, ValueKind};
use bvlift::generators::{half_vortex_lifting, linear_twist, make_half_vortex, straight_jump};
use bvlift::geometry::mix_seed;
use bvlift::lifting::{lift_1d_field, lift_with_boundary, LiftResult, RotationSearch};
use bvlift::verify::{run_suites, Suite, VerifyConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use config::{Config, Overrides};

#[derive(Parser)]
#[command(
    name = "bvlift",
    version,
    about = "Liftings of line fields and their BV energies"
)]
struct Cli {
    /// Worker threads (default: all cores). BVLIFT_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Orient a line field.
    Lift(LiftArgs),
    /// Print an energy report of a field as JSON.
    Energy(EnergyArgs),
    /// Print optimal constants as JSON.
    Constants(ConstantsArgs),
    /// Run the verification suites and write report.json.
    Verify(VerifyArgs),
    /// Write a test field.
    MakeField(MakeFieldArgs),
}

#[derive(Args, Default)]
struct CommonFlags {
    #[arg(long)]
    seed: Option<u64>,
    /// geodesic, euclidean_sphere or euclidean_tensor.
    #[arg(long)]
    metric: Option<Metric>,
    /// Directions of the averaged directional energy.
    #[arg(long)]
    directions: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LiftMode {
    Rotation,
    Greedy1d,
    Boundary,
}

#[derive(Args)]
struct LiftArgs {
    input: PathBuf,
    /// Lifted field; the sidecar goes to the same path with `.json` appended.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "rotation")]
    mode: LiftMode,
    /// Unit field whose boundary cells give the prescribed orientation.
    #[arg(long)]
    boundary: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Mollified,
    Directional,
    Embedded,
}

#[derive(Args)]
struct EnergyArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "embedded")]
    estimator: EstimatorArg,
    /// Mollifier radii in cells; two or more are extrapolated to ε → 0.
    #[arg(long, value_delimiter = ',')]
    eps_over_h: Option<Vec<f64>>,
    #[arg(long)]
    jump_threshold: Option<f64>,
    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum CjEmbedding {
    Tensor,
}

#[derive(Args)]
struct ConstantsArgs {
    /// K_N for the given N.
    #[arg(long)]
    k: Option<usize>,
    /// M(d).
    #[arg(long)]
    m: Option<usize>,
    /// C^a(N, d).
    #[arg(long, num_args = 2, value_names = ["N", "D"])]
    ca: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    cj: Option<CjEmbedding>,
    /// The one-dimensional Euclidean lifting constant.
    #[arg(long)]
    c1d: bool,
    /// Random restarts of the C^a ascent.
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
    #[arg(long, default_value_t = 100_000)]
    grid_points: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Halfvortex,
    Identities,
    Repr,
    Diffuse,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 256)]
    grid: usize,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldKind {
    /// The line field [e^{iθ/2}] on the unit disk.
    HalfVortex,
    /// Its lifting e^{iθ/2}, a unit field.
    HalfVortexLifting,
    /// [(cos g, sin g)] with g = slope·x₀.
    Twist,
    /// A straight jump between two lines.
    Jump,
    /// A constant field.
    Constant,
    /// A 1D sequence of lines at the given angles.
    Sequence,
}

#[derive(Args)]
struct MakeFieldArgs {
    #[arg(value_enum)]
    kind: FieldKind,
    #[arg(short, long)]
    output: PathBuf,
    /// Cells per axis.
    #[arg(long, default_value_t = 128)]
    grid: usize,
    /// Grid dimension N.
    #[arg(long, default_value_t = 2)]
    axes: usize,
    /// Value dimension d.
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    slope: f64,
    /// Angles in degrees in the plane of the first two coordinates: one for `constant`,
    /// two for `jump`, any number for `sequence`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    angles: Vec<f64>,
    /// Write `constant` as a unit field instead of a line field.
    #[arg(long)]
    unit: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<BvError>() {
        Some(BvError::BoundaryMismatch { .. }) => 3,
        Some(BvError::UnderResolved { .. }) => 4,
        _ => 2,
    }
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let env = match std::env::var("BVLIFT_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .context("BVLIFT_THREADS must be a positive integer")?,
        ),
        Err(_) => None,
    };
    if let Some(n) = env.or(flag) {
        if n == 0 {
            bail!("thread count must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_threads(cli.threads)?;
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Lift(args) => cmd_lift(&config, args),
        Command::Energy(args) => cmd_energy(&config, args),
        Command::Constants(args) => cmd_constants(args),
        Command::Verify(args) => cmd_verify(&config, args),
        Command::MakeField(args) => cmd_make_field(args),
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn save_field_atomic(field: &GridField, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_field(field, &mut buf)?;
    write_atomic(path, &buf)
}

fn to_json_line(value: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn cmd_lift(config: &Config, args: LiftArgs) -> Result<ExitCode> {
    let cfg = config.resolve(Overrides {
        seed: args.common.seed,
        trials: args.trials,
        directions: args.common.directions,
        metric: args.common.metric,
        ..Default::default()
    })?;
    let u = load_field(&args.input)?;
    let (result, reference): (LiftResult, Option<EnergyReport>) = match args.mode {
        LiftMode::Rotation => {
            let search = RotationSearch {
                directions: cfg.directions,
                ..RotationSearch::new(cfg.trials, cfg.seed, cfg.metric)
            };
            let result = search.run(&u)?;
            let reference = match cfg.metric {
                Metric::Geodesic => avg_directional_energy(
                    &u,
                    cfg.directions,
                    mix_seed(cfg.seed, u64::MAX),
                    Metric::Geodesic,
                )?,
                _ => embedded_tv(&u, Metric::EuclideanTensor)?,
            };
            (result, Some(reference))
        }
        LiftMode::Greedy1d => (lift_1d_field(&u)?, None),
        LiftMode::Boundary => {
            let path = args
                .boundary
                .as_ref()
                .ok_or_else(|| anyhow!("--mode boundary needs --boundary FILE"))?;
            let n0 = load_field(path)?;
            (lift_with_boundary(&u, &n0, cfg.trials, cfg.seed)?, None)
        }
    };
    save_field_atomic(&result.field, &args.output)?;
    let mut sidecar = json!({
        "mode": match args.mode {
            LiftMode::Rotation => "rotation",
            LiftMode::Greedy1d => "greedy1d",
            LiftMode::Boundary => "boundary",
        },
        "rotation": result.rotation.as_ref().map(|r| r.to_nested()),
        "energy": result.energy,
        "projection_check": result.projection_check,
    });
    if let Some(reference) = reference {
        sidecar["ratio"] = json!(result.energy.total / reference.total);
        sidecar["line_field_energy"] = serde_json::to_value(reference)?;
    }
    write_atomic(&sidecar_path(&args.output), to_json_line(&sidecar)?.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_energy(config: &Config, args: EnergyArgs) -> Result<ExitCode> {
    let cfg = config.resolve(Overrides {
        seed: args.common.seed,
        directions: args.common.directions,
        metric: args.common.metric,
        eps_over_h: args.eps_over_h,
        jump_threshold: args.jump_threshold,
        ..Default::default()
    })?;
    let f = load_field(&args.input)?;
    let report = match args.estimator {
        EstimatorArg::Mollified => {
            if cfg.eps_over_h.len() == 1 {
                let moll = Mollifier::ball(cfg.eps_over_h[0] * f.spacing())?;
                mollified_energy(&f, &moll, cfg.metric)?
            } else {
                mollified_energy_extrapolated(&f, &cfg.eps_over_h, cfg.metric)?
            }
        }
        EstimatorArg::Directional => avg_directional_energy(&f, cfg.directions, cfg.seed, cfg.metric)?,
        EstimatorArg::Embedded => match cfg.jump_threshold {
            Some(t) => embedded_tv_with_threshold(&f, cfg.metric, t)?,
            None => embedded_tv(&f, cfg.metric)?,
        },
    };
    print!("{}", to_json_line(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_constants(args: ConstantsArgs) -> Result<ExitCode> {
    let seed = args.seed.unwrap_or(7);
    let mut table: BTreeMap<String, ConstantResult> = BTreeMap::new();
    let none_requested =
        args.k.is_none() && args.m.is_none() && args.ca.is_none() && args.cj.is_none() && !args.c1d;
    let ks = match args.k {
        Some(k) => vec![k],
        None if none_requested => vec![1, 2, 3],
        None => vec![],
    };
    for k in ks {
        table.insert(format!("K_{k}"), k_const(k)?);
    }
    if let Some(d) = args.m {
        table.insert(format!("M({d})"), m_const(d)?);
    }
    let ca = match &args.ca {
        Some(v) => Some((v[0], v[1])),
        None if none_requested => Some((2, 2)),
        None => None,
    };
    if let Some((n, d)) = ca {
        table.insert(format!("C^a({n},{d})"), ca_const(n, d, args.restarts, seed)?);
    }
    if args.cj.is_some() || none_requested {
        table.insert(
            "C^j(tensor)".into(),
            cj_estimate(&Embedding::Tensor, args.grid_points, seed)?,
        );
    }
    if args.c1d || none_requested {
        table.insert("C_1d(tensor)".into(), c1d_const());
    }
    print!("{}", to_json_line(&table)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(config: &Config, args: VerifyArgs) -> Result<ExitCode> {
    let cfg = config.resolve(Overrides {
        seed: args.seed,
        trials: args.trials,
        output_dir: args.output_dir,
        ..Default::default()
    })?;
    let suite = match args.suite {
        SuiteArg::Halfvortex => Suite::Halfvortex,
        SuiteArg::Identities => Suite::Identities,
        SuiteArg::Repr => Suite::Repr,
        SuiteArg::Diffuse => Suite::Diffuse,
        SuiteArg::All => Suite::All,
    };
    let out = run_suites(
        suite,
        &VerifyConfig {
            seed: cfg.seed,
            grid: args.grid,
            trials: cfg.trials,
            samples: args.samples,
        },
    )?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_atomic(&dir.join("report.json"), to_json_line(&out.checks)?.as_bytes())?;
    let timings: BTreeMap<&str, u64> = out
        .checks
        .iter()
        .map(|c| (c.name.as_str(), c.runtime_ms))
        .collect();
    write_atomic(&dir.join("timings.json"), to_json_line(&timings)?.as_bytes())?;
    for trace in &out.traces {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        write_atomic(&dir.join(format!("{}.csv", trace.name)), &buf)?;
    }
    let failed: Vec<&str> = out
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    println!(
        "{} of {} checks passed; report in {}",
        out.checks.len() - failed.len(),
        out.checks.len(),
        dir.display()
    );
    for name in &failed {
        println!("FAILED {name}");
    }
    Ok(if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn line_at(deg: f64, d: usize) -> Vec<f64> {
    let t = deg.to_radians();
    let mut v = vec![0.0; d];
    v[0] = t.cos();
    v[1] = t.sin();
    v
}

fn cmd_make_field(args: MakeFieldArgs) -> Result<ExitCode> {
    if args.d < 2 {
        bail!("--d must be at least 2");
    }
    let need_angles = |n: usize| -> Result<()> {
        if args.angles.len() != n {
            bail!("expected {n} angle(s) in --angles, got {}", args.angles.len());
        }
        Ok(())
    };
    let field = match args.kind {
        FieldKind::HalfVortex => make_half_vortex(args.grid, args.d, args.axes)?,
        FieldKind::HalfVortexLifting => half_vortex_lifting(args.grid, args.d, args.axes)?,
        FieldKind::Twist => {
            let f = linear_twist(args.grid, args.axes, 1.0, args.slope)?;
            pad_values(&f, args.d)?
        }
        FieldKind::Jump => {
            need_angles(2)?;
            let a = line_at(args.angles[0], args.d);
            let b = line_at(args.angles[1], args.d);
            straight_jump(args.grid, args.axes, 1.0, &a, &b)?
        }
        FieldKind::Constant => {
            need_angles(1)?;
            let v = line_at(args.angles[0], args.d);
            let kind = if args.unit {
                ValueKind::Unit
            } else {
                ValueKind::Proj
            };
            GridField::from_fn(
                vec![args.grid; args.axes],
                1.0 / args.grid as f64,
                vec![0.0; args.axes],
                args.d,
                kind,
                None,
                |_| v.clone(),
            )?
        }
        FieldKind::Sequence => {
            if args.angles.is_empty() {
                bail!("--angles must list the sequence");
            }
            let values: Vec<f64> = args.angles.iter().flat_map(|&a| line_at(a, args.d)).collect();
            GridField::new(
                vec![args.angles.len()],
                1.0,
                vec![0.0],
                args.d,
                ValueKind::Proj,
                values,
                None,
            )?
        }
    };
    save_field_atomic(&field, &args.output)?;
    Ok(ExitCode::SUCCESS)
}

/// Embeds a planar field in the first two of `d` coordinates.
fn pad_values(f: &GridField, d: usize) -> Result<GridField> {
    if d == f.d() {
        return Ok(f.clone());
    }
    let values: Vec<f64> = f
        .values()
        .chunks(f.d())
        .flat_map(|v| {
            let mut w = vec![0.0; d];
            w[..v.len()].copy_from_slice(v);
            w
        })
        .collect();
    Ok(f.with_values(f.kind(), d, values)?)
}
