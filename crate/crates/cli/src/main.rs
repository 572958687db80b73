use clap::{Args, Parser, Subcommand, ValueEnum};
use fracperim::boundary::{
    codim_chain_report, estimate_codimension, fractional_codimension, hausdorff_content, measure_theoretic_boundary,
    regularized_boundary, regularized_minkowski_sums, uniform_grid, BoundarySpec, ChainParams, ChainStatus, CodimParams,
    CodimStatus, RatioParams,
};
use fracperim::filling::{verify_codim_relation, FillingParams, HyperbolicFilling};
use fracperim::geometry::{build_grid_space, fat_cantor, koch_snowflake, parse_rational};
use fracperim::kernels::{KernelMode, PerimeterForm};
use fracperim::minimizer::{
    brute_force_minimizer, solve_exact, verify_porosity, verify_uniform_density, MinimizationProblem,
};
use fracperim::recipes::{run_recipe, DEFAULT_SEED, RECIPES};
use fracperim::shells::ShellEnergies;
use fracperim::space::dyadic_scales;
use fracperim::{DiscreteSpace, Error, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug, Serialize)]
#[command(name = "fracperim", version, about = "Fractional perimeters, codimension estimates and nonlocal minimizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Generate a space and a set.
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
    /// Fractional perimeter of a set.
    Energy(EnergyArgs),
    /// Codimension estimates of a set's boundary.
    Codim(CodimArgs),
    /// Exact minimizer of the nonlocal functional.
    Minimize(MinimizeArgs),
    /// Hyperbolic filling of a space.
    Hypfill(HypfillArgs),
    /// Run a pinned experiment and report pass/fail.
    Reproduce(ReproduceArgs),
}

#[derive(Subcommand, Debug, Serialize)]
enum GenCommand {
    /// Fat Cantor set C_a at finite depth, rasterized on [0, 1].
    Cantor {
        #[arg(long)]
        a: String,
        #[arg(long)]
        depth: u32,
        #[arg(long, default_value_t = 4096)]
        raster: usize,
        #[command(flatten)]
        out: GenOut,
    },
    /// Koch snowflake rasterized on an n x n grid.
    Koch {
        #[arg(long)]
        depth: u32,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: GenOut,
    },
    /// Uniform grid on [0, 1]^dim.
    Grid {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "space.json")]
        space: PathBuf,
    },
}

#[derive(Args, Debug, Serialize)]
struct GenOut {
    #[arg(long, default_value = "space.json")]
    space: PathBuf,
    #[arg(long, default_value = "set.json")]
    set: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    MetricMeasure,
    Interval1d,
}

impl From<Mode> for KernelMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::MetricMeasure => KernelMode::MetricMeasure,
            Mode::Interval1d => KernelMode::Interval1d,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct EnergyArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    set: PathBuf,
    #[arg(long)]
    s: f64,
    #[arg(long, value_enum, default_value = "metric-measure")]
    mode: Mode,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum What {
    Mink,
    Haus,
    Frac,
    Chain,
}

#[derive(Args, Debug, Serialize)]
struct CodimArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    set: PathBuf,
    #[arg(long, value_enum)]
    what: What,
    /// Codimension grid as `lo:hi:steps`.
    #[arg(long, default_value = "0:1.5:30")]
    t_grid: String,
    /// Exponent grid for the ratio test as `lo:hi:steps`.
    #[arg(long, default_value = "0.02:0.98:48")]
    s_grid: String,
    /// Radii as a comma-separated list, or `lo:hi` for dyadic radii.
    #[arg(long)]
    scales: Option<String>,
    /// Smallest boundary scale in units of h.
    #[arg(long, default_value_t = 4.0)]
    scale_min: f64,
    /// Largest boundary scale in units of h.
    #[arg(long, default_value_t = 8.0)]
    scale_max: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    /// Regularized boundary at scale `ratio * r` for Minkowski radius `r`; 0 keeps `scale_min`.
    #[arg(long, default_value_t = 0.125)]
    boundary_ratio: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of (scale, value) pairs.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct MinimizeArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    omega: PathBuf,
    #[arg(long)]
    exterior: PathBuf,
    #[arg(long)]
    s: f64,
    #[arg(long, value_enum, default_value = "metric-measure")]
    mode: Mode,
    /// Also run the enumeration oracle and compare.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 0.02)]
    gamma: f64,
    #[arg(long, default_value_t = 64.0)]
    porosity_c: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct HypfillArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    tau: f64,
    /// beta / epsilon, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    beta_ratio: f64,
    #[arg(long)]
    levels: usize,
    /// Compute the codimension ratio table.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, default_value_t = 4)]
    octaves: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ReproduceArgs {
    /// Recipe name, or `all`.
    recipe: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_set(path: &Path) -> Result<Vec<u8>> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn read_space(path: &Path) -> Result<DiscreteSpace> {
    DiscreteSpace::load(path).map_err(|e| match e {
        Error::Json(j) => Error::InvalidInput(format!("{}: {j}", path.display())),
        other => other,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn emit(out: &Option<PathBuf>, config: &impl Serialize, result: Value) -> Result<()> {
    let report = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "result": result,
    });
    match out {
        Some(p) => write_json(p, &report),
        None => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    let mut text = format!("{header}\n");
    for (a, b) in rows {
        writeln!(text, "{a:e},{b:e}").unwrap();
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::InvalidInput(format!("grid '{text}' must look like lo:hi:steps"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let steps: usize = parts[2].parse().map_err(|_| bad())?;
    if steps == 0 || !(hi > lo) {
        return Err(bad());
    }
    Ok(uniform_grid(lo, hi, steps))
}

fn parse_scales(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInput(format!("scales '{text}' must be a comma list or lo:hi"));
    if let Some((lo, hi)) = text.split_once(':') {
        let lo: f64 = lo.parse().map_err(|_| bad())?;
        let hi: f64 = hi.parse().map_err(|_| bad())?;
        return Ok(dyadic_scales(lo, hi));
    }
    let mut v = text.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

enum Outcome {
    Done,
    Inconclusive,
}

fn run(cli: Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Gen { what } => {
            let (space, set, paths) = match what {
                GenCommand::Cantor { a, depth, raster, out } => {
                    let (sp, st) = fat_cantor(&parse_rational(a)?, *depth)?.raster(*raster)?;
                    (sp, Some(st), (out.space.clone(), Some(out.set.clone())))
                }
                GenCommand::Koch { depth, n, out } => {
                    let (sp, st) = koch_snowflake(*depth)?.raster(*n)?;
                    (sp, Some(st), (out.space.clone(), Some(out.set.clone())))
                }
                GenCommand::Grid { dim, n, space } => (build_grid_space(*dim, *n, 0.0, 1.0)?, None, (space.clone(), None)),
            };
            write_json(&paths.0, &space.to_file_struct())?;
            if let (Some(set), Some(p)) = (set, paths.1) {
                write_json(&p, &set)?;
            }
            Ok(Outcome::Done)
        }
        Command::Energy(args) => {
            let space = read_space(&args.space)?;
            let set = read_set(&args.set)?;
            let start = Instant::now();
            let perimeter = fracperim::kernels::s_perimeter(&space, &set, args.s, args.mode.into(), PerimeterForm::Symmetric)?;
            let inside = set.iter().filter(|&&v| v == 1).count();
            let pair_count = inside * (set.len() - inside);
            let result = json!({
                "perimeter": perimeter,
                "pair_count": pair_count,
                "runtime_ms": start.elapsed().as_millis() as u64,
            });
            emit(&args.out, &cli, result)?;
            Ok(Outcome::Done)
        }
        Command::Codim(args) => codim(&cli, args),
        Command::Minimize(args) => {
            let space = read_space(&args.space)?;
            let omega = read_set(&args.omega)?;
            let exterior = read_set(&args.exterior)?;
            let problem = MinimizationProblem::new(&space, omega.clone(), exterior, args.s, args.mode.into())?;
            let result = solve_exact(&problem)?;
            let oracle = if args.oracle {
                let b = brute_force_minimizer(&problem)?;
                Some(json!({
                    "energy": b.energy,
                    "same_set": b.set == result.set,
                    "relative_gap": (b.energy - result.energy).abs() / b.energy.abs().max(f64::MIN_POSITIVE),
                }))
            } else {
                None
            };
            let density = verify_uniform_density(&space, &omega, &result, args.gamma)?;
            let porosity = verify_porosity(&space, &omega, &result, args.porosity_c)?;
            let result = json!({
                "set": result.set,
                "energy": result.energy,
                "certificate": result.certificate,
                "oracle": oracle,
                "density": density,
                "porosity": porosity,
            });
            emit(&args.out, &cli, result)?;
            Ok(Outcome::Done)
        }
        Command::Hypfill(args) => {
            let base = read_space(&args.space)?;
            let params = FillingParams::with_beta_ratio(args.alpha, args.tau, args.levels, args.beta_ratio);
            let filling = HyperbolicFilling::build(&base, params)?;
            let mut result = json!({ "filling": filling, "total_mass": filling.total_mass() });
            if args.verify {
                let n = base.len();
                let k = args.samples.clamp(1, n);
                let samples: Vec<usize> = (0..k).map(|i| n / 8 + i * (3 * n / 4) / k).collect();
                let r0 = 2.0 * filling.attach_radius;
                let radii: Vec<f64> = (0..=args.octaves).map(|j| r0 * 2f64.powi(j as i32)).collect();
                let rel = verify_codim_relation(&filling, &base, &samples, &radii)?;
                if let Some(p) = &args.csv {
                    write_csv(p, "radius,ratio", rel.rows.iter().map(|r| (r.r, r.ratio)))?;
                }
                result["relation"] = serde_json::to_value(&rel)?;
            }
            emit(&args.out, &cli, result)?;
            Ok(Outcome::Done)
        }
        Command::Reproduce(args) => {
            let names: Vec<&str> = if args.recipe == "all" { RECIPES.to_vec() } else { vec![args.recipe.as_str()] };
            let mut reports = Vec::new();
            let mut all = true;
            for name in names {
                let r = run_recipe(name, args.seed)?;
                for c in &r.checks {
                    eprintln!("{} criterion {} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.criterion, c.name, c.detail);
                }
                all &= r.passed();
                reports.push(r);
            }
            emit(&args.out, &cli, serde_json::to_value(&reports)?)?;
            Ok(if all { Outcome::Done } else { Outcome::Inconclusive })
        }
    }
}

fn codim(cli: &Cli, args: &CodimArgs) -> Result<Outcome> {
    let space = read_space(&args.space)?;
    let set = read_set(&args.set)?;
    let h = space.resolution_h();
    let spec = BoundarySpec { scale_min: args.scale_min * h, scale_max: args.scale_max * h, delta: args.delta };
    spec.validate(&space)?;
    let t_grid = parse_grid(&args.t_grid)?;
    let s_grid = parse_grid(&args.s_grid)?;
    let scales = args.scales.as_deref().map(parse_scales).transpose()?;
    let top = space.diameter() / 8.0;
    let (result, series, inconclusive): (Value, Vec<(f64, f64)>, bool) = match args.what {
        What::Mink => {
            let scales = scales.unwrap_or_else(|| dyadic_scales(8.0 * spec.scale_min, top));
            let sums = if args.boundary_ratio == 0.0 {
                let reg = regularized_boundary(&space, &set, &spec)?;
                scales.iter().map(|&r| fracperim::boundary::minkowski_sum(&space, &reg, r).map(|c| c.value)).collect::<Result<Vec<_>>>()?
            } else {
                regularized_minkowski_sums(&space, &set, &spec, &scales, args.boundary_ratio)?
            };
            let est = estimate_codimension(&scales, &t_grid, &CodimParams::default(), |t| {
                Ok(scales.iter().zip(&sums).map(|(&r, &m)| r.powf(-t) * m).collect())
            })?;
            let series = scales.iter().cloned().zip(sums.iter().cloned()).collect();
            (serde_json::to_value(&est)?, series, est.status == CodimStatus::Inconclusive)
        }
        What::Haus => {
            let scales = scales.unwrap_or_else(|| dyadic_scales(2.0 * spec.scale_min, top));
            let mtb = measure_theoretic_boundary(&space, &set, &spec)?;
            let est = estimate_codimension(&scales, &t_grid, &CodimParams::default(), |t| {
                scales.iter().map(|&r| hausdorff_content(&space, &mtb, t, r).map(|c| c.value)).collect()
            })?;
            let series = scales.iter().cloned().zip(est.contents.iter().cloned()).collect();
            (serde_json::to_value(&est)?, series, est.status == CodimStatus::Inconclusive)
        }
        What::Frac => {
            let (lo, hi) = match &scales {
                Some(v) if v.len() >= 2 => (v[v.len() - 1], v[0]),
                _ => (8.0 * h, top),
            };
            let shells = ShellEnergies::new(&space, &set, lo, hi)?;
            let f = fractional_codimension(|s| shells.energies(s), &s_grid, &RatioParams::default())?;
            let series = f.samples.iter().map(|x| (x.s, x.ratio)).collect();
            (serde_json::to_value(&f)?, series, f.status == CodimStatus::Inconclusive)
        }
        What::Chain => {
            let mut params = ChainParams::new(t_grid, s_grid);
            params.minkowski_scales = scales;
            params.boundary_ratio = args.boundary_ratio;
            let r = codim_chain_report(&space, &set, &spec, &params, None)?;
            let series = r.minkowski.scales.iter().cloned().zip(r.minkowski.contents.iter().cloned()).collect();
            (serde_json::to_value(&r)?, series, r.status == ChainStatus::Partial)
        }
    };
    if let Some(p) = &args.csv {
        let header = if matches!(args.what, What::Frac) { "s,ratio" } else { "scale,content" };
        write_csv(p, header, series)?;
    }
    emit(&args.out, cli, result)?;
    Ok(if inconclusive { Outcome::Inconclusive } else { Outcome::Done })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    if let Some(n) = std::env::var("FRACPERIM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Inconclusive) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
