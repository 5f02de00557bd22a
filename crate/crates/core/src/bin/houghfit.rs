//! Command-line front end.
//!
//! Exit codes: 0 success, 2 I/O failure, 64 usage error, 70 numeric failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use houghfit::error::Error;
use houghfit::estimators::{fit_ht, fit_lms, fit_ls, fit_strip, heuristic_grid, FitResult};
use houghfit::excess_mass::{
    calibrate_null, convex_curve, empirical_curve, lambda_range, stat_convex, stat_known_null, DetectionMode,
};
use houghfit::experiments::{
    gen_two_lines, run_rate, run_table1, RateConfig, Table1Config, TABLE1_NS, TABLE1_RS,
};
use houghfit::grid::GridSpec;
use houghfit::io::{self, FitSummary};
use houghfit::model::{center_design, contaminate_cluster, dual_lines, gen_dataset, uncenter_theta, DesignSpec, ModelSpec, NoiseSpec};
use houghfit::objective::objective_field;
use houghfit::quadrature::QuadratureSpec;
use houghfit::robustness::{breakdown_report, empirical_breakdown_probe};
use houghfit::Result;

const THREADS_ENV: &str = "HOUGHFIT_THREADS";
const EXIT_IO: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_NUMERIC: u8 = 70;

#[derive(Parser, Debug)]
#[command(name = "houghfit", version, about = "Hough transform line estimation and diagnostics")]
#[command(args_override_self = true)]
struct Cli {
    /// Worker threads (default: $HOUGHFIT_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a line to a dataset.
    Fit(FitArgs),
    /// Radius study: RMSE of the HT estimate over a grid of (n, r).
    Table1(Table1Args),
    /// Error decay with sample size and its log-log slope.
    Rate(RateArgs),
    /// Breakdown points and a contamination probe.
    Breakdown(BreakdownArgs),
    /// Test one line against several.
    Detect(DetectArgs),
    /// Plot-ready CSV exports.
    Export(ExportArgs),
    /// Generate a synthetic dataset.
    Gen(GenArgs),
}

#[derive(Args, Debug, Serialize, Clone)]
struct GridArgs {
    /// Lower corner, one value or `a,b`.
    #[arg(long, allow_hyphen_values = true, default_value = "-3")]
    grid_lo: String,
    /// Upper corner, one value or `a,b`.
    #[arg(long, allow_hyphen_values = true, default_value = "3")]
    grid_hi: String,
    /// Nodes per axis, one value or `ra,rb`.
    #[arg(long, default_value = "600")]
    grid_res: String,
}

impl GridArgs {
    fn build(&self) -> Result<GridSpec> {
        let lo = pair_f64(&self.grid_lo, "grid-lo")?;
        let hi = pair_f64(&self.grid_hi, "grid-hi")?;
        let mut res = pair_list::<usize>(&self.grid_res, "grid-res")?;
        if res.len() == 1 {
            res.push(res[0]);
        }
        GridSpec::new(lo, hi, res)
    }
}

#[derive(Args, Debug, Serialize, Clone)]
struct ModelArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    a0: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
    b0: f64,
    /// `gaussian:SD`, `cauchy:SCALE` or `uniform:HALF_WIDTH`.
    #[arg(long, default_value = "gaussian:0.5")]
    noise: String,
    /// `uniform:LO:HI`, `gaussian:MEAN:SD`, `point:X` or `cauchy:LOC:SCALE`.
    #[arg(long, allow_hyphen_values = true, default_value = "uniform:-2:2")]
    design: String,
}

impl ModelArgs {
    fn build(&self) -> Result<ModelSpec> {
        let spec = ModelSpec::new(self.a0, self.b0, parse_noise(&self.noise)?, parse_design(&self.design)?);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum FitMethod {
    Ht,
    Strip,
    Lms,
    Ls,
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    /// Dataset CSV with header `x,y`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "ht")]
    method: FitMethod,
    #[arg(long, default_value_t = 0.4)]
    r: f64,
    #[command(flatten)]
    grid: GridArgs,
    /// Use the heuristic region (LS fit +- 3 robust scales) instead of the grid corners.
    #[arg(long)]
    heuristic_grid: bool,
    /// Subtract the mean abscissa before fitting; the estimate is mapped back.
    #[arg(long)]
    center: bool,
    /// Also write the objective field (CSV plus JSON header).
    #[arg(long)]
    field_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct Table1Args {
    /// Comma-separated sample sizes.
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated radii.
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 20_080_101)]
    seed: u64,
    #[arg(long, allow_hyphen_values = true)]
    grid_lo: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    grid_hi: Option<String>,
    #[arg(long)]
    grid_res: Option<String>,
    /// 200 x 200 grid and 100 replicates unless overridden.
    #[arg(long)]
    fast: bool,
    /// Refuse to run above this many grid-node evaluations.
    #[arg(long, default_value_t = 2e10)]
    budget: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct RateArgs {
    #[arg(long, default_value = "50,200,800")]
    n: String,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 0.4)]
    r: f64,
    #[arg(long, default_value_t = 20_080_102)]
    seed: u64,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct BreakdownArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.4)]
    r: f64,
    #[command(flatten)]
    grid: GridArgs,
    /// Largest number of adversarial points.
    #[arg(long, default_value_t = 0)]
    k_max: usize,
    /// Abscissa around which adversarial points are placed.
    #[arg(long, allow_hyphen_values = true, default_value_t = 100.0)]
    displacement: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    KnownNull,
    Convex,
}

#[derive(Args, Debug, Serialize)]
struct LambdaArgs {
    #[arg(long, default_value_t = 0.1)]
    lambda_lo: f64,
    #[arg(long, default_value_t = 0.9)]
    lambda_hi: f64,
    #[arg(long, default_value_t = 17)]
    lambda_count: usize,
}

impl LambdaArgs {
    fn build(&self) -> Vec<f64> {
        lambda_range(self.lambda_lo, self.lambda_hi, self.lambda_count)
    }
}

#[derive(Args, Debug, Serialize)]
struct DetectArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.4)]
    r: f64,
    #[arg(long, value_enum, default_value = "known-null")]
    mode: ModeArg,
    #[command(flatten)]
    lambdas: LambdaArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Null model for the known-null functional and for calibration.
    #[command(flatten)]
    model: ModelArgs,
    /// Calibration replicates (0 skips calibration).
    #[arg(long, default_value_t = 0)]
    reps: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write the excess-mass curves.
    #[arg(long)]
    curve_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ExportWhat {
    Dualplot,
    Field,
    Curve,
}

#[derive(Args, Debug, Serialize)]
struct ExportArgs {
    #[arg(long, value_enum)]
    what: ExportWhat,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.4)]
    r: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    lambdas: LambdaArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    model: ModelArgs,
    /// Number of contaminating cluster points.
    #[arg(long, default_value_t = 0)]
    contaminate_k: usize,
    /// Cluster mean `x,y`.
    #[arg(long, allow_hyphen_values = true, default_value = "7,2")]
    contaminate_mean: String,
    /// Per-coordinate cluster variance.
    #[arg(long, default_value_t = 0.25)]
    contaminate_cov: f64,
    /// Put every other point on a parallel line this far below.
    #[arg(long, allow_hyphen_values = true)]
    two_lines_offset: Option<f64>,
    /// Output CSV; the JSON sidecar goes next to it.
    #[arg(long)]
    out: PathBuf,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn pair_list<T: std::str::FromStr>(s: &str, flag: &str) -> Result<Vec<T>> {
    let v = s
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| usage(format!("--{flag}: cannot parse `{p}`"))))
        .collect::<Result<Vec<T>>>()?;
    match v.len() {
        1 | 2 => Ok(v),
        _ => Err(usage(format!("--{flag}: expected one or two values"))),
    }
}

fn pair_f64(s: &str, flag: &str) -> Result<Vec<f64>> {
    let mut v = pair_list::<f64>(s, flag)?;
    if v.len() == 1 {
        v.push(v[0]);
    }
    Ok(v)
}

fn list<T: std::str::FromStr>(s: &str, flag: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| usage(format!("--{flag}: cannot parse `{p}`"))))
        .collect()
}

fn spec_parts<'a>(s: &'a str, flag: &str, arity: usize) -> Result<(&'a str, Vec<f64>)> {
    let mut it = s.split(':');
    let kind = it.next().unwrap_or_default();
    let nums = it
        .map(|p| p.trim().parse::<f64>().map_err(|_| usage(format!("--{flag}: cannot parse `{p}`"))))
        .collect::<Result<Vec<_>>>()?;
    if nums.len() != arity {
        return Err(usage(format!("--{flag}: `{kind}` takes {arity} parameter(s)")));
    }
    Ok((kind, nums))
}

fn parse_noise(s: &str) -> Result<NoiseSpec> {
    let (kind, v) = spec_parts(s, "noise", 1)?;
    let spec = match kind {
        "gaussian" => NoiseSpec::Gaussian { sigma: v[0] },
        "cauchy" => NoiseSpec::Cauchy { scale: v[0] },
        "uniform" => NoiseSpec::Uniform { half_width: v[0] },
        _ => return Err(usage(format!("--noise: unknown kind `{kind}`"))),
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_design(s: &str) -> Result<DesignSpec> {
    let kind = s.split(':').next().unwrap_or_default();
    let spec = match kind {
        "uniform" => {
            let (_, v) = spec_parts(s, "design", 2)?;
            DesignSpec::Uniform { lo: v[0], hi: v[1] }
        }
        "gaussian" => {
            let (_, v) = spec_parts(s, "design", 2)?;
            DesignSpec::Gaussian { mean: v[0], sd: v[1] }
        }
        "point" => {
            let (_, v) = spec_parts(s, "design", 1)?;
            DesignSpec::PointMass { value: v[0] }
        }
        "cauchy" => {
            let (_, v) = spec_parts(s, "design", 2)?;
            DesignSpec::HeavyTailed { location: v[0], scale: v[1] }
        }
        _ => return Err(usage(format!("--design: unknown kind `{kind}`"))),
    };
    spec.validate()?;
    Ok(spec)
}

/// Writes to `out`, or stdout when absent.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct Report<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    config: &'a C,
    #[serde(flatten)]
    result: R,
}

fn emit_json<C: Serialize, R: Serialize>(out: Option<&Path>, command: &str, config: &C, result: R) -> Result<()> {
    emit(out, io::to_json(&Report { command, config, result })?.as_bytes())
}

/// Metadata for CSV outputs: `<out>.json`, or stderr when writing to stdout.
fn emit_csv_meta<C: Serialize, R: Serialize>(out: Option<&Path>, command: &str, config: &C, extra: R) -> Result<()> {
    let text = io::to_json(&Report { command, config, result: extra })?;
    match out {
        Some(p) => std::fs::write(io::sidecar_path(p), text)?,
        None => eprint!("{text}"),
    }
    Ok(())
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let raw = io::load_dataset(&args.data)?;
    let (data, shift) = if args.center { center_design(&raw) } else { (raw.clone(), 0.0) };
    if let FitMethod::Ls = args.method {
        let theta = fit_ls(&raw)?;
        #[derive(Serialize)]
        struct LsOut {
            method: &'static str,
            theta_hat: houghfit::Theta,
            n: usize,
        }
        return emit_json(args.out.as_deref(), "fit", args, LsOut { method: "ls", theta_hat: theta, n: raw.len() });
    }
    let grid = if args.heuristic_grid {
        let res = pair_list::<usize>(&args.grid.grid_res, "grid-res")?[0];
        heuristic_grid(&data, res)?
    } else {
        args.grid.build()?
    };
    let mut fit: FitResult = match args.method {
        FitMethod::Ht => fit_ht(&data, &grid, args.r)?,
        FitMethod::Strip => fit_strip(&data, &grid, args.r)?,
        FitMethod::Lms => fit_lms(&data, &grid)?,
        FitMethod::Ls => unreachable!(),
    };
    if args.heuristic_grid {
        fit.warnings.push("search region chosen heuristically from the LS fit".into());
    }
    if let Some(path) = &args.field_out {
        if !matches!(args.method, FitMethod::Ht) {
            return Err(usage("--field-out is only available for --method ht"));
        }
        let field = objective_field(&data, &grid, args.r)?;
        io::save_field(&field, Some(args.r), Some(data.len()), path)?;
    }
    if args.center {
        fit.theta_hat = uncenter_theta(&fit.theta_hat, shift);
        fit.warnings.push(format!("fitted on centered abscissae (shift {shift}); grid refers to centered coordinates"));
    }
    warn_all(&fit.warnings);
    emit_json(args.out.as_deref(), "fit", args, FitSummary::from(&fit))
}

fn table1_config(args: &Table1Args) -> Result<Table1Config> {
    let mut cfg = if args.fast { Table1Config::fast() } else { Table1Config::default() };
    cfg.seed = args.seed;
    if let Some(n) = &args.n {
        cfg.ns = list(n, "n")?;
    } else {
        cfg.ns = TABLE1_NS.to_vec();
    }
    if let Some(r) = &args.r {
        cfg.rs = list(r, "r")?;
    } else {
        cfg.rs = TABLE1_RS.to_vec();
    }
    if let Some(reps) = args.reps {
        cfg.replicates = reps;
    }
    if args.grid_lo.is_some() || args.grid_hi.is_some() || args.grid_res.is_some() {
        let g = GridArgs {
            grid_lo: args.grid_lo.clone().unwrap_or_else(|| "-3".into()),
            grid_hi: args.grid_hi.clone().unwrap_or_else(|| "3".into()),
            grid_res: args.grid_res.clone().unwrap_or_else(|| cfg.grid.resolution[0].to_string()),
        };
        cfg.grid = g.build()?;
    }
    if cfg.ns.contains(&0) || cfg.rs.iter().any(|&r| !(r > 0.0)) {
        return Err(usage("sample sizes and radii must be positive"));
    }
    Ok(cfg)
}

fn cmd_table1(args: &Table1Args) -> Result<()> {
    let cfg = table1_config(args)?;
    let projected = cfg.projected_node_evaluations();
    if projected as f64 > args.budget {
        return Err(usage(format!(
            "projected {projected} grid-node evaluations exceed --budget {}; raise --budget to run",
            args.budget
        )));
    }
    let rows = run_table1(&cfg)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    emit(args.out.as_deref(), &bytes)?;
    #[derive(Serialize)]
    struct Meta<'a> {
        resolved: &'a Table1Config,
        rng: &'static str,
    }
    emit_csv_meta(args.out.as_deref(), "table1", args, Meta { resolved: &cfg, rng: houghfit::rng::RNG_NAME })
}

fn cmd_rate(args: &RateArgs) -> Result<()> {
    let cfg = RateConfig {
        model: args.model.build()?,
        grid: args.grid.build()?,
        ns: list(&args.n, "n")?,
        r: args.r,
        replicates: args.reps,
        seed: args.seed,
    };
    let out = run_rate(&cfg)?;
    warn_all(&out.warnings);
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &out.rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    emit(args.out.as_deref(), &bytes)?;
    #[derive(Serialize)]
    struct Meta {
        slope: f64,
        quantization_floor: f64,
        warnings: Vec<String>,
        rng: &'static str,
    }
    emit_csv_meta(
        args.out.as_deref(),
        "rate",
        args,
        Meta { slope: out.slope, quantization_floor: out.quantization_floor, warnings: out.warnings, rng: houghfit::rng::RNG_NAME },
    )
}

fn cmd_breakdown(args: &BreakdownArgs) -> Result<()> {
    let data = io::load_dataset(&args.data)?;
    let grid = args.grid.build()?;
    let fit = fit_ht(&data, &grid, args.r)?;
    let report = breakdown_report(&data, &fit)?;
    let probe = if args.k_max > 0 {
        empirical_breakdown_probe(&data, &grid, args.r, args.k_max, args.displacement, args.seed)?
    } else {
        Vec::new()
    };
    warn_all(&report.warnings);
    #[derive(Serialize)]
    struct Out<'a> {
        theta_hat: &'a houghfit::Theta,
        report: houghfit::robustness::BreakdownReport,
        probe: Vec<houghfit::robustness::ProbeRow>,
    }
    emit_json(args.out.as_deref(), "breakdown", args, Out { theta_hat: &fit.theta_hat, report, probe })
}

fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let data = io::load_dataset(&args.data)?;
    let grid = args.grid.build()?;
    let lambdas = args.lambdas.build();
    let model = args.model.build()?;
    let quad = QuadratureSpec::default();
    let (mode, mut report) = match args.mode {
        ModeArg::KnownNull => (DetectionMode::KnownNull, stat_known_null(&data, &model, args.r, &lambdas, &grid, &quad)?),
        ModeArg::Convex => (DetectionMode::Convex, stat_convex(&data, args.r, &lambdas, &grid)?),
    };
    if args.reps > 0 {
        let cal = calibrate_null(&model, mode, args.r, &lambdas, &grid, data.len(), args.reps, args.alpha, args.seed, &quad)?;
        report = report.with_calibration(&cal);
    }
    if let Some(path) = &args.curve_out {
        let field = objective_field(&data, &grid, args.r)?;
        let emp = empirical_curve(&field, &lambdas)?;
        let (conv, _) = convex_curve(&field, &lambdas)?;
        let mut curves = vec![&emp, &conv];
        let null;
        if let DetectionMode::KnownNull = mode {
            null = houghfit::excess_mass::excess_mass_null(&model, args.r, &lambdas, &grid.recentered(), &quad)?.curve;
            curves.push(&null);
        }
        io::write_curves_csv(&curves, std::fs::File::create(path)?)?;
    }
    warn_all(&report.warnings);
    emit_json(args.out.as_deref(), "detect", args, report)
}

fn cmd_export(args: &ExportArgs) -> Result<()> {
    let data = io::load_dataset(&args.data)?;
    match args.what {
        ExportWhat::Dualplot => {
            let mut buf = Vec::new();
            io::write_dual_lines_csv(&dual_lines(&data), &mut buf)?;
            emit(args.out.as_deref(), &buf)
        }
        ExportWhat::Field => {
            let out = args.out.as_deref().ok_or_else(|| usage("field export needs --out"))?;
            let field = objective_field(&data, &args.grid.build()?, args.r)?;
            io::save_field(&field, Some(args.r), Some(data.len()), out)
        }
        ExportWhat::Curve => {
            let field = objective_field(&data, &args.grid.build()?, args.r)?;
            let lambdas = args.lambdas.build();
            let emp = empirical_curve(&field, &lambdas)?;
            let (conv, _) = convex_curve(&field, &lambdas)?;
            let mut buf = Vec::new();
            io::write_curves_csv(&[&emp, &conv], &mut buf)?;
            emit(args.out.as_deref(), &buf)
        }
    }
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let spec = args.model.build()?;
    let mut data = match args.two_lines_offset {
        Some(off) => gen_two_lines(&spec, off, args.n, args.seed)?,
        None => gen_dataset(&spec, args.n, args.seed)?,
    };
    if args.contaminate_k > 0 {
        let m = pair_f64(&args.contaminate_mean, "contaminate-mean")?;
        let seed = houghfit::rng::replicate_seed(args.seed, 0xc0, 0);
        data = contaminate_cluster(&data, args.contaminate_k, (m[0], m[1]), args.contaminate_cov, seed)?;
        let len = data.len();
        if let Some(meta) = data.metadata.as_mut() {
            meta.n = len;
            meta.generator.push_str(&format!("+cluster({},{},{};{})", args.contaminate_k, m[0], m[1], args.contaminate_cov));
        }
    }
    io::save_dataset(&data, &args.out)
}

/// Prepends `--key value` pairs from the config file right after the
/// subcommand name, so explicit flags given later take precedence.
fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let path = if let Some(p) = argv[pos].strip_prefix("--config=") {
        p.to_string()
    } else {
        argv.get(pos + 1).cloned().ok_or_else(|| usage("--config needs a path"))?
    };
    let text = std::fs::read_to_string(&path)?;
    let mut injected = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{path}:{}: expected `key = value`", no + 1)))?;
        let (k, v) = (k.trim().trim_start_matches("--").replace('_', "-"), v.trim());
        match v {
            "true" => injected.push(format!("--{k}")),
            "false" => {}
            _ => injected.push(format!("--{k}={v}")),
        }
    }
    let sub = argv.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 1);
    let mut out = argv.clone();
    match sub {
        Some(i) => {
            for (j, a) in injected.into_iter().enumerate() {
                out.insert(i + 1 + j, a);
            }
        }
        None => return Err(usage("--config needs a subcommand")),
    }
    Ok(out)
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| usage(format!("{THREADS_ENV}: cannot parse `{v}`")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => EXIT_IO,
        Error::InvalidArgument(_) | Error::NotImplemented(_) => EXIT_USAGE,
        Error::SingularDesign(_) | Error::AssumptionViolated(_) | Error::Numeric(_) => EXIT_NUMERIC,
    }
}

fn run(cli: Cli) -> Result<()> {
    init_threads(cli.threads)?;
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Table1(a) => cmd_table1(a),
        Command::Rate(a) => cmd_rate(a),
        Command::Breakdown(a) => cmd_breakdown(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Export(a) => cmd_export(a),
        Command::Gen(a) => cmd_gen(a),
    }
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
