//! Command-line driver: `simulate`, `compare`, `verify` and `sweep`.
//!
//! Exit codes: 0 success (all checks pass), 1 a check failed, 2 usage or
//! configuration error, 3 numerical failure. Diagnostics go to standard error.
//!
//! `CPMETRIC_THREADS` sets the worker count of the parallel build.

use clap::{Args, Parser, Subcommand};
use cpmetric::integrator::Trajectory;
use cpmetric::scenario::{self, ScenarioConfig, FORMAT_VERSION};
use cpmetric::verifier::{self, CheckReport, Suite, VerifyOptions};
use cpmetric::{par, Error, ModelId};
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const THREADS_ENV: &str = "CPMETRIC_THREADS";

#[derive(Parser, Debug)]
#[command(name = "cpmetric", version, about = "Plastic-metric flow rules: simulate, compare, verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one model on one scenario and write the trajectory CSV.
    Simulate(SimulateArgs),
    /// Run several models on a shared scenario and tabulate their deviation.
    Compare(CompareArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Run a scenario over a grid of one numeric parameter.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Loading preset, used when no config file is given.
    #[arg(long)]
    preset: Option<String>,
    /// Elastic energy, used when no config file is given.
    #[arg(long)]
    energy: Option<String>,
    /// Overrides the number of steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Overrides the integration scheme (euler, rk4, exponential_map).
    #[arg(long)]
    scheme: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    model: Option<String>,
    /// Use the shipped demo scenario of the model.
    #[arg(long, conflicts_with_all = ["config", "preset", "energy"])]
    demo: bool,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Trajectory CSV path; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Summary JSON path.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Comma-separated model list; the first is the reference.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Largest accepted relative deviation.
    #[arg(long, default_value_t = 1e-6)]
    threshold: f64,
    /// Deviation table path; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// algebra, stress, flow, equivalence, deficiency or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// `name=value`; name is a threshold class (algebraic, structural,
    /// trajectory, finite_difference) or a full check name. Repeatable.
    #[arg(long = "threshold")]
    thresholds: Vec<String>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Parameter to vary: mu, lambda, kappa, sigma_y, yield_radius_factor,
    /// eta, steps or total_time.
    #[arg(long)]
    param: String,
    /// Explicit grid, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to", "count"])]
    values: Vec<f64>,
    #[arg(long, requires_all = ["to", "count"])]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    /// Comma-separated models; defaults to the scenario's models.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    usage(format!("{}: {e}", path.display()))
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(f) = configure_threads() {
        eprintln!("error: {}", f.message());
        return f.code();
    }
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Compare(a) => compare(a),
        Command::Verify(a) => verify(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
            par::init_threads(n);
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// scenario assembly

fn parse_model(key: &str) -> Result<ModelId, Failure> {
    ModelId::from_key(key.trim()).ok_or_else(|| {
        let known: Vec<&str> = ModelId::ALL.iter().map(|m| m.key()).collect();
        usage(format!("unknown model `{key}` (known: {})", known.join(", ")))
    })
}

/// Loads the config file or builds one from flags, then applies overrides.
fn load_scenario(args: &ScenarioArgs, models: &[ModelId]) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            if args.preset.is_some() || args.energy.is_some() {
                return Err(usage("--preset and --energy cannot be combined with --config"));
            }
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            let mut cfg = scenario::parse_config(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            if !models.is_empty() {
                cfg.models = models.to_vec();
            }
            cfg
        }
        None => {
            let model = models.first().copied().unwrap_or(ModelId::Lion1997);
            let mut text = format!("model = \"{}\"\n", model.key());
            if let Some(e) = &args.energy {
                text.push_str(&format!("energy = {}\n", toml_string(e)));
            }
            text.push_str(&format!("preset = {}\n", toml_string(args.preset.as_deref().unwrap_or("simple_shear"))));
            let mut cfg = scenario::parse_config(&text)?;
            cfg.models = if models.is_empty() { vec![model] } else { models.to_vec() };
            cfg
        }
    };
    if let Some(n) = args.steps {
        set_steps(&mut cfg, n);
    }
    if let Some(s) = &args.scheme {
        cfg.controls.scheme = serde_json::from_value(serde_json::Value::String(s.clone()))
            .map_err(|_| usage(format!("unknown scheme `{s}` (known: euler, rk4, exponential_map)")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn toml_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

fn set_steps(cfg: &mut ScenarioConfig, n: usize) {
    cfg.steps = n;
    cfg.controls.dt = cfg.loading.total_time / n as f64;
}

fn create(path: &Path) -> Result<fs::File, Failure> {
    fs::File::create(path).map_err(|e| io_failure(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

/// Sends `body` to `path`, or to standard output.
fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let mut file = std::io::BufWriter::new(create(p)?);
            body(&mut file).and_then(|_| file.flush()).map_err(|e| io_failure(p, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock).map_err(|e| usage(format!("stdout: {e}")))
        }
    }
}

#[derive(Serialize)]
struct TrajectorySummary {
    model: String,
    energy: String,
    scheme: String,
    steps: usize,
    final_t: f64,
    final_energy: f64,
    max_det_residual: f64,
    max_symmetry_residual: f64,
    min_eigenvalue: f64,
    max_dissipation_rate: f64,
    max_lambda: f64,
}

impl TrajectorySummary {
    fn of(t: &Trajectory) -> Self {
        TrajectorySummary {
            model: t.model.key().to_string(),
            energy: t.params.energy.key().to_string(),
            scheme: t.controls.scheme.key().to_string(),
            steps: t.records.len() - 1,
            final_t: t.last().t,
            final_energy: t.last().energy,
            max_det_residual: t.max_of(|r| r.det_residual),
            max_symmetry_residual: t.max_of(|r| r.symmetry_residual),
            min_eigenvalue: t.min_of(|r| r.min_eigenvalue),
            max_dissipation_rate: t.max_of(|r| r.dissipation_rate),
            max_lambda: t.max_of(|r| r.lambda),
        }
    }
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Serialize)]
struct SimulateSummary {
    format_version: u32,
    command: &'static str,
    trajectory: TrajectorySummary,
}

fn simulate(a: SimulateArgs) -> Result<i32, Failure> {
    let model = a.model.as_deref().map(parse_model).transpose()?;
    let mut cfg = if a.demo {
        let model = model.ok_or_else(|| usage("--demo requires --model"))?;
        let mut cfg = scenario::demo(model);
        if let Some(n) = a.scenario.steps {
            set_steps(&mut cfg, n);
        }
        if a.scenario.scheme.is_some() {
            return Err(usage("--scheme cannot be combined with --demo"));
        }
        cfg.validate()?;
        cfg
    } else {
        load_scenario(&a.scenario, &model.into_iter().collect::<Vec<_>>())?
    };
    if cfg.models.len() != 1 {
        return Err(usage("simulate runs one model; pass --model to pick one"));
    }
    let output = a.output.or_else(|| cfg.output.trajectory.take());
    let summary = a.summary.or_else(|| cfg.output.summary.take());

    let traj = cfg.run(cfg.models[0])?;
    emit(output.as_deref(), |w| scenario::write_trajectory_csv(&traj, w))?;
    if let Some(path) = summary {
        write_json(
            &path,
            &SimulateSummary { format_version: FORMAT_VERSION, command: "simulate", trajectory: TrajectorySummary::of(&traj) },
        )?;
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// compare

#[derive(Serialize)]
struct PairSummary {
    reference: String,
    model: String,
    max_deviation: f64,
    at_t: f64,
    threshold: f64,
    pass: bool,
}

#[derive(Serialize)]
struct CompareSummary {
    format_version: u32,
    command: &'static str,
    pairs: Vec<PairSummary>,
    all_pass: bool,
}

fn relative_deviation(a: &Trajectory, b: &Trajectory, k: usize) -> f64 {
    (a.records[k].cp - b.records[k].cp).norm() / a.records[k].cp.norm()
}

fn compare(a: CompareArgs) -> Result<i32, Failure> {
    let models = a.models.iter().map(|m| parse_model(m)).collect::<Result<Vec<_>, _>>()?;
    if models.len() < 2 {
        return Err(usage("compare needs at least two models (--models a,b)"));
    }
    if !(a.threshold.is_finite() && a.threshold >= 0.0) {
        return Err(usage("--threshold must be a finite non-negative number"));
    }
    let cfg = load_scenario(&a.scenario, &models)?;
    let runs = par::map(&cfg.models, |&m| cfg.run(m));
    let trajs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;

    let reference = &trajs[0];
    let others = &trajs[1..];
    emit(a.output.as_deref().or(cfg.output.trajectory.as_deref()), |w| {
        writeln!(w, "# format_version: {FORMAT_VERSION}")?;
        let mut header = vec!["t".to_string()];
        header.extend(others.iter().map(|t| format!("{}~{}", reference.model.key(), t.model.key())));
        writeln!(w, "{}", header.join(","))?;
        for k in 0..reference.records.len() {
            let mut row = vec![format!("{:e}", reference.records[k].t)];
            row.extend(others.iter().map(|t| format!("{:e}", relative_deviation(reference, t, k))));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })?;

    let pairs: Vec<PairSummary> = others
        .iter()
        .map(|t| {
            let (dev, k) = verifier::trajectory_deviation(reference, t);
            PairSummary {
                reference: reference.model.key().to_string(),
                model: t.model.key().to_string(),
                max_deviation: dev,
                at_t: reference.records[k].t,
                threshold: a.threshold,
                pass: dev <= a.threshold,
            }
        })
        .collect();
    let all_pass = pairs.iter().all(|p| p.pass);
    for p in &pairs {
        eprintln!(
            "{} {}~{} max_deviation={:e} at t={} threshold={:e}",
            if p.pass { "PASS" } else { "FAIL" },
            p.reference,
            p.model,
            p.max_deviation,
            p.at_t,
            p.threshold
        );
    }
    if let Some(path) = a.summary.as_deref().or(cfg.output.summary.as_deref()) {
        write_json(path, &CompareSummary { format_version: FORMAT_VERSION, command: "compare", pairs, all_pass })?;
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

// ---------------------------------------------------------------------------
// verify

#[derive(Serialize)]
struct VerifySummary<'a> {
    format_version: u32,
    command: &'static str,
    suite: &'static str,
    seed: u64,
    samples: usize,
    checks: &'a [CheckReport],
    all_pass: bool,
}

fn parse_thresholds(opts: &mut VerifyOptions, specs: &[String]) -> Result<(), Failure> {
    for spec in specs {
        let (name, value) =
            spec.split_once('=').ok_or_else(|| usage(format!("--threshold expects name=value, got `{spec}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| usage(format!("--threshold {name}: `{value}` is not a finite non-negative number")))?;
        let t = &mut opts.thresholds;
        match name.trim() {
            "algebraic" => t.algebraic = v,
            "structural" => t.structural = v,
            "trajectory" => t.trajectory = v,
            "finite_difference" => t.finite_difference = v,
            check => {
                t.overrides.insert(check.to_string(), v);
            }
        }
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<i32, Failure> {
    let suite = Suite::from_key(&a.suite).ok_or_else(|| {
        usage(format!("unknown suite `{}` (known: algebra, stress, flow, equivalence, deficiency, all)", a.suite))
    })?;
    if a.samples == 0 {
        return Err(usage("--samples must be >= 1"));
    }
    let mut opts = VerifyOptions { seed: a.seed, samples: a.samples, ..Default::default() };
    parse_thresholds(&mut opts, &a.thresholds)?;

    let reports = verifier::run_suite(suite, &opts)?;
    let unknown: Vec<&String> =
        opts.thresholds.overrides.keys().filter(|k| !reports.iter().any(|r| &r.name == *k)).collect();
    if !unknown.is_empty() {
        let names: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
        return Err(usage(format!("--threshold names no check in this suite: {}", names.join(", "))));
    }

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for r in &reports {
        let _ = writeln!(out, "{}", r.line());
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    let _ = writeln!(out, "{} checks, {} passed, {} failed", reports.len(), reports.len() - failed, failed);

    if let Some(path) = &a.summary {
        write_json(
            path,
            &VerifySummary {
                format_version: FORMAT_VERSION,
                command: "verify",
                suite: suite.key(),
                seed: a.seed,
                samples: a.samples,
                checks: &reports,
                all_pass: failed == 0,
            },
        )?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_CHECK_FAILED })
}

// ---------------------------------------------------------------------------
// sweep

pub const SWEEP_PARAMS: [&str; 8] = ["mu", "lambda", "kappa", "sigma_y", "yield_radius_factor", "eta", "steps", "total_time"];

fn apply_param(cfg: &mut ScenarioConfig, name: &str, v: f64) -> Result<(), Failure> {
    let p = &mut cfg.params;
    match name {
        "mu" => p.mu = v,
        "lambda" => p.lambda = v,
        "kappa" => p.kappa = v,
        "sigma_y" => p.sigma_y = v,
        "yield_radius_factor" => p.yield_radius_factor = v,
        "eta" => p.eta = v,
        "steps" => {
            if v.fract() != 0.0 || v < 1.0 {
                return Err(usage(format!("steps must be a positive integer, got {v}")));
            }
            set_steps(cfg, v as usize);
        }
        "total_time" => {
            let old = cfg.loading.total_time;
            let scale = v / old;
            cfg.loading.total_time = v;
            for k in &mut cfg.loading.knots {
                k[0] *= scale;
            }
            for row in &mut cfg.loading.table {
                row[0] *= scale;
            }
            let n = cfg.steps;
            set_steps(cfg, n);
        }
        other => return Err(usage(format!("cannot sweep `{other}` (known: {})", SWEEP_PARAMS.join(", ")))),
    }
    cfg.validate()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<TrajectorySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepSummary {
    format_version: u32,
    command: &'static str,
    param: String,
    rows: Vec<SweepRow>,
}

fn sweep_grid(a: &SweepArgs) -> Result<Vec<f64>, Failure> {
    let grid = match (a.from, a.to, a.count) {
        (Some(from), Some(to), Some(n)) => {
            if n == 0 {
                return Err(usage("--count must be >= 1"));
            }
            if n == 1 {
                vec![from]
            } else {
                (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect()
            }
        }
        (None, None, None) => a.values.clone(),
        _ => return Err(usage("--from, --to and --count go together")),
    };
    if grid.is_empty() {
        return Err(usage("sweep needs --values or --from/--to/--count"));
    }
    Ok(grid)
}

fn sweep(a: SweepArgs) -> Result<i32, Failure> {
    let models = a.models.iter().map(|m| parse_model(m)).collect::<Result<Vec<_>, _>>()?;
    let base = load_scenario(&a.scenario, &models)?;
    let grid = sweep_grid(&a)?;

    let mut jobs = Vec::new();
    for &v in &grid {
        let mut cfg = base.clone();
        apply_param(&mut cfg, &a.param, v)?;
        for &m in &base.models {
            jobs.push((v, m, cfg.clone()));
        }
    }
    let rows: Vec<SweepRow> = par::map(&jobs, |(v, m, cfg)| match cfg.run(*m) {
        Ok(t) => SweepRow { value: *v, model: m.key().to_string(), result: Some(TrajectorySummary::of(&t)), error: None },
        Err(e) => SweepRow { value: *v, model: m.key().to_string(), result: None, error: Some(e.to_string()) },
    });

    emit(a.output.as_deref(), |w| {
        writeln!(w, "# format_version: {FORMAT_VERSION}")?;
        writeln!(
            w,
            "{},model,status,final_energy,max_det_residual,max_symmetry_residual,min_eigenvalue,max_dissipation_rate,max_lambda",
            a.param
        )?;
        for r in &rows {
            match &r.result {
                Some(s) => writeln!(
                    w,
                    "{:e},{},ok,{:e},{:e},{:e},{:e},{:e},{:e}",
                    r.value,
                    r.model,
                    s.final_energy,
                    s.max_det_residual,
                    s.max_symmetry_residual,
                    s.min_eigenvalue,
                    s.max_dissipation_rate,
                    s.max_lambda
                )?,
                None => writeln!(w, "{:e},{},error,,,,,,", r.value, r.model)?,
            }
        }
        Ok(())
    })?;
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("{}={} {}: {e}", a.param, r.value, r.model);
        }
    }
    let any_failed = rows.iter().any(|r| r.error.is_some());
    if let Some(path) = &a.summary {
        write_json(path, &SweepSummary { format_version: FORMAT_VERSION, command: "sweep", param: a.param.clone(), rows })?;
    }
    Ok(if any_failed { EXIT_NUMERICAL } else { EXIT_OK })
}
