//! Command-line front end.
//!
//! Every command prints machine-readable output on stdout. Exit status is 0
//! when all verdicts pass, 2 when a verdict fails, and 1 on any error, in
//! which case a JSON error object is written to stderr.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::domains::{DomainSpec, Point2, Rect};
use crate::error::{config, Error, Result};
use crate::experiments::{
    self, apply_overrides, build_oscillating_data, format_f64, to_canonical_json, verify_oscillation,
    CounterexampleConfig, ExperimentConfig, ExperimentReport,
};
use crate::fdsolver::{self, DirichletData, Grid, NewtonConfig};
use crate::kernels::{self, BoundaryTrace};
use crate::{models, specfun};

pub const OUT_ENV: &str = "TRANSLAB_OUT";

#[derive(Debug, Parser)]
#[command(name = "translab", version, about = "Numerical laboratory for translating graphs")]
pub struct Cli {
    /// Output directory (default: $TRANSLAB_OUT, then ./translab-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized probes; overrides the config's `seed` field.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Point evaluation of special functions and model solutions.
    Kernel {
        #[command(subcommand)]
        cmd: KernelCmd,
    },
    /// Dirichlet solve on a grid; writes the solution as CSV.
    Solve(ConfigArgs),
    /// Duffin–Poisson integral of a trace at (x2, x3).
    Duffin {
        #[command(flatten)]
        trace: TraceArg,
        #[arg(long, allow_hyphen_values = true)]
        x2: f64,
        #[arg(long, allow_hyphen_values = true)]
        x3: f64,
        /// Height of the boundary line.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        b: f64,
    },
    /// Heat convolution of a trace at (x, t).
    Heat {
        #[command(flatten)]
        trace: TraceArg,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long)]
        t: f64,
    },
    /// Runs one experiment and writes its JSON report.
    Experiment {
        name: String,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Builds the oscillating data and checks its heat and Duffin ladders.
    Counterexample(ConfigArgs),
    /// Runs the acceptance battery.
    Suite {
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Reruns a report (or suite report) from its recorded parameters.
    Verify { report: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum KernelCmd {
    /// Evaluate `--fn` at `--x` (and `--x3` for planar models).
    Eval {
        /// k0, k1, k0e, k1e, i0, ei, eie, plane, reaper, w, uk, ui, green
        #[arg(long = "fn")]
        func: String,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        x3: Option<f64>,
        /// Slope, tilt or plane coefficient, depending on the function.
        #[arg(long, allow_hyphen_values = true)]
        param: Option<f64>,
        /// Source point for `green`, as "y2,y3".
        #[arg(long, allow_hyphen_values = true)]
        source: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct TraceArg {
    /// Trace as inline JSON or a path to a JSON file.
    #[arg(long)]
    pub trace: String,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON config file; flags given after it win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `--key value` overrides; keys in kebab case, dots for nesting.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    pub overrides: Vec<String>,
}

/// Data for the `solve` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolveData {
    Trace {
        trace: BoundaryTrace,
    },
    /// `u = a·x2 + b` on the boundary.
    Plane {
        a: f64,
        b: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub domain: DomainSpec,
    pub rect: Rect,
    pub h: f64,
    pub data: SolveData,
    /// Solve `Lu = 0` instead of the translator equation.
    pub linear: bool,
    pub newton: NewtonConfig,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            domain: DomainSpec::WholePlane,
            rect: Rect::new(-4.0, 4.0, -4.0, 4.0),
            h: 0.25,
            data: SolveData::Plane { a: 1.0, b: 0.0 },
            linear: false,
            newton: NewtonConfig::default(),
            seed: 0,
        }
    }
}

/// Parses `--key value` / `--key=value` pairs; values are JSON when they
/// parse as JSON and strings otherwise.
pub fn parse_overrides(raw: &[String]) -> Result<Vec<(String, Value)>> {
    let mut out = Vec::new();
    let mut it = raw.iter();
    while let Some(tok) = it.next() {
        let Some(key) = tok.strip_prefix("--") else {
            return config(format!("expected `--key value`, found `{tok}`"));
        };
        let (key, val) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| Error::Config(format!("override `--{key}` has no value")))?;
                (key.to_string(), v.clone())
            }
        };
        if key.is_empty() {
            return config("empty override key");
        }
        let v = serde_json::from_str(&val).unwrap_or(Value::String(val));
        out.push((key, v));
    }
    Ok(out)
}

fn load_config(args: &ConfigArgs, seed: Option<u64>, has_seed: bool) -> Result<Value> {
    let mut base = match &args.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => json!({}),
    };
    if !base.is_object() {
        return config("config file must hold a JSON object");
    }
    if let (Some(s), true) = (seed, has_seed) {
        apply_overrides(&mut base, &[("seed".into(), json!(s))])?;
    }
    apply_overrides(&mut base, &parse_overrides(&args.overrides)?)?;
    Ok(base)
}

fn out_dir(cli_out: &Option<PathBuf>) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("translab-out"))
}

/// Prints a line; a closed stdout (e.g. piped into `head`) is not an error.
fn emit(args: std::fmt::Arguments) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{args}");
}

macro_rules! say {
    ($($t:tt)*) => {
        emit(format_args!($($t)*))
    };
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let p = dir.join(name);
    fs::write(&p, contents)?;
    Ok(p)
}

fn parse_trace(s: &str) -> Result<BoundaryTrace> {
    let text = if s.trim_start().starts_with('{') { s.to_string() } else { fs::read_to_string(s)? };
    let t: BoundaryTrace = serde_json::from_str(&text).map_err(|e| Error::Config(format!("trace: {e}")))?;
    t.validate()?;
    Ok(t)
}

fn eval_kernel(func: &str, x: f64, x3: Option<f64>, param: Option<f64>, source: Option<&str>) -> Result<f64> {
    let planar = || -> Result<Point2> {
        x3.map(|x3| Point2::new(x, x3)).ok_or_else(|| Error::Config(format!("`{func}` needs --x3")))
    };
    match func {
        "k0" => specfun::bessel_k0(x),
        "k1" => specfun::bessel_k1(x),
        "k0e" => specfun::bessel_k0_scaled(x),
        "k1e" => specfun::bessel_k1_scaled(x),
        "i0" => specfun::bessel_i0(x),
        "ei" => specfun::expint_ei(x),
        "eie" => specfun::expint_ei_scaled(x),
        "plane" => Ok(models::plane_solution(param.unwrap_or(1.0), 0.0).eval(planar()?)),
        "reaper" => {
            let r = models::TiltedReaper::from_slope(param.unwrap_or(0.0), Point2::new(0.0, 0.0))?;
            r.eval(planar()?)
        }
        "w" => models::superbarrier_w(param.unwrap_or(1.0), planar()?),
        "uk" => models::u_k_eval(planar()?),
        "ui" => models::u_i_eval(planar()?),
        "green" => {
            let src = source.ok_or_else(|| Error::Config("`green` needs --source y2,y3".into()))?;
            let (a, b) = src.split_once(',').ok_or_else(|| Error::Config("--source must be y2,y3".into()))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("--source: {e}")));
            models::green_l(planar()?, Point2::new(parse(a)?, parse(b)?))
        }
        _ => config(format!("unknown function `{func}`")),
    }
}

fn report_exit(r: &ExperimentReport) -> i32 {
    if r.passed() {
        0
    } else {
        2
    }
}

fn emit_report(r: &ExperimentReport, dir: &Path, stem: &str) -> Result<()> {
    let text = r.to_json();
    write_file(dir, &format!("{stem}.json"), &text)?;
    for (key, s) in &r.samples {
        write_file(dir, &format!("{stem}.{key}.csv"), &s.to_csv())?;
    }
    say!("{text}");
    Ok(())
}

fn run_experiment(name: &str, args: &ConfigArgs, cli: &Cli) -> Result<i32> {
    let default = ExperimentConfig::default_for(name)?;
    let has_seed = default.config_value().get("seed").is_some();
    let value = load_config(args, cli.seed, has_seed)?;
    let cfg = ExperimentConfig::from_parts(name, value)?;
    let r = cfg.run()?;
    emit_report(&r, &out_dir(&cli.out), name)?;
    Ok(report_exit(&r))
}

/// Result of [`solve`].
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution: fdsolver::GridFunction,
    pub iterations: usize,
    pub max_principle_excess: f64,
    /// Largest discrete residual over interior nodes.
    pub residual: f64,
}

pub fn solve(cfg: &SolveConfig) -> Result<SolveOutcome> {
    let grid = Arc::new(Grid::new(cfg.domain, cfg.rect, cfg.h)?);
    let data = match &cfg.data {
        SolveData::Trace { trace } => {
            trace.validate()?;
            DirichletData::Trace(trace.clone())
        }
        SolveData::Plane { a, b } => {
            let plane = models::plane_solution(*a, *b);
            DirichletData::field(move |p| plane.eval(p))
        }
    };
    let (solution, iterations, max_principle_excess) = if cfg.linear {
        (fdsolver::solve_l_dirichlet(&grid, &data, None)?, 0, 0.0)
    } else {
        let rep = fdsolver::solve_translator_report(&grid, &data, &cfg.newton)?;
        (rep.solution, rep.residual_history.len() - 1, rep.max_principle_excess)
    };
    let residual =
        fdsolver::residual(&solution).values.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(SolveOutcome { solution, iterations, max_principle_excess, residual })
}

fn run_solve(args: &ConfigArgs, cli: &Cli) -> Result<i32> {
    let value = load_config(args, cli.seed, true)?;
    let cfg: SolveConfig = serde_json::from_value(value).map_err(|e| Error::Config(format!("solve: {e}")))?;
    let out = solve(&cfg)?;
    let dir = out_dir(&cli.out);
    fs::create_dir_all(&dir)?;
    out.solution.write_csv(fs::File::create(dir.join("solution.csv"))?)?;
    let summary = json!({
        "config": serde_json::to_value(&cfg)?,
        "residual": out.residual,
        "iterations": out.iterations,
        "max_principle_excess": out.max_principle_excess,
        "interior_nodes": out.solution.grid.interior_count(),
    });
    say!("{}", to_canonical_json(&summary));
    Ok(0)
}

fn run_counterexample(args: &ConfigArgs, cli: &Cli) -> Result<i32> {
    let value = load_config(args, cli.seed, false)?;
    let cfg: CounterexampleConfig =
        serde_json::from_value(value).map_err(|e| Error::Config(format!("counterexample: {e}")))?;
    let built = build_oscillating_data(&cfg.params)?;
    let mut r = verify_oscillation(&built, &cfg.duffin_rounds, cfg.control_tol)?;
    r.param("config", &cfg);
    r.param("seed", Value::Null);
    let dir = out_dir(&cli.out);
    write_file(&dir, "counterexample.data.json", &to_canonical_json(&serde_json::to_value(&built)?))?;
    emit_report(&r, &dir, "counterexample")?;
    Ok(report_exit(&r))
}

fn run_suite(workers: usize, cli: &Cli) -> Result<i32> {
    let mut configs = experiments::default_suite();
    if let Some(s) = cli.seed {
        for c in configs.iter_mut() {
            let mut v = c.config_value();
            if v.get("seed").is_some() {
                v["seed"] = json!(s);
                *c = ExperimentConfig::from_parts(c.name(), v)?;
            }
        }
    }
    let outcome = experiments::run_suite(configs, workers)?;
    let dir = out_dir(&cli.out);
    write_file(&dir, "suite.json", &outcome.to_json())?;
    let mut timings = serde_json::Map::new();
    for (i, (c, r)) in outcome.configs.iter().zip(&outcome.results).enumerate() {
        let status = match r {
            Ok(rep) if rep.passed() => "PASS".to_string(),
            Ok(rep) => format!("FAIL {}", rep.failed_verdicts().join(",")),
            Err(e) => format!("ERROR {}", e.kind()),
        };
        let secs = r.as_ref().map(|rep| rep.runtime_seconds).unwrap_or(f64::NAN);
        say!("{:02} {:<24} {:>9.2}s {status}", i, c.name(), secs);
        timings.insert(format!("{:02}-{}", i, c.name()), json!(secs));
    }
    write_file(&dir, "timings.json", &serde_json::to_string_pretty(&timings)?)?;
    Ok(if outcome.errored() {
        1
    } else if outcome.passed() {
        0
    } else {
        2
    })
}

/// Reruns one recorded report; returns (reproduced, passed).
pub fn verify_report(recorded: &ExperimentReport) -> Result<(bool, bool)> {
    recorded.validate()?;
    let cfg_value = recorded
        .parameters
        .get("config")
        .cloned()
        .ok_or_else(|| Error::Config(format!("report `{}` has no recorded config", recorded.name)))?;
    let cfg = ExperimentConfig::from_parts(&recorded.name, cfg_value)?;
    let again = cfg.run()?;
    Ok((again.to_json() == recorded.to_json(), again.passed()))
}

fn run_verify(path: &Path) -> Result<i32> {
    let text = fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    let reports: Vec<Value> = match v.get("reports") {
        Some(Value::Array(a)) => a.clone(),
        Some(_) => return config("`reports` must be an array"),
        None => vec![v],
    };
    let mut all_ok = true;
    let mut rows = Vec::new();
    for rv in reports {
        if rv.get("error").is_some() {
            return config("suite report contains a failed run");
        }
        let rec: ExperimentReport = serde_json::from_value(rv)?;
        let (reproduced, passed) = verify_report(&rec)?;
        all_ok &= reproduced && passed;
        rows.push(json!({ "name": rec.name, "reproduced": reproduced, "passed": passed }));
    }
    say!("{}", to_canonical_json(&json!({ "verified": rows })));
    Ok(if all_ok { 0 } else { 2 })
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Kernel { cmd: KernelCmd::Eval { func, x, x3, param, source } } => {
            let v = eval_kernel(func, *x, *x3, *param, source.as_deref())?;
            say!("{}", format_f64(v));
            Ok(0)
        }
        Command::Solve(args) => run_solve(args, cli),
        Command::Duffin { trace, x2, x3, b } => {
            let t = parse_trace(&trace.trace)?;
            say!("{}", format_f64(kernels::poisson_duffin(&t, *b, Point2::new(*x2, *x3))?));
            Ok(0)
        }
        Command::Heat { trace, x, t } => {
            let tr = parse_trace(&trace.trace)?;
            say!("{}", format_f64(kernels::heat_convolve(&tr, *x, *t)?));
            Ok(0)
        }
        Command::Experiment { name, args } => run_experiment(name, args, cli),
        Command::Counterexample(args) => run_counterexample(args, cli),
        Command::Suite { workers } => run_suite(*workers, cli),
        Command::Verify { report } => run_verify(report),
    }
}

fn print_error(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            print_error("usage", e.to_string().trim());
            return 1;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            print_error(e.kind(), &e.to_string());
            1
        }
    }
}
