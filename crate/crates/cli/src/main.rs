//! `lcmle` command-line tool.
//!
//! Exit codes: 0 success, 2 usage or I/O error, 3 fit failure, 4 failed
//! benchmark assertion.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lcmle::bench::{self, ExperimentConfig, FULL_SCALE_REPS};
use lcmle::estimate::{self, Estimator, FitResult, OptimizerConfig};
use lcmle::io::{self, Preprocess};
use lcmle::metrics;
use lcmle::tsmodel::{self, InnovationFamily, InnovationSpec, ModelSpec, ScalingConvention, DEFAULT_BURN_IN, DEFAULT_DELTA};
use lcmle::{Error, LogConcaveDensity, SmoothedDensity};
use serde::Deserialize;

const EXIT_USAGE: u8 = 2;
const EXIT_FIT: u8 = 3;
const EXIT_ASSERT: u8 = 4;

#[derive(Parser)]
#[command(name = "lcmle", version, about = "Log-concave maximum likelihood estimation for ARMA and ARMA-GARCH models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a single-column CSV series.
    Fit(FitArgs),
    /// Simulate a series from a preset model.
    Simulate(SimulateArgs),
    /// Run a Monte-Carlo experiment described by a TOML file.
    Bench(BenchArgs),
    /// Export Q-Q pairs of residuals against a fitted density.
    Qq(QqArgs),
    /// Export the partial autocorrelation function of a series.
    Pacf(PacfArgs),
}

#[derive(Args)]
struct PreprocessArgs {
    /// Take natural logarithms (values must be positive).
    #[arg(long)]
    log_transform: bool,
    /// Subtract the sample mean.
    #[arg(long)]
    center: bool,
}

impl PreprocessArgs {
    fn get(&self) -> Preprocess {
        Preprocess { log_transform: self.log_transform, center: self.center }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Lcmle,
    Gqmle,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Lcmle => Estimator::Lcmle,
            EstimatorArg::Gqmle => Estimator::Gqmle,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Input series (CSV, optional header).
    #[arg(long, short)]
    input: PathBuf,
    /// Where to write the fit as JSON; printed to stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    q: usize,
    #[arg(long, default_value_t = 0)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    s: usize,
    #[arg(long, value_enum, default_value = "lcmle")]
    estimator: EstimatorArg,
    /// Box parameter of ARMA-GARCH fits.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Half-width of the ARMA coefficient box.
    #[arg(long, default_value_t = tsmodel::DEFAULT_ARMA_BOUND)]
    bound: f64,
    /// Also write the smoothed density to this path.
    #[arg(long)]
    smooth: Option<PathBuf>,
    /// Rescale the series so that the Gaussian quasi-likelihood estimate of c is one.
    #[arg(long)]
    standardize_gqmle: bool,
    /// Simplex restarts from the best point.
    #[arg(long)]
    restarts: Option<usize>,
    #[command(flatten)]
    pre: PreprocessArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model name, e.g. "AR(1)" or "GARCH(1,1)".
    #[arg(long)]
    preset: String,
    #[arg(long)]
    innovation: String,
    /// unit_variance or unit_second_moment; defaults by model type.
    #[arg(long)]
    convention: Option<String>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    #[arg(long, env = "LCMLE_SEED", default_value_t = 0)]
    seed: u64,
    /// Output CSV; printed to stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment description (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Report destination; the format follows --format.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Override the master seed of the config.
    #[arg(long, env = "LCMLE_SEED")]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Run the full-scale replication count (1000).
    #[arg(long)]
    full_scale: bool,
}

#[derive(Args)]
struct QqArgs {
    /// Residual series (CSV).
    #[arg(long)]
    residuals: PathBuf,
    /// Fit JSON, density JSON or smoothed-density JSON.
    #[arg(long)]
    density: PathBuf,
    /// Use the smoothed density of a fit file.
    #[arg(long)]
    smooth: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct PacfArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, default_value_t = 20)]
    max_lag: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    pre: PreprocessArgs,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl Display) -> Self {
        Failure { code: EXIT_USAGE, message: e.to_string() }
    }
}

/// Fit-stage errors map to exit code 3, everything else to 2.
fn fit_failure(e: Error) -> Failure {
    let code = match e {
        Error::SeriesTooShort { .. } | Error::FitFailure(_) | Error::DegenerateSample(_) | Error::Internal(_) => EXIT_FIT,
        _ => EXIT_USAGE,
    };
    Failure { code, message: e.to_string() }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(Failure::usage),
    }
}

fn read_series(path: &Path, pre: Preprocess) -> Result<Vec<f64>, Failure> {
    io::read_series(path, pre).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn json(value: &impl serde::Serialize) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(Failure::usage)
}

fn cmd_fit(a: FitArgs) -> Result<(), Failure> {
    let spec = ModelSpec::new(a.p, a.q, a.r, a.s).map_err(Failure::usage)?;
    let mut series = read_series(&a.input, a.pre.get())?;
    let mut cfg = OptimizerConfig::default();
    if let Some(r) = a.restarts {
        cfg.restarts = r;
    }
    if a.standardize_gqmle {
        if spec.is_arma() {
            return Err(Failure::usage("--standardize-gqmle needs a GARCH part"));
        }
        let (scaled, k) = estimate::standardize_by_gqmle(&series, &spec, a.delta, &cfg).map_err(fit_failure)?;
        eprintln!("standardized by {}", io::format_f64(k));
        series = scaled;
    }
    let fit = if spec.is_arma() {
        let bounds = tsmodel::ParamBox::plain(&spec, a.bound).map_err(Failure::usage)?;
        match Estimator::from(a.estimator) {
            Estimator::Lcmle => estimate::fit_lcmle_arma(&series, &spec, &bounds, &cfg),
            Estimator::Gqmle => estimate::fit_gqmle_arma(&series, &spec, &bounds, &cfg),
        }
    } else {
        estimate::fit(&series, &spec, a.estimator.into(), a.delta, &cfg)
    }
    .map_err(fit_failure)?;

    print_summary(&fit, a.output.is_some());
    let text = json(&fit)?;
    emit(a.output.as_deref(), &text)?;
    if let Some(path) = &a.smooth {
        let smoothed = fit
            .smoothed
            .as_ref()
            .ok_or_else(|| Failure::usage("the selected estimator has no smoothed density"))?;
        emit(Some(path), &json(smoothed)?)?;
    }
    Ok(())
}

/// To stdout unless stdout carries the JSON.
fn print_summary(fit: &FitResult, to_stdout: bool) {
    let t = &fit.theta_hat;
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ");
    let mut line = format!("{} {}:", fit.estimator.name(), fit.spec.label());
    if !t.a.is_empty() {
        line += &format!(" a = [{}]", join(&t.a));
    }
    if !t.b.is_empty() {
        line += &format!(" b = [{}]", join(&t.b));
    }
    if !fit.spec.is_arma() {
        line += &format!(" c = {:.6} alpha = [{}] beta = [{}]", t.c, join(&t.alpha), join(&t.beta));
    }
    if to_stdout {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), Failure> {
    let (spec, theta) = bench::preset(&a.preset).map_err(Failure::usage)?;
    let family = InnovationFamily::parse(&a.innovation).map_err(Failure::usage)?;
    let convention = match &a.convention {
        Some(c) => ScalingConvention::parse(c).map_err(Failure::usage)?,
        None if spec.is_arma() => ScalingConvention::UnitVariance,
        None => ScalingConvention::UnitSecondMoment,
    };
    let ispec = InnovationSpec::new(family, convention);
    let xs = tsmodel::simulate(&spec, &theta, &ispec, a.n, a.burn_in, a.seed).map_err(Failure::usage)?;
    emit(a.output.as_deref(), &io::series_to_string(&xs, Some("x")))
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Failure::usage(format!("{}: {e}", a.config.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text).map_err(Failure::usage)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if a.jobs.is_some() {
        cfg.jobs = a.jobs;
    }
    if a.full_scale {
        cfg.reps = FULL_SCALE_REPS;
    }
    let report = bench::run_experiment(&cfg).map_err(Failure::usage)?;
    let out = match a.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json().map_err(Failure::usage)? + "\n",
    };
    emit(a.output.as_deref(), &out)?;
    for o in &report.assertions {
        eprintln!("[{}] {}", if o.passed { "pass" } else { "FAIL" }, o.description);
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_ASSERT, message: "benchmark assertion failed".into() })
    }
}

/// Any of the JSON shapes the tool writes that carry a density.
#[derive(Deserialize)]
#[serde(untagged)]
enum DensityFile {
    Fit(Box<FitResult>),
    Smoothed(SmoothedDensity),
    Plain(LogConcaveDensity),
}

enum Quantiles {
    Plain(LogConcaveDensity),
    Smoothed(SmoothedDensity),
}

impl Quantiles {
    fn quantile(&self, p: f64) -> lcmle::Result<f64> {
        match self {
            Quantiles::Plain(d) => d.quantile(p),
            Quantiles::Smoothed(d) => d.quantile(p),
        }
    }
}

fn cmd_qq(a: QqArgs) -> Result<(), Failure> {
    let mut res = read_series(&a.residuals, Preprocess::default())?;
    if res.is_empty() {
        return Err(Failure::usage("no residuals"));
    }
    let file: DensityFile = io::read_json(&a.density).map_err(|e| Failure::usage(format!("{}: {e}", a.density.display())))?;
    let q = match file {
        DensityFile::Fit(fit) if a.smooth => Quantiles::Smoothed(fit.smoothed.ok_or_else(|| Failure::usage("fit has no smoothed density"))?),
        DensityFile::Fit(fit) => Quantiles::Plain(fit.density.ok_or_else(|| Failure::usage("fit has no density"))?),
        DensityFile::Smoothed(s) => Quantiles::Smoothed(s),
        DensityFile::Plain(d) => Quantiles::Plain(d),
    };
    res.sort_by(f64::total_cmp);
    let n = res.len() as f64;
    let mut rows = Vec::with_capacity(res.len());
    for (i, r) in res.iter().enumerate() {
        let p = (i as f64 + 0.5) / n;
        rows.push((q.quantile(p).map_err(Failure::usage)?, *r));
    }
    let header = ("theoretical_quantile", "sample_quantile");
    emit(a.output.as_deref(), &pairs_output(header, &rows, a.format)?)
}

fn pairs_output(header: (&str, &str), rows: &[(f64, f64)], format: Format) -> Result<String, Failure> {
    match format {
        Format::Csv => Ok(io::pairs_to_string(header, rows)),
        Format::Json => {
            let objs: Vec<serde_json::Value> = rows
                .iter()
                .map(|(x, y)| {
                    let mut m = serde_json::Map::new();
                    m.insert(header.0.into(), (*x).into());
                    m.insert(header.1.into(), (*y).into());
                    serde_json::Value::Object(m)
                })
                .collect();
            json(&objs)
        }
    }
}

fn cmd_pacf(a: PacfArgs) -> Result<(), Failure> {
    let xs = read_series(&a.input, a.pre.get())?;
    let values = metrics::pacf(&xs, a.max_lag).map_err(Failure::usage)?;
    let rows: Vec<(f64, f64)> = values.iter().enumerate().map(|(k, v)| ((k + 1) as f64, *v)).collect();
    let out = match a.format {
        Format::Csv => {
            let mut s = String::from("lag,value\n");
            for (k, v) in values.iter().enumerate() {
                s += &format!("{},{}\n", k + 1, io::format_f64(*v));
            }
            s
        }
        Format::Json => pairs_output(("lag", "value"), &rows, a.format)?,
    };
    emit(a.output.as_deref(), &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Qq(a) => cmd_qq(a),
        Command::Pacf(a) => cmd_pacf(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
