//! Monte-Carlo experiment harness.
//!
//! An [`ExperimentConfig`] names a model preset (or custom coefficients), an
//! innovation family, the series length, the number of replications and the
//! estimators to compare. [`run_experiment`] simulates every replication from
//! a seed derived from the master seed and the replication index, fits each
//! estimator, and aggregates errors into a [`BenchReport`]. Replications run
//! in parallel; the report (apart from timings) does not depend on the
//! scheduling.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimate::{self, Estimator, OptimizerConfig};
use crate::io::format_f64;
use crate::rng::{derive_seed, tag};
use crate::tsmodel::{
    simulate, InnovationFamily, InnovationSpec, ModelSpec, ParamVector, ScalingConvention, DEFAULT_BURN_IN,
    DEFAULT_DELTA,
};

/// Replication count of a full-scale study.
pub const FULL_SCALE_REPS: usize = 1000;

/// Largest tolerated share of failed fits per cell.
pub const MAX_FAILURE_RATE: f64 = 0.02;

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 11] = [
    "AR(1)",
    "MA(1)",
    "AR(2)",
    "ARMA(1,1)",
    "ARMA(3,2)",
    "ARCH(1)",
    "ARCH(2)",
    "GARCH(1,1)",
    "IGARCH(1,1)",
    "GARCH(3,2)",
    "ARMA(1,1)-IGARCH(1,1)",
];

/// Model orders and true coefficients of a named simulation design.
///
/// `AR(1)` is the design of the innovation study (`a = 0.5`); the others are
/// the model list of the process study. `GARCH(2,3)` is accepted as an alias
/// of `GARCH(3,2)`, the orders matching its coefficient list.
pub fn preset(name: &str) -> Result<(ModelSpec, ParamVector)> {
    let key: String = name.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_uppercase();
    let (spec, theta) = match key.as_str() {
        "AR(1)" => (ModelSpec::arma(1, 0)?, ParamVector::arma(&[0.5], &[])),
        "MA(1)" => (ModelSpec::arma(0, 1)?, ParamVector::arma(&[], &[0.5])),
        "AR(2)" => (ModelSpec::arma(2, 0)?, ParamVector::arma(&[0.5, -0.5], &[])),
        "ARMA(1,1)" => (ModelSpec::arma(1, 1)?, ParamVector::arma(&[0.5], &[0.5])),
        "ARMA(3,2)" => (ModelSpec::arma(3, 2)?, ParamVector::arma(&[0.75, -0.5, 0.25], &[0.75, 0.25])),
        "ARCH(1)" => (ModelSpec::garch(1, 0)?, ParamVector::armagarch(&[], &[], 2.0, &[0.5], &[])),
        "ARCH(2)" => (ModelSpec::garch(2, 0)?, ParamVector::armagarch(&[], &[], 1.0, &[0.5, 0.5], &[])),
        "GARCH(1,1)" => (ModelSpec::garch(1, 1)?, ParamVector::armagarch(&[], &[], 1.0, &[0.25], &[0.5])),
        "IGARCH(1,1)" => (ModelSpec::garch(1, 1)?, ParamVector::armagarch(&[], &[], 2.0, &[0.5], &[0.5])),
        "GARCH(3,2)" | "GARCH(2,3)" => (
            ModelSpec::garch(3, 2)?,
            ParamVector::armagarch(&[], &[], 0.5, &[0.3, 0.1, 0.2], &[0.2, 0.1]),
        ),
        "ARMA(1,1)-IGARCH(1,1)" => (
            ModelSpec::new(1, 1, 1, 1)?,
            ParamVector::armagarch(&[0.5], &[0.5], 0.5, &[0.5], &[0.5]),
        ),
        _ => return Err(Error::NotFound(format!("unknown preset '{name}'; known: {}", PRESETS.join(", ")))),
    };
    Ok((spec, theta))
}

fn preset_note(name: &str) -> Option<String> {
    let key: String = name.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_uppercase();
    matches!(key.as_str(), "GARCH(3,2)" | "GARCH(2,3)").then(|| {
        "GARCH(2,3) and GARCH(3,2) name the same design; simulated with r = 3, s = 2 per the coefficient list".to_string()
    })
}

/// Model given by explicit coefficients instead of a preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomModel {
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default = "unit")]
    pub c: f64,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub beta: Vec<f64>,
}

fn unit() -> f64 {
    1.0
}

/// An acceptance check evaluated on the finished report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Assertion {
    /// `RMSE(numerator) < value · RMSE(denominator)`.
    RatioBelow { numerator: Estimator, denominator: Estimator, value: f64 },
    /// `RMSE(numerator) ≤ value · RMSE(denominator)`.
    RatioAtMost { numerator: Estimator, denominator: Estimator, value: f64 },
    /// `RMSE(estimator) < value`.
    RmseBelow { estimator: Estimator, value: f64 },
    /// `lo ≤ RMSE(estimator) ≤ hi`.
    RmseBetween { estimator: Estimator, lo: f64, hi: f64 },
}

fn default_estimators() -> Vec<Estimator> {
    vec![Estimator::Lcmle, Estimator::Gqmle]
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

/// Declarative experiment description, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    /// Preset name, or `"custom"` together with [`ExperimentConfig::custom`].
    pub model: String,
    #[serde(default)]
    pub custom: Option<CustomModel>,
    pub innovation: InnovationFamily,
    /// Defaults to unit variance for ARMA and unit second moment otherwise.
    #[serde(default)]
    pub convention: Option<ScalingConvention>,
    pub n: usize,
    pub reps: usize,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Estimator>,
    pub seed: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub optimizer: Option<OptimizerConfig>,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default, rename = "assert")]
    pub assertions: Vec<Assertion>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn model_and_truth(&self) -> Result<(ModelSpec, ParamVector)> {
        if self.model.trim().eq_ignore_ascii_case("custom") {
            let m = self.custom.as_ref().ok_or_else(|| Error::InvalidArgument("model = \"custom\" needs a [custom] table".into()))?;
            let theta = ParamVector::armagarch(&m.a, &m.b, m.c, &m.alpha, &m.beta);
            let spec = theta.spec()?;
            let theta = if spec.is_arma() { ParamVector::arma(&m.a, &m.b) } else { theta };
            Ok((spec, theta))
        } else {
            preset(&self.model)
        }
    }

    pub fn innovation_spec(&self, spec: &ModelSpec) -> InnovationSpec {
        let convention = self.convention.unwrap_or(if spec.is_arma() {
            ScalingConvention::UnitVariance
        } else {
            ScalingConvention::UnitSecondMoment
        });
        InnovationSpec::new(self.innovation, convention)
    }

    pub fn validate(&self) -> Result<(ModelSpec, ParamVector, InnovationSpec)> {
        let (spec, theta) = self.model_and_truth()?;
        let ispec = self.innovation_spec(&spec);
        if self.reps == 0 {
            return invalid("reps must be at least 1");
        }
        if self.n <= spec.existence_threshold() {
            return Err(Error::SeriesTooShort { n: self.n, threshold: spec.existence_threshold() });
        }
        if self.estimators.is_empty() {
            return invalid("no estimators selected");
        }
        if !spec.is_arma() && ispec.convention != ScalingConvention::UnitSecondMoment {
            return invalid(format!("{} needs unit-second-moment innovations", spec.label()));
        }
        if let Some(cfg) = &self.optimizer {
            if !(cfg.ftol > 0.0 && cfg.xtol > 0.0 && cfg.max_evals > 0 && cfg.initial_step > 0.0) {
                return invalid("optimizer settings must be positive");
            }
        }
        if self.jobs == Some(0) {
            return invalid("jobs must be at least 1");
        }
        Ok((spec, theta, ispec))
    }
}

/// Simulation seed of replication `rep`.
pub fn replication_seed(master: u64, rep: usize) -> u64 {
    derive_seed(master, &[rep as u64, tag("simulate")])
}

/// Aggregate for one (model, innovation, n, estimator) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub model: String,
    pub innovation: String,
    pub n: usize,
    pub estimator: Estimator,
    pub reps: usize,
    pub rmse: f64,
    /// Mean Euclidean error.
    pub mean_abs_error: f64,
    /// Median Euclidean error.
    pub median_abs_error: f64,
    pub failures: usize,
    /// Summed fit time over replications, in seconds.
    pub wall_time: f64,
}

/// Per-replication record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub index: usize,
    pub seed: u64,
    /// One entry per configured estimator; `None` marks a failed fit.
    pub estimates: Vec<Option<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssertionOutcome {
    pub description: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: ExperimentConfig,
    pub truth: Vec<f64>,
    pub rows: Vec<BenchRow>,
    pub replications: Vec<Replication>,
    pub assertions: Vec<AssertionOutcome>,
    pub notes: Vec<String>,
    pub wall_time: f64,
}

impl BenchReport {
    pub fn row(&self, estimator: Estimator) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.estimator == estimator)
    }

    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("model,innovation,n,estimator,reps,rmse,mean_abs_error,median_abs_error,failures,wall_time\n");
        for r in &self.rows {
            s.push_str(&format!(
                "\"{}\",{},{},{},{},{},{},{},{},{:.3}\n",
                r.model,
                r.innovation,
                r.n,
                r.estimator.name(),
                r.reps,
                format_f64(r.rmse),
                format_f64(r.mean_abs_error),
                format_f64(r.median_abs_error),
                r.failures,
                r.wall_time
            ));
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn fit_once(
    estimator: Estimator,
    series: &[f64],
    spec: &ModelSpec,
    delta: f64,
    cfg: &OptimizerConfig,
) -> Option<Vec<f64>> {
    let fit = estimate::fit(series, spec, estimator, delta, cfg).ok()?;
    let v = fit.theta_hat.to_vec(spec);
    v.iter().all(|x| x.is_finite()).then_some(v)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Runs every replication and aggregates the report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<BenchReport> {
    let (spec, theta, ispec) = cfg.validate()?;
    let opt = cfg.optimizer.unwrap_or_default();
    let started = Instant::now();

    let one = |rep: usize| -> Result<(Replication, Vec<f64>)> {
        let seed = replication_seed(cfg.seed, rep);
        let series = simulate(&spec, &theta, &ispec, cfg.n, cfg.burn_in, seed)?;
        let mut estimates = Vec::with_capacity(cfg.estimators.len());
        let mut times = Vec::with_capacity(cfg.estimators.len());
        for &e in &cfg.estimators {
            let t0 = Instant::now();
            estimates.push(fit_once(e, &series, &spec, cfg.delta, &opt));
            times.push(t0.elapsed().as_secs_f64());
        }
        Ok((Replication { index: rep, seed, estimates }, times))
    };
    let results: Vec<Result<(Replication, Vec<f64>)>> = match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?
            .install(|| (0..cfg.reps).into_par_iter().map(one).collect()),
        None => (0..cfg.reps).into_par_iter().map(one).collect(),
    };
    let mut replications = Vec::with_capacity(cfg.reps);
    let mut times = vec![0.0; cfg.estimators.len()];
    for r in results {
        let (rep, t) = r?;
        times.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
        replications.push(rep);
    }

    let truth = theta.to_vec(&spec);
    let mut rows = Vec::with_capacity(cfg.estimators.len());
    for (k, &e) in cfg.estimators.iter().enumerate() {
        let errors: Vec<f64> = replications
            .iter()
            .filter_map(|r| r.estimates[k].as_ref())
            .map(|v| v.iter().zip(&truth).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
            .collect();
        let ok = errors.len();
        let rmse = if ok > 0 { (errors.iter().map(|d| d * d).sum::<f64>() / ok as f64).sqrt() } else { f64::NAN };
        let mean = if ok > 0 { errors.iter().sum::<f64>() / ok as f64 } else { f64::NAN };
        rows.push(BenchRow {
            model: spec_label(cfg, &spec),
            innovation: cfg.innovation.name().to_string(),
            n: cfg.n,
            estimator: e,
            reps: cfg.reps,
            rmse,
            mean_abs_error: mean,
            median_abs_error: median(errors),
            failures: cfg.reps - ok,
            wall_time: times[k],
        });
    }

    let mut report = BenchReport {
        config: cfg.clone(),
        truth,
        rows,
        replications,
        assertions: Vec::new(),
        notes: preset_note(&cfg.model).into_iter().collect(),
        wall_time: started.elapsed().as_secs_f64(),
    };
    report.assertions = evaluate_assertions(&report);
    Ok(report)
}

fn spec_label(cfg: &ExperimentConfig, spec: &ModelSpec) -> String {
    if cfg.model.trim().eq_ignore_ascii_case("custom") {
        spec.label()
    } else {
        cfg.model.clone()
    }
}

/// Evaluates the failure ceiling of every cell and the configured assertions.
pub fn evaluate_assertions(report: &BenchReport) -> Vec<AssertionOutcome> {
    let mut out = Vec::new();
    for r in &report.rows {
        let rate = r.failures as f64 / r.reps as f64;
        out.push(AssertionOutcome {
            description: format!("{} failure rate {:.4} <= {MAX_FAILURE_RATE}", r.estimator.name(), rate),
            passed: rate <= MAX_FAILURE_RATE,
        });
    }
    let rmse = |e: &Estimator| report.row(*e).map_or(f64::NAN, |r| r.rmse);
    for a in &report.config.assertions {
        let (description, passed) = match a {
            Assertion::RatioBelow { numerator, denominator, value } => {
                let (x, y) = (rmse(numerator), rmse(denominator));
                (format!("RMSE({}) = {x:.6} < {value} * RMSE({}) = {:.6}", numerator.name(), denominator.name(), value * y), x < value * y)
            }
            Assertion::RatioAtMost { numerator, denominator, value } => {
                let (x, y) = (rmse(numerator), rmse(denominator));
                (format!("RMSE({}) = {x:.6} <= {value} * RMSE({}) = {:.6}", numerator.name(), denominator.name(), value * y), x <= value * y)
            }
            Assertion::RmseBelow { estimator, value } => {
                let x = rmse(estimator);
                (format!("RMSE({}) = {x:.6} < {value}", estimator.name()), x < *value)
            }
            Assertion::RmseBetween { estimator, lo, hi } => {
                let x = rmse(estimator);
                (format!("RMSE({}) = {x:.6} in [{lo}, {hi}]", estimator.name()), x >= *lo && x <= *hi)
            }
        };
        out.push(AssertionOutcome { description, passed });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_the_model_list() {
        let (s, t) = preset("ARCH(1)").unwrap();
        assert_eq!((s.r, s.s, t.c, t.alpha.clone()), (1, 0, 2.0, vec![0.5]));
        let (_, t) = preset("ARMA(3,2)").unwrap();
        assert_eq!((t.a, t.b), (vec![0.75, -0.5, 0.25], vec![0.75, 0.25]));
        let (s, t) = preset("GARCH(3,2)").unwrap();
        assert_eq!((s.r, s.s, t.c), (3, 2, 0.5));
        assert_eq!((t.alpha, t.beta), (vec![0.3, 0.1, 0.2], vec![0.2, 0.1]));
        assert!(matches!(preset("SARIMA"), Err(Error::NotFound(_))));
        for name in PRESETS {
            let (s, t) = preset(name).unwrap();
            assert!(t.matches(&s));
        }
    }

    #[test]
    fn config_parses_and_validates() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            model = "GARCH(1,1)"
            innovation = "centered_exponential"
            convention = "unit_variance"
            n = 50
            reps = 2
            seed = 1
            "#,
        )
        .unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { convention: None, ..cfg };
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn small_experiment_is_deterministic() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            model = "AR(1)"
            innovation = "laplace"
            n = 60
            reps = 4
            seed = 9
            [[assert]]
            kind = "rmse_below"
            estimator = "gqmle"
            value = 10.0
            "#,
        )
        .unwrap();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.replications, b.replications);
        assert_eq!(a.rows.len(), 2);
        assert!(a.all_passed());
    }
}
