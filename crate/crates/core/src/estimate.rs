//! Profile-likelihood estimators for ARMA and ARMA-GARCH models.
//!
//! The log-concave estimator maximizes the profile objective
//! `Υ(θ) = sup_φ Λ(φ, θ)`: each evaluation computes the residuals at `θ` and
//! fits a log-concave density to them, and a box-constrained downhill simplex
//! searches over `θ`. The Gaussian quasi-likelihood estimator reuses the same
//! simplex with the Gaussian criterion.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lcdens::{self, LogConcaveDensity, WeightedSample};
use crate::lcsmooth::{self, SmoothedDensity};
use crate::tsmodel::{
    arma_filter, garch_filter, ModelSpec, ParamBox, ParamVector, DEFAULT_ARMA_BOUND,
};

/// Controls of the downhill simplex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Stop when the spread of objective values over the simplex is below this...
    pub ftol: f64,
    /// ...and every vertex lies within this sup-distance of the best one.
    pub xtol: f64,
    /// Evaluation cap of one simplex run.
    pub max_evals: usize,
    /// Fresh-simplex restarts from the best point after the first run.
    pub restarts: usize,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Tolerance of every inner density fit.
    pub inner_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            ftol: 1e-10,
            xtol: 1e-8,
            max_evals: 4000,
            restarts: 2,
            initial_step: 0.1,
            inner_tol: lcdens::DEFAULT_TOL,
        }
    }
}

impl OptimizerConfig {
    fn check(&self) -> Result<()> {
        let ok = self.ftol > 0.0
            && self.xtol > 0.0
            && self.max_evals > 0
            && self.initial_step > 0.0
            && self.inner_tol > 0.0;
        if ok {
            Ok(())
        } else {
            invalid("optimizer tolerances, step and evaluation cap must be positive")
        }
    }
}

/// Diagnostics of a simplex search.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimDiagnostics {
    pub evaluations: usize,
    pub restarts: usize,
    /// The last run stopped on the tolerances rather than the evaluation cap.
    pub converged: bool,
}

/// Result of [`nelder_mead_max`].
#[derive(Clone, Debug, PartialEq)]
pub struct OptimResult {
    pub argmax: Vec<f64>,
    pub value: f64,
    pub diagnostics: OptimDiagnostics,
}

/// Box-constrained downhill simplex maximization.
///
/// Coordinates with `lower == upper` are held fixed. Candidate points are
/// clamped onto the box before evaluation, and NaN objective values count as
/// `-∞`.
pub fn nelder_mead_max<F>(f: F, bounds: &ParamBox, x0: &[f64], cfg: &OptimizerConfig) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64,
{
    cfg.check()?;
    if x0.len() != bounds.dim() {
        return invalid(format!("start has {} coordinates, box has {}", x0.len(), bounds.dim()));
    }
    if !bounds.contains(x0) {
        return invalid("start point lies outside the box");
    }
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let f0 = eval(x0);
    if !f0.is_finite() {
        return invalid(format!("objective at the start point is {f0}"));
    }
    let free: Vec<usize> = (0..bounds.dim()).filter(|&i| bounds.lower[i] < bounds.upper[i]).collect();
    let mut diag = OptimDiagnostics { evaluations: 1, restarts: 0, converged: true };
    if free.is_empty() {
        return Ok(OptimResult { argmax: x0.to_vec(), value: f0, diagnostics: diag });
    }

    let mut best = (x0.to_vec(), f0);
    for run in 0..=cfg.restarts {
        let (x, v, evals, converged) = simplex_run(&eval, bounds, &free, &best.0, best.1, cfg);
        diag.evaluations += evals;
        diag.converged = converged;
        if run > 0 {
            diag.restarts += 1;
        }
        let gain = v - best.1;
        if v >= best.1 {
            best = (x, v);
        }
        if run > 0 && gain <= cfg.ftol {
            break;
        }
    }
    Ok(OptimResult { argmax: best.0, value: best.1, diagnostics: diag })
}

/// One simplex run from `x0`; returns the best vertex, its value, the number
/// of new evaluations and whether the tolerances were met.
fn simplex_run(
    eval: &impl Fn(&[f64]) -> f64,
    bounds: &ParamBox,
    free: &[usize],
    x0: &[f64],
    f0: f64,
    cfg: &OptimizerConfig,
) -> (Vec<f64>, f64, usize, bool) {
    let k = free.len();
    let mut evals = 0usize;
    let mut verts: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k + 1);
    verts.push((x0.to_vec(), f0));
    for &i in free {
        let mut x = x0.to_vec();
        let up = x[i] + cfg.initial_step;
        x[i] = if up <= bounds.upper[i] { up } else { x[i] - cfg.initial_step };
        bounds.clamp(&mut x);
        let v = eval(&x);
        evals += 1;
        verts.push((x, v));
    }

    let point = |c: &[f64], d: &[f64], t: f64| -> Vec<f64> {
        let mut x: Vec<f64> = c.iter().zip(d).map(|(ci, di)| ci + t * (di - ci)).collect();
        bounds.clamp(&mut x);
        x
    };

    loop {
        verts.sort_by(|a, b| b.1.total_cmp(&a.1));
        let fbest = verts[0].1;
        let fworst = verts[k].1;
        let spread = if fbest == fworst { 0.0 } else { fbest - fworst };
        let head = &verts[0].0;
        let size = verts[1..]
            .iter()
            .flat_map(|(x, _)| free.iter().map(move |&i| (x[i] - head[i]).abs()))
            .fold(0.0, f64::max);
        if spread <= cfg.ftol && size <= cfg.xtol {
            let (x, v) = verts.swap_remove(0);
            return (x, v, evals, true);
        }
        if evals >= cfg.max_evals {
            let (x, v) = verts.swap_remove(0);
            return (x, v, evals, false);
        }

        let mut centroid = vec![0.0; x0.len()];
        for (x, _) in &verts[..k] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / k as f64;
            }
        }
        let worst = verts[k].0.clone();
        let xr = point(&centroid, &worst, -1.0);
        let fr = eval(&xr);
        evals += 1;

        if fr > fbest {
            let xe = point(&centroid, &worst, -2.0);
            let fe = eval(&xe);
            evals += 1;
            verts[k] = if fe > fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr > verts[k - 1].1 {
            verts[k] = (xr, fr);
            continue;
        }
        // Outside contraction when the reflection beats the worst vertex.
        let (xc, fc) = if fr > fworst {
            let xc = point(&centroid, &worst, -0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = point(&centroid, &worst, 0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc >= fworst.max(fr) {
            verts[k] = (xc, fc);
            continue;
        }
        let xb = verts[0].0.clone();
        for v in verts.iter_mut().skip(1) {
            let xs = point(&xb, &v.0, 0.5);
            let fs = eval(&xs);
            evals += 1;
            *v = (xs, fs);
        }
    }
}

fn check_length(series: &[f64], spec: &ModelSpec) -> Result<()> {
    let threshold = spec.existence_threshold();
    if series.len() <= threshold {
        return Err(Error::SeriesTooShort { n: series.len(), threshold });
    }
    if series.iter().any(|x| !x.is_finite()) {
        return invalid("series contains non-finite values");
    }
    Ok(())
}

/// Inner fit objective, or `None` when the residuals are degenerate.
fn inner_objective(residuals: &[f64], tol: f64) -> Option<f64> {
    let sample = WeightedSample::from_values(residuals).ok()?;
    let fit = lcdens::fit_with_diagnostics(&sample, tol).ok()?;
    Some(fit.objective.lambda)
}

fn arma_profile(theta: &ParamVector, series: &[f64], tol: f64) -> f64 {
    let eps = arma_filter(&theta.a, &theta.b, series);
    inner_objective(&eps, tol).unwrap_or(f64::NEG_INFINITY)
}

/// Standardized residuals `η̃/σ̃` and the mean of `log σ̃²`, or `None` when the
/// volatility recursion is not admissible or not finite.
fn garch_standardized(theta: &ParamVector, series: &[f64]) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    if theta.beta.iter().sum::<f64>() >= 1.0 || !(theta.c > 0.0) {
        return None;
    }
    let eta = arma_filter(&theta.a, &theta.b, series);
    let s2 = garch_filter(theta.c, &theta.alpha, &theta.beta, &eta);
    if s2.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let z: Vec<f64> = eta.iter().zip(&s2).map(|(e, s)| e / s.sqrt()).collect();
    let mean_log = s2.iter().map(|v| v.ln()).sum::<f64>() / s2.len() as f64;
    Some((eta, z, mean_log))
}

fn armagarch_profile(theta: &ParamVector, series: &[f64], tol: f64) -> f64 {
    match garch_standardized(theta, series) {
        Some((_, z, mean_log)) => {
            inner_objective(&z, tol).map_or(f64::NEG_INFINITY, |lambda| lambda - 0.5 * mean_log)
        }
        None => f64::NEG_INFINITY,
    }
}

/// Profile objective `Υ(θ)` of an ARMA model; `-∞` for degenerate residuals.
pub fn profile_objective_arma(theta: &ParamVector, series: &[f64]) -> Result<f64> {
    let spec = theta.spec()?;
    if !spec.is_arma() {
        return invalid("ARMA profile objective needs a parameter vector without a GARCH part");
    }
    check_length(series, &spec)?;
    Ok(arma_profile(theta, series, lcdens::DEFAULT_TOL))
}

/// Profile objective on the transformed space (`c = 1`):
/// `Λ` of the fit to `η̃/σ̃` minus `(1/2n) Σ log σ̃²`. `-∞` when the residuals
/// are degenerate or `Σβ ≥ 1`.
pub fn profile_objective_armagarch(theta_prime: &ParamVector, series: &[f64]) -> Result<f64> {
    let spec = theta_prime.spec()?;
    if spec.is_arma() {
        return invalid("ARMA-GARCH profile objective needs a GARCH part");
    }
    if theta_prime.c != 1.0 {
        return invalid(format!("transformed parameters have c = 1, got {}", theta_prime.c));
    }
    check_length(series, &spec)?;
    Ok(armagarch_profile(theta_prime, series, lcdens::DEFAULT_TOL))
}

/// Which criterion produced a fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Lcmle,
    Gqmle,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Lcmle => "LCMLE",
            Estimator::Gqmle => "GQMLE",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lcmle" => Ok(Estimator::Lcmle),
            "gqmle" => Ok(Estimator::Gqmle),
            other => Err(Error::NotFound(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Diagnostics attached to a [`FitResult`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub evaluations: usize,
    pub restarts: usize,
    pub converged: bool,
    /// Index of the winning start (0 is the warm start).
    pub start: usize,
    /// The final inner density fit hit its iteration cap.
    pub inner_capped: bool,
}

/// Estimated coefficients with the fitted innovation density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimator: Estimator,
    pub spec: ModelSpec,
    #[serde(rename = "theta")]
    pub theta_hat: ParamVector,
    pub c_hat: Option<f64>,
    pub objective: f64,
    pub density: Option<LogConcaveDensity>,
    pub smoothed: Option<SmoothedDensity>,
    pub diagnostics: FitDiagnostics,
}

impl FitResult {
    /// Residuals at `θ̂`: `ε̃` for ARMA, `η̃/σ̃` for ARMA-GARCH.
    pub fn standardized_residuals(&self, series: &[f64]) -> Result<Vec<f64>> {
        if self.spec.is_arma() {
            Ok(arma_filter(&self.theta_hat.a, &self.theta_hat.b, series))
        } else {
            let eta = arma_filter(&self.theta_hat.a, &self.theta_hat.b, series);
            let s2 = garch_filter(self.theta_hat.c, &self.theta_hat.alpha, &self.theta_hat.beta, &eta);
            Ok(eta.iter().zip(&s2).map(|(e, s)| e / s.sqrt()).collect())
        }
    }
}

/// Maximizes `f` from each start in turn and keeps the best run. Starts with
/// a non-finite objective are skipped.
fn multistart<F>(f: F, bounds: &ParamBox, starts: &[Vec<f64>], cfg: &OptimizerConfig) -> Result<(OptimResult, usize)>
where
    F: Fn(&[f64]) -> f64,
{
    let mut best: Option<(OptimResult, usize)> = None;
    let mut evaluations = 0;
    for (i, s) in starts.iter().enumerate() {
        let mut s = s.clone();
        bounds.clamp(&mut s);
        let Ok(r) = nelder_mead_max(&f, bounds, &s, cfg) else {
            evaluations += 1;
            continue;
        };
        evaluations += r.diagnostics.evaluations;
        #[allow(clippy::unnecessary_map_or)]
        let better = best.as_ref().map_or(true, |(b, _)| r.value > b.value);
        if better {
            best = Some((r, i));
        }
    }
    let (mut r, i) = best.ok_or_else(|| Error::FitFailure("objective is not finite at any start".into()))?;
    r.diagnostics.evaluations = evaluations;
    Ok((r, i))
}

/// Log-concave fit on a residual vector, with diagnostics.
fn fit_residual_density(residuals: &[f64], tol: f64) -> Result<lcdens::DensityFit> {
    let sample = WeightedSample::from_values(residuals)?;
    lcdens::fit_with_diagnostics(&sample, tol).map_err(|e| Error::FitFailure(format!("density fit at the optimum: {e}")))
}

/// Log-concave estimator for ARMA(p, q). Warm start at the least-squares
/// estimate, fallback start at zero.
pub fn fit_lcmle_arma(series: &[f64], spec: &ModelSpec, bounds: &ParamBox, cfg: &OptimizerConfig) -> Result<FitResult> {
    if !spec.is_arma() {
        return invalid("fit_lcmle_arma needs r = s = 0");
    }
    if spec.dim() == 0 {
        return invalid("no coefficients to estimate");
    }
    if bounds.dim() != spec.dim() {
        return invalid("box dimension does not match the model");
    }
    check_length(series, spec)?;
    cfg.check()?;
    let warm = fit_gqmle_arma(series, spec, bounds, cfg)?;
    let starts = vec![warm.theta_hat.to_vec(spec), vec![0.0; spec.dim()]];
    let objective = |x: &[f64]| {
        let (a, b) = x.split_at(spec.p);
        let eps = arma_filter(a, b, series);
        inner_objective(&eps, cfg.inner_tol).unwrap_or(f64::NEG_INFINITY)
    };
    let (opt, start) = multistart(objective, bounds, &starts, cfg)?;
    let theta = ParamVector::from_vec(spec, &opt.argmax)?;
    let eps = arma_filter(&theta.a, &theta.b, series);
    let fit = fit_residual_density(&eps, cfg.inner_tol)?;
    let gap = lcsmooth::variance_gap_arma(&eps, &fit.density)?;
    let smoothed = SmoothedDensity::new(fit.density.clone(), gap)?;
    Ok(FitResult {
        estimator: Estimator::Lcmle,
        spec: *spec,
        theta_hat: theta,
        c_hat: None,
        objective: fit.objective.lambda,
        density: Some(fit.density),
        smoothed: Some(smoothed),
        diagnostics: FitDiagnostics {
            evaluations: opt.diagnostics.evaluations,
            restarts: opt.diagnostics.restarts,
            converged: opt.diagnostics.converged,
            start,
            inner_capped: fit.diagnostics.capped,
        },
    })
}

/// Conditional least squares for ARMA(p, q): maximizes `-(1/n) Σ ε̃²`.
/// Pure AR models start from the closed form [`ar_least_squares`].
pub fn fit_gqmle_arma(series: &[f64], spec: &ModelSpec, bounds: &ParamBox, cfg: &OptimizerConfig) -> Result<FitResult> {
    if !spec.is_arma() {
        return invalid("fit_gqmle_arma needs r = s = 0");
    }
    if spec.dim() == 0 {
        return invalid("no coefficients to estimate");
    }
    if bounds.dim() != spec.dim() {
        return invalid("box dimension does not match the model");
    }
    check_length(series, spec)?;
    cfg.check()?;
    let n = series.len() as f64;
    let objective = |x: &[f64]| {
        let (a, b) = x.split_at(spec.p);
        -arma_filter(a, b, series).iter().map(|e| e * e).sum::<f64>() / n
    };
    let starts = vec![vec![0.0; spec.dim()]];
    let (opt, start) = multistart(objective, bounds, &starts, cfg)?;
    Ok(FitResult {
        estimator: Estimator::Gqmle,
        spec: *spec,
        theta_hat: ParamVector::from_vec(spec, &opt.argmax)?,
        c_hat: None,
        objective: opt.value,
        density: None,
        smoothed: None,
        diagnostics: FitDiagnostics {
            evaluations: opt.diagnostics.evaluations,
            restarts: opt.diagnostics.restarts,
            converged: opt.diagnostics.converged,
            start,
            inner_capped: false,
        },
    })
}

/// Closed-form conditional least squares for a pure AR(p) with zero
/// pre-sample values.
pub fn ar_least_squares(series: &[f64], p: usize) -> Result<Vec<f64>> {
    if p == 0 {
        return invalid("AR order must be positive");
    }
    check_length(series, &ModelSpec::arma(p, 0)?)?;
    let n = series.len();
    let design = DMatrix::from_fn(n, p, |t, i| if t > i { series[t - i - 1] } else { 0.0 });
    let y = DVector::from_column_slice(series);
    let gram = design.transpose() * &design;
    let rhs = design.transpose() * y;
    let chol = gram.cholesky().ok_or_else(|| Error::DegenerateSample("lagged design is rank deficient".into()))?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Gaussian quasi-likelihood for ARMA-GARCH on the `δ`-box (`c` free).
pub fn fit_gqmle_armagarch(series: &[f64], spec: &ModelSpec, delta: f64, cfg: &OptimizerConfig) -> Result<FitResult> {
    if spec.is_arma() {
        return invalid("fit_gqmle_armagarch needs a GARCH part");
    }
    check_length(series, spec)?;
    cfg.check()?;
    let bounds = ParamBox::delta(spec, delta)?;
    let n = series.len() as f64;

    let (a0, b0) = arma_start(series, spec, delta, cfg)?;
    let eta = arma_filter(&a0, &b0, series);
    let m2 = (eta.iter().map(|e| e * e).sum::<f64>() / n).max(delta);
    let alpha0 = if spec.r > 0 { vec![0.1 / spec.r as f64; spec.r] } else { vec![] };
    let beta0 = if spec.s > 0 { vec![0.7 / spec.s as f64; spec.s] } else { vec![] };
    let persistence: f64 = alpha0.iter().chain(&beta0).sum();
    let warm = ParamVector::armagarch(&a0, &b0, m2 * (1.0 - persistence), &alpha0, &beta0);
    let flat = ParamVector::armagarch(&a0, &b0, m2, &vec![0.0; spec.r], &vec![0.0; spec.s]);
    let starts = vec![warm.to_vec(spec), flat.to_vec(spec)];

    let objective = |x: &[f64]| match ParamVector::from_vec(spec, x).ok().and_then(|t| garch_terms(&t, series)) {
        Some((_, quad, mean_log)) => -0.5 * (mean_log + quad),
        None => f64::NEG_INFINITY,
    };
    let (opt, start) = multistart(objective, &bounds, &starts, cfg)?;
    let theta = ParamVector::from_vec(spec, &opt.argmax)?;
    Ok(FitResult {
        estimator: Estimator::Gqmle,
        spec: *spec,
        c_hat: Some(theta.c),
        theta_hat: theta,
        objective: opt.value,
        density: None,
        smoothed: None,
        diagnostics: FitDiagnostics {
            evaluations: opt.diagnostics.evaluations,
            restarts: opt.diagnostics.restarts,
            converged: opt.diagnostics.converged,
            start,
            inner_capped: false,
        },
    })
}

/// `(z, mean z², mean log σ̃²)` at `θ`, or `None` outside the admissible region.
fn garch_terms(theta: &ParamVector, series: &[f64]) -> Option<(Vec<f64>, f64, f64)> {
    let (_, z, mean_log) = garch_standardized(theta, series)?;
    let quad = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
    quad.is_finite().then_some((z, quad, mean_log))
}

/// ARMA coefficients for warm-starting an ARMA-GARCH fit.
fn arma_start(series: &[f64], spec: &ModelSpec, delta: f64, cfg: &OptimizerConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    if spec.p + spec.q == 0 {
        return Ok((vec![], vec![]));
    }
    let arma = ModelSpec::arma(spec.p, spec.q)?;
    let bound = (1.0 / delta).min(DEFAULT_ARMA_BOUND);
    let bounds = ParamBox::plain(&arma, bound)?;
    let fit = fit_gqmle_arma(series, &arma, &bounds, cfg)?;
    Ok((fit.theta_hat.a, fit.theta_hat.b))
}

/// Log-concave estimator for ARMA-GARCH. The search runs over the
/// transformed box with `c = 1`; the scale `ĉ = (1/n) Σ η̃²/σ̃²` then maps the
/// solution back via `θ̂ = (â, b̂, ĉ, ĉ α̂', β̂)` and `f̂(x) = √ĉ f̂'(√ĉ x)`.
pub fn fit_lcmle_armagarch(series: &[f64], spec: &ModelSpec, delta: f64, cfg: &OptimizerConfig) -> Result<FitResult> {
    if spec.is_arma() {
        return invalid("fit_lcmle_armagarch needs a GARCH part");
    }
    check_length(series, spec)?;
    cfg.check()?;
    let bounds = ParamBox::transformed(spec, delta)?;
    let warm = fit_gqmle_armagarch(series, spec, delta, cfg)?;
    let w = &warm.theta_hat;
    let warm_prime = ParamVector::armagarch(&w.a, &w.b, 1.0, &w.alpha.iter().map(|a| a / w.c).collect::<Vec<_>>(), &w.beta);
    let zero = ParamVector::armagarch(&vec![0.0; spec.p], &vec![0.0; spec.q], 1.0, &vec![0.0; spec.r], &vec![0.0; spec.s]);
    let starts = vec![warm_prime.to_vec(spec), zero.to_vec(spec)];

    let objective = |x: &[f64]| match ParamVector::from_vec(spec, x) {
        Ok(t) => armagarch_profile(&t, series, cfg.inner_tol),
        Err(_) => f64::NEG_INFINITY,
    };
    let (opt, start) = multistart(objective, &bounds, &starts, cfg)?;
    let theta_prime = ParamVector::from_vec(spec, &opt.argmax)?;
    let (_, z, _) = garch_standardized(&theta_prime, series)
        .ok_or_else(|| Error::FitFailure("volatility recursion failed at the optimum".into()))?;
    let fit = fit_residual_density(&z, cfg.inner_tol)?;
    let c_hat = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
    if !(c_hat > 0.0 && c_hat.is_finite()) {
        return Err(Error::FitFailure(format!("scale estimate is {c_hat}")));
    }
    let root = c_hat.sqrt();
    let density = fit.density.affine(0.0, 1.0 / root)?;
    let gap = lcsmooth::variance_gap_armagarch(&density)?;
    let smoothed = SmoothedDensity::new(density.clone(), gap)?;
    let theta = ParamVector::armagarch(
        &theta_prime.a,
        &theta_prime.b,
        c_hat,
        &theta_prime.alpha.iter().map(|a| c_hat * a).collect::<Vec<_>>(),
        &theta_prime.beta,
    );
    Ok(FitResult {
        estimator: Estimator::Lcmle,
        spec: *spec,
        theta_hat: theta,
        c_hat: Some(c_hat),
        objective: opt.value,
        density: Some(density),
        smoothed: Some(smoothed),
        diagnostics: FitDiagnostics {
            evaluations: opt.diagnostics.evaluations,
            restarts: opt.diagnostics.restarts,
            converged: opt.diagnostics.converged,
            start,
            inner_capped: fit.diagnostics.capped,
        },
    })
}

/// Dispatches on the model type: plain box `[-10, 10]` for ARMA, `δ`-box for
/// ARMA-GARCH.
pub fn fit(series: &[f64], spec: &ModelSpec, estimator: Estimator, delta: f64, cfg: &OptimizerConfig) -> Result<FitResult> {
    match (spec.is_arma(), estimator) {
        (true, e) => {
            let bounds = ParamBox::plain(spec, DEFAULT_ARMA_BOUND)?;
            match e {
                Estimator::Lcmle => fit_lcmle_arma(series, spec, &bounds, cfg),
                Estimator::Gqmle => fit_gqmle_arma(series, spec, &bounds, cfg),
            }
        }
        (false, Estimator::Lcmle) => fit_lcmle_armagarch(series, spec, delta, cfg),
        (false, Estimator::Gqmle) => fit_gqmle_armagarch(series, spec, delta, cfg),
    }
}

/// Rescales an ARMA-GARCH series so that its Gaussian quasi-likelihood
/// estimate of `c` equals one. Returns the scaled series and the divisor.
pub fn standardize_by_gqmle(series: &[f64], spec: &ModelSpec, delta: f64, cfg: &OptimizerConfig) -> Result<(Vec<f64>, f64)> {
    let fit = fit_gqmle_armagarch(series, spec, delta, cfg)?;
    let k = fit.theta_hat.c.sqrt();
    Ok((series.iter().map(|x| x / k).collect(), k))
}
