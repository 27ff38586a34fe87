//! Model orders, parameter vectors and boxes, residual recursions,
//! admissibility checks and seeded simulators.
//!
//! The ARMA(p, q)-GARCH(r, s) model is
//!
//! ```text
//! X_t   = Σ a_i X_{t-i} + Σ b_j η_{t-j} + η_t
//! η_t   = σ_t ε_t
//! σ_t²  = c + Σ α_i η_{t-i}² + Σ β_j σ_{t-j}²
//! ```
//!
//! with `r = s = 0` giving a pure ARMA model. Residual recursions start from
//! pre-sample `X = 0`, `η = 0` and `σ² = c`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng;

/// Leading simulated values discarded by default.
pub const DEFAULT_BURN_IN: usize = 500;

/// Orders `(p, q)` of the ARMA part and `(r, s)` of the GARCH part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub s: usize,
}

impl ModelSpec {
    pub fn new(p: usize, q: usize, r: usize, s: usize) -> Result<Self> {
        if p + q + r + s == 0 {
            return invalid("at least one model order must be positive");
        }
        Ok(ModelSpec { p, q, r, s })
    }

    pub fn arma(p: usize, q: usize) -> Result<Self> {
        Self::new(p, q, 0, 0)
    }

    pub fn garch(r: usize, s: usize) -> Result<Self> {
        Self::new(0, 0, r, s)
    }

    /// True when there is no GARCH part.
    pub fn is_arma(&self) -> bool {
        self.r == 0 && self.s == 0
    }

    /// Series must be longer than this for the estimator to exist.
    pub fn existence_threshold(&self) -> usize {
        if self.is_arma() {
            self.p + self.q + 1
        } else {
            self.p + self.q + self.r + self.s + 1
        }
    }

    /// Number of coordinates in the estimation vector: `(a, b)` for ARMA,
    /// `(a, b, c, α, β)` otherwise.
    pub fn dim(&self) -> usize {
        if self.is_arma() {
            self.p + self.q
        } else {
            self.p + self.q + 1 + self.r + self.s
        }
    }

    pub fn label(&self) -> String {
        match (self.is_arma(), self.p + self.q == 0) {
            (true, _) => format!("ARMA({},{})", self.p, self.q),
            (false, true) => format!("GARCH({},{})", self.r, self.s),
            (false, false) => format!("ARMA({},{})-GARCH({},{})", self.p, self.q, self.r, self.s),
        }
    }
}

/// Coefficients `θ = (a, b, c, α, β)`. Pure ARMA models carry `c = 1` and
/// empty `alpha`/`beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(spec: &ModelSpec) -> Self {
        ParamVector {
            a: vec![0.0; spec.p],
            b: vec![0.0; spec.q],
            c: 1.0,
            alpha: vec![0.0; spec.r],
            beta: vec![0.0; spec.s],
        }
    }

    pub fn arma(a: &[f64], b: &[f64]) -> Self {
        ParamVector { a: a.to_vec(), b: b.to_vec(), c: 1.0, alpha: vec![], beta: vec![] }
    }

    pub fn armagarch(a: &[f64], b: &[f64], c: f64, alpha: &[f64], beta: &[f64]) -> Self {
        ParamVector { a: a.to_vec(), b: b.to_vec(), c, alpha: alpha.to_vec(), beta: beta.to_vec() }
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        ModelSpec::new(self.a.len(), self.b.len(), self.alpha.len(), self.beta.len())
    }

    pub fn matches(&self, spec: &ModelSpec) -> bool {
        self.a.len() == spec.p && self.b.len() == spec.q && self.alpha.len() == spec.r && self.beta.len() == spec.s
    }

    /// Estimation coordinates for `spec` (see [`ModelSpec::dim`]).
    pub fn to_vec(&self, spec: &ModelSpec) -> Vec<f64> {
        let mut v = Vec::with_capacity(spec.dim());
        v.extend_from_slice(&self.a);
        v.extend_from_slice(&self.b);
        if !spec.is_arma() {
            v.push(self.c);
            v.extend_from_slice(&self.alpha);
            v.extend_from_slice(&self.beta);
        }
        v
    }

    pub fn from_vec(spec: &ModelSpec, v: &[f64]) -> Result<Self> {
        if v.len() != spec.dim() {
            return invalid(format!("expected {} coordinates, got {}", spec.dim(), v.len()));
        }
        let (p, q, r) = (spec.p, spec.q, spec.r);
        if spec.is_arma() {
            return Ok(ParamVector::arma(&v[..p], &v[p..p + q]));
        }
        let c = v[p + q];
        let ga = p + q + 1;
        Ok(ParamVector::armagarch(&v[..p], &v[p..p + q], c, &v[ga..ga + r], &v[ga + r..]))
    }
}

/// Which parameter region a box represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxFlavor {
    /// ARMA coefficients only.
    Plain,
    /// `[-1/δ, 1/δ]^{p+q} × [δ, 1/δ] × [0, 1/δ]^{r+s}`.
    Delta,
    /// `[-1/δ, 1/δ]^{p+q} × {1} × [0, 1/δ²]^r × [0, 1/δ]^s`.
    Transformed,
}

/// Per-coordinate closed intervals over the estimation vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub flavor: BoxFlavor,
}

/// Default half-width of the ARMA coefficient box.
pub const DEFAULT_ARMA_BOUND: f64 = 10.0;

/// Default `δ` of the ARMA-GARCH boxes.
pub const DEFAULT_DELTA: f64 = 0.01;

impl ParamBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, flavor: BoxFlavor) -> Result<Self> {
        if lower.len() != upper.len() {
            return invalid("box bounds differ in length");
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return invalid("box needs finite bounds with lower <= upper");
        }
        Ok(ParamBox { lower, upper, flavor })
    }

    /// `[-bound, bound]^{p+q}` for an ARMA model.
    pub fn plain(spec: &ModelSpec, bound: f64) -> Result<Self> {
        if !spec.is_arma() {
            return invalid("plain box is for ARMA models");
        }
        let d = spec.p + spec.q;
        Self::new(vec![-bound; d], vec![bound; d], BoxFlavor::Plain)
    }

    fn delta_bounds(spec: &ModelSpec, delta: f64, transformed: bool) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return invalid(format!("delta must lie in (0, 1), got {delta}"));
        }
        if spec.is_arma() {
            return invalid("delta boxes are for models with a GARCH part");
        }
        let big = 1.0 / delta;
        let mut lo = vec![-big; spec.p + spec.q];
        let mut hi = vec![big; spec.p + spec.q];
        if transformed {
            lo.push(1.0);
            hi.push(1.0);
        } else {
            lo.push(delta);
            hi.push(big);
        }
        let alpha_hi = if transformed { big * big } else { big };
        lo.extend(std::iter::repeat_n(0.0, spec.r + spec.s));
        hi.extend(std::iter::repeat_n(alpha_hi, spec.r));
        hi.extend(std::iter::repeat_n(big, spec.s));
        let flavor = if transformed { BoxFlavor::Transformed } else { BoxFlavor::Delta };
        Self::new(lo, hi, flavor)
    }

    pub fn delta(spec: &ModelSpec, delta: f64) -> Result<Self> {
        Self::delta_bounds(spec, delta, false)
    }

    pub fn transformed(spec: &ModelSpec, delta: f64) -> Result<Self> {
        Self::delta_bounds(spec, delta, true)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| v >= l && v <= u)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }
}

/// Innovation distributions used in the experiments. All are centred.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationFamily {
    Gaussian,
    /// `Exp(1) - 1`
    CenteredExponential,
    /// `logN(0, 1) - e^{1/2}`
    CenteredLognormal,
    /// Student's t with three degrees of freedom.
    StudentT3,
    /// `½ N(0, 1) + ½ δ_0`
    GaussianPointmassMixture,
    /// `B(2, 0.4) - 0.8`
    CenteredBinomial,
    /// Standard double exponential.
    Laplace,
}

impl InnovationFamily {
    pub const ALL: [InnovationFamily; 7] = [
        InnovationFamily::Gaussian,
        InnovationFamily::CenteredExponential,
        InnovationFamily::CenteredLognormal,
        InnovationFamily::StudentT3,
        InnovationFamily::GaussianPointmassMixture,
        InnovationFamily::CenteredBinomial,
        InnovationFamily::Laplace,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InnovationFamily::Gaussian => "gaussian",
            InnovationFamily::CenteredExponential => "centered_exponential",
            InnovationFamily::CenteredLognormal => "centered_lognormal",
            InnovationFamily::StudentT3 => "student_t3",
            InnovationFamily::GaussianPointmassMixture => "gaussian_pointmass_mixture",
            InnovationFamily::CenteredBinomial => "centered_binomial",
            InnovationFamily::Laplace => "laplace",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let key = name.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .iter()
            .copied()
            .find(|f| f.name() == key)
            .ok_or_else(|| crate::Error::NotFound(format!("unknown innovation family '{name}'")))
    }

    /// Variance of the raw (unscaled) family; every family has mean zero.
    pub fn raw_variance(&self) -> f64 {
        let e = std::f64::consts::E;
        match self {
            InnovationFamily::Gaussian => 1.0,
            InnovationFamily::CenteredExponential => 1.0,
            InnovationFamily::CenteredLognormal => (e - 1.0) * e,
            InnovationFamily::StudentT3 => 3.0,
            InnovationFamily::GaussianPointmassMixture => 0.5,
            InnovationFamily::CenteredBinomial => 2.0 * 0.4 * 0.6,
            InnovationFamily::Laplace => 2.0,
        }
    }

    fn draw_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            InnovationFamily::Gaussian => rng.sample(StandardNormal),
            InnovationFamily::CenteredExponential => {
                let e: f64 = rng.sample(Exp1);
                e - 1.0
            }
            InnovationFamily::CenteredLognormal => {
                let z: f64 = rng.sample(StandardNormal);
                z.exp() - 0.5f64.exp()
            }
            InnovationFamily::StudentT3 => StudentT::new(3.0).expect("valid dof").sample(rng),
            InnovationFamily::GaussianPointmassMixture => {
                let u: f64 = rng.random();
                let z: f64 = rng.sample(StandardNormal);
                if u < 0.5 {
                    0.0
                } else {
                    z
                }
            }
            InnovationFamily::CenteredBinomial => {
                let hits = (0..2).filter(|_| rng.random::<f64>() < 0.4).count();
                hits as f64 - 0.8
            }
            InnovationFamily::Laplace => {
                let u: f64 = rng.random::<f64>() - 0.5;
                -u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }
}

/// Moment normalization applied to the raw family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingConvention {
    /// Variance one, used for ARMA experiments.
    UnitVariance,
    /// Second moment one, required by the GARCH part.
    UnitSecondMoment,
}

impl ScalingConvention {
    pub fn name(&self) -> &'static str {
        match self {
            ScalingConvention::UnitVariance => "unit_variance",
            ScalingConvention::UnitSecondMoment => "unit_second_moment",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "unit_variance" => Ok(ScalingConvention::UnitVariance),
            "unit_second_moment" => Ok(ScalingConvention::UnitSecondMoment),
            other => Err(crate::Error::NotFound(format!("unknown scaling convention '{other}'"))),
        }
    }
}

/// An innovation law: family, normalization and an extra precision factor
/// `k`. With `k != 1` the draws are divided by `√k`, i.e. the density is
/// `√k f(√k x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnovationSpec {
    pub family: InnovationFamily,
    pub convention: ScalingConvention,
    #[serde(default = "one")]
    pub k: f64,
}

fn one() -> f64 {
    1.0
}

impl InnovationSpec {
    pub fn new(family: InnovationFamily, convention: ScalingConvention) -> Self {
        InnovationSpec { family, convention, k: 1.0 }
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    /// Convention-normalized draws before the `k` rescaling.
    fn unit_draws(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng::rng(seed);
        // Every family is centred, so both conventions divide by the raw
        // standard deviation.
        let sd = self.family.raw_variance().sqrt();
        (0..n).map(|_| self.family.draw_raw(&mut rng) / sd).collect()
    }

    fn check(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return invalid(format!("innovation precision factor must be positive, got {}", self.k));
        }
        Ok(())
    }
}

/// i.i.d. innovations, deterministic in `seed`.
pub fn sample_innovations(ispec: &InnovationSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    ispec.check()?;
    let sd = ispec.k.sqrt();
    Ok(ispec.unit_draws(n, seed).into_iter().map(|z| z / sd).collect())
}

/// Estimated innovations of a fitted parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub enum ResidualTrace {
    Arma { eps: Vec<f64> },
    ArmaGarch { eta: Vec<f64>, sigma2: Vec<f64> },
}

impl ResidualTrace {
    /// `ε̃` for ARMA, `η̃` for ARMA-GARCH.
    pub fn innovations(&self) -> &[f64] {
        match self {
            ResidualTrace::Arma { eps } => eps,
            ResidualTrace::ArmaGarch { eta, .. } => eta,
        }
    }

    pub fn sigma2(&self) -> Option<&[f64]> {
        match self {
            ResidualTrace::Arma { .. } => None,
            ResidualTrace::ArmaGarch { sigma2, .. } => Some(sigma2),
        }
    }

    /// `η̃_t / σ̃_t` (or `ε̃_t` for ARMA).
    pub fn standardized(&self) -> Vec<f64> {
        match self {
            ResidualTrace::Arma { eps } => eps.clone(),
            ResidualTrace::ArmaGarch { eta, sigma2 } => {
                eta.iter().zip(sigma2).map(|(e, s)| e / s.sqrt()).collect()
            }
        }
    }

    pub fn len(&self) -> usize {
        self.innovations().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// ARMA inversion `e_t = X_t - Σ a_i X_{t-i} - Σ b_j e_{t-j}` with zero pre-sample values.
pub(crate) fn arma_filter(a: &[f64], b: &[f64], series: &[f64]) -> Vec<f64> {
    let n = series.len();
    let mut e = vec![0.0; n];
    for t in 0..n {
        let mut v = series[t];
        for (i, ai) in a.iter().enumerate() {
            if t > i {
                v -= ai * series[t - i - 1];
            }
        }
        for (j, bj) in b.iter().enumerate() {
            if t > j {
                v -= bj * e[t - j - 1];
            }
        }
        e[t] = v;
    }
    e
}

/// `σ²_t = c + Σ α_i η²_{t-i} + Σ β_j σ²_{t-j}` with pre-sample `η = 0`, `σ² = c`.
pub(crate) fn garch_filter(c: f64, alpha: &[f64], beta: &[f64], eta: &[f64]) -> Vec<f64> {
    let n = eta.len();
    let mut s2 = vec![c; n];
    for t in 0..n {
        let mut v = c;
        for (i, ai) in alpha.iter().enumerate() {
            if t > i {
                v += ai * eta[t - i - 1] * eta[t - i - 1];
            }
        }
        for (j, bj) in beta.iter().enumerate() {
            v += bj * if t > j { s2[t - j - 1] } else { c };
        }
        s2[t] = v;
    }
    s2
}

/// Estimated innovations `ε̃_t(θ)` of an ARMA model.
pub fn arma_residuals(theta: &ParamVector, series: &[f64]) -> Result<ResidualTrace> {
    if !theta.alpha.is_empty() || !theta.beta.is_empty() {
        return invalid("ARMA residuals need a parameter vector without a GARCH part");
    }
    if series.is_empty() {
        return invalid("empty series");
    }
    Ok(ResidualTrace::Arma { eps: arma_filter(&theta.a, &theta.b, series) })
}

/// Estimated innovations `η̃_t(θ)` and volatilities `σ̃²_t(θ)`.
pub fn armagarch_residuals(theta: &ParamVector, series: &[f64]) -> Result<ResidualTrace> {
    if !(theta.c > 0.0) {
        return invalid(format!("GARCH constant must be positive, got {}", theta.c));
    }
    if series.is_empty() {
        return invalid("empty series");
    }
    let eta = arma_filter(&theta.a, &theta.b, series);
    let sigma2 = garch_filter(theta.c, &theta.alpha, &theta.beta, &eta);
    Ok(ResidualTrace::ArmaGarch { eta, sigma2 })
}

/// Outcome of the admissibility checks on a parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    /// Roots of `1 - Σ a_i z^i` lie strictly outside the closed unit disk.
    pub causal: bool,
    /// Roots of `1 + Σ b_j z^j` lie strictly outside the closed unit disk.
    pub invertible: bool,
    /// `Σ β_j < 1`.
    pub beta_sum_below_one: bool,
    /// `c > 0`, `α ≥ 0`, `β ≥ 0`.
    pub signs: bool,
}

impl Admissibility {
    pub fn admissible(&self) -> bool {
        self.causal && self.invertible && self.beta_sum_below_one && self.signs
    }

    pub fn arma_admissible(&self) -> bool {
        self.causal && self.invertible
    }
}

/// Schur–Cohn test by the step-down (inverse Levinson) recursion: true when
/// every root of `1 - Σ coef_i z^i` lies strictly outside the closed unit disk.
pub fn roots_outside_unit_disk(coef: &[f64]) -> bool {
    let mut a: Vec<f64> = coef.to_vec();
    while let Some(&last) = a.last() {
        if last == 0.0 {
            a.pop();
        } else {
            break;
        }
    }
    while let Some(&k) = a.last() {
        if !(k.abs() < 1.0) {
            return false;
        }
        let m = a.len();
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..m - 1).map(|i| (a[i] + k * a[m - 2 - i]) / denom).collect();
        a = next;
    }
    true
}

pub fn is_admissible(theta: &ParamVector, spec: &ModelSpec) -> Result<Admissibility> {
    if !theta.matches(spec) {
        return invalid(format!("parameter vector does not match {}", spec.label()));
    }
    let neg_b: Vec<f64> = theta.b.iter().map(|b| -b).collect();
    let beta_sum: f64 = theta.beta.iter().sum();
    Ok(Admissibility {
        causal: roots_outside_unit_disk(&theta.a),
        invertible: roots_outside_unit_disk(&neg_b),
        beta_sum_below_one: beta_sum < 1.0,
        signs: theta.c > 0.0 && theta.alpha.iter().all(|&v| v >= 0.0) && theta.beta.iter().all(|&v| v >= 0.0),
    })
}

/// Simulates `n` observations after discarding `burn_in` leading values.
///
/// The GARCH recursion runs on `c/k` and `α/k` with convention-normalized
/// draws, which is algebraically the same process as `(c, α)` driven by the
/// `k`-rescaled innovations and makes the scale family
/// `(√k f(√k·), kc, kα, β)` reproduce one series exactly.
pub fn simulate(
    spec: &ModelSpec,
    theta: &ParamVector,
    ispec: &InnovationSpec,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let adm = is_admissible(theta, spec)?;
    if !adm.arma_admissible() {
        return invalid("ARMA part is not causal and invertible");
    }
    if !adm.signs {
        return invalid("GARCH coefficients need c > 0 and nonnegative alpha, beta");
    }
    if n == 0 {
        return invalid("cannot simulate an empty series");
    }
    ispec.check()?;
    let total = n + burn_in;
    let z = ispec.unit_draws(total, seed);
    let c = theta.c / ispec.k;
    let alpha: Vec<f64> = theta.alpha.iter().map(|v| v / ispec.k).collect();

    let mut eta = vec![0.0; total];
    let mut s2 = vec![0.0; total];
    let mut x = vec![0.0; total];
    for t in 0..total {
        let mut v = c;
        for (i, ai) in alpha.iter().enumerate() {
            if t > i {
                v += ai * eta[t - i - 1] * eta[t - i - 1];
            }
        }
        for (j, bj) in theta.beta.iter().enumerate() {
            v += bj * if t > j { s2[t - j - 1] } else { c };
        }
        s2[t] = v;
        eta[t] = v.sqrt() * z[t];

        let mut xt = eta[t];
        for (i, ai) in theta.a.iter().enumerate() {
            if t > i {
                xt += ai * x[t - i - 1];
            }
        }
        for (j, bj) in theta.b.iter().enumerate() {
            if t > j {
                xt += bj * eta[t - j - 1];
            }
        }
        x[t] = xt;
    }
    Ok(x.split_off(burn_in))
}
