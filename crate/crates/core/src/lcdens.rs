//! Weighted univariate log-concave maximum likelihood density estimation.
//!
//! The estimator maximizes
//!
//! ```text
//! Λ(φ) = Σ w_i φ(x_i) − ∫ exp(φ) + 1
//! ```
//!
//! over concave `φ`. The maximizer is piecewise linear with knots among the
//! sample points and vanishes outside `[min x, max x]`, so the fit works on the
//! vector of log-values at the distinct sample points and only ever moves
//! within the subspace spanned by a set of active knots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::segment::{unit_mass, SegmentMoments};

/// Default convergence tolerance of the inner fit.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Outer active-set iterations before giving up with a flagged result.
pub const MAX_OUTER_ITERATIONS: usize = 500;

const MAX_NEWTON_ITERATIONS: usize = 200;

/// Samples whose points all lie within this distance are rejected.
const DEGENERATE_SPREAD: f64 = 1e-12;

/// Empirical distribution on strictly increasing support points.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSample {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSample {
    /// Builds a sample from raw values with equal weights. Duplicates are
    /// merged into a single point carrying their summed weight.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let w = vec![1.0; values.len()];
        Self::new(values, &w)
    }

    /// Builds a sample from arbitrary (unsorted, possibly tied) points and
    /// positive weights. Weights are normalized to sum to one.
    pub fn new(points: &[f64], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return invalid("points and weights differ in length");
        }
        if points.is_empty() {
            return invalid("empty sample");
        }
        if points.iter().any(|x| !x.is_finite()) {
            return invalid("sample points must be finite");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return invalid("weights must be positive and finite");
        }
        let mut pairs: Vec<(f64, f64)> = points.iter().copied().zip(weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut pts: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut wts: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            match pts.last() {
                Some(&last) if last == x => *wts.last_mut().unwrap() += w,
                _ => {
                    pts.push(x);
                    wts.push(w);
                }
            }
        }
        let total: f64 = wts.iter().sum();
        wts.iter_mut().for_each(|w| *w /= total);
        Ok(WeightedSample { points: pts, weights: wts })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of distinct support points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    /// Second moment about zero.
    pub fn second_moment(&self) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| x * x * w).sum()
    }

    /// Applies `x -> shift + scale * x` to every point, keeping the weights.
    pub fn affine(&self, shift: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && shift.is_finite()) {
            return invalid("affine map needs a finite positive scale");
        }
        let pts: Vec<f64> = self.points.iter().map(|x| shift + scale * x).collect();
        Self::new(&pts, &self.weights)
    }
}

/// Value of the objective `Λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub lambda: f64,
}

impl ObjectiveValue {
    pub fn is_finite(&self) -> bool {
        self.lambda.is_finite()
    }
}

#[derive(Serialize, Deserialize)]
struct DensityRepr {
    knots: Vec<f64>,
    logvals: Vec<f64>,
}

/// A density whose logarithm is concave and piecewise linear between
/// `knots`, and which is zero outside `[knots[0], knots[last]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityRepr", into = "DensityRepr")]
pub struct LogConcaveDensity {
    knots: Vec<f64>,
    logvals: Vec<f64>,
    /// `cum[k]` is the mass to the left of `knots[k]`.
    cum: Vec<f64>,
}

impl TryFrom<DensityRepr> for LogConcaveDensity {
    type Error = Error;

    fn try_from(r: DensityRepr) -> Result<Self> {
        LogConcaveDensity::new(r.knots, r.logvals)
    }
}

impl From<LogConcaveDensity> for DensityRepr {
    fn from(d: LogConcaveDensity) -> Self {
        DensityRepr { knots: d.knots, logvals: d.logvals }
    }
}

/// Relative slack allowed when validating concavity and normalization of
/// user-supplied densities.
const VALIDATION_SLACK: f64 = 1e-6;

impl LogConcaveDensity {
    /// Validates and wraps a knot/log-value table. The log-values must be
    /// concave and integrate to one (to within `1e-6`).
    pub fn new(knots: Vec<f64>, logvals: Vec<f64>) -> Result<Self> {
        let d = Self::from_parts_unchecked(knots, logvals)?;
        let slopes = d.slopes();
        for (i, pair) in slopes.windows(2).enumerate() {
            let tol = VALIDATION_SLACK * (1.0 + pair[0].abs().max(pair[1].abs()));
            if pair[1] > pair[0] + tol {
                return invalid(format!("log-density is not concave at knot {}", i + 1));
            }
        }
        let mass = d.total_mass();
        if (mass - 1.0).abs() > VALIDATION_SLACK {
            return invalid(format!("density integrates to {mass}, not 1"));
        }
        Ok(d)
    }

    fn from_parts_unchecked(knots: Vec<f64>, logvals: Vec<f64>) -> Result<Self> {
        if knots.len() != logvals.len() {
            return invalid("knots and logvals differ in length");
        }
        if knots.len() < 2 {
            return invalid("a log-concave density needs at least two knots");
        }
        if knots.iter().chain(&logvals).any(|v| !v.is_finite()) {
            return invalid("knots and logvals must be finite");
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("knots must be strictly increasing");
        }
        let mut cum = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for k in 0..knots.len() - 1 {
            acc += (knots[k + 1] - knots[k]) * unit_mass(logvals[k], logvals[k + 1]);
            cum.push(acc);
        }
        Ok(LogConcaveDensity { knots, logvals, cum })
    }

    /// Uniform density on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return invalid("uniform density needs lo < hi");
        }
        let l = -(hi - lo).ln();
        Self::new(vec![lo, hi], vec![l, l])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn logvals(&self) -> &[f64] {
        &self.logvals
    }

    /// Support `[first knot, last knot]`.
    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// Slopes of the log-density on each segment.
    pub fn slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .zip(self.logvals.windows(2))
            .map(|(z, l)| (l[1] - l[0]) / (z[1] - z[0]))
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Index `k` of the segment `[knots[k], knots[k+1]]` holding `x`.
    fn segment_of(&self, x: f64) -> usize {
        let k = self.knots.partition_point(|&z| z <= x);
        k.saturating_sub(1).min(self.knots.len() - 2)
    }

    /// Log-density at `x`, `-inf` outside the support.
    pub fn log_density_at(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(x >= lo && x <= hi) {
            return f64::NEG_INFINITY;
        }
        let k = self.segment_of(x);
        let (z0, z1) = (self.knots[k], self.knots[k + 1]);
        let t = (x - z0) / (z1 - z0);
        (1.0 - t) * self.logvals[k] + t * self.logvals[k + 1]
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.log_density_at(x).exp()
    }

    /// Mass in `[knots[k], knots[k] + h]` for `0 <= h <= segment length`.
    fn partial_mass(&self, k: usize, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let len = self.knots[k + 1] - self.knots[k];
        let slope = (self.logvals[k + 1] - self.logvals[k]) / len;
        let a = self.logvals[k];
        h * unit_mass(a, a + slope * h)
    }

    pub fn cdf_at(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let k = self.segment_of(x);
        let total = self.total_mass();
        ((self.cum[k] + self.partial_mass(k, x - self.knots[k])) / total).clamp(0.0, 1.0)
    }

    /// Generalized inverse of [`cdf_at`](Self::cdf_at) for `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return invalid(format!("quantile level must lie in (0, 1), got {p}"));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        let target = p * self.total_mass();
        let k = self.cum.partition_point(|&c| c <= target).saturating_sub(1).min(self.knots.len() - 2);
        let (z0, z1) = (self.knots[k], self.knots[k + 1]);
        let (a, b) = (self.logvals[k], self.logvals[k + 1]);
        let len = z1 - z0;
        let slope = (b - a) / len;
        let seg_mass = self.cum[k + 1] - self.cum[k];
        let r = (target - self.cum[k]).clamp(0.0, seg_mass);

        let x = if slope == 0.0 {
            z0 + r * (-a).exp()
        } else if slope > 0.0 {
            // Anchor at the left end where the density is smallest.
            z0 + log_shift(a, r * slope) / slope
        } else {
            // Anchor at the right end, measuring the mass still to come.
            let r_right = (seg_mass - r).max(0.0);
            z1 - log_shift(b, r_right * -slope) / -slope
        };
        x.clamp(z0, z1)
    }

    /// `(mean, second moment about zero)`.
    pub fn moments(&self) -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for k in 0..self.knots.len() - 1 {
            let z = self.knots[k];
            let h = self.knots[k + 1] - z;
            let s = SegmentMoments::new(self.logvals[k], self.logvals[k + 1]);
            m1 += h * (z * s.m0 + h * s.right1);
            m2 += h * (z * z * s.m0 + 2.0 * z * h * s.right1 + h * h * s.right2);
        }
        let total = self.total_mass();
        (m1 / total, m2 / total)
    }

    pub fn variance(&self) -> f64 {
        let (m1, m2) = self.moments();
        m2 - m1 * m1
    }

    /// `n` independent draws by inversion, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                // `random` gives [0, 1); nudge away from the closed end.
                self.quantile_unchecked(u.max(f64::MIN_POSITIVE))
            })
            .collect()
    }

    /// Density of `shift + scale * X` when `X` has this density.
    pub fn affine(&self, shift: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && shift.is_finite()) {
            return invalid("affine map needs a finite positive scale");
        }
        let knots = self.knots.iter().map(|z| shift + scale * z).collect();
        let lshift = scale.ln();
        let logvals = self.logvals.iter().map(|l| l - lshift).collect();
        Self::from_parts_unchecked(knots, logvals)
    }
}

/// `ln(e^base + add) - base` for `add >= 0`, evaluated without overflow.
fn log_shift(base: f64, add: f64) -> f64 {
    if add <= 0.0 {
        return 0.0;
    }
    let la = add.ln();
    if base >= la {
        (add * (-base).exp()).ln_1p()
    } else {
        la - base + (base - la).exp().ln_1p()
    }
}

/// Objective `Λ` of a density against a weighted sample.
pub fn objective(d: &LogConcaveDensity, sample: &WeightedSample) -> ObjectiveValue {
    let mut data = 0.0;
    for (x, w) in sample.points().iter().zip(sample.weights()) {
        let l = d.log_density_at(*x);
        if l == f64::NEG_INFINITY {
            return ObjectiveValue { lambda: f64::NEG_INFINITY };
        }
        data += w * l;
    }
    ObjectiveValue { lambda: data - d.total_mass() + 1.0 }
}

/// Diagnostics of one inner fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub outer_iterations: usize,
    pub newton_iterations: usize,
    /// True when the outer iteration cap was hit before the optimality check passed.
    pub capped: bool,
    /// Largest remaining directional derivative over non-knot points, scaled by the range.
    pub max_violation: f64,
}

/// Output of [`fit_with_diagnostics`].
#[derive(Clone, Debug)]
pub struct DensityFit {
    pub density: LogConcaveDensity,
    pub objective: ObjectiveValue,
    pub diagnostics: FitDiagnostics,
}

/// Log-concave maximum likelihood density for a weighted sample.
pub fn fit(sample: &WeightedSample, tol: f64) -> Result<LogConcaveDensity> {
    fit_with_diagnostics(sample, tol).map(|f| f.density)
}

/// Like [`fit`], also returning the attained objective and solver diagnostics.
pub fn fit_with_diagnostics(sample: &WeightedSample, tol: f64) -> Result<DensityFit> {
    if !(tol > 0.0 && tol.is_finite()) {
        return invalid("tolerance must be positive");
    }
    let x = sample.points();
    if x.len() < 2 || x[x.len() - 1] - x[0] <= DEGENERATE_SPREAD {
        return Err(Error::DegenerateSample(
            "fewer than two distinct points; the empirical distribution has zero variance".into(),
        ));
    }
    let mut solver = ActiveSetSolver::new(x, sample.weights(), tol);
    solver.run();

    let knots: Vec<f64> = solver.knots.iter().map(|&i| x[i]).collect();
    let mut logvals = solver.values.clone();
    // The optimum integrates to one already; absorb the residual error.
    let mass: f64 = solver.integral(&solver.values);
    let shift = mass.ln();
    logvals.iter_mut().for_each(|l| *l -= shift);
    let density = LogConcaveDensity::from_parts_unchecked(knots, logvals)?;
    let obj = objective(&density, sample);
    Ok(DensityFit {
        density,
        objective: obj,
        diagnostics: FitDiagnostics {
            outer_iterations: solver.outer_iterations,
            newton_iterations: solver.newton_iterations,
            capped: solver.capped,
            max_violation: solver.max_violation,
        },
    })
}

/// Active-set maximization of `Λ` over concave piecewise-linear functions
/// with knots among the sample points.
///
/// The state is a sorted list of knot indices (always containing both ends)
/// together with the log-values at those knots; the function is linear in
/// between. Each round maximizes `Λ` on the current knot subspace by damped
/// Newton. If that breaks concavity the iterate is moved back to the
/// boundary and the offending knot is dropped; otherwise the non-knot point
/// with the largest positive directional derivative for a new concave kink
/// becomes a knot.
struct ActiveSetSolver<'a> {
    x: &'a [f64],
    w: &'a [f64],
    tol: f64,
    range: f64,
    knots: Vec<usize>,
    values: Vec<f64>,
    outer_iterations: usize,
    newton_iterations: usize,
    capped: bool,
    max_violation: f64,
}

impl<'a> ActiveSetSolver<'a> {
    fn new(x: &'a [f64], w: &'a [f64], tol: f64) -> Self {
        let m = x.len();
        let range = x[m - 1] - x[0];
        let l = -range.ln();
        ActiveSetSolver {
            x,
            w,
            tol,
            range,
            knots: vec![0, m - 1],
            values: vec![l, l],
            outer_iterations: 0,
            newton_iterations: 0,
            capped: false,
            max_violation: f64::INFINITY,
        }
    }

    fn run(&mut self) {
        let mut just_added: Option<usize> = None;
        loop {
            if self.outer_iterations >= MAX_OUTER_ITERATIONS {
                self.capped = true;
                break;
            }
            self.outer_iterations += 1;

            let old = self.values.clone();
            let new = self.newton(old.clone());
            let old_kinks = self.kinks(&old);
            let new_kinks = self.kinks(&new);

            // Largest feasible step from `old` toward `new`.
            let mut step = 1.0;
            let mut blocking: Option<usize> = None;
            for (j, (&bo, &bn)) in old_kinks.iter().zip(&new_kinks).enumerate() {
                if bn < 0.0 {
                    let t = if bo > 0.0 { bo / (bo - bn) } else { 0.0 };
                    if t < step {
                        step = t;
                        blocking = Some(j);
                    }
                }
            }

            if let Some(j) = blocking {
                // `j` indexes interior knots, so the knot position is j + 1.
                let pos = j + 1;
                if step == 0.0 && just_added == Some(self.knots[pos]) {
                    // The knot just introduced cannot move into the feasible
                    // region; keep the current iterate.
                    self.values = old;
                    self.remove_knot(pos);
                    self.max_violation = self.max_violation.min(self.violation().0);
                    break;
                }
                self.values = old.iter().zip(&new).map(|(o, n)| o + step * (n - o)).collect();
                self.remove_knot(pos);
                // Drop any further knots that landed on the boundary too.
                self.prune_flat_knots();
                just_added = None;
                continue;
            }

            self.values = new;
            let (viol, idx) = self.violation();
            self.max_violation = viol;
            if viol <= self.tol {
                break;
            }
            match idx {
                Some(i) => {
                    self.insert_knot(i);
                    just_added = Some(i);
                }
                None => break,
            }
        }
    }

    /// Slope decrease at every interior knot (nonnegative means concave).
    fn kinks(&self, v: &[f64]) -> Vec<f64> {
        let slopes: Vec<f64> = self
            .knots
            .windows(2)
            .zip(v.windows(2))
            .map(|(k, l)| (l[1] - l[0]) / (self.x[k[1]] - self.x[k[0]]))
            .collect();
        slopes.windows(2).map(|s| s[0] - s[1]).collect()
    }

    fn remove_knot(&mut self, pos: usize) {
        self.knots.remove(pos);
        self.values.remove(pos);
    }

    fn prune_flat_knots(&mut self) {
        loop {
            let kinks = self.kinks(&self.values);
            let scale = 1.0 / self.range;
            match kinks.iter().position(|&b| b <= 1e-14 * scale) {
                Some(j) => self.remove_knot(j + 1),
                None => break,
            }
        }
    }

    fn insert_knot(&mut self, i: usize) {
        let pos = self.knots.partition_point(|&k| k < i);
        let (kl, kr) = (self.knots[pos - 1], self.knots[pos]);
        let t = (self.x[i] - self.x[kl]) / (self.x[kr] - self.x[kl]);
        let v = (1.0 - t) * self.values[pos - 1] + t * self.values[pos];
        self.knots.insert(pos, i);
        self.values.insert(pos, v);
    }

    /// Log-values at every sample point, interpolated from the knots.
    fn full_values(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.x.len()];
        for (s, pair) in self.knots.windows(2).enumerate() {
            let (kl, kr) = (pair[0], pair[1]);
            let len = self.x[kr] - self.x[kl];
            for i in kl..=kr {
                let t = (self.x[i] - self.x[kl]) / len;
                out[i] = (1.0 - t) * v[s] + t * v[s + 1];
            }
        }
        out
    }

    /// Largest scaled directional derivative `∂Λ/∂β_j` for adding a concave
    /// kink `-β (x - x_j)_+` at a non-knot point, and where it occurs.
    fn violation(&self) -> (f64, Option<usize>) {
        let m = self.x.len();
        let phi = self.full_values(&self.values);
        let mut is_knot = vec![false; m];
        self.knots.iter().for_each(|&k| is_knot[k] = true);

        // Backward accumulation of
        //   T_i = ∫_{x_i}^{x_m} (x - x_i) e^φ,  S_i = Σ_l w_l (x_l - x_i)_+.
        let mut mass_right = 0.0;
        let mut t_acc = 0.0;
        let mut w_right = 0.0;
        let mut s_acc = 0.0;
        let mut best = (f64::NEG_INFINITY, None);
        for i in (0..m - 1).rev() {
            let h = self.x[i + 1] - self.x[i];
            let seg = SegmentMoments::new(phi[i], phi[i + 1]);
            t_acc += h * mass_right + h * h * seg.right1;
            mass_right += h * seg.m0;
            w_right += self.w[i + 1];
            s_acc += h * w_right;
            if i > 0 && !is_knot[i] {
                let d = (t_acc - s_acc) / self.range;
                if d > best.0 {
                    best = (d, Some(i));
                }
            }
        }
        if best.1.is_none() {
            return (0.0, None);
        }
        best
    }

    /// Data weight carried by each knot under linear interpolation.
    fn data_coefficients(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.knots.len()];
        for (s, pair) in self.knots.windows(2).enumerate() {
            let (kl, kr) = (pair[0], pair[1]);
            let len = self.x[kr] - self.x[kl];
            c[s] += self.w[kl];
            for i in kl + 1..kr {
                let t = (self.x[i] - self.x[kl]) / len;
                c[s] += self.w[i] * (1.0 - t);
                c[s + 1] += self.w[i] * t;
            }
        }
        *c.last_mut().unwrap() += self.w[*self.knots.last().unwrap()];
        c
    }

    fn integral(&self, v: &[f64]) -> f64 {
        self.knots
            .windows(2)
            .enumerate()
            .map(|(s, k)| (self.x[k[1]] - self.x[k[0]]) * unit_mass(v[s], v[s + 1]))
            .sum()
    }

    fn subspace_objective(&self, c: &[f64], v: &[f64]) -> f64 {
        let lin: f64 = c.iter().zip(v).map(|(a, b)| a * b).sum();
        lin - self.integral(v) + 1.0
    }

    /// Damped Newton maximization of `Λ` on the current knot subspace.
    fn newton(&mut self, mut v: Vec<f64>) -> Vec<f64> {
        let r = self.knots.len();
        let c = self.data_coefficients();
        let lens: Vec<f64> = self.knots.windows(2).map(|k| self.x[k[1]] - self.x[k[0]]).collect();
        let mut f = self.subspace_objective(&c, &v);

        for _ in 0..MAX_NEWTON_ITERATIONS {
            self.newton_iterations += 1;
            // Gradient of Λ and the (positive definite, tridiagonal) Hessian of ∫e^φ.
            let mut grad = c.clone();
            let mut diag = vec![0.0; r];
            let mut off = vec![0.0; r - 1];
            for s in 0..r - 1 {
                let m = SegmentMoments::new(v[s], v[s + 1]);
                let h = lens[s];
                grad[s] -= h * m.left1;
                grad[s + 1] -= h * m.right1;
                diag[s] += h * m.left2;
                diag[s + 1] += h * m.right2;
                off[s] = h * m.cross;
            }
            let Some(dir) = solve_tridiagonal(&diag, &off, &grad) else {
                break;
            };
            let decrement: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            if !(decrement > 1e-3 * self.tol * self.tol) {
                break;
            }

            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = v.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
                let ft = self.subspace_objective(&c, &trial);
                if ft.is_finite() && ft >= f + 1e-4 * t * decrement {
                    v = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        v
    }
}

/// Solves a symmetric positive definite tridiagonal system by the Thomas
/// algorithm. Returns `None` on a non-positive pivot.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if !(piv > 0.0) {
        return None;
    }
    c[0] = if n > 1 { off[0] / piv } else { 0.0 };
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - off[i - 1] * c[i - 1];
        if !(piv > 0.0) || !piv.is_finite() {
            return None;
        }
        if i < n - 1 {
            c[i] = off[i] / piv;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(xs: &[f64]) -> WeightedSample {
        WeightedSample::from_values(xs).unwrap()
    }

    #[test]
    fn merges_ties_and_normalizes() {
        let s = WeightedSample::new(&[2.0, 1.0, 2.0, 3.0], &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.points(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.weights(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn two_points_give_uniform() {
        let d = fit(&sample(&[0.0, 1.0]), DEFAULT_TOL).unwrap();
        assert_eq!(d.knots(), &[0.0, 1.0]);
        for l in d.logvals() {
            assert!(l.abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_sample_gives_symmetric_fit() {
        let s = WeightedSample::new(&[-2.0, -1.0, 0.0, 1.0, 2.0], &[0.1, 0.25, 0.3, 0.25, 0.1]).unwrap();
        let d = fit(&s, DEFAULT_TOL).unwrap();
        for x in [0.3, 0.9, 1.5, 2.0] {
            assert!((d.log_density_at(x) - d.log_density_at(-x)).abs() < 1e-8);
        }
    }

    #[test]
    fn degenerate_sample_rejected() {
        assert!(matches!(fit(&sample(&[1.0, 1.0, 1.0]), DEFAULT_TOL), Err(Error::DegenerateSample(_))));
        assert!(matches!(fit(&sample(&[1.0, 1.0 + 1e-13]), DEFAULT_TOL), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn objective_examples() {
        let u = LogConcaveDensity::uniform(0.0, 1.0).unwrap();
        assert!(objective(&u, &sample(&[0.25, 0.75])).lambda.abs() < 1e-15);
        assert_eq!(objective(&u, &sample(&[0.5, 1.5])).lambda, f64::NEG_INFINITY);
        let u2 = LogConcaveDensity::uniform(0.0, 2.0).unwrap();
        assert!((objective(&u2, &sample(&[1.0])).lambda + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn uniform_queries() {
        let u = LogConcaveDensity::uniform(0.0, 1.0).unwrap();
        assert!((u.density_at(0.5) - 1.0).abs() < 1e-15);
        assert!((u.cdf_at(0.5) - 0.5).abs() < 1e-15);
        assert!((u.quantile(0.25).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(u.density_at(1.5), 0.0);
        assert_eq!(u.cdf_at(-1.0), 0.0);
        assert_eq!(u.cdf_at(2.0), 1.0);
        assert!(u.quantile(0.0).is_err());
        assert!(u.quantile(1.0).is_err());
        let (m1, m2) = u.moments();
        assert!((m1 - 0.5).abs() < 1e-15 && (m2 - 1.0 / 3.0).abs() < 1e-15);
        let (c1, c2) = LogConcaveDensity::uniform(-1.0, 1.0).unwrap().moments();
        assert!(c1.abs() < 1e-15 && (c2 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf_on_steep_density() {
        let d = LogConcaveDensity::from_parts_unchecked(vec![-1.0, 0.0, 0.5, 4.0], vec![-3.0, 0.5, 0.2, -9.0]).unwrap();
        let d = d.affine(0.0, 1.0).unwrap();
        let mass = d.total_mass();
        let d = LogConcaveDensity::new(d.knots().to_vec(), d.logvals().iter().map(|l| l - mass.ln()).collect()).unwrap();
        for i in 1..200 {
            let x = -1.0 + 5.0 * i as f64 / 200.0;
            let p = d.cdf_at(x);
            assert!((d.quantile(p).unwrap() - x).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn rejects_convex_or_unnormalized() {
        assert!(LogConcaveDensity::new(vec![0.0, 1.0, 2.0], vec![0.0, -1.0, 0.0]).is_err());
        assert!(LogConcaveDensity::new(vec![0.0, 1.0], vec![0.0, 0.5]).is_err());
        assert!(LogConcaveDensity::new(vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let s = sample(&[0.1, 0.7, 0.2, 1.9, -0.4, 0.33, 0.05]);
        let d = fit(&s, DEFAULT_TOL).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert!(json.starts_with("{\"knots\":"));
        let back: LogConcaveDensity = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn sampling_is_deterministic() {
        let u = LogConcaveDensity::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.sample(100, 9), u.sample(100, 9));
        assert_ne!(u.sample(100, 9), u.sample(100, 10));
    }

    #[test]
    fn tridiagonal_solver_matches_dense() {
        let diag = [4.0, 5.0, 6.0];
        let off = [1.0, 2.0];
        let rhs = [1.0, 2.0, 3.0];
        let x = solve_tridiagonal(&diag, &off, &rhs).unwrap();
        let back = [
            4.0 * x[0] + 1.0 * x[1],
            1.0 * x[0] + 5.0 * x[1] + 2.0 * x[2],
            2.0 * x[1] + 6.0 * x[2],
        ];
        for (b, r) in back.iter().zip(rhs) {
            assert!((b - r).abs() < 1e-14);
        }
    }
}
