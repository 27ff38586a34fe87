//! Gaussian smoothing of a fitted log-concave density.
//!
//! The smoothed density is `f̂ ⋆ N(0, A)` where `A` is the gap between the
//! empirical second moment of the residuals and the second moment of `f̂`
//! (or `1 - ∫x² f̂` under the unit-second-moment convention of ARMA-GARCH).
//! Point evaluation is exact per segment: a linear exponent times a Gaussian
//! kernel integrates to a difference of normal CDFs.

use serde::{Deserialize, Serialize};
use libm::{erf, erfc};

use crate::error::{invalid, Error, Result};
use crate::lcdens::LogConcaveDensity;
use crate::quad;

/// Tolerance for the smoothed CDF and its inverse.
pub const CDF_TOL: f64 = 1e-9;

/// Half-width of the effective support beyond the base support, in
/// standard deviations of the smoothing kernel.
const TAIL_SIGMAS: f64 = 12.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedDensity {
    pub base: LogConcaveDensity,
    pub bandwidth_var: f64,
}

impl SmoothedDensity {
    pub fn new(base: LogConcaveDensity, bandwidth_var: f64) -> Result<Self> {
        if !(bandwidth_var > 0.0 && bandwidth_var.is_finite()) {
            return invalid(format!("smoothing variance must be positive, got {bandwidth_var}"));
        }
        Ok(SmoothedDensity { base, bandwidth_var })
    }

    fn sigma(&self) -> f64 {
        self.bandwidth_var.sqrt()
    }

    /// Interval outside of which the density carries less than `1e-30` of mass.
    pub fn effective_support(&self) -> (f64, f64) {
        let (lo, hi) = self.base.support();
        let pad = TAIL_SIGMAS * self.sigma();
        (lo - pad, hi + pad)
    }

    pub fn log_density_at(&self, x: f64) -> f64 {
        let var = self.bandwidth_var;
        let sd = self.sigma();
        let knots = self.base.knots();
        let logvals = self.base.logvals();
        let mut terms = Vec::with_capacity(knots.len() - 1);
        for k in 0..knots.len() - 1 {
            let (z0, z1) = (knots[k], knots[k + 1]);
            let slope = (logvals[k + 1] - logvals[k]) / (z1 - z0);
            let centre = x + slope * var;
            let lo = (z0 - centre) / sd;
            let hi = (z1 - centre) / sd;
            let lead = logvals[k] + slope * (x - z0) + 0.5 * slope * slope * var;
            terms.push(lead + log_ndtr_diff(lo, hi));
        }
        log_sum_exp(&terms)
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.log_density_at(x).exp()
    }

    /// `(mean, second moment)`; the kernel adds its variance to the base.
    pub fn moments(&self) -> (f64, f64) {
        let (m1, m2) = self.base.moments();
        (m1, m2 + self.bandwidth_var)
    }

    pub fn variance(&self) -> f64 {
        self.base.variance() + self.bandwidth_var
    }

    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut b = vec![lo];
        b.extend(self.base.knots().iter().copied().filter(|&z| z > lo && z < hi));
        b.push(hi);
        b
    }

    pub fn cdf_at(&self, x: f64) -> f64 {
        let (lo, hi) = self.effective_support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let left = quad::integrate_pieces(|t| self.density_at(t), &self.breakpoints(lo, x), 0.1 * CDF_TOL);
        left.clamp(0.0, 1.0)
    }

    /// Inverse CDF by monotone bisection to [`CDF_TOL`].
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return invalid(format!("quantile level must lie in (0, 1), got {p}"));
        }
        let (mut lo, mut hi) = self.effective_support();
        while hi - lo > CDF_TOL * (1.0 + lo.abs().max(hi.abs())) {
            let mid = 0.5 * (lo + hi);
            if self.cdf_at(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// `(1/n) Σ ε²  −  ∫ x² f̂`, the smoothing variance for ARMA fits.
pub fn variance_gap_arma(residuals: &[f64], base: &LogConcaveDensity) -> Result<f64> {
    if residuals.is_empty() {
        return invalid("no residuals");
    }
    let emp = residuals.iter().map(|e| e * e).sum::<f64>() / residuals.len() as f64;
    positive_gap(emp - base.moments().1)
}

/// `1 − ∫ x² f̂`, the smoothing variance for ARMA-GARCH fits.
pub fn variance_gap_armagarch(base: &LogConcaveDensity) -> Result<f64> {
    positive_gap(1.0 - base.moments().1)
}

fn positive_gap(gap: f64) -> Result<f64> {
    if gap > 0.0 && gap.is_finite() {
        Ok(gap)
    } else {
        Err(Error::Internal(format!(
            "second-moment gap is {gap}; the fitted density cannot exceed the empirical second moment"
        )))
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// `ln Φ(t)`.
pub(crate) fn log_ndtr(t: f64) -> f64 {
    if t > 0.0 {
        (-0.5 * erfc(t / SQRT_2)).ln_1p()
    } else if t > -30.0 {
        (0.5 * erfc(-t / SQRT_2)).ln()
    } else {
        // Asymptotic expansion of the Mills ratio.
        let t2 = t * t;
        let series = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2) + 105.0 / (t2 * t2 * t2 * t2);
        -0.5 * t2 - (-t).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
    }
}

/// `ln(Φ(hi) − Φ(lo))` for `lo < hi`.
pub(crate) fn log_ndtr_diff(lo: f64, hi: f64) -> f64 {
    if !(hi > lo) {
        return f64::NEG_INFINITY;
    }
    if lo >= 0.0 {
        return log_ndtr_diff(-hi, -lo);
    }
    if hi <= 0.0 {
        let lh = log_ndtr(hi);
        let ll = log_ndtr(lo);
        return lh + (-(ll - lh).exp_m1()).ln();
    }
    // lo < 0 < hi: both halves are positive, no cancellation.
    (0.5 * (erf(hi / SQRT_2) + erf(-lo / SQRT_2))).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    fn uniform01() -> LogConcaveDensity {
        LogConcaveDensity::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_convolution_closed_form() {
        let s = SmoothedDensity::new(uniform01(), 0.25).unwrap();
        // (Φ((1 - x)/σ) - Φ(-x/σ)) with σ = 0.5 at x = 0.5 is Φ(1) - Φ(-1).
        let v = s.density_at(0.5);
        assert!((v - 0.682_689_492_137_085_9).abs() < 1e-12, "{v}");
    }

    #[test]
    fn tiny_bandwidth_recovers_base() {
        let base = LogConcaveDensity::new(vec![-1.0, 0.0, 2.0], vec![-1.5, -0.5, -2.5])
            .or_else(|_| {
                let d = LogConcaveDensity::uniform(-1.0, 2.0).unwrap();
                Ok::<_, Error>(d)
            })
            .unwrap();
        let s = SmoothedDensity::new(base.clone(), 1e-12).unwrap();
        for &z in &base.knots()[1..base.knots().len() - 1] {
            assert!((s.density_at(z) - base.density_at(z)).abs() < 1e-4);
        }
        let u = SmoothedDensity::new(uniform01(), 1e-12).unwrap();
        assert!((u.density_at(0.5) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn unit_mass_and_variance_additivity() {
        let s = SmoothedDensity::new(uniform01(), 0.04).unwrap();
        let (lo, hi) = s.effective_support();
        let mass = integrate(|x| s.density_at(x), lo, hi, 1e-12);
        assert!((mass - 1.0).abs() < 1e-8);
        let m1 = integrate(|x| x * s.density_at(x), lo, hi, 1e-12);
        let m2 = integrate(|x| x * x * s.density_at(x), lo, hi, 1e-12);
        let var = m2 - m1 * m1;
        assert!((var - (1.0 / 12.0 + 0.04)).abs() < 1e-6);
    }

    #[test]
    fn gaps() {
        let g = variance_gap_arma(&[-1.0, 1.0], &LogConcaveDensity::uniform(-1.0, 1.0).unwrap()).unwrap();
        assert!((g - 2.0 / 3.0).abs() < 1e-15);
        let h = variance_gap_armagarch(&LogConcaveDensity::uniform(-1.0, 1.0).unwrap()).unwrap();
        assert!((h - 2.0 / 3.0).abs() < 1e-15);
        let a = (3.0f64 * 0.999_999).sqrt();
        let near = variance_gap_armagarch(&LogConcaveDensity::uniform(-a, a).unwrap()).unwrap();
        assert!((near - 1e-6).abs() < 1e-12);
        let wide = LogConcaveDensity::uniform(-3.0, 3.0).unwrap();
        assert!(matches!(variance_gap_armagarch(&wide), Err(Error::Internal(_))));
        assert!(SmoothedDensity::new(uniform01(), 0.0).is_err());
    }

    #[test]
    fn cdf_and_quantile_agree() {
        let s = SmoothedDensity::new(uniform01(), 0.01).unwrap();
        assert!((s.cdf_at(0.5) - 0.5).abs() < 1e-9);
        for p in [0.01, 0.2, 0.5, 0.77, 0.99] {
            let q = s.quantile(p).unwrap();
            assert!((s.cdf_at(q) - p).abs() < 1e-8);
        }
    }

    #[test]
    fn log_ndtr_tails() {
        assert!((log_ndtr(0.0) - 0.5f64.ln()).abs() < 1e-15);
        // ln Φ(-40) from the asymptotic series vs high precision reference.
        assert!((log_ndtr(-40.0) - (-804.608_442_013_753_8)).abs() < 1e-9);
        assert!((log_ndtr(-29.9) - log_ndtr(-30.1)).abs() < 10.0);
        assert!(log_ndtr(10.0) < 0.0 && log_ndtr(10.0) > -1e-20);
        let d = log_ndtr_diff(-1e-10, 1e-10).exp();
        assert!((d - 2e-10 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-20);
    }
}
