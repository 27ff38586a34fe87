//! Distances and diagnostics: Mallows `D₁`, `L₁` density distance, RMSE and
//! the partial autocorrelation function.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad;
use crate::tsmodel::ParamVector;

/// Finite discrete distribution on sorted atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDist {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalDist {
    /// Sorts the atoms and normalizes the weights.
    pub fn new(atoms: &[f64], weights: &[f64]) -> Result<Self> {
        if atoms.len() != weights.len() || atoms.is_empty() {
            return invalid("atoms and weights must be nonempty and of equal length");
        }
        if atoms.iter().any(|a| !a.is_finite()) || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return invalid("atoms must be finite and weights positive");
        }
        let mut pairs: Vec<(f64, f64)> = atoms.iter().copied().zip(weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = weights.iter().sum();
        Ok(EmpiricalDist {
            atoms: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        })
    }

    pub fn uniform(atoms: &[f64]) -> Result<Self> {
        Self::new(atoms, &vec![1.0; atoms.len()])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `∫₀¹ |F_A⁻¹(u) − F_B⁻¹(u)| du`, evaluated exactly by merging the two
/// partitions of `(0, 1)` induced by the cumulative weights.
pub fn mallows_d1(a: &EmpiricalDist, b: &EmpiricalDist) -> f64 {
    let cum_a = cumulative(&a.weights);
    let cum_b = cumulative(&b.weights);
    let (mut i, mut j) = (0usize, 0usize);
    let mut u = 0.0;
    let mut total = 0.0;
    while i < cum_a.len() && j < cum_b.len() {
        let next = cum_a[i].min(cum_b[j]);
        total += (next - u) * (a.atoms[i] - b.atoms[j]).abs();
        u = next;
        if cum_a[i] == next {
            i += 1;
        }
        if cum_b[j] == next {
            j += 1;
        }
    }
    total
}

/// Cumulative weights with the last entry pinned to exactly one.
fn cumulative(w: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut c: Vec<f64> = w.iter().map(|x| {
        acc += x;
        acc
    }).collect();
    *c.last_mut().expect("nonempty") = 1.0;
    c
}

/// Default absolute tolerance of [`l1_density_distance`].
pub const L1_TOL: f64 = 1e-4;

/// `∫_lo^hi |f − g|` by adaptive quadrature. Interior kinks or jumps of the
/// integrand can be listed in `breaks` to speed convergence.
pub fn l1_density_distance(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return invalid("need finite lo < hi");
    }
    let mut pts: Vec<f64> = std::iter::once(lo)
        .chain(breaks.iter().copied().filter(|b| *b > lo && *b < hi))
        .chain(std::iter::once(hi))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Ok(quad::integrate_pieces(|x| (f(x) - g(x)).abs(), &pts, tol))
}

/// `√(mean ‖θ̂ − θ₀‖²)` over the full coefficient vectors.
pub fn rmse(estimates: &[ParamVector], theta0: &ParamVector) -> Result<f64> {
    if estimates.is_empty() {
        return invalid("no estimates");
    }
    let spec = theta0.spec()?;
    let truth = theta0.to_vec(&spec);
    let mut sum = 0.0;
    for e in estimates {
        if !e.matches(&spec) {
            return invalid("estimate dimension does not match the true parameter");
        }
        sum += e.to_vec(&spec).iter().zip(&truth).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    }
    Ok((sum / estimates.len() as f64).sqrt())
}

/// Sample partial autocorrelations at lags `1..=max_lag` by Durbin–Levinson
/// on mean-centred autocovariances with divisor `n`.
pub fn pacf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if max_lag == 0 {
        return invalid("max_lag must be at least 1");
    }
    if 2 * max_lag >= n {
        return invalid(format!("max_lag must be below n/2 (n = {n})"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let gamma: Vec<f64> = (0..=max_lag)
        .map(|k| c[..n - k].iter().zip(&c[k..]).map(|(x, y)| x * y).sum::<f64>() / n as f64)
        .collect();
    if !(gamma[0] > 0.0) {
        return Err(Error::DegenerateSample("constant series has no defined autocorrelation".into()));
    }
    let rho: Vec<f64> = gamma.iter().map(|g| g / gamma[0]).collect();
    let mut out = Vec::with_capacity(max_lag);
    let mut phi: Vec<f64> = Vec::with_capacity(max_lag);
    let mut v = 1.0;
    for k in 1..=max_lag {
        let num = rho[k] - phi.iter().enumerate().map(|(j, p)| p * rho[k - 1 - j]).sum::<f64>();
        let kappa = num / v;
        let prev = phi.clone();
        for (j, p) in phi.iter_mut().enumerate() {
            *p = prev[j] - kappa * prev[k - 2 - j];
        }
        phi.push(kappa);
        v *= 1.0 - kappa * kappa;
        out.push(kappa);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d1_point_masses() {
        let a = EmpiricalDist::uniform(&[1.5]).unwrap();
        let b = EmpiricalDist::uniform(&[-2.0]).unwrap();
        assert_eq!(mallows_d1(&a, &b), 3.5);
        assert_eq!(mallows_d1(&a, &a), 0.0);
    }

    #[test]
    fn d1_equal_size_samples_pair_sorted_values() {
        let a = EmpiricalDist::uniform(&[3.0, 1.0, 2.0]).unwrap();
        let b = EmpiricalDist::uniform(&[0.0, 5.0, 1.0]).unwrap();
        let expected = ((1.0f64 - 0.0).abs() + (2.0f64 - 1.0).abs() + (3.0f64 - 5.0).abs()) / 3.0;
        assert!((mallows_d1(&a, &b) - expected).abs() < 1e-15);
    }

    #[test]
    fn rmse_arithmetic() {
        let t0 = ParamVector::arma(&[0.0], &[]);
        let est = [ParamVector::arma(&[0.3], &[]), ParamVector::arma(&[0.4], &[])];
        assert!((rmse(&est, &t0).unwrap() - 0.125f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&[ParamVector::arma(&[0.1, 0.2], &[])], &t0).is_err());
    }

    #[test]
    fn l1_of_shifted_uniforms() {
        let u = |x: f64| if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 };
        let v = |x: f64| if (0.5..=1.5).contains(&x) { 1.0 } else { 0.0 };
        let d = l1_density_distance(u, v, -1.0, 2.0, &[0.0, 0.5, 1.0, 1.5], L1_TOL).unwrap();
        assert!((d - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pacf_first_lag_is_autocorrelation() {
        let xs: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect();
        let p = pacf(&xs, 3).unwrap();
        let mean = 1.5;
        let g0: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        let g1: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        assert!((p[0] - g1 / g0).abs() < 1e-14);
        assert!(pacf(&[1.0; 10], 2).is_err());
        assert!(pacf(&xs, 0).is_err());
    }
}
