use lcmle::bench::preset;
use lcmle::estimate::{fit_lcmle_arma, fit_lcmle_armagarch, OptimizerConfig};
use lcmle::lcsmooth::{variance_gap_arma, variance_gap_armagarch};
use lcmle::quad::integrate_pieces;
use lcmle::tsmodel::{
    arma_residuals, simulate, InnovationFamily, InnovationSpec, ParamBox, ScalingConvention, DEFAULT_BURN_IN,
};
use lcmle::{LogConcaveDensity, SmoothedDensity};

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `∫ x^power f̃` over the effective support, split at the base knots.
fn numeric_moment(s: &SmoothedDensity, power: i32) -> f64 {
    let (lo, hi) = s.effective_support();
    let mut breaks = vec![lo];
    breaks.extend_from_slice(s.base.knots());
    breaks.push(hi);
    integrate_pieces(|x| x.powi(power) * s.density_at(x), &breaks, 1e-12)
}

fn assert_log_concave(s: &SmoothedDensity) {
    let (lo, hi) = s.base.support();
    let h = (hi - lo) / 2000.0;
    let g: Vec<f64> = (0..=2000).map(|i| s.log_density_at(lo + i as f64 * h)).collect();
    for w in g.windows(3) {
        assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-9, "second difference {}", w[0] - 2.0 * w[1] + w[2]);
    }
}

#[test]
fn uniform_convolved_with_gaussian() {
    let u = LogConcaveDensity::uniform(0.0, 1.0).unwrap();
    for var in [0.01, 0.25, 4.0] {
        let s = SmoothedDensity::new(u.clone(), var).unwrap();
        let sd = f64::sqrt(var);
        for x in [-1.0, 0.0, 0.3, 0.5, 1.0, 2.5] {
            let exact = normal_cdf(x / sd) - normal_cdf((x - 1.0) / sd);
            assert!((s.density_at(x) - exact).abs() < 1e-12 * (1.0 + exact), "var {var}, x {x}");
        }
    }
    let s = SmoothedDensity::new(u, 0.01).unwrap();
    assert!((s.density_at(0.5) - 0.9999994267).abs() < 1e-9);
}

#[test]
fn tiny_smoothing_recovers_the_base() {
    let knots = vec![-1.0, 0.0, 2.0];
    let mass = (1.0 - (-1.0f64).exp()) + (1.0 - (-2.0f64).exp());
    let logvals = vec![-1.0 - mass.ln(), -mass.ln(), -2.0 - mass.ln()];
    let base = LogConcaveDensity::new(knots, logvals).unwrap();
    let s = SmoothedDensity::new(base.clone(), 1e-12).unwrap();
    for x in [-0.5, 0.3, 1.5] {
        assert!((s.density_at(x) - base.density_at(x)).abs() < 1e-5);
    }
}

#[test]
fn smoothed_density_integrates_to_one_and_adds_variance() {
    let u = LogConcaveDensity::uniform(-1.0, 3.0).unwrap();
    let s = SmoothedDensity::new(u.clone(), 0.7).unwrap();
    assert!((numeric_moment(&s, 0) - 1.0).abs() < 1e-10);
    assert!((numeric_moment(&s, 1) - 1.0).abs() < 1e-10);
    let var = numeric_moment(&s, 2) - 1.0;
    assert!((var - (u.variance() + 0.7)).abs() < 1e-9);
    assert!((s.variance() - var).abs() < 1e-9);
    assert_log_concave(&s);
}

#[test]
fn cdf_and_quantile_agree() {
    let u = LogConcaveDensity::uniform(0.0, 1.0).unwrap();
    let s = SmoothedDensity::new(u, 0.04).unwrap();
    assert!((s.cdf_at(0.5) - 0.5).abs() < 1e-9);
    for p in [0.01, 0.3, 0.9] {
        let q = s.quantile(p).unwrap();
        assert!((s.cdf_at(q) - p).abs() < 1e-8);
    }
    assert!(s.quantile(1.0).is_err());
}

#[test]
fn nonpositive_smoothing_variance_is_rejected() {
    let u = LogConcaveDensity::uniform(0.0, 1.0).unwrap();
    assert!(SmoothedDensity::new(u.clone(), 0.0).is_err());
    assert!(SmoothedDensity::new(u.clone(), f64::NAN).is_err());
    assert!(variance_gap_arma(&[0.1, -0.1], &u).is_err());
    let wide = LogConcaveDensity::uniform(-3.0, 3.0).unwrap();
    assert!(variance_gap_armagarch(&wide).is_err());
}

#[test]
fn arma_fit_matches_residual_second_moment() {
    let (spec, theta) = preset("AR(1)").unwrap();
    let ispec = InnovationSpec::new(InnovationFamily::CenteredExponential, ScalingConvention::UnitVariance);
    let xs = simulate(&spec, &theta, &ispec, 500, DEFAULT_BURN_IN, 17).unwrap();
    let bounds = ParamBox::plain(&spec, 10.0).unwrap();
    let fit = fit_lcmle_arma(&xs, &spec, &bounds, &OptimizerConfig::default()).unwrap();
    let s = fit.smoothed.unwrap();
    let eps = arma_residuals(&fit.theta_hat, &xs).unwrap();
    let emp = eps.innovations().iter().map(|e| e * e).sum::<f64>() / xs.len() as f64;
    assert!(s.bandwidth_var > 0.0);
    assert!((numeric_moment(&s, 2) - emp).abs() < 1e-8);
    assert!((numeric_moment(&s, 0) - 1.0).abs() < 1e-9);
    assert_log_concave(&s);
}

#[test]
fn garch_fit_has_unit_second_moment() {
    let (spec, theta) = preset("GARCH(1,1)").unwrap();
    let ispec = InnovationSpec::new(InnovationFamily::Laplace, ScalingConvention::UnitSecondMoment);
    let xs = simulate(&spec, &theta, &ispec, 500, DEFAULT_BURN_IN, 23).unwrap();
    let fit = fit_lcmle_armagarch(&xs, &spec, 0.01, &OptimizerConfig::default()).unwrap();
    let s = fit.smoothed.unwrap();
    assert!(s.bandwidth_var > 0.0);
    assert!((numeric_moment(&s, 2) - 1.0).abs() < 1e-8);
    assert_log_concave(&s);
}
