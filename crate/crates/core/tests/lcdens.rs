use lcmle::lcdens::{fit, fit_with_diagnostics, objective, DEFAULT_TOL};
use lcmle::quad::integrate_pieces;
use lcmle::segment::exp_segment_integral;
use lcmle::tsmodel::{sample_innovations, InnovationFamily, InnovationSpec, ScalingConvention};
use lcmle::{LogConcaveDensity, WeightedSample};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian_draws(n: usize, seed: u64) -> Vec<f64> {
    let ispec = InnovationSpec::new(InnovationFamily::Gaussian, ScalingConvention::UnitVariance);
    sample_innovations(&ispec, n, seed).unwrap()
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn random_sample(rng: &mut ChaCha8Rng, n: usize) -> WeightedSample {
    let pts: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    let wts: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    WeightedSample::new(&pts, &wts).unwrap()
}

/// Independent mass of a piecewise-linear log-density.
fn mass(knots: &[f64], logvals: &[f64]) -> f64 {
    knots
        .windows(2)
        .zip(logvals.windows(2))
        .map(|(k, l)| {
            let d = l[1] - l[0];
            let h = k[1] - k[0];
            if d.abs() < 1e-9 {
                h * l[0].exp() * (1.0 + d / 2.0 + d * d / 6.0)
            } else {
                h * (l[1].exp() - l[0].exp()) / d
            }
        })
        .sum()
}

#[test]
fn two_point_sample_gives_uniform() {
    let s = WeightedSample::new(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
    let d = fit(&s, DEFAULT_TOL).unwrap();
    assert_eq!(d.knots(), &[0.0, 1.0]);
    for l in d.logvals() {
        assert!(l.abs() < 1e-10);
    }
}

#[test]
fn symmetric_sample_gives_symmetric_fit() {
    let s = WeightedSample::new(&[-2.0, -1.0, 0.0, 1.0, 2.0], &[0.1, 0.2, 0.4, 0.2, 0.1]).unwrap();
    let d = fit(&s, DEFAULT_TOL).unwrap();
    for x in [0.3, 1.0, 1.7, 2.0] {
        assert!((d.log_density_at(x) - d.log_density_at(-x)).abs() < 1e-8);
    }
}

#[test]
fn degenerate_samples_are_rejected() {
    assert!(fit(&WeightedSample::from_values(&[1.0, 1.0, 1.0]).unwrap(), DEFAULT_TOL).is_err());
    assert!(fit(&WeightedSample::from_values(&[1.0, 1.0 + 1e-13]).unwrap(), DEFAULT_TOL).is_err());
}

#[test]
fn objective_examples() {
    let u = LogConcaveDensity::uniform(0.0, 1.0).unwrap();
    let s = WeightedSample::from_values(&[0.25, 0.75]).unwrap();
    assert!(objective(&u, &s).lambda.abs() < 1e-15);
    let outside = WeightedSample::from_values(&[0.5, 1.5]).unwrap();
    assert_eq!(objective(&u, &outside).lambda, f64::NEG_INFINITY);
    let u2 = LogConcaveDensity::uniform(0.0, 2.0).unwrap();
    let one = WeightedSample::from_values(&[1.0]).unwrap();
    assert!((objective(&u2, &one).lambda + 2f64.ln()).abs() < 1e-15);
}

#[test]
fn queries_on_the_uniform_density() {
    let u = LogConcaveDensity::uniform(0.0, 1.0).unwrap();
    assert!((u.density_at(0.5) - 1.0).abs() < 1e-15);
    assert!((u.cdf_at(0.5) - 0.5).abs() < 1e-15);
    assert!((u.quantile(0.25).unwrap() - 0.25).abs() < 1e-12);
    assert!(u.quantile(0.0).is_err() && u.quantile(1.0).is_err());
    let (m1, m2) = u.moments();
    assert!((m1 - 0.5).abs() < 1e-15 && (m2 - 1.0 / 3.0).abs() < 1e-15);
    let (m1, m2) = LogConcaveDensity::uniform(-1.0, 1.0).unwrap().moments();
    assert!(m1.abs() < 1e-15 && (m2 - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn cdf_matches_numeric_integration() {
    let knots = vec![-1.0, 0.5, 2.0];
    let mut logvals = vec![-0.5, 0.2, -1.5];
    let m = mass(&knots, &logvals);
    logvals.iter_mut().for_each(|l| *l -= m.ln());
    let d = LogConcaveDensity::new(knots, logvals).unwrap();
    for x in [-0.9, -0.2, 0.5, 1.1, 1.99] {
        let breaks: Vec<f64> = [-1.0, 0.5, x].into_iter().filter(|b| *b <= x).collect();
        let mut pts = breaks.clone();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let num = integrate_pieces(|t| d.density_at(t), &pts, 1e-13);
        assert!((d.cdf_at(x) - num).abs() < 1e-11, "x = {x}");
        let back = d.quantile(d.cdf_at(x)).unwrap();
        assert!((back - x).abs() < 1e-9);
    }
    assert!((d.cdf_at(2.0) - 1.0).abs() < 1e-8);
    assert_eq!(d.cdf_at(-1.0), 0.0);
}

#[test]
fn sampling_is_deterministic_and_matches_moments() {
    let u = LogConcaveDensity::uniform(0.0, 1.0).unwrap();
    let xs = u.sample(1_000_000, 3);
    assert_eq!(xs, u.sample(1_000_000, 3));
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!((mean - 0.5).abs() < 0.002);

    let d = fit(&WeightedSample::from_values(&gaussian_draws(500, 1)).unwrap(), DEFAULT_TOL).unwrap();
    let n = 1_000_000;
    let ys = d.sample(n, 4);
    let (m1, m2) = d.moments();
    let var = m2 - m1 * m1;
    let mean = ys.iter().sum::<f64>() / n as f64;
    let second = ys.iter().map(|y| y * y).sum::<f64>() / n as f64;
    assert!((mean - m1).abs() < 3.0 * (var / n as f64).sqrt());
    let fourth = ys.iter().map(|y| y.powi(4)).sum::<f64>() / n as f64;
    assert!((second - m2).abs() < 3.0 * ((fourth - m2 * m2) / n as f64).sqrt());
}

#[test]
fn samples_follow_the_cdf() {
    let d = fit(&WeightedSample::from_values(&gaussian_draws(2000, 5)).unwrap(), DEFAULT_TOL).unwrap();
    let mut ys = d.sample(100_000, 6);
    ys.sort_by(f64::total_cmp);
    let n = ys.len() as f64;
    let ks = ys
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let f = d.cdf_at(*y);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS = {ks}");
}

#[test]
fn normal_draws_are_recovered_in_l1() {
    let d = fit(&WeightedSample::from_values(&gaussian_draws(2000, 9)).unwrap(), DEFAULT_TOL).unwrap();
    let mut breaks = vec![-12.0];
    breaks.extend_from_slice(d.knots());
    breaks.push(12.0);
    let l1 = integrate_pieces(|x| (d.density_at(x) - normal_pdf(x)).abs(), &breaks, 1e-8);
    assert!(l1 < 0.1, "L1 = {l1}");
    // The fitted CDF tracks the normal one as well.
    let sup = (-20..=20).map(|i| i as f64 * 0.1).map(|x| (d.cdf_at(x) - normal_cdf(x)).abs()).fold(0.0, f64::max);
    assert!(sup < 0.05);
}

#[test]
fn density_round_trips_through_json() {
    let d = fit(&WeightedSample::from_values(&gaussian_draws(300, 2)).unwrap(), DEFAULT_TOL).unwrap();
    let text = serde_json::to_string(&d).unwrap();
    let back: LogConcaveDensity = serde_json::from_str(&text).unwrap();
    assert_eq!(back, d);
    assert!(serde_json::from_str::<LogConcaveDensity>(r#"{"knots":[0,1,2],"logvals":[0,1,0]}"#).is_err());
}

/// Best objective over concave functions with knots at the sample points,
/// by coarse-to-fine grid search over the segment slopes. The constant is
/// profiled out exactly: `max_c Λ(φ + c) = Σ w φ − log ∫ e^φ`.
fn grid_oracle(x: &[f64], w: &[f64]) -> f64 {
    let value = |slopes: &[f64]| {
        let mut phi = vec![0.0];
        for (i, s) in slopes.iter().enumerate() {
            phi.push(phi[i] + s * (x[i + 1] - x[i]));
        }
        let data: f64 = w.iter().zip(&phi).map(|(a, b)| a * b).sum();
        data - mass(x, &phi).ln()
    };
    match x.len() {
        2 => {
            let (mut lo, mut hi) = (-400.0, 400.0);
            let mut best = (0.0, f64::NEG_INFINITY);
            for _ in 0..40 {
                let step = (hi - lo) / 400.0;
                for i in 0..=400 {
                    let s = lo + i as f64 * step;
                    let v = value(&[s]);
                    if v > best.1 {
                        best = (s, v);
                    }
                }
                lo = best.0 - 4.0 * step;
                hi = best.0 + 4.0 * step;
            }
            best.1
        }
        3 => {
            let mut centre = (0.0, 0.0);
            let mut half = 400.0;
            let mut best = f64::NEG_INFINITY;
            for _ in 0..40 {
                let step = half / 60.0;
                let mut next = centre;
                for i in -60..=60 {
                    for j in -60..=60 {
                        let s1 = centre.0 + i as f64 * step;
                        let s2 = centre.1 + j as f64 * step;
                        if s2 > s1 {
                            continue;
                        }
                        let v = value(&[s1, s2]);
                        if v > best {
                            best = v;
                            next = (s1, s2);
                        }
                    }
                }
                centre = next;
                half = 4.0 * step;
            }
            best
        }
        _ => unreachable!(),
    }
}

#[test]
fn small_samples_match_the_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..60 {
        let n = 2 + case % 2;
        let s = random_sample(&mut rng, n);
        let f = fit_with_diagnostics(&s, DEFAULT_TOL).unwrap();
        let oracle = grid_oracle(s.points(), s.weights());
        assert!((f.objective.lambda - oracle).abs() < 1e-4, "case {case}: {} vs {oracle}", f.objective.lambda);
    }
}

#[test]
fn fit_beats_random_concave_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let s = random_sample(&mut rng, 5);
        let f = fit_with_diagnostics(&s, DEFAULT_TOL).unwrap();
        let x = s.points();
        let phi: Vec<f64> = x.iter().map(|p| f.density.log_density_at(*p)).collect();
        let mut tried = 0;
        while tried < 1000 {
            let cand: Vec<f64> = phi.iter().map(|v| v + rng.random_range(-0.3..0.3)).collect();
            let concave = (1..x.len() - 1).all(|i| {
                (cand[i + 1] - cand[i]) / (x[i + 1] - x[i]) <= (cand[i] - cand[i - 1]) / (x[i] - x[i - 1])
            });
            if !concave {
                continue;
            }
            tried += 1;
            let m = mass(x, &cand);
            let normalized: Vec<f64> = cand.iter().map(|v| v - m.ln()).collect();
            let d = LogConcaveDensity::new(x.to_vec(), normalized).unwrap();
            assert!(objective(&d, &s).lambda <= f.objective.lambda + DEFAULT_TOL);
        }
    }
}

#[test]
fn support_is_the_sample_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let s = random_sample(&mut rng, 12);
        let d = fit(&s, DEFAULT_TOL).unwrap();
        let x = s.points();
        assert_eq!(d.support(), (x[0], x[x.len() - 1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn core_invariants_hold(
        pts in prop::collection::vec(-20.0f64..20.0, 2..40),
        seed in any::<u64>(),
        shift in -5.0f64..5.0,
        scale in 0.1f64..10.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wts: Vec<f64> = pts.iter().map(|_| rng.random_range(0.05..1.0)).collect();
        let s = WeightedSample::new(&pts, &wts).unwrap();
        prop_assume!(s.len() >= 2 && s.points()[s.len() - 1] - s.points()[0] > 1e-6);
        let f = fit_with_diagnostics(&s, DEFAULT_TOL).unwrap();
        let d = &f.density;

        let total = mass(d.knots(), d.logvals());
        prop_assert!((total - 1.0).abs() < 1e-8);
        let slopes = d.slopes();
        prop_assert!(slopes.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)));
        prop_assert!((d.moments().0 - s.mean()).abs() < 1e-8 * (1.0 + s.mean().abs()));

        let moved = s.affine(shift, scale).unwrap();
        let g = fit_with_diagnostics(&moved, DEFAULT_TOL).unwrap();
        prop_assert!((g.objective.lambda - (f.objective.lambda - scale.ln())).abs() < 1e-7);
        for z in d.knots() {
            let lhs = g.density.density_at(shift + scale * z);
            prop_assert!((lhs - d.density_at(*z) / scale).abs() < 1e-7 * (1.0 + lhs));
        }
    }
}

#[test]
fn segment_integral_examples() {
    assert_eq!(exp_segment_integral(0.0, 0.0, 1.0).unwrap(), 1.0);
    assert!((exp_segment_integral(0.0, 1.0, 1.0).unwrap() - (std::f64::consts::E - 1.0)).abs() < 1e-15);
    let v = exp_segment_integral(2.0, 2.0 + 1e-10, 3.0).unwrap();
    assert!((v / (3.0 * 2f64.exp()) - 1.0).abs() < 1e-10);
    assert!(exp_segment_integral(f64::NAN, 0.0, 1.0).is_err());
}
