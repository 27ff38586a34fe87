//! Closed-form integrals of `exp` of a linear function over one segment.
//!
//! Every quantity here is expressed on the unit interval: for log-values `a`
//! at the left end and `b` at the right end the integrand is
//! `exp((1 - u) a + u b)` for `u` in `[0, 1]`. Callers rescale by the segment
//! length. Evaluation always happens in the frame where the exponent is
//! nonincreasing, so only `exp` of nonpositive numbers relative to the larger
//! endpoint is ever taken.

use crate::error::{invalid, Result};

/// Below this slope the `(e^d - 1)/d` factor switches to its Taylor series.
pub const TAYLOR_THRESHOLD: f64 = 1e-6;

/// Below this slope the first and second moment kernels use their series.
const MOMENT_SERIES_THRESHOLD: f64 = 1.0;

const SERIES_TERMS: usize = 30;

/// `∫_0^1 u^k e^{-s u} du` for `s >= 0`, `k = 0, 1, 2`.
#[derive(Clone, Copy, Debug)]
struct DecayKernels {
    g0: f64,
    g1: f64,
    g2: f64,
}

fn decay_kernels(s: f64) -> DecayKernels {
    debug_assert!(s >= 0.0);
    if s < MOMENT_SERIES_THRESHOLD {
        // Alternating series in s; the terms drop below 1e-30 well before the cap.
        let (mut g0, mut g1, mut g2) = (0.0, 0.0, 0.0);
        let mut term = 1.0;
        for j in 0..SERIES_TERMS {
            let jf = j as f64;
            g0 += term / (jf + 1.0);
            g1 += term / (jf + 2.0);
            g2 += term / (jf + 3.0);
            term *= -s / (jf + 1.0);
            if term.abs() < 1e-18 * f64::EPSILON {
                break;
            }
        }
        DecayKernels { g0, g1, g2 }
    } else {
        let e = (-s).exp();
        let g0 = -(-s).exp_m1() / s;
        let g1 = (1.0 - e * (1.0 + s)) / (s * s);
        let g2 = (2.0 - e * (s * s + 2.0 * s + 2.0)) / (s * s * s);
        DecayKernels { g0, g1, g2 }
    }
}

/// `(1 - e^{-s}) / s`, the zeroth kernel, with the short Taylor branch.
fn decay_mass(s: f64) -> f64 {
    if s < TAYLOR_THRESHOLD {
        // 1 - s/2 + s^2/6 - s^3/24
        1.0 - s / 2.0 * (1.0 - s / 3.0 * (1.0 - s / 4.0))
    } else {
        -(-s).exp_m1() / s
    }
}

/// Unit-interval moments of `exp((1 - u) a + u b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentMoments {
    /// `∫ e`
    pub m0: f64,
    /// `∫ u e`, weight toward the right end
    pub right1: f64,
    /// `∫ (1 - u) e`, weight toward the left end
    pub left1: f64,
    /// `∫ u^2 e`
    pub right2: f64,
    /// `∫ (1 - u)^2 e`
    pub left2: f64,
    /// `∫ u (1 - u) e`
    pub cross: f64,
}

impl SegmentMoments {
    pub fn new(a: f64, b: f64) -> Self {
        if b <= a {
            Self::decreasing(a, a - b)
        } else {
            let m = Self::decreasing(b, b - a);
            SegmentMoments {
                m0: m.m0,
                right1: m.left1,
                left1: m.right1,
                right2: m.left2,
                left2: m.right2,
                cross: m.cross,
            }
        }
    }

    fn decreasing(top: f64, s: f64) -> Self {
        let k = decay_kernels(s);
        let scale = top.exp();
        SegmentMoments {
            m0: scale * decay_mass(s),
            right1: scale * k.g1,
            left1: scale * (k.g0 - k.g1),
            right2: scale * k.g2,
            left2: scale * (k.g0 - 2.0 * k.g1 + k.g2),
            cross: scale * (k.g1 - k.g2),
        }
    }
}

/// `∫_0^1 exp((1 - u) a + u b) du`, symmetric in `(a, b)`.
pub fn unit_mass(a: f64, b: f64) -> f64 {
    let (top, s) = if b <= a { (a, a - b) } else { (b, b - a) };
    top.exp() * decay_mass(s)
}

/// Integral of `exp(φ)` over a segment of the given length on which `φ`
/// is linear from `phi_left` to `phi_right`.
pub fn exp_segment_integral(phi_left: f64, phi_right: f64, length: f64) -> Result<f64> {
    if !phi_left.is_finite() || !phi_right.is_finite() || !length.is_finite() {
        return invalid("segment integral needs finite inputs");
    }
    if length <= 0.0 {
        return invalid(format!("segment length must be positive, got {length}"));
    }
    Ok(length * unit_mass(phi_left, phi_right))
}
