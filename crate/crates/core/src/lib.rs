//! Log-concave maximum likelihood estimation for semiparametric ARMA, GARCH
//! and ARMA-GARCH models.
//!
//! The crate is organised bottom-up:
//!
//! * [`lcdens`] fits a log-concave density to a weighted sample and answers
//!   queries on it (density, CDF, quantiles, moments, sampling).
//! * [`lcsmooth`] convolves a fitted density with a Gaussian whose variance
//!   closes the gap between empirical and fitted second moments.
//! * [`tsmodel`] holds model orders, parameter vectors and boxes, residual
//!   recursions, admissibility checks and seeded simulators.
//! * [`estimate`] runs the profile-likelihood estimators (log-concave and
//!   Gaussian quasi-likelihood) with a box-constrained downhill simplex.
//! * [`metrics`] and [`bench`] provide verification distances and the
//!   Monte-Carlo experiment harness.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod estimate;
pub mod io;
pub mod lcdens;
pub mod lcsmooth;
pub mod metrics;
pub mod quad;
pub mod rng;
pub mod segment;
pub mod tsmodel;

pub use error::{Error, Result};
pub use lcdens::{LogConcaveDensity, ObjectiveValue, WeightedSample};
pub use lcsmooth::SmoothedDensity;
