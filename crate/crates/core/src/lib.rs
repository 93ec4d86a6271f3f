//! Pooling of probability forecasts under a Gaussian partial-information model.
//!
//! Two forecasters observe overlapping slices of a white-noise information
//! source and report the conditional probability of the event that the total
//! signal is nonnegative. This crate implements the aggregation rules that
//! arise from that model:
//!
//! * [`aggregators::aggregate_fixed_rho`] — the posterior probability when the
//!   overlap `rho` between the forecasters' slices is known;
//! * [`aggregators::aggregate_bayes`] — the closed-form posterior mean when
//!   the overlap is unknown and uniformly distributed;
//! * baseline pools (linear average, probit average, log-odds addition) for
//!   comparison.
//!
//! The [`oracle`] module re-derives the Bayes rule by direct numerical
//! integration so the closed form can be verified end to end, and [`model`]
//! provides the generative simulation used for calibration and scoring
//! experiments. Everything is `f64`.

pub mod aggregators;
mod error;
pub mod model;
pub mod oracle;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
