//! The generative model behind the aggregators: information structures,
//! forecasts from observations, the forecast marginal, and a seeded
//! simulation for calibration and scoring experiments.
//!
//! The picture: white noise lives on a set of measure `total`; forecaster `i`
//! observes the integral of the noise over a subset of measure `b_i`, and the
//! event of interest is that the integral over everything is nonnegative. All
//! shipped aggregators assume the canonical scaling `total = 2`,
//! `b1 = b2 = 1`, where the overlap measure `rho` in `[0, 1]` is the
//! correlation between the two observations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{phi, phi_inv};

/// A probability strictly inside `(0, 1)` — the only kind the aggregators
/// accept. Boundary forecasts must be clamped by the caller; simulation output
/// is already clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::Domain {
                name: "probability",
                constraint: "0 < p < 1",
                value,
            });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Overlap measure between the two observed slices, in `[0, 1]` under the
/// canonical scaling; doubles as the correlation of the observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap(f64);

impl Overlap {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(Error::Domain {
                name: "overlap",
                constraint: "0 <= rho <= 1",
                value,
            });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Ratio `observed / unobserved` information mass for one forecaster; shapes
/// the marginal law of that forecaster's output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta(f64);

impl Beta {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Domain {
                name: "beta",
                constraint: "finite and > 0",
                value,
            });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Measures of the total information set, the two observed subsets, and their
/// overlap. Valid combinations are exactly the measure-consistent ones, which
/// automatically make the implied covariance matrix of
/// `(X_total, X_1, X_2)` positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationStructure {
    total: f64,
    b1: f64,
    b2: f64,
    overlap: f64,
}

impl InformationStructure {
    pub fn new(total: f64, b1: f64, b2: f64, overlap: f64) -> Result<Self> {
        for (name, value) in [("total", total), ("b1", b1), ("b2", b2), ("overlap", overlap)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::Domain {
                    name,
                    constraint: "finite and >= 0",
                    value,
                });
            }
        }
        if b1 > total {
            return Err(Error::Domain {
                name: "b1",
                constraint: "b1 <= total",
                value: b1,
            });
        }
        if b2 > total {
            return Err(Error::Domain {
                name: "b2",
                constraint: "b2 <= total",
                value: b2,
            });
        }
        if overlap > b1.min(b2) {
            return Err(Error::Domain {
                name: "overlap",
                constraint: "overlap <= min(b1, b2)",
                value: overlap,
            });
        }
        if overlap < b1 + b2 - total {
            return Err(Error::Domain {
                name: "overlap",
                constraint: "overlap >= b1 + b2 - total",
                value: overlap,
            });
        }
        Ok(Self {
            total,
            b1,
            b2,
            overlap,
        })
    }

    pub fn total(&self) -> f64 {
        self.total
    }
    pub fn b1(&self) -> f64 {
        self.b1
    }
    pub fn b2(&self) -> f64 {
        self.b2
    }
    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    /// Rescale to the canonical `total = 2`; returns the scaled structure and
    /// the factor `gamma = total / 2` that was divided out. Forecast laws are
    /// invariant under this rescaling.
    pub fn canonical(&self) -> Result<(Self, f64)> {
        if self.total <= 0.0 {
            return Err(Error::Domain {
                name: "total",
                constraint: "> 0 to normalize",
                value: self.total,
            });
        }
        let gamma = self.total / 2.0;
        Self::new(
            2.0,
            self.b1 / gamma,
            self.b2 / gamma,
            self.overlap / gamma,
        )
        .map(|s| (s, gamma))
    }
}

/// Which of the two forecasters is reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Forecaster {
    First,
    Second,
}

// Simulated forecasts stay this far inside (0, 1) so quantile round-trips
// never see the boundary.
const FORECAST_FLOOR: f64 = 1e-12;

pub(crate) fn clamp_forecast(v: f64) -> f64 {
    v.clamp(FORECAST_FLOOR, 1.0 - FORECAST_FLOOR)
}

/// The forecast a forecaster reports after observing `x` on their slice:
/// `Phi(x / sqrt(total - b))`, the probability that the full integral is
/// nonnegative given the observed part.
///
/// Extreme observations are clamped to `[1e-12, 1 - 1e-12]` like simulated
/// forecasts. A forecaster whose slice is the whole set has nothing to
/// forecast and yields a degenerate-forecaster error.
pub fn forecast_from_observation(
    x: f64,
    structure: &InformationStructure,
    who: Forecaster,
) -> Result<Probability> {
    if !x.is_finite() {
        return Err(Error::Domain {
            name: "x",
            constraint: "finite",
            value: x,
        });
    }
    let b = match who {
        Forecaster::First => structure.b1(),
        Forecaster::Second => structure.b2(),
    };
    let remaining = structure.total() - b;
    if remaining <= 0.0 {
        return Err(Error::DegenerateForecaster);
    }
    Ok(Probability(clamp_forecast(phi(x / remaining.sqrt()))))
}

/// Density at `t` of a forecast whose observed/unobserved mass ratio is
/// `beta`:
///
/// ```text
/// f_beta(t) = phi(Phi^-1(t) / sqrt(beta)) / (sqrt(beta) phi(Phi^-1(t)))
///           = exp(Phi^-1(t)^2 (beta - 1) / (2 beta)) / sqrt(beta)
/// ```
///
/// `beta = 1` is the uniform density; larger `beta` (better-informed
/// forecasters) piles mass at the endpoints, smaller `beta` starves them.
pub fn marginal_density(t: Probability, beta: Beta) -> f64 {
    let z = phi_inv(t.value());
    let b = beta.value();
    (z * z * (b - 1.0) / (2.0 * b)).exp() / b.sqrt()
}

/// One simulated trial: the overlap in force, both (clamped) forecasts, and
/// the realized outcome indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationRecord {
    pub rho: f64,
    pub p: f64,
    pub q: f64,
    pub outcome: u8,
}

/// Column header matching [`SimulationRecord::csv_row`].
pub const RECORD_CSV_HEADER: &str = "rho,p,q,outcome";

impl SimulationRecord {
    /// Comma-separated row with shortest round-trip float formatting; field
    /// order matches [`RECORD_CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.rho, self.p, self.q, self.outcome)
    }
}

enum OverlapLaw {
    Fixed(f64),
    UniformPrior,
}

fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(rand::distr::Open01)
}

/// Trial `index` under `seed`, independent of every other trial.
///
/// Reproducibility contract: the generator is ChaCha8 keyed by
/// `seed_from_u64(seed)` with the 64-bit stream counter set to the trial
/// index, so any partition of indices yields identical records. Draw order
/// within a trial: the overlap (uniform-prior mode only), then four standard
/// normals — own-slice components `U`, `V` (variance `1 - rho`), the shared
/// component `M` and the unobserved remainder `W` (variance `rho`) — each by
/// inverse-CDF transform of an open-interval uniform.
fn record_at(seed: u64, index: u64, law: &OverlapLaw) -> SimulationRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let rho = match law {
        OverlapLaw::Fixed(r) => *r,
        OverlapLaw::UniformPrior => open_unit(&mut rng),
    };
    let own_sd = (1.0 - rho).sqrt();
    let shared_sd = rho.sqrt();
    let u = own_sd * phi_inv(open_unit(&mut rng));
    let v = own_sd * phi_inv(open_unit(&mut rng));
    let m = shared_sd * phi_inv(open_unit(&mut rng));
    let w = shared_sd * phi_inv(open_unit(&mut rng));
    let x1 = u + m;
    let x2 = v + m;
    let x_total = u + v + m + w;
    SimulationRecord {
        rho,
        p: clamp_forecast(phi(x1)),
        q: clamp_forecast(phi(x2)),
        outcome: u8::from(x_total >= 0.0),
    }
}

/// Simulate `trials` independent trials at a fixed overlap.
pub fn simulate_fixed_rho(rho: Overlap, trials: u64, seed: u64) -> Vec<SimulationRecord> {
    let law = OverlapLaw::Fixed(rho.value());
    (0..trials).map(|i| record_at(seed, i, &law)).collect()
}

/// Simulate `trials` independent trials, drawing the overlap uniformly on
/// `(0, 1)` for each trial.
pub fn simulate_uniform_prior(trials: u64, seed: u64) -> Vec<SimulationRecord> {
    (0..trials)
        .map(|i| record_at(seed, i, &OverlapLaw::UniformPrior))
        .collect()
}
