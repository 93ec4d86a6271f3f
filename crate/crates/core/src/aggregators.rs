//! Forecast aggregators: two baselines that ignore the information
//! structure (linear average, log-odds pooling), the probit average, the
//! fixed-overlap pool, and the one-shot Bayesian aggregator for an unknown
//! overlap under a uniform prior.
//!
//! All aggregators take a [`ForecastPair`] of probabilities strictly inside
//! `(0, 1)` and return a plain `f64` in `[0, 1]`: the Bayesian aggregator
//! genuinely reaches the endpoints (for example both forecasts at `1/4`
//! aggregate to `1/6`, and the zero-overlap pool is `0`/`1` off the
//! diagonal), so the result is deliberately not a [`Probability`].

use crate::error::Result;
use crate::model::{Overlap, Probability};
use crate::special::{phi, phi_inv};

/// Two probability forecasts of the same event, in reported order. Every
/// aggregator here is symmetric, so the order never affects the result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastPair {
    p: Probability,
    q: Probability,
}

impl ForecastPair {
    pub fn new(p: Probability, q: Probability) -> Self {
        Self { p, q }
    }

    /// Validate and wrap two raw forecast values.
    pub fn from_values(p: f64, q: f64) -> Result<Self> {
        Ok(Self::new(Probability::new(p)?, Probability::new(q)?))
    }

    pub fn p(&self) -> Probability {
        self.p
    }

    pub fn q(&self) -> Probability {
        self.q
    }
}

/// Which pooling rule to apply; the data carried by [`FixedRho`] is the
/// overlap it conditions on.
///
/// [`FixedRho`]: AggregatorKind::FixedRho
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AggregatorKind {
    Average,
    Probit,
    LogOdds,
    FixedRho(Overlap),
    Bayes,
}

impl AggregatorKind {
    pub fn aggregate(&self, pair: ForecastPair) -> f64 {
        match self {
            Self::Average => aggregate_average(pair),
            Self::Probit => aggregate_probit(pair),
            Self::LogOdds => aggregate_log_odds(pair),
            Self::FixedRho(rho) => aggregate_fixed_rho(pair, *rho),
            Self::Bayes => aggregate_bayes(pair),
        }
    }
}

/// Linear opinion pool: `(p + q) / 2`.
pub fn aggregate_average(pair: ForecastPair) -> f64 {
    (pair.p.value() + pair.q.value()) / 2.0
}

/// Probit-average pool: average the forecasts on the Gaussian quantile scale,
/// `Phi((Phi^-1(p) + Phi^-1(q)) / 2)`. Equals the fixed-overlap pool at full
/// overlap.
pub fn aggregate_probit(pair: ForecastPair) -> f64 {
    phi((phi_inv(pair.p.value()) + phi_inv(pair.q.value())) / 2.0)
}

/// Log-odds pool: add the log odds, i.e. `pq / (pq + (1 - p)(1 - q))` — the
/// posterior of two conditionally independent signals from an even prior.
pub fn aggregate_log_odds(pair: ForecastPair) -> f64 {
    let (p, q) = (pair.p.value(), pair.q.value());
    let joint = p * q;
    joint / (joint + (1.0 - p) * (1.0 - q))
}

/// Pool for a known overlap `rho`:
/// `Phi((Phi^-1(p) + Phi^-1(q)) / sqrt(2 rho (1 + rho)))`.
///
/// At `rho = 0` the divisor vanishes and the pool converges to the sign of
/// the quantile sum — `1` if positive, `0` if negative, `1/2` if exactly
/// zero. Two forecasters with disjoint information and, say, both leaning
/// positive jointly certify the event.
pub fn aggregate_fixed_rho(pair: ForecastPair, rho: Overlap) -> f64 {
    let sum = phi_inv(pair.p.value()) + phi_inv(pair.q.value());
    let r = rho.value();
    if r == 0.0 {
        return if sum > 0.0 {
            1.0
        } else if sum < 0.0 {
            0.0
        } else {
            0.5
        };
    }
    phi(sum / (2.0 * r * (1.0 + r)).sqrt())
}

/// One-shot Bayesian aggregator for an overlap drawn uniformly on `[0, 1]`:
/// the posterior probability of the event given both forecasts, in closed
/// form. Writing `lo <= hi` for the sorted pair:
///
/// ```text
/// lo + hi >= 1:  (hi - (1 - 2 lo)) / (2 lo)
/// lo + hi <= 1:  lo / (2 (1 - hi))
/// ```
///
/// The two branches agree on the seam `lo + hi = 1`. The rule is symmetric,
/// monotone in each forecast, maps `(1/2, q)` to `q`, and pushes two
/// same-side forecasts beyond their convex hull.
pub fn aggregate_bayes(pair: ForecastPair) -> f64 {
    let lo = pair.p.value().min(pair.q.value());
    let hi = pair.p.value().max(pair.q.value());
    if lo + hi >= 1.0 {
        (hi - (1.0 - 2.0 * lo)) / (2.0 * lo)
    } else {
        lo / (2.0 * (1.0 - hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate_fixed_rho;

    fn pair(p: f64, q: f64) -> ForecastPair {
        ForecastPair::from_values(p, q).unwrap()
    }

    fn grid() -> Vec<f64> {
        (1..100).map(|i| f64::from(i) / 100.0).collect()
    }

    /// Quantile by bisection on `phi` alone — an oracle independent of
    /// `phi_inv`'s rational approximation.
    fn quantile_by_bisection(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn revealed_pair_table() {
        // (0.6, 0.8) under each rule, to three decimals.
        let pr = pair(0.6, 0.8);
        let rows = [
            (aggregate_average(pr), 0.700),
            (aggregate_probit(pr), 0.708),
            (aggregate_fixed_rho(pr, Overlap::new(0.5).unwrap()), 0.814),
            (aggregate_bayes(pr), 0.833),
            (aggregate_log_odds(pr), 0.857),
        ];
        for (value, rounded) in rows {
            assert!(
                ((value * 1000.0).round() / 1000.0 - rounded).abs() < 1e-12,
                "{value} does not round to {rounded}"
            );
        }
    }

    #[test]
    fn bayes_exact_rational_values() {
        assert!((aggregate_bayes(pair(0.6, 0.8)) - 5.0 / 6.0).abs() <= 1e-15);
        assert!((aggregate_bayes(pair(0.2, 0.3)) - 1.0 / 7.0).abs() <= 1e-15);
        assert_eq!(aggregate_bayes(pair(0.5, 0.5)), 0.5);
        assert!((aggregate_bayes(pair(0.25, 0.25)) - 1.0 / 6.0).abs() <= 1e-15);
    }

    #[test]
    fn bayes_half_forecast_passes_the_other_through() {
        for q in grid() {
            assert_eq!(aggregate_bayes(pair(0.5, q)), q, "q = {q}");
        }
    }

    #[test]
    fn bayes_diagonal_formulas() {
        for x in grid() {
            let g = aggregate_bayes(pair(x, x));
            let expect = if x >= 0.5 {
                (3.0 * x - 1.0) / (2.0 * x)
            } else {
                x / (2.0 * (1.0 - x))
            };
            assert!((g - expect).abs() <= 1e-15, "x = {x}");
        }
    }

    #[test]
    fn fixed_rho_matches_bisection_oracle() {
        for (p, q, rho) in [
            (0.6, 0.8, 0.3),
            (0.6, 0.8, 0.5),
            (0.1, 0.97, 0.8),
            (0.42, 0.31, 0.06),
        ] {
            let got = aggregate_fixed_rho(pair(p, q), Overlap::new(rho).unwrap());
            let z = (quantile_by_bisection(p) + quantile_by_bisection(q))
                / (2.0 * rho * (1.0 + rho)).sqrt();
            let expect = phi(z);
            assert!(
                (got - expect).abs() <= 1e-9,
                "({p}, {q}; {rho}): {got} vs {expect}"
            );
        }
    }

    #[test]
    fn average_and_probit_are_idempotent() {
        for x in grid() {
            let pr = pair(x, x);
            assert_eq!(aggregate_average(pr), x);
            assert!((aggregate_probit(pr) - x).abs() <= 1e-12, "x = {x}");
        }
    }

    #[test]
    fn all_aggregators_are_symmetric_bitwise() {
        let rho = Overlap::new(0.37).unwrap();
        let kinds = [
            AggregatorKind::Average,
            AggregatorKind::Probit,
            AggregatorKind::LogOdds,
            AggregatorKind::FixedRho(rho),
            AggregatorKind::Bayes,
        ];
        for p in [0.001, 0.2, 0.5, 0.77, 0.999] {
            for q in [0.001, 0.31, 0.5, 0.924, 0.999] {
                for kind in kinds {
                    let fwd = kind.aggregate(pair(p, q));
                    let rev = kind.aggregate(pair(q, p));
                    assert_eq!(
                        fwd.to_bits(),
                        rev.to_bits(),
                        "{kind:?} at ({p}, {q})"
                    );
                }
            }
        }
    }

    #[test]
    fn all_aggregators_respect_complementation() {
        // Aggregating the complementary forecasts gives the complementary
        // probability.
        let rho = Overlap::new(0.37).unwrap();
        let kinds = [
            AggregatorKind::Average,
            AggregatorKind::Probit,
            AggregatorKind::LogOdds,
            AggregatorKind::FixedRho(rho),
            AggregatorKind::Bayes,
        ];
        for p in [0.02, 0.2, 0.44, 0.5, 0.77, 0.98] {
            for q in [0.05, 0.31, 0.5, 0.924] {
                for kind in kinds {
                    let direct = kind.aggregate(pair(p, q));
                    let flipped = kind.aggregate(pair(1.0 - p, 1.0 - q));
                    assert!(
                        (flipped - (1.0 - direct)).abs() <= 1e-12,
                        "{kind:?} at ({p}, {q}): {flipped} vs 1 - {direct}"
                    );
                }
            }
        }
    }

    #[test]
    fn bayes_is_monotone_in_each_forecast() {
        let xs = grid();
        for &q in &xs {
            let mut prev = f64::NEG_INFINITY;
            for &p in &xs {
                let g = aggregate_bayes(pair(p, q));
                // Tiny slack covers rounding at the branch seam.
                assert!(g >= prev - 1e-13, "dip at ({p}, {q})");
                prev = g;
            }
        }
    }

    #[test]
    fn bayes_outputs_stay_in_the_unit_interval() {
        for &p in &grid() {
            for &q in &grid() {
                let g = aggregate_bayes(pair(p, q));
                assert!((0.0..=1.0).contains(&g), "({p}, {q}) -> {g}");
            }
        }
    }

    #[test]
    fn bayes_extremizes_and_probit_stays_in_the_hull() {
        for &p in &grid() {
            for &q in &grid() {
                let lo = p.min(q);
                let hi = p.max(q);
                let bayes = aggregate_bayes(pair(p, q));
                if lo >= 0.5 {
                    assert!(bayes >= hi - 1e-15, "({p}, {q}): {bayes} < {hi}");
                }
                if hi <= 0.5 {
                    assert!(bayes <= lo + 1e-15, "({p}, {q}): {bayes} > {lo}");
                }
                let probit = aggregate_probit(pair(p, q));
                assert!(
                    probit >= lo - 1e-12 && probit <= hi + 1e-12,
                    "({p}, {q}): probit {probit} outside [{lo}, {hi}]"
                );
            }
        }
    }

    #[test]
    fn full_overlap_pool_is_exactly_the_probit_average() {
        let full = Overlap::new(1.0).unwrap();
        for &p in &[0.001, 0.14, 0.5, 0.86, 0.999] {
            for &q in &[0.03, 0.5, 0.6, 0.97] {
                let pr = pair(p, q);
                assert_eq!(
                    aggregate_fixed_rho(pr, full).to_bits(),
                    aggregate_probit(pr).to_bits(),
                    "({p}, {q})"
                );
            }
        }
    }

    #[test]
    fn fixed_rho_approaches_probit_as_overlap_grows() {
        let pr = pair(0.6, 0.8);
        let probit = aggregate_probit(pr);
        let mut last = f64::INFINITY;
        for rho in [0.9, 0.99, 0.999] {
            let gap = (aggregate_fixed_rho(pr, Overlap::new(rho).unwrap()) - probit).abs();
            assert!(gap < last, "gap {gap} at rho = {rho} not below {last}");
            last = gap;
        }
    }

    #[test]
    fn zero_overlap_pool_follows_the_quantile_sign() {
        let zero = Overlap::new(0.0).unwrap();
        // Phi^-1(1/2) is exactly zero, so the balanced pair hits the tie.
        assert_eq!(aggregate_fixed_rho(pair(0.5, 0.5), zero), 0.5);
        assert_eq!(aggregate_fixed_rho(pair(0.6, 0.7), zero), 1.0);
        assert_eq!(aggregate_fixed_rho(pair(0.3, 0.4), zero), 0.0);
        assert_eq!(aggregate_fixed_rho(pair(0.2, 0.9), zero), 1.0);
    }

    #[test]
    fn bayes_beats_the_average_on_simulated_brier_score() {
        let records = simulate_fixed_rho(Overlap::new(0.5).unwrap(), 200_000, 88);
        let (mut bayes_score, mut average_score) = (0.0, 0.0);
        for r in &records {
            let pr = pair(r.p, r.q);
            let y = f64::from(r.outcome);
            bayes_score += (aggregate_bayes(pr) - y).powi(2);
            average_score += (aggregate_average(pr) - y).powi(2);
        }
        let n = records.len() as f64;
        assert!(
            bayes_score / n < average_score / n,
            "bayes {} vs average {}",
            bayes_score / n,
            average_score / n
        );
    }

    #[test]
    fn pair_accessors_and_validation() {
        let pr = pair(0.25, 0.75);
        assert_eq!(pr.p().value(), 0.25);
        assert_eq!(pr.q().value(), 0.75);
        assert!(ForecastPair::from_values(0.0, 0.5).is_err());
        assert!(ForecastPair::from_values(0.5, 1.0).is_err());
    }
}
