//! Independent numerical evaluation of the closed forms behind the Bayesian
//! aggregator: the overlap likelihood, the posterior integrals `I1` and
//! `I2`, the aggregate as a quotient of quadratures, and the posterior
//! density of the overlap itself. The closed forms elsewhere in the crate
//! are verified against these routes rather than trusted.
//!
//! Everything is computed in the reduced normalization that drops the
//! overlap-independent factor `exp((x^2 + y^2)/2)`: only ratios of the
//! integrals ever matter, and the reduced form cannot overflow for extreme
//! forecasts.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::aggregators::ForecastPair;
use crate::error::{Error, Result};
use crate::model::Overlap;
use crate::quad::{integrate, QuadratureSpec};
use crate::special::{phi, phi_inv};

/// `lambda_rho` for quantiles `x`, `y`, valid for `0 <= r < 1`.
fn lambda(x: f64, y: f64, r: f64) -> f64 {
    let omr2 = 1.0 - r * r;
    // Grouped so the arithmetic is symmetric in (x, y) bit for bit.
    let quadratic = (r * r) * (x * x + y * y) - (2.0 * r) * (x * y);
    (-quadratic / (2.0 * omr2)).exp() / omr2.sqrt()
}

/// Likelihood of the forecast pair given overlap `rho`, up to a pair-only
/// constant:
///
/// ```text
/// lambda_rho(x, y) = (1 - rho^2)^(-1/2)
///     exp[-(rho^2 x^2 - 2 rho x y + rho^2 y^2) / (2 (1 - rho^2))]
/// ```
///
/// with `x`, `y` the Gaussian quantiles of the two forecasts. At `rho = 0`
/// this is exactly `1`; at `rho = 1` the pair concentrates on `x = y` and
/// the likelihood degenerates, returning a singularity error.
pub fn likelihood(pair: ForecastPair, rho: Overlap) -> Result<f64> {
    let r = rho.value();
    if r >= 1.0 {
        return Err(Error::Singular { rho: r });
    }
    Ok(lambda(
        phi_inv(pair.p().value()),
        phi_inv(pair.q().value()),
        r,
    ))
}

/// The reduced overlap integrand `lambda_rho exp(-(x^2 + y^2)/2)` under the
/// substitution `rho = sin(theta)`, Jacobian included; algebraically
/// `exp(-(x^2 - 2 x y sin theta + y^2) / (2 cos^2 theta))`. Smooth on
/// `[0, pi/2)` and vanishing at the far endpoint unless `x = y`.
fn reduced_weight(x: f64, y: f64, theta: f64) -> f64 {
    let s = theta.sin();
    let c2 = theta.cos().powi(2);
    (-((x * x + y * y) - (2.0 * s) * (x * y)) / (2.0 * c2)).exp()
}

/// `Phi(sum / sqrt(2 s (1 + s)))` — the probability of the event given both
/// quantiles at overlap `s` — with its `s -> 0` limit `{0, 1/2, 1}` by the
/// sign of `sum`.
fn event_gate(sum: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return if sum > 0.0 {
            1.0
        } else if sum < 0.0 {
            0.0
        } else {
            0.5
        };
    }
    phi(sum / (2.0 * s * (1.0 + s)).sqrt())
}

/// Closed form of the posterior normalizer (the overlap integral of the
/// reduced likelihood): `2 pi (1 - max(p, q)) min(p, q)`.
pub fn i2_closed(pair: ForecastPair) -> f64 {
    let lo = pair.p().value().min(pair.q().value());
    let hi = pair.p().value().max(pair.q().value());
    TAU * (1.0 - hi) * lo
}

/// The normalizer by adaptive quadrature of the reduced integrand over
/// `theta` in `[0, pi/2]`.
pub fn i2_quadrature(pair: ForecastPair, spec: &QuadratureSpec) -> Result<f64> {
    let x = phi_inv(pair.p().value());
    let y = phi_inv(pair.q().value());
    Ok(integrate(|theta| reduced_weight(x, y, theta), 0.0, FRAC_PI_2, spec)?.value)
}

/// Closed form of the posterior numerator (the normalizer integrand times
/// the event probability). Writing `lo <= hi` for the sorted pair and
/// `a = 1 - hi`:
///
/// ```text
/// lo + hi >= 1:  2 pi a (lo - a/2)
/// lo + hi <= 1:  pi lo^2
/// ```
///
/// These factor the two-case display `2 pi [a - a^2/2 - a (1 - lo)]` and
/// `2 pi [a - a^2/2 - (1 - lo^2 - hi^2)/2]`; the factoring avoids the
/// cancellation the second display suffers when both forecasts are small.
pub fn i1_closed(pair: ForecastPair) -> f64 {
    let lo = pair.p().value().min(pair.q().value());
    let hi = pair.p().value().max(pair.q().value());
    let a = 1.0 - hi;
    if lo + hi >= 1.0 {
        TAU * a * (lo - a / 2.0)
    } else {
        PI * lo * lo
    }
}

/// The numerator by adaptive quadrature: the reduced integrand gated by the
/// event probability, with the gate's `theta -> 0` limit supplied explicitly
/// (an indicator in the sign of `x + y`).
pub fn i1_quadrature(pair: ForecastPair, spec: &QuadratureSpec) -> Result<f64> {
    let x = phi_inv(pair.p().value());
    let y = phi_inv(pair.q().value());
    let sum = x + y;
    Ok(integrate(
        |theta| event_gate(sum, theta.sin()) * reduced_weight(x, y, theta),
        0.0,
        FRAC_PI_2,
        spec,
    )?
    .value)
}

/// The Bayesian aggregate as the quotient of the two quadratures — the
/// fully numerical route to the closed-form aggregator.
///
/// A first pass sizes the normalizer, then both integrals are recomputed to
/// an absolute tolerance proportional to it, so the quotient carries roughly
/// `rel_tol` accuracy even when the integrals themselves are tiny (extreme
/// forecast pairs). The result is clamped to `[0, 1]`.
pub fn posterior_quadrature(pair: ForecastPair, spec: &QuadratureSpec) -> Result<f64> {
    let first = i2_quadrature(pair, spec)?;
    let scaled = QuadratureSpec {
        abs_tol: spec
            .abs_tol
            .min(spec.rel_tol * first)
            .max(f64::MIN_POSITIVE),
        ..spec.clone()
    };
    let i2 = i2_quadrature(pair, &scaled)?;
    let i1 = i1_quadrature(pair, &scaled)?;
    Ok((i1 / i2).clamp(0.0, 1.0))
}

/// Posterior of the overlap given a forecast pair, sampled on a closed
/// uniform grid and normalized by its own trapezoid sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    /// Trapezoid value of the overlap integral of the likelihood (up to the
    /// constant shared with the density samples); always positive.
    pub normalizing_constant: f64,
    /// Posterior mean of the overlap, in `[0, 1]`.
    pub mean_rho: f64,
    /// `(rho, normalized density)` pairs on the grid; serialized under the
    /// key `density` as an array of two-element arrays.
    #[serde(rename = "density")]
    pub density_samples: Vec<(f64, f64)>,
}

/// Sample the posterior density of the overlap on the uniform closed grid
/// `0, h, 2h, ..., 1` with `h = 1/(grid_size - 1)`, normalized so the
/// trapezoid sum of the samples is exactly one.
///
/// The `rho = 1` endpoint is singular: the likelihood tends to `0` when the
/// two forecast quantiles differ and diverges like `(1 - rho)^(-1/2)` when
/// they coincide. The endpoint sample takes the limit in the first case and
/// the half-step truncation `lambda(1 - h/2)` in the second; the singularity
/// is integrable, so the trapezoid total converges as the grid refines.
pub fn posterior_of_rho(pair: ForecastPair, grid_size: usize) -> Result<PosteriorSummary> {
    if grid_size < 2 {
        return Err(Error::Domain {
            name: "grid_size",
            constraint: ">= 2",
            value: grid_size as f64,
        });
    }
    let n = grid_size;
    let h = 1.0 / (n - 1) as f64;
    let x = phi_inv(pair.p().value());
    let y = phi_inv(pair.q().value());
    let mut samples: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            if i + 1 < n {
                let rho = i as f64 * h;
                (rho, lambda(x, y, rho))
            } else if x == y {
                (1.0, lambda(x, y, 1.0 - h / 2.0))
            } else {
                (1.0, 0.0)
            }
        })
        .collect();

    let trapezoid = |values: &[(f64, f64)], f: &dyn Fn(f64, f64) -> f64| {
        let ends = 0.5 * (f(values[0].0, values[0].1) + f(values[n - 1].0, values[n - 1].1));
        let interior: f64 = values[1..n - 1].iter().map(|&(r, v)| f(r, v)).sum();
        (ends + interior) * h
    };
    let normalizing_constant = trapezoid(&samples, &|_, v| v);
    let weighted = trapezoid(&samples, &|r, v| r * v);
    let mean_rho = (weighted / normalizing_constant).clamp(0.0, 1.0);
    for sample in &mut samples {
        sample.1 /= normalizing_constant;
    }
    Ok(PosteriorSummary {
        normalizing_constant,
        mean_rho,
        density_samples: samples,
    })
}
