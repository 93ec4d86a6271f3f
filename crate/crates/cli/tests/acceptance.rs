//! Acceptance gate for the whole stack. Each test checks one end-to-end
//! claim at a pinned tolerance and prints a single
//! `acceptance N (<name>): PASS|FAIL` line before asserting, so a full run
//! under `--nocapture` reads as a nine-line scorecard.

use std::f64::consts::TAU;
use std::process::Command;
use std::time::Instant;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use poolcast_core::aggregators::{
    aggregate_average, aggregate_bayes, aggregate_fixed_rho, aggregate_log_odds,
    aggregate_probit, ForecastPair,
};
use poolcast_core::model::{
    marginal_density, simulate_fixed_rho, simulate_uniform_prior, Beta, Overlap, Probability,
    SimulationRecord,
};
use poolcast_core::oracle::{
    i1_closed, i1_quadrature, i2_closed, i2_quadrature, posterior_quadrature,
};
use poolcast_core::quad::{integrate, QuadratureSpec};
use poolcast_core::special::{norm_cdf, norm_inv_cdf, norm_pdf};

fn report(number: u8, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {number} ({name}): {verdict}{detail}");
    assert!(pass, "acceptance {number} ({name}) failed{detail}");
}

/// The shared evaluation grid: {0.01, ..., 0.99} squared.
fn grid() -> Vec<ForecastPair> {
    let mut pairs = Vec::with_capacity(99 * 99);
    for i in 1..=99u32 {
        for j in 1..=99u32 {
            pairs.push(
                ForecastPair::from_values(f64::from(i) / 100.0, f64::from(j) / 100.0)
                    .expect("grid points lie inside (0,1)"),
            );
        }
    }
    pairs
}

fn half_overlap() -> Overlap {
    Overlap::new(0.5).expect("1/2 is a valid overlap")
}

#[test]
fn acceptance_1_reference_table() {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_poolcast"))
        .args(["table", "--p", "0.6", "--q", "0.8"])
        .output()
        .expect("the poolcast binary should run");
    let elapsed = start.elapsed();
    let expected = "method          value\n\
                    average         0.700\n\
                    probit          0.708\n\
                    fixed_rho_half  0.814\n\
                    bayes           0.833\n\
                    log_odds        0.857\n";
    let pass = out.status.success() && out.stdout == expected.as_bytes() && elapsed.as_secs_f64() < 1.0;
    report(
        1,
        "reference comparison table",
        pass,
        &format!(" [{} ms]", elapsed.as_millis()),
    );
}

#[test]
fn acceptance_2_one_shot_aggregator_matches_posterior_ratio() {
    let spec = QuadratureSpec::default();
    let start = Instant::now();
    let mut worst = 0.0f64;
    for pair in grid() {
        let numeric = posterior_quadrature(pair, &spec).expect("posterior quadrature converges");
        worst = worst.max((numeric - aggregate_bayes(pair)).abs());
    }
    report(
        2,
        "one-shot aggregator equals the posterior integral ratio",
        worst <= 1e-6,
        &format!(" [max |diff| {worst:.2e}; {:.1} s]", start.elapsed().as_secs_f64()),
    );
}

#[test]
fn acceptance_3_event_window_integral_closed_form() {
    let spec = QuadratureSpec::default();
    let mut worst = 0.0f64;
    for pair in grid() {
        let (p, q) = (pair.p().value(), pair.q().value());
        let closed = TAU * (1.0 - p.max(q)) * p.min(q);
        let numeric = i2_quadrature(pair, &spec).expect("window quadrature converges");
        worst = worst.max((numeric - closed).abs());
    }
    report(
        3,
        "event-window integral matches its closed form",
        worst <= 1e-8,
        &format!(" [max |diff| {worst:.2e}]"),
    );
}

/// Orthant probability of a standard trivariate normal at `(b1, b2, 0)` when
/// the first two coordinates are perfectly correlated and each correlates
/// with the third at `1/sqrt(2)`: the minimum of the pair dominates.
fn trivariate_full_overlap(b1: f64, b2: f64) -> f64 {
    let low = norm_cdf(b1.min(b2)).expect("finite bound");
    low - low * low / 2.0
}

/// Same orthant probability when the first two coordinates are independent:
/// one product or reflection formula per half-plane of `b1 + b2`.
fn trivariate_zero_overlap(b1: f64, b2: f64) -> f64 {
    if b1 + b2 <= 0.0 {
        norm_cdf(b1).expect("finite bound") * norm_cdf(b2).expect("finite bound")
    } else {
        let u = norm_cdf(-b1).expect("finite bound");
        let v = norm_cdf(-b2).expect("finite bound");
        (1.0 - u * u - v * v) / 2.0
    }
}

#[test]
fn acceptance_4_conditioning_integral_matches_trivariate_bounds() {
    let spec = QuadratureSpec::default();
    let start = Instant::now();
    let mut worst = 0.0f64;
    for pair in grid() {
        let b1 = -norm_inv_cdf(pair.p().value()).expect("interior forecast");
        let b2 = -norm_inv_cdf(pair.q().value()).expect("interior forecast");
        let anchored = TAU * (trivariate_full_overlap(b1, b2) - trivariate_zero_overlap(b1, b2));
        let numeric = i1_quadrature(pair, &spec).expect("conditioning quadrature converges");
        worst = worst.max((numeric - anchored).abs());
    }
    report(
        4,
        "conditioning integral equals the trivariate-normal difference",
        worst <= 1e-8,
        &format!(" [max |diff| {worst:.2e}; {:.1} s]", start.elapsed().as_secs_f64()),
    );
}

#[test]
fn acceptance_5_full_overlap_recovers_the_probit_pool() {
    let full = Overlap::new(1.0).expect("1 is a valid overlap");
    let mut worst = 0.0f64;
    for pair in grid() {
        worst = worst.max((aggregate_fixed_rho(pair, full) - aggregate_probit(pair)).abs());
    }
    let pair = ForecastPair::from_values(0.6, 0.8).expect("interior pair");
    let probit = aggregate_probit(pair);
    let gaps: Vec<f64> = [0.9, 0.99, 0.999]
        .iter()
        .map(|&rho| {
            let overlap = Overlap::new(rho).expect("valid overlap");
            (aggregate_fixed_rho(pair, overlap) - probit).abs()
        })
        .collect();
    let shrinking = gaps[0] > gaps[1] && gaps[1] > gaps[2];
    report(
        5,
        "full-overlap pool degenerates to probit",
        worst <= 1e-12 && shrinking,
        &format!(" [max |diff| {worst:.2e}; gaps {:.2e} > {:.2e} > {:.2e}]", gaps[0], gaps[1], gaps[2]),
    );
}

#[test]
fn acceptance_6_forecasts_are_marginally_uniform() {
    // Empirical check: simulated forecasts at a representative overlap pass
    // a Kolmogorov-Smirnov test against the uniform law at the 1% level.
    let records = simulate_fixed_rho(half_overlap(), 100_000, 61);
    let mut forecasts: Vec<f64> = records.iter().map(|r| r.p).collect();
    forecasts.sort_by(f64::total_cmp);
    let n = forecasts.len() as f64;
    let mut ks = 0.0f64;
    for (i, &value) in forecasts.iter().enumerate() {
        ks = ks
            .max(value - i as f64 / n)
            .max((i + 1) as f64 / n - value);
    }
    let critical = 1.63 / n.sqrt();

    // Analytic check: the non-uniform density for unbalanced information
    // still integrates to one. The mass in the extreme tails is below f64
    // resolution in forecast space, so substitute t = Phi(sqrt(beta) u),
    // integrate over u, and account for the truncated tails exactly.
    let spec = QuadratureSpec::default();
    let mut worst_mass = 0.0f64;
    for ratio in [3.0 / 7.0, 1.0, 7.0 / 3.0] {
        let beta = Beta::new(ratio).expect("positive ratio");
        let scale = ratio.sqrt();
        let u_max = norm_inv_cdf(1.0 - 1e-12).expect("interior probability") / scale;
        let bulk = integrate(
            |u| {
                let t = Probability::new(norm_cdf(scale * u).expect("finite argument"))
                    .expect("interior forecast");
                marginal_density(t, beta) * scale * norm_pdf(scale * u)
            },
            -u_max,
            u_max,
            &spec,
        )
        .expect("marginal quadrature converges")
        .value;
        let tails = 2.0 * norm_cdf(-u_max).expect("finite argument");
        worst_mass = worst_mass.max((bulk + tails - 1.0).abs());
    }
    report(
        6,
        "forecast marginals are uniform and densities integrate to one",
        ks < critical && worst_mass <= 1e-8,
        &format!(" [KS {ks:.4} < {critical:.4}; max |mass - 1| {worst_mass:.2e}]"),
    );
}

/// Largest violation of the per-bin calibration allowance
/// `max(0.01, 3 binomial standard errors)` over width-0.05 bins; a
/// non-positive return means every occupied bin is inside its allowance.
fn worst_calibration_excess(
    records: &[SimulationRecord],
    aggregate: impl Fn(ForecastPair) -> f64,
) -> f64 {
    let mut bins = [(0u64, 0.0f64, 0.0f64); 20];
    for record in records {
        let pair = ForecastPair::from_values(record.p, record.q)
            .expect("simulated forecasts are interior");
        let value = aggregate(pair);
        let bin = &mut bins[((value / 0.05) as usize).min(19)];
        bin.0 += 1;
        bin.1 += f64::from(record.outcome);
        bin.2 += value;
    }
    let mut worst = f64::NEG_INFINITY;
    for (count, hits, mass) in bins {
        if count == 0 {
            continue;
        }
        let expected = mass / count as f64;
        let empirical = hits / count as f64;
        let allowance = (3.0 * (expected * (1.0 - expected) / count as f64).sqrt()).max(0.01);
        worst = worst.max((empirical - expected).abs() - allowance);
    }
    worst
}

#[test]
fn acceptance_7_posterior_aggregators_are_calibrated() {
    let start = Instant::now();
    let prior_records = simulate_uniform_prior(1_000_000, 81);
    let prior_excess = worst_calibration_excess(&prior_records, aggregate_bayes);
    let half = half_overlap();
    let fixed_records = simulate_fixed_rho(half, 1_000_000, 82);
    let fixed_excess =
        worst_calibration_excess(&fixed_records, |pair| aggregate_fixed_rho(pair, half));
    report(
        7,
        "posterior aggregators are calibrated bin by bin",
        prior_excess <= 0.0 && fixed_excess <= 0.0,
        &format!(
            " [worst excess: prior {prior_excess:.4}, fixed {fixed_excess:.4}; {:.1} s]",
            start.elapsed().as_secs_f64()
        ),
    );
}

fn brier_mean_and_se(
    records: &[SimulationRecord],
    aggregate: impl Fn(ForecastPair) -> f64,
) -> (f64, f64) {
    let n = records.len() as f64;
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for record in records {
        let pair = ForecastPair::from_values(record.p, record.q)
            .expect("simulated forecasts are interior");
        let loss = (aggregate(pair) - f64::from(record.outcome)).powi(2);
        sum += loss;
        sum_sq += loss * loss;
    }
    let mean = sum / n;
    let variance = (sum_sq - sum * sum / n) / (n - 1.0);
    (mean, (variance.max(0.0) / n).sqrt())
}

#[test]
fn acceptance_8_brier_score_dominance() {
    // Same seeded uniform-prior run as the calibration check.
    let records = simulate_uniform_prior(1_000_000, 81);
    let (bayes_mean, bayes_se) = brier_mean_and_se(&records, aggregate_bayes);
    let half = half_overlap();
    type Pool = Box<dyn Fn(ForecastPair) -> f64>;
    let baselines: [(&str, Pool); 4] = [
        ("average", Box::new(aggregate_average)),
        ("probit", Box::new(aggregate_probit)),
        ("log_odds", Box::new(aggregate_log_odds)),
        ("fixed_rho_half", Box::new(move |pair| aggregate_fixed_rho(pair, half))),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (label, aggregate) in baselines {
        let (mean, se) = brier_mean_and_se(&records, aggregate);
        let combined = (bayes_se * bayes_se + se * se).sqrt();
        let margin = (mean - bayes_mean) / combined;
        pass &= margin >= 2.0;
        detail.push_str(&format!(" {label} +{margin:.1}se"));
    }
    report(
        8,
        "one-shot aggregator dominates every baseline on Brier score",
        pass,
        &format!(" [{}]", detail.trim_start()),
    );
}

#[test]
fn acceptance_9_piecewise_closed_form_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let mut worst_symmetry = 0.0f64;
    let mut worst_complement = 0.0f64;
    let mut worst_seam = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for _ in 0..100_000 {
        let p: f64 = rng.sample(Open01);
        let q: f64 = rng.sample(Open01);
        let pair = ForecastPair::from_values(p, q).expect("open-interval draw");
        let swapped = ForecastPair::from_values(q, p).expect("open-interval draw");
        let value = aggregate_bayes(pair);
        worst_symmetry = worst_symmetry.max((value - aggregate_bayes(swapped)).abs());

        let complement =
            ForecastPair::from_values(1.0 - p, 1.0 - q).expect("open-interval draw");
        worst_complement =
            worst_complement.max((aggregate_bayes(complement) - (1.0 - value)).abs());

        // Both branch formulas meet at forecasts summing to one, where the
        // aggregate is exactly 1/2. Keep the seam coordinate away from the
        // extremes, where a one-ulp rounding of 1 - x alone overwhelms the
        // tolerance.
        let x = 0.001 + 0.998 * p;
        let seam = ForecastPair::from_values(x, 1.0 - x).expect("interior pair");
        worst_seam = worst_seam.max((aggregate_bayes(seam) - 0.5).abs());

        worst_ratio = worst_ratio.max((i1_closed(pair) / i2_closed(pair) - value).abs());
    }
    let pass = worst_symmetry <= 1e-12
        && worst_complement <= 1e-12
        && worst_seam <= 1e-12
        && worst_ratio <= 1e-12;
    report(
        9,
        "piecewise closed form is symmetric, complement-consistent, and continuous",
        pass,
        &format!(
            " [symmetry {worst_symmetry:.1e}; complement {worst_complement:.1e}; seam {worst_seam:.1e}; ratio {worst_ratio:.1e}]"
        ),
    );
}
