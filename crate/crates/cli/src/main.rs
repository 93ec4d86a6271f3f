//! Command-line surface over the aggregation library: one-shot aggregation,
//! the five-rule comparison table, aggregator curves, the forecast marginal,
//! Monte Carlo calibration/scoring reports, and the overlap posterior.
//!
//! Output contract: data goes to stdout, diagnostics to stderr. Exit codes:
//! `0` success, `2` usage error, `3` domain error, `4` numerical
//! non-convergence. Values are rounded half-away-from-zero to `--precision`
//! decimals before rendering, so the `csv` and `json` forms of a command
//! parse to identical numbers.

use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use poolcast_core::aggregators::{
    aggregate_average, aggregate_bayes, aggregate_fixed_rho, aggregate_log_odds,
    aggregate_probit, AggregatorKind, ForecastPair,
};
use poolcast_core::model::{
    marginal_density, simulate_fixed_rho, simulate_uniform_prior, Beta, Overlap, Probability,
    SimulationRecord, RECORD_CSV_HEADER,
};
use poolcast_core::oracle::{posterior_of_rho, PosteriorSummary};
use poolcast_core::Error;

#[derive(Parser)]
#[command(
    name = "poolcast",
    version,
    about = "Forecast aggregation under the Gaussian partial-information model"
)]
struct Cli {
    /// Output rendering
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Decimal places for reported values
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u8).range(0..=17))]
    precision: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Average,
    Probit,
    Logodds,
    FixedRho,
    Bayes,
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveMode {
    /// Both forecasts equal: g(x, x) for x in [1/2, 1]
    Diagonal,
    /// Second forecast splits the difference: g(p, (1+p)/2) for p in [1/2, 1]
    Offset,
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Calibration,
    Brier,
    Records,
}

#[derive(Subcommand)]
enum Command {
    /// Pool two forecasts with one rule
    Aggregate {
        /// Pooling rule
        #[arg(long, value_enum)]
        method: Method,
        /// First forecast, strictly inside (0, 1)
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        /// Second forecast, strictly inside (0, 1)
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
        /// Overlap for fixed-rho (required by that rule, rejected otherwise)
        #[arg(long, allow_negative_numbers = true)]
        rho: Option<f64>,
    },
    /// All five rules on one pair, rounded to 3 decimals
    Table {
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
    },
    /// Aggregator values along a one-parameter family of pairs
    Curves {
        #[arg(long, value_enum)]
        mode: CurveMode,
        /// Grid points across [1/2, 1], endpoints included
        #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u64).range(2..))]
        samples: u64,
    },
    /// Forecast marginal density on an open grid over (0, 1)
    Marginal {
        /// Observed-to-unobserved information ratio; > 0
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u64).range(2..))]
        samples: u64,
    },
    /// Monte Carlo reports from the generative model
    Simulate {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Fixed overlap for every trial
        #[arg(long, allow_negative_numbers = true)]
        rho: Option<f64>,
        /// Draw the overlap uniformly per trial instead
        #[arg(long)]
        prior: bool,
        #[arg(long, value_enum)]
        report: Report,
    },
    /// Posterior of the overlap given a forecast pair
    Posterior {
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
        /// Closed uniform grid size over [0, 1]
        #[arg(long, default_value_t = 1001)]
        grid: u64,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Convergence { .. } => 4,
            _ => 3,
        };
        let message = match &err {
            Error::Domain {
                name: "probability",
                ..
            } => format!(
                "{err}; clamp boundary forecasts into the open interval first \
                 (for example 1e-12 and 1 - 1e-12)"
            ),
            _ => err.to_string(),
        };
        Self { code, message }
    }
}

impl From<io::Error> for Failure {
    fn from(err: io::Error) -> Self {
        Self {
            code: 1,
            message: format!("i/o failure: {err}"),
        }
    }
}

fn usage(message: &str) -> Failure {
    Failure {
        code: 2,
        message: message.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let precision = usize::from(cli.precision);
    match &cli.command {
        Command::Aggregate { method, p, q, rho } => {
            cmd_aggregate(&mut out, cli.format, precision, *method, *p, *q, *rho)?;
        }
        Command::Table { p, q } => cmd_table(&mut out, cli.format, *p, *q)?,
        Command::Curves { mode, samples } => {
            cmd_curves(&mut out, cli.format, precision, *mode, *samples)?;
        }
        Command::Marginal { beta, samples } => {
            cmd_marginal(&mut out, cli.format, precision, *beta, *samples)?;
        }
        Command::Simulate {
            trials,
            seed,
            rho,
            prior,
            report,
        } => cmd_simulate(
            &mut out, cli.format, precision, *trials, *seed, *rho, *prior, *report,
        )?,
        Command::Posterior { p, q, grid } => {
            cmd_posterior(&mut out, cli.format, precision, *p, *q, *grid)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Round half away from zero to `precision` decimals; every reported value
/// passes through here so csv text and json numbers agree after parsing.
fn round_decimal(value: f64, precision: usize) -> f64 {
    let scale = 10f64.powi(precision as i32);
    (value * scale).round() / scale
}

fn cell(value: f64, precision: usize) -> String {
    format!("{:.precision$}", round_decimal(value, precision))
}

/// Shared table/csv row renderer: csv joins with commas; table pads each
/// column to its width with a two-space separator and no trailing padding.
fn write_rows<W: Write>(
    out: &mut W,
    format: OutputFormat,
    header: &[&str],
    rows: &[Vec<String>],
) -> io::Result<()> {
    if format == OutputFormat::Csv {
        writeln!(out, "{}", header.join(","))?;
        for row in rows {
            writeln!(out, "{}", row.join(","))?;
        }
        return Ok(());
    }
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (width, cell) in widths.iter_mut().zip(row) {
            *width = (*width).max(cell.len());
        }
    }
    let pad = |cells: &[&str]| {
        let mut line = String::new();
        for (i, (cell, width)) in cells.iter().zip(&widths).enumerate() {
            line.push_str(cell);
            if i + 1 < cells.len() {
                for _ in 0..(width - cell.len() + 2) {
                    line.push(' ');
                }
            }
        }
        line
    };
    writeln!(out, "{}", pad(header))?;
    for row in rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        writeln!(out, "{}", pad(&cells))?;
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("report serialization cannot fail")
}

#[derive(Serialize)]
struct Rows<T: Serialize> {
    rows: Vec<T>,
}

fn forecast_pair(p: f64, q: f64) -> Result<ForecastPair, Failure> {
    Ok(ForecastPair::from_values(p, q)?)
}

fn half_overlap() -> Overlap {
    Overlap::new(0.5).expect("1/2 is a valid overlap")
}

#[allow(clippy::too_many_arguments)]
fn cmd_aggregate<W: Write>(
    out: &mut W,
    format: OutputFormat,
    precision: usize,
    method: Method,
    p: f64,
    q: f64,
    rho: Option<f64>,
) -> Result<(), Failure> {
    let kind = match (method, rho) {
        (Method::FixedRho, Some(r)) => AggregatorKind::FixedRho(Overlap::new(r)?),
        (Method::FixedRho, None) => {
            return Err(usage("--rho is required for --method fixed-rho"))
        }
        (_, Some(_)) => {
            return Err(usage("--rho only applies to --method fixed-rho"))
        }
        (Method::Average, None) => AggregatorKind::Average,
        (Method::Probit, None) => AggregatorKind::Probit,
        (Method::Logodds, None) => AggregatorKind::LogOdds,
        (Method::Bayes, None) => AggregatorKind::Bayes,
    };
    let value = round_decimal(kind.aggregate(forecast_pair(p, q)?), precision);
    match format {
        OutputFormat::Table => writeln!(out, "{value:.precision$}")?,
        OutputFormat::Csv => {
            writeln!(out, "value")?;
            writeln!(out, "{value:.precision$}")?;
        }
        OutputFormat::Json => writeln!(out, "{}", to_json(&serde_json::json!({ "value": value })))?,
    }
    Ok(())
}

#[derive(Serialize)]
struct TableReport {
    average: f64,
    probit: f64,
    fixed_rho_half: f64,
    bayes: f64,
    log_odds: f64,
}

fn cmd_table<W: Write>(out: &mut W, format: OutputFormat, p: f64, q: f64) -> Result<(), Failure> {
    // The comparison table is always rounded to the nearest 0.001 — that is
    // its definition, independent of --precision.
    const TABLE_PRECISION: usize = 3;
    let pair = forecast_pair(p, q)?;
    let report = TableReport {
        average: round_decimal(aggregate_average(pair), TABLE_PRECISION),
        probit: round_decimal(aggregate_probit(pair), TABLE_PRECISION),
        fixed_rho_half: round_decimal(aggregate_fixed_rho(pair, half_overlap()), TABLE_PRECISION),
        bayes: round_decimal(aggregate_bayes(pair), TABLE_PRECISION),
        log_odds: round_decimal(aggregate_log_odds(pair), TABLE_PRECISION),
    };
    if format == OutputFormat::Json {
        writeln!(out, "{}", to_json(&report))?;
        return Ok(());
    }
    let rows: Vec<Vec<String>> = [
        ("average", report.average),
        ("probit", report.probit),
        ("fixed_rho_half", report.fixed_rho_half),
        ("bayes", report.bayes),
        ("log_odds", report.log_odds),
    ]
    .into_iter()
    .map(|(method, value)| vec![method.to_string(), format!("{value:.TABLE_PRECISION$}")])
    .collect();
    write_rows(out, format, &["method", "value"], &rows)?;
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    x: f64,
    average: f64,
    probit: f64,
    fixed_rho_half: f64,
    bayes: f64,
    log_odds: f64,
}

fn cmd_curves<W: Write>(
    out: &mut W,
    format: OutputFormat,
    precision: usize,
    mode: CurveMode,
    samples: u64,
) -> Result<(), Failure> {
    // The x = 1 endpoint is on the grid but outside the aggregators' open
    // domain; aggregation happens at the clamped forecast while the row
    // still reports the nominal x.
    let clamp = |v: f64| v.min(1.0 - 1e-12);
    let half = half_overlap();
    let rows: Vec<CurveRow> = (0..samples)
        .map(|i| {
            let x = 0.5 + 0.5 * (i as f64 / (samples - 1) as f64);
            let (p, q) = match mode {
                CurveMode::Diagonal => (x, x),
                CurveMode::Offset => (x, (1.0 + x) / 2.0),
            };
            let pair = ForecastPair::from_values(clamp(p), clamp(q))
                .expect("curve forecasts are clamped inside (0,1)");
            CurveRow {
                x: round_decimal(x, precision),
                average: round_decimal(aggregate_average(pair), precision),
                probit: round_decimal(aggregate_probit(pair), precision),
                fixed_rho_half: round_decimal(aggregate_fixed_rho(pair, half), precision),
                bayes: round_decimal(aggregate_bayes(pair), precision),
                log_odds: round_decimal(aggregate_log_odds(pair), precision),
            }
        })
        .collect();
    if format == OutputFormat::Json {
        writeln!(out, "{}", to_json(&Rows { rows }))?;
        return Ok(());
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            [r.x, r.average, r.probit, r.fixed_rho_half, r.bayes, r.log_odds]
                .iter()
                .map(|v| format!("{v:.precision$}"))
                .collect()
        })
        .collect();
    write_rows(
        out,
        format,
        &["x", "average", "probit", "fixed_rho_half", "bayes", "log_odds"],
        &cells,
    )?;
    Ok(())
}

#[derive(Serialize)]
struct MarginalRow {
    t: f64,
    density: f64,
}

fn cmd_marginal<W: Write>(
    out: &mut W,
    format: OutputFormat,
    precision: usize,
    beta: f64,
    samples: u64,
) -> Result<(), Failure> {
    let beta = Beta::new(beta)?;
    let rows: Vec<MarginalRow> = (0..samples)
        .map(|i| {
            // Open grid: midpoints keep clear of the endpoint singularities.
            let t = (i as f64 + 0.5) / samples as f64;
            let t = Probability::new(t).expect("midpoint grid stays inside (0,1)");
            MarginalRow {
                t: round_decimal(t.value(), precision),
                density: round_decimal(marginal_density(t, beta), precision),
            }
        })
        .collect();
    if format == OutputFormat::Json {
        writeln!(out, "{}", to_json(&Rows { rows }))?;
        return Ok(());
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![format!("{:.precision$}", r.t), format!("{:.precision$}", r.density)])
        .collect();
    write_rows(out, format, &["t", "density"], &cells)?;
    Ok(())
}

/// The five rules reported by `simulate`, in the comparison-table order; the
/// fixed-overlap rule pools at `pool` (the simulation overlap, or 1/2 under
/// the uniform prior).
fn report_aggregators(pool: Overlap) -> [(&'static str, AggregatorKind); 5] {
    [
        ("average", AggregatorKind::Average),
        ("probit", AggregatorKind::Probit),
        ("fixed_rho", AggregatorKind::FixedRho(pool)),
        ("bayes", AggregatorKind::Bayes),
        ("log_odds", AggregatorKind::LogOdds),
    ]
}

fn record_pair(record: &SimulationRecord) -> ForecastPair {
    ForecastPair::from_values(record.p, record.q)
        .expect("simulated forecasts are clamped inside (0,1)")
}

#[derive(Serialize)]
struct CalibrationRow {
    aggregator: &'static str,
    bin_lo: f64,
    bin_hi: f64,
    count: u64,
    empirical: f64,
    expected: f64,
}

#[derive(Serialize)]
struct BrierRow {
    aggregator: &'static str,
    mean_brier: f64,
    std_error: f64,
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate<W: Write>(
    out: &mut W,
    format: OutputFormat,
    precision: usize,
    trials: u64,
    seed: u64,
    rho: Option<f64>,
    prior: bool,
    report: Report,
) -> Result<(), Failure> {
    let records = match (rho, prior) {
        (Some(_), true) => return Err(usage("--rho and --prior are mutually exclusive")),
        (None, false) => return Err(usage("exactly one of --rho or --prior is required")),
        (Some(r), false) => simulate_fixed_rho(Overlap::new(r)?, trials, seed),
        (None, true) => simulate_uniform_prior(trials, seed),
    };
    let pool = rho.map_or_else(half_overlap, |r| {
        Overlap::new(r).expect("validated above")
    });
    match report {
        Report::Records => {
            if format == OutputFormat::Json {
                for record in &records {
                    writeln!(out, "{}", to_json(record))?;
                }
            } else {
                writeln!(out, "{RECORD_CSV_HEADER}")?;
                for record in &records {
                    writeln!(out, "{}", record.csv_row())?;
                }
            }
        }
        Report::Calibration => {
            let mut rows = Vec::new();
            for (label, kind) in report_aggregators(pool) {
                // 20 width-0.05 bins over [0,1]; the last bin is closed.
                let mut bins = [(0u64, 0.0f64, 0.0f64); 20];
                for record in &records {
                    let g = kind.aggregate(record_pair(record));
                    let index = ((g / 0.05) as usize).min(19);
                    let bin = &mut bins[index];
                    bin.0 += 1;
                    bin.1 += f64::from(record.outcome);
                    bin.2 += g;
                }
                for (index, &(count, hits, mass)) in bins.iter().enumerate() {
                    if count == 0 {
                        continue;
                    }
                    rows.push(CalibrationRow {
                        aggregator: label,
                        bin_lo: round_decimal(0.05 * index as f64, precision),
                        bin_hi: round_decimal(0.05 * (index + 1) as f64, precision),
                        count,
                        empirical: round_decimal(hits / count as f64, precision),
                        expected: round_decimal(mass / count as f64, precision),
                    });
                }
            }
            if format == OutputFormat::Json {
                writeln!(out, "{}", to_json(&Rows { rows }))?;
                return Ok(());
            }
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.aggregator.to_string(),
                        format!("{:.precision$}", r.bin_lo),
                        format!("{:.precision$}", r.bin_hi),
                        r.count.to_string(),
                        format!("{:.precision$}", r.empirical),
                        format!("{:.precision$}", r.expected),
                    ]
                })
                .collect();
            write_rows(
                out,
                format,
                &["aggregator", "bin_lo", "bin_hi", "count", "empirical", "expected"],
                &cells,
            )?;
        }
        Report::Brier => {
            let rows: Vec<BrierRow> = report_aggregators(pool)
                .into_iter()
                .map(|(label, kind)| {
                    let n = records.len() as f64;
                    let (mut sum, mut sum_sq) = (0.0, 0.0);
                    for record in &records {
                        let loss =
                            (kind.aggregate(record_pair(record)) - f64::from(record.outcome))
                                .powi(2);
                        sum += loss;
                        sum_sq += loss * loss;
                    }
                    let mean = sum / n;
                    let std_error = if records.len() > 1 {
                        let variance = (sum_sq - sum * sum / n) / (n - 1.0);
                        (variance.max(0.0) / n).sqrt()
                    } else {
                        0.0
                    };
                    BrierRow {
                        aggregator: label,
                        mean_brier: round_decimal(mean, precision),
                        std_error: round_decimal(std_error, precision),
                    }
                })
                .collect();
            if format == OutputFormat::Json {
                writeln!(out, "{}", to_json(&Rows { rows }))?;
                return Ok(());
            }
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.aggregator.to_string(),
                        format!("{:.precision$}", r.mean_brier),
                        format!("{:.precision$}", r.std_error),
                    ]
                })
                .collect();
            write_rows(out, format, &["aggregator", "mean_brier", "std_error"], &cells)?;
        }
    }
    Ok(())
}

fn cmd_posterior<W: Write>(
    out: &mut W,
    format: OutputFormat,
    precision: usize,
    p: f64,
    q: f64,
    grid: u64,
) -> Result<(), Failure> {
    let summary = posterior_of_rho(forecast_pair(p, q)?, grid as usize)?;
    let rounded = PosteriorSummary {
        normalizing_constant: round_decimal(summary.normalizing_constant, precision),
        mean_rho: round_decimal(summary.mean_rho, precision),
        density_samples: summary
            .density_samples
            .iter()
            .map(|&(r, f)| (round_decimal(r, precision), round_decimal(f, precision)))
            .collect(),
    };
    match format {
        OutputFormat::Json => writeln!(out, "{}", to_json(&rounded))?,
        OutputFormat::Csv => {
            writeln!(out, "rho,density")?;
            for &(r, f) in &rounded.density_samples {
                writeln!(out, "{},{}", cell(r, precision), cell(f, precision))?;
            }
        }
        OutputFormat::Table => {
            writeln!(
                out,
                "normalizing_constant  {:.precision$}",
                rounded.normalizing_constant
            )?;
            writeln!(out, "mean_rho              {:.precision$}", rounded.mean_rho)?;
            writeln!(out)?;
            let cells: Vec<Vec<String>> = rounded
                .density_samples
                .iter()
                .map(|&(r, f)| vec![format!("{r:.precision$}"), format!("{f:.precision$}")])
                .collect();
            write_rows(out, format, &["rho", "density"], &cells)?;
        }
    }
    Ok(())
}
