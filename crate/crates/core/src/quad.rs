//! Adaptive numerical integration on finite intervals.
//!
//! The engine is the classic globally adaptive bisection scheme over a
//! 21-point Gauss-Kronrod rule (10-point Gauss embedded): evaluate the rule on
//! the whole interval, then repeatedly split the subinterval with the largest
//! error estimate until the summed estimate meets tolerance. Node and weight
//! values are the published QUADPACK constants.
//!
//! Correlation integrals in this crate carry a `1/sqrt(1 - rho^2)` endpoint
//! factor; [`integrate_unit_rho`] folds that factor away with the substitution
//! `rho = sin(theta)` so the integrand handed to the engine is smooth.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances and budget for one adaptive integration.
///
/// The integration stops once the summed error estimate drops below
/// `max(abs_tol, rel_tol * |result|)`, and fails with
/// [`Error::Convergence`] if `max_subdivisions` bisections were not enough.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    fn validate(&self) -> Result<()> {
        if !self.abs_tol.is_finite() || self.abs_tol <= 0.0 {
            return Err(Error::Domain {
                name: "abs_tol",
                constraint: "finite and > 0",
                value: self.abs_tol,
            });
        }
        if !self.rel_tol.is_finite() || self.rel_tol <= 0.0 {
            return Err(Error::Domain {
                name: "rel_tol",
                constraint: "finite and > 0",
                value: self.rel_tol,
            });
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Domain {
                name: "max_subdivisions",
                constraint: ">= 1",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// Integral value together with the engine's error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err_estimate: f64,
}

// Abscissae of the 21-point Kronrod rule on [-1, 1]; odd indices are the
// embedded 10-point Gauss nodes. QUADPACK dqk21.f values, kept at their
// full published length.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// QUADPACK's conservative error rescaling: trusts the raw Kronrod-Gauss
/// difference only once it is small relative to the integrand's variation.
fn rescale_error(err: f64, result_abs: f64, result_asc: f64) -> f64 {
    let err = err.abs();
    let mut scaled = err;
    if result_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / result_asc).powf(1.5);
        scaled = if scale < 1.0 {
            result_asc * scale
        } else {
            result_asc
        };
    }
    let min_err = 50.0 * f64::EPSILON * result_abs;
    if result_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(min_err);
    }
    scaled
}

fn qk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut fv1 = [0.0_f64; 10];
    let mut fv2 = [0.0_f64; 10];
    let mut result_gauss = 0.0;
    let mut result_kronrod = WGK[10] * fc;
    let mut result_abs = WGK[10] * fc.abs();

    for j in 0..10 {
        let dx = half * XGK[j];
        fv1[j] = f(center - dx);
        fv2[j] = f(center + dx);
        let sum = fv1[j] + fv2[j];
        result_kronrod += WGK[j] * sum;
        result_abs += WGK[j] * (fv1[j].abs() + fv2[j].abs());
    }
    for j in 0..5 {
        result_gauss += WG[j] * (fv1[2 * j + 1] + fv2[2 * j + 1]);
    }

    let mean = 0.5 * result_kronrod;
    let mut result_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        result_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let err = rescale_error(
        (result_kronrod - result_gauss) * half,
        result_abs * half.abs(),
        result_asc * half.abs(),
    );

    Panel {
        a,
        b,
        value: result_kronrod * half,
        err,
    }
}

/// Integrate `f` over the finite interval `[a, b]`.
///
/// Returns the value with an error estimate that bounds the true error on the
/// integrands this crate produces (smooth except for integrable endpoint
/// behavior). Fails with [`Error::Convergence`] when the subdivision budget
/// runs out; the partial estimate travels in the error.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    spec.validate()?;
    if !a.is_finite() || !b.is_finite() || a >= b {
        return Err(Error::Domain {
            name: "integration bounds",
            constraint: "finite with a < b",
            value: b - a,
        });
    }

    let mut heap = BinaryHeap::new();
    let first = qk21(&f, a, b);
    let mut total_value = first.value;
    let mut total_err = first.err;
    heap.push(first);

    let mut subdivisions = 0usize;
    loop {
        let tolerance = spec.abs_tol.max(spec.rel_tol * total_value.abs());
        if total_err <= tolerance {
            break;
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Convergence {
                err_estimate: total_err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if !(worst.a < mid && mid < worst.b) {
            // Interval too narrow to split; the integrand defeats f64.
            return Err(Error::Convergence {
                err_estimate: total_err,
                subdivisions,
            });
        }
        let left = qk21(&f, worst.a, mid);
        let right = qk21(&f, mid, worst.b);
        total_value += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }

    // Resum from the panels: the incremental totals accumulate rounding.
    let value = heap.iter().map(|p| p.value).sum();
    let err_estimate = heap.iter().map(|p| p.err).sum();
    Ok(Estimate {
        value,
        err_estimate,
    })
}

/// Integrate `h(rho) / sqrt(1 - rho^2)` over `rho` in `[0, 1]`.
///
/// Uses `rho = sin(theta)`: the weight cancels against the Jacobian and the
/// engine sees `h(sin(theta))` on `[0, pi/2]`, with no endpoint singularity.
pub fn integrate_unit_rho<F: Fn(f64) -> f64>(h: F, spec: &QuadratureSpec) -> Result<Estimate> {
    integrate(
        |theta: f64| h(theta.sin()),
        0.0,
        std::f64::consts::FRAC_PI_2,
        spec,
    )
}
