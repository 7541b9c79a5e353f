//! Floating-point range and resolution analysis for the message domains
//! used in belief-propagation decoding.
//!
//! Every check-node formulation works in some transformed message
//! domain: plain log-likelihood ratios, likelihood ratios `e^lambda`,
//! likelihood differences `tanh(lambda/2)`, or an offset thereof. Each
//! domain exhausts the execution format at a different LLR magnitude.
//! This module computes those ceilings analytically from format
//! parameters, locates the tanh saturation point empirically, and
//! measures accuracy and quantization-step profiles for the involution
//! transform variants.

mod accuracy;
mod phi;
mod resolution;

pub use accuracy::{accuracy_sweep, phi_crossovers, AccuracyPoint, Crossover};
pub use phi::{
    phi, phi_naive, phi_reference_dd, phi_series, phi_with_crossover, PhiVariant,
    DEFAULT_PHI_CROSSOVER, PHI_ORACLE_MAX_X,
};
pub use resolution::{resolution_profile, ulp, LlrDomain, ResolutionPoint};

use std::f64::consts::LN_2;
use std::fmt;

/// Parameters of an IEEE-754-style binary floating-point format.
///
/// Only the significand precision and the exponent ceiling are free;
/// the standard fixes the minimum exponent as `1 - emax`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FpFormat {
    pub name: &'static str,
    /// Significand precision in bits, counting the implicit leading bit.
    pub p: u32,
    /// Maximum binary exponent.
    pub emax: i32,
}

/// IEEE 754 single precision.
pub const BINARY32: FpFormat = FpFormat { name: "binary32", p: 24, emax: 127 };
/// IEEE 754 double precision, the execution format of this crate.
pub const BINARY64: FpFormat = FpFormat { name: "binary64", p: 53, emax: 1023 };
/// IEEE 754 quadruple precision; analyzed analytically, never executed.
pub const BINARY128: FpFormat = FpFormat { name: "binary128", p: 113, emax: 16383 };

impl FpFormat {
    /// Minimum binary exponent, `1 - emax`.
    pub fn emin(&self) -> i32 {
        1 - self.emax
    }

    /// Largest finite value, `(2 - 2^(1-p)) * 2^emax`. Saturates to
    /// infinity for formats wider than binary64.
    pub fn max_value(&self) -> f64 {
        (2.0 - pow2(1 - self.p as i32)) * pow2(self.emax)
    }

    /// Base-2 logarithm of the largest finite value; finite for every
    /// format, unlike [`FpFormat::max_value`].
    pub fn max_value_log2(&self) -> f64 {
        self.emax as f64 + (2.0 - pow2(1 - self.p as i32)).log2()
    }

    /// Smallest positive subnormal, `2^(emin + 1 - p)`. Flushes to zero
    /// for formats wider than binary64.
    pub fn smallest_subnormal(&self) -> f64 {
        pow2(self.emin() + 1 - self.p as i32)
    }

    /// Base-2 logarithm of the smallest positive subnormal.
    pub fn smallest_subnormal_log2(&self) -> f64 {
        (self.emin() + 1 - self.p as i32) as f64
    }
}

fn pow2(k: i32) -> f64 {
    (k as f64).exp2()
}

/// Check-node formulation families, grouped by the working domain that
/// determines their LLR ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SaturationTechnique {
    /// Direct product-of-tanh update; limited where `tanh(lambda/2)`
    /// rounds to 1.
    Tanh,
    /// Pairwise Jacobian update; only the representable range binds.
    Pairwise,
    /// Min-sum family; only the representable range binds.
    Msa,
    /// Involution-transform update with direct evaluation.
    Git,
    /// Involution-transform update with the wide-range piecewise
    /// evaluation.
    Git2,
    /// Likelihood-ratio domain under the multiplicative-overflow guard.
    Lr,
    /// Likelihood-difference domain.
    Ld,
    /// Offset-likelihood-difference recursion.
    Old,
}

impl SaturationTechnique {
    pub const ALL: [SaturationTechnique; 8] = [
        SaturationTechnique::Tanh,
        SaturationTechnique::Pairwise,
        SaturationTechnique::Msa,
        SaturationTechnique::Git,
        SaturationTechnique::Git2,
        SaturationTechnique::Lr,
        SaturationTechnique::Ld,
        SaturationTechnique::Old,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            SaturationTechnique::Tanh => "tanh",
            SaturationTechnique::Pairwise => "pairwise",
            SaturationTechnique::Msa => "msa",
            SaturationTechnique::Git => "git",
            SaturationTechnique::Git2 => "git2",
            SaturationTechnique::Lr => "lr",
            SaturationTechnique::Ld => "ld",
            SaturationTechnique::Old => "old",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self, FpError> {
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.tag() == tag)
            .ok_or_else(|| FpError::UnknownTechnique { tag: tag.to_string() })
    }
}

/// Largest usable LLR magnitude for one formulation in one format.
///
/// `value` saturates to infinity when the limit exceeds binary64 range;
/// `log2` is always finite and is the authoritative analytic value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlrLimit {
    pub value: f64,
    pub log2: f64,
}

impl LlrLimit {
    fn from_value(value: f64) -> Self {
        LlrLimit { value, log2: value.log2() }
    }

    fn from_log2(log2: f64) -> Self {
        LlrLimit { value: log2.exp2(), log2 }
    }

    /// Decimal rendering with 17 significant digits. Values beyond
    /// binary64 range are reconstructed from `log2`; their digits past
    /// the 11th or so are approximate, which is ample for a quantity
    /// only meaningful to a handful of digits.
    pub fn decimal_string(&self) -> String {
        if self.value.is_finite() {
            return format!("{:.16e}", self.value);
        }
        let log10 = self.log2 * std::f64::consts::LOG10_2;
        let mut exp10 = log10.floor();
        let mut mantissa = 10f64.powf(log10 - exp10);
        if mantissa >= 9.999_999_999_999_999_5 {
            mantissa /= 10.0;
            exp10 += 1.0;
        }
        format!("{:.16}e{}", mantissa, exp10 as i64)
    }
}

/// Analytic LLR ceiling of a formulation in a format, from the closed
/// forms alone.
pub fn llr_limit(technique: SaturationTechnique, fmt: FpFormat) -> LlrLimit {
    assert!(fmt.p >= 2 && fmt.emax >= 1, "degenerate format {fmt:?}");
    let p = fmt.p as f64;
    let emax = fmt.emax as f64;
    match technique {
        SaturationTechnique::Tanh | SaturationTechnique::Git => {
            LlrLimit::from_value((p + 2.0) * LN_2)
        }
        SaturationTechnique::Pairwise | SaturationTechnique::Msa => {
            LlrLimit::from_log2(emax + 1.0)
        }
        SaturationTechnique::Git2 | SaturationTechnique::Old => {
            LlrLimit::from_value((emax + p) * LN_2)
        }
        SaturationTechnique::Lr => LlrLimit::from_value((emax + 1.0) * LN_2 / 2.0),
        SaturationTechnique::Ld => LlrLimit::from_value((p + 1.0) * LN_2),
    }
}

/// Smallest LLR whose likelihood-difference image rounds to exactly 1
/// under round-to-nearest, analytically `(p + 2) ln 2`.
pub fn tanh_saturation_threshold(fmt: FpFormat) -> f64 {
    (fmt.p as f64 + 2.0) * LN_2
}

/// Locates the tanh saturation point on the execution format by
/// bisection: the smallest x, to within 1e-9, with `tanh(x/2) == 1.0`.
pub fn tanh_saturation_empirical() -> f64 {
    let saturates = |x: f64| (x * 0.5).tanh() >= 1.0;
    let mut lo = 30.0f64;
    let mut hi = 40.0f64;
    debug_assert!(!saturates(lo) && saturates(hi));
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if saturates(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Default grid density for sweeps; dense enough to resolve the ULP
/// staircase in resolution profiles.
pub const DEFAULT_POINTS_PER_DECADE: u32 = 512;

/// Log-spaced grid from `min` to `max` inclusive. Endpoints are exact;
/// interior points are spaced evenly in log10.
pub fn log_grid(min: f64, max: f64, points_per_decade: u32) -> Vec<f64> {
    assert!(
        min > 0.0 && min.is_finite() && max > min && max.is_finite(),
        "log grid needs 0 < min < max, got [{min}, {max}]"
    );
    assert!(points_per_decade >= 1, "need at least one point per decade");
    let decades = (max / min).log10();
    let intervals = (decades * points_per_decade as f64).ceil().max(1.0) as usize;
    let l0 = min.log10();
    let l1 = max.log10();
    let mut grid: Vec<f64> = (0..=intervals)
        .map(|k| 10f64.powf(l0 + (l1 - l0) * k as f64 / intervals as f64))
        .collect();
    grid[0] = min;
    *grid.last_mut().expect("grid is nonempty") = max;
    // Coarse spacing can round adjacent points together; keep the grid
    // strictly increasing.
    grid.dedup();
    grid
}

/// Errors from the analysis entry points that accept caller grids.
#[derive(Debug, Clone, PartialEq)]
pub enum FpError {
    EmptyGrid,
    /// Grid value at `index` is zero, negative, NaN, or infinite.
    NonPositiveGrid { index: usize, value: f64 },
    /// Grid value at `index` does not increase over its predecessor.
    UnsortedGrid { index: usize },
    /// The extended-precision reference cannot evaluate at `x`.
    OracleRange { x: f64, max: f64 },
    /// `lambda` exceeds the working domain's usable LLR range.
    DomainRange {
        domain: &'static str,
        lambda: f64,
        limit: f64,
    },
    UnknownTechnique { tag: String },
}

impl fmt::Display for FpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FpError::EmptyGrid => write!(f, "grid is empty"),
            FpError::NonPositiveGrid { index, value } => {
                write!(f, "grid[{index}] = {value} is not a positive finite number")
            }
            FpError::UnsortedGrid { index } => {
                write!(f, "grid[{index}] does not increase over its predecessor")
            }
            FpError::OracleRange { x, max } => {
                write!(f, "reference evaluation unavailable at x = {x} (supported up to {max})")
            }
            FpError::DomainRange { domain, lambda, limit } => {
                write!(f, "lambda = {lambda} exceeds the {domain} domain limit {limit}")
            }
            FpError::UnknownTechnique { tag } => {
                write!(f, "unknown technique tag {tag:?}")
            }
        }
    }
}

impl std::error::Error for FpError {}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<(), FpError> {
    if grid.is_empty() {
        return Err(FpError::EmptyGrid);
    }
    for (index, &value) in grid.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(FpError::NonPositiveGrid { index, value });
        }
        if index > 0 && value <= grid[index - 1] {
            return Err(FpError::UnsortedGrid { index });
        }
    }
    Ok(())
}
