//! The involution transform `phi(x) = -ln(tanh(x/2))` in its narrow- and
//! wide-range evaluations, plus an extended-precision reference.
//!
//! `phi` maps the positive reals onto themselves and is its own inverse.
//! Check-node updates built on it need the function at both ends of the
//! scale, where the obvious evaluations fail in opposite ways: for large
//! x, `tanh(x/2)` rounds to 1 and the direct form collapses to 0, while
//! the exponential series `2e^-x + 2e^-3x/3 + ...` is nearly exact. For
//! small x the roles reverse. The piecewise evaluation [`phi`] stitches
//! the two branches at a crossover chosen where their accuracy curves
//! meet.

use crate::dd::Dd;
use std::f64::consts::LN_2;

/// Argument above which the piecewise evaluation switches to the
/// one-term series. The accuracy curves of the two branches intersect
/// near 12.4 on binary64.
pub const DEFAULT_PHI_CROSSOVER: f64 = 12.4;

/// Largest argument the extended-precision reference accepts. Past this
/// point the low-order component of `e^-x` slides below the subnormal
/// range and the reference would silently lose its extra precision.
pub const PHI_ORACLE_MAX_X: f64 = 600.0;

fn assert_domain(x: f64) {
    assert!(x > 0.0 && x.is_finite(), "phi domain is positive finite x, got {x}");
}

/// Direct evaluation `-ln(tanh(x/2))`.
///
/// Returns 0 once `tanh(x/2)` rounds to 1, which happens for
/// `x >= (p+2) ln 2`, about 38.12 on binary64. That collapse is the
/// phenomenon the accuracy sweep measures; callers needing the full
/// range use [`phi`].
///
/// # Panics
/// If x is not a positive finite number.
pub fn phi_naive(x: f64) -> f64 {
    assert_domain(x);
    let v = -(x * 0.5).tanh().ln();
    // The saturated branch produces -0.0; normalize it.
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// Truncated exponential series `2 * sum over odd k of e^(-kx)/k`, with
/// 1, 2, or 3 terms.
///
/// One term is the wide-range branch of [`phi`]; more terms buy accuracy
/// at moderate x. Below x of about 1 every truncation is badly wrong,
/// since the full series converges too slowly there.
///
/// # Panics
/// If x is not a positive finite number, or terms is outside 1..=3.
pub fn phi_series(x: f64, terms: u32) -> f64 {
    assert_domain(x);
    assert!((1..=3).contains(&terms), "series supports 1..=3 terms, got {terms}");
    let u = (-x).exp();
    let u2 = u * u;
    let mut sum = u;
    if terms >= 2 {
        sum += u * u2 / 3.0;
    }
    if terms == 3 {
        sum += u * u2 * u2 / 5.0;
    }
    2.0 * sum
}

/// Wide-range piecewise evaluation: direct below the default crossover,
/// one-term series `e^(ln 2 - x)` at and above it.
///
/// Stays nonzero through `(emax + p) ln 2`, about 745.8 on binary64,
/// because the series branch bottoms out in the subnormals instead of
/// dying at the tanh saturation point near 38.
///
/// # Panics
/// If x is not a positive finite number.
pub fn phi(x: f64) -> f64 {
    phi_with_crossover(x, DEFAULT_PHI_CROSSOVER)
}

/// [`phi`] with a caller-chosen branch crossover.
pub fn phi_with_crossover(x: f64, crossover: f64) -> f64 {
    assert_domain(x);
    if x < crossover {
        phi_naive(x)
    } else {
        (LN_2 - x).exp()
    }
}

/// Extended-precision reference for measuring the binary64 evaluations
/// against, good to roughly 100 significant bits.
///
/// Below 0.75 it computes `phi = ln(2 - v) - ln(v)` with `v = 1 - e^-x`
/// formed by `expm1`, so the small quantity never suffers cancellation.
/// From 0.75 up it sums `phi = 2 atanh(e^-x)` to convergence. Returns
/// None outside `(0, PHI_ORACLE_MAX_X]`.
pub fn phi_reference_dd(x: f64) -> Option<Dd> {
    if !(x > 0.0 && x <= PHI_ORACLE_MAX_X) {
        return None;
    }
    if x < 0.75 {
        let v = Dd::from_f64(-x).expm1().neg();
        Some(Dd::from_f64(2.0).sub(v).ln().sub(v.ln()))
    } else {
        let u = Dd::from_f64(-x).exp();
        let u2 = u.mul(u);
        let mut power = u;
        let mut sum = u;
        let mut k = 1u32;
        loop {
            power = power.mul(u2);
            let term = power.div(Dd::from_f64((2 * k + 1) as f64));
            sum = sum.add(term);
            if term.hi <= sum.hi * 1e-35 {
                break;
            }
            k += 1;
        }
        Some(sum.scale2(1))
    }
}

/// Which evaluation an accuracy sweep measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhiVariant {
    /// Direct `-ln(tanh(x/2))`.
    Direct,
    /// One-term series `2e^-x`.
    Series1,
    /// Two-term series `2e^-x + 2e^-3x/3`.
    Series2,
}

impl PhiVariant {
    pub const ALL: [PhiVariant; 3] = [PhiVariant::Direct, PhiVariant::Series1, PhiVariant::Series2];

    pub fn tag(self) -> &'static str {
        match self {
            PhiVariant::Direct => "direct",
            PhiVariant::Series1 => "series1",
            PhiVariant::Series2 => "series2",
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            PhiVariant::Direct => phi_naive(x),
            PhiVariant::Series1 => phi_series(x, 1),
            PhiVariant::Series2 => phi_series(x, 2),
        }
    }
}
