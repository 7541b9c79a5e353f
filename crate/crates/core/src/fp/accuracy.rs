//! Accuracy measurement of the involution-transform evaluations against
//! the extended-precision reference, and detection of the arguments
//! where the series variants overtake the direct one.

use super::phi::{phi_reference_dd, PhiVariant, PHI_ORACLE_MAX_X};
use super::{validate_grid, FpError, BINARY64};
use crate::dd::Dd;

/// Accuracy of one evaluation at one argument, in significant bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyPoint {
    pub x: f64,
    /// Negated log2 of the relative error against the reference. A zero
    /// error reports the format precision, the largest meaningful value.
    pub bits: f64,
    pub variant: PhiVariant,
}

/// Measures one evaluation over a positive, strictly increasing grid.
///
/// The relative error is formed in double-double arithmetic so that
/// errors far below one ULP of the result remain visible.
pub fn accuracy_sweep(variant: PhiVariant, grid: &[f64]) -> Result<Vec<AccuracyPoint>, FpError> {
    validate_grid(grid)?;
    grid.iter()
        .map(|&x| {
            let reference = phi_reference_dd(x)
                .ok_or(FpError::OracleRange { x, max: PHI_ORACLE_MAX_X })?;
            let eps = Dd::from_f64(variant.eval(x)).sub(reference).abs().div(reference).to_f64();
            Ok(AccuracyPoint { x, bits: bits_from_eps(eps), variant })
        })
        .collect()
}

fn bits_from_eps(eps: f64) -> f64 {
    if eps == 0.0 {
        BINARY64.p as f64
    } else {
        -eps.log2()
    }
}

/// Argument where a series evaluation's accuracy overtakes the direct
/// evaluation's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossover {
    pub variant: PhiVariant,
    /// Interpolated argument where the series curve meets the direct
    /// evaluation's lower accuracy envelope.
    pub x: f64,
    /// Accuracy in bits at the meeting point.
    pub bits: f64,
}

/// Width, in x units, of the sliding minimum that turns the direct
/// evaluation's oscillating accuracy curve into a lower envelope.
const ENVELOPE_WINDOW: f64 = 0.25;

/// Finds where each series variant overtakes the direct evaluation.
///
/// The direct curve's accuracy oscillates as the argument walks across
/// ULP boundaries of `tanh(x/2)`, so the comparison runs against its
/// windowed minimum rather than the raw curve. Returns at most one
/// crossover per series variant, the last upward crossing on the grid;
/// a variant that never overtakes on the grid is omitted.
pub fn phi_crossovers(grid: &[f64]) -> Result<Vec<Crossover>, FpError> {
    let direct = accuracy_sweep(PhiVariant::Direct, grid)?;
    let envelope = lower_envelope(grid, &direct);
    let mut out = Vec::new();
    for variant in [PhiVariant::Series1, PhiVariant::Series2] {
        let series = accuracy_sweep(variant, grid)?;
        if let Some(c) = last_upward_crossing(grid, &envelope, &series, variant) {
            out.push(c);
        }
    }
    Ok(out)
}

fn lower_envelope(grid: &[f64], points: &[AccuracyPoint]) -> Vec<f64> {
    let half = ENVELOPE_WINDOW / 2.0;
    let mut lo = 0usize;
    let mut hi = 0usize;
    grid.iter()
        .map(|&x| {
            while grid[lo] < x - half {
                lo += 1;
            }
            while hi < grid.len() && grid[hi] <= x + half {
                hi += 1;
            }
            points[lo..hi].iter().map(|p| p.bits).fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn last_upward_crossing(
    grid: &[f64],
    envelope: &[f64],
    series: &[AccuracyPoint],
    variant: PhiVariant,
) -> Option<Crossover> {
    let mut found = None;
    for i in 0..grid.len() - 1 {
        let d0 = series[i].bits - envelope[i];
        let d1 = series[i + 1].bits - envelope[i + 1];
        if d0 < 0.0 && d1 >= 0.0 {
            let t = d0 / (d0 - d1);
            let x = grid[i] + t * (grid[i + 1] - grid[i]);
            let bits = envelope[i] + t * (envelope[i + 1] - envelope[i]);
            found = Some(Crossover { variant, x, bits });
        }
    }
    found
}
