//! Check-node and variable-node update rules in all four message
//! domains: plain LLR, likelihood ratio, likelihood difference, and
//! offset likelihood difference.
//!
//! Every function here is pure and stateless. The check-node updates
//! come in two shapes: list reductions that combine all inputs into one
//! output (the form the update rules are written in), and
//! [`cn_extrinsic_into`], which produces the per-edge extrinsic outputs
//! a decoder needs, excluding each input from its own output.
//!
//! Numeric trouble is part of the subject matter, so the kernels never
//! hide it: saturation, overflow to infinity, and annihilated transforms
//! are either returned as values and counted in [`NumericEvents`], or
//! reported as [`KernelError`] where an update rule has a genuine
//! precondition.

use crate::dd::Dd;
use crate::fp::{phi, phi_naive};
use std::f64::consts::LN_2;
use std::fmt;

/// Default scaling factor for the normalized min-sum variant. The
/// published formulations leave the value open; this is a conventional
/// starting point, not ground truth.
pub const DEFAULT_NORMALIZED_ALPHA: f64 = 0.8;

/// Default subtrahend for the offset min-sum variant; conventional, as
/// above.
pub const DEFAULT_OFFSET_BETA: f64 = 0.15;

/// Counters for numeric conditions observed during updates. Kernels add
/// to the counters as conditions occur; a decoder merges per-update
/// counts into its telemetry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NumericEvents {
    /// Zero-magnitude inputs forced an involution-transform update to
    /// its analytic limit of 0.
    pub zero_llr_inputs: u32,
    /// Transform values of large inputs all rounded to zero, collapsing
    /// the update output to 0.
    pub transform_collapses: u32,
    /// An update output overflowed to infinity.
    pub infinite_outputs: u32,
    /// A likelihood-ratio value had to be clamped or overflowed the
    /// representable range.
    pub lr_overflows: u32,
    /// Conflicting infinite beliefs canceled to an indeterminate sum.
    pub indeterminate_sums: u32,
}

impl NumericEvents {
    pub fn merge(&mut self, other: NumericEvents) {
        self.zero_llr_inputs += other.zero_llr_inputs;
        self.transform_collapses += other.transform_collapses;
        self.infinite_outputs += other.infinite_outputs;
        self.lr_overflows += other.lr_overflows;
        self.indeterminate_sums += other.indeterminate_sums;
    }

    pub fn any(&self) -> bool {
        *self != NumericEvents::default()
    }
}

/// Errors from update rules with genuine preconditions.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelError {
    /// A likelihood-ratio input at or beyond the multiplicative-overflow
    /// guard; combining it could overflow an intermediate product.
    LrRange { value: f64, guard: f64 },
    /// The likelihood-difference pair (+1, -1): the combine rule hits
    /// 0/0 with no analytic limit.
    IndeterminateLd { a: f64, b: f64 },
}

impl fmt::Display for KernelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelError::LrRange { value, guard } => {
                write!(f, "likelihood ratio {value:e} is at or beyond the overflow guard {guard:e}")
            }
            KernelError::IndeterminateLd { a, b } => {
                write!(f, "likelihood differences ({a}, {b}) make the combine rule 0/0")
            }
        }
    }
}

impl std::error::Error for KernelError {}

fn sign_flip(x: f64) -> bool {
    x < 0.0
}

/// Direct product-of-tanh check-node reduction
/// `2 atanh( prod_k tanh(x_k / 2) )`.
///
/// With `clip` set, inputs are clamped to `[-clip, clip]` first, the
/// usual guard of saturating decoders. Without it the output reaches
/// infinity once the product rounds to 1 in magnitude; that overflow is
/// a reportable outcome, not an error.
pub fn cn_tanh(inputs: &[f64], clip: Option<f64>) -> f64 {
    assert!(!inputs.is_empty(), "check-node reduction over no inputs");
    let mut prod = 1.0;
    for &x in inputs {
        let x = match clip {
            Some(c) => x.clamp(-c, c),
            None => x,
        };
        prod *= (x * 0.5).tanh();
    }
    2.0 * prod.atanh()
}

/// Exact pairwise check-node reduction
/// `sign(a) sign(b) min(|a|,|b|) + ln(1+e^-|a+b|) - ln(1+e^-|a-b|)`.
///
/// The correction terms go through `ln_1p`, never through forming
/// `1 + e^-|x|` first, so they stay accurate at large magnitudes; the
/// result cannot overflow for any finite inputs.
pub fn cn_pairwise_exact(a: f64, b: f64) -> f64 {
    // Work on magnitudes and apply the sign last, so that swapping or
    // negating inputs permutes nothing inside the float arithmetic:
    // symmetry and oddness then hold bit for bit.
    let x = a.abs();
    let y = b.abs();
    let m = x.min(y);
    let mag = if x.is_infinite() && y.is_infinite() {
        // Two certain inputs: x - y would be NaN inside the correction
        // terms, whose true limits are zero. The minimum is the whole
        // magnitude.
        m
    } else {
        (m + (-(x + y)).exp().ln_1p() - (-(x - y).abs()).exp().ln_1p()).max(0.0)
    };
    if sign_flip(a) != sign_flip(b) {
        -mag
    } else {
        mag
    }
}

/// Two-piece linear stand-in for the correction term `ln(1+e^-|x|)`:
/// `0.6 - 0.24 |x|` below 2.5, zero above. Worst error is about 0.093,
/// at the origin.
pub fn richter_correction(x: f64) -> f64 {
    let a = x.abs();
    if a < 2.5 {
        0.6 - 0.24 * a
    } else {
        0.0
    }
}

/// Pairwise reduction with both correction terms replaced by
/// [`richter_correction`]; deviates from [`cn_pairwise_exact`] by at
/// most twice the correction's worst error per step.
pub fn cn_pairwise_richter(a: f64, b: f64) -> f64 {
    let x = a.abs();
    let y = b.abs();
    let mag = x.min(y) + richter_correction(x + y) - richter_correction(x - y);
    if sign_flip(a) != sign_flip(b) {
        -mag
    } else {
        mag
    }
}

/// All extrinsic outputs of a pairwise reduction over `d >= 2` inputs:
/// output k combines every input except input k, organized as forward
/// and backward prefix reductions so the whole batch costs O(d)
/// pairwise steps.
///
/// # Panics
/// If fewer than two inputs are given.
pub fn cn_forward_backward<F>(inputs: &[f64], pairwise: F) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let mut out = vec![0.0; inputs.len()];
    let mut scratch = CnScratch::default();
    forward_backward_into(inputs, &mut out, &mut scratch.fwd, &mut scratch.bwd, &pairwise);
    out
}

/// Reusable buffers for batched extrinsic computation.
#[derive(Debug, Default)]
pub struct CnScratch {
    fwd: Vec<f64>,
    bwd: Vec<f64>,
    vals: Vec<f64>,
}

fn forward_backward_into<F>(
    inputs: &[f64],
    out: &mut [f64],
    fwd: &mut Vec<f64>,
    bwd: &mut Vec<f64>,
    pairwise: &F,
) where
    F: Fn(f64, f64) -> f64,
{
    let d = inputs.len();
    assert!(d >= 2, "extrinsic outputs need at least two inputs, got {d}");
    assert_eq!(out.len(), d);
    fwd.clear();
    fwd.extend_from_slice(inputs);
    for k in 1..d {
        fwd[k] = pairwise(fwd[k - 1], inputs[k]);
    }
    bwd.clear();
    bwd.extend_from_slice(inputs);
    for k in (0..d - 1).rev() {
        bwd[k] = pairwise(inputs[k], bwd[k + 1]);
    }
    out[0] = bwd[1];
    out[d - 1] = fwd[d - 2];
    for k in 1..d - 1 {
        out[k] = pairwise(fwd[k - 1], bwd[k + 1]);
    }
}

/// Min-sum magnitude treatment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MinSumVariant {
    Plain,
    /// Magnitude multiplied by the given factor in (0, 1].
    Normalized(f64),
    /// Magnitude reduced by the given offset, floored at zero.
    Offset(f64),
}

impl MinSumVariant {
    fn apply(self, magnitude: f64) -> f64 {
        match self {
            MinSumVariant::Plain => magnitude,
            MinSumVariant::Normalized(alpha) => alpha * magnitude,
            MinSumVariant::Offset(beta) => (magnitude - beta).max(0.0),
        }
    }
}

/// Min-sum check-node reduction: minimum magnitude times the product of
/// signs, optionally normalized or offset.
pub fn cn_min_sum(inputs: &[f64], variant: MinSumVariant) -> f64 {
    assert!(!inputs.is_empty(), "check-node reduction over no inputs");
    let mut min_mag = f64::INFINITY;
    let mut negative = false;
    for &x in inputs {
        negative ^= sign_flip(x);
        min_mag = min_mag.min(x.abs());
    }
    let m = variant.apply(min_mag);
    if negative {
        -m
    } else {
        m
    }
}

/// Which evaluation of the involution transform a [`cn_git`] update
/// uses: the direct form that dies near 38, or the wide-range piecewise
/// form that reaches 745.8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GitPhi {
    Naive,
    Amended,
}

impl GitPhi {
    fn eval(self, x: f64) -> f64 {
        match self {
            GitPhi::Naive => phi_naive(x),
            GitPhi::Amended => phi(x),
        }
    }
}

/// Involution-transform check-node reduction: sign product times
/// `phi( sum_k phi(|x_k|) )`.
///
/// A zero-magnitude input has an infinite transform; the update returns
/// the analytic limit 0 and counts the event. When every transform value
/// rounds to zero (inputs past the transform's range), the output also
/// collapses to an uninformative 0, counted separately: that collapse is
/// the failure mode the wide-range evaluation exists to fix.
pub fn cn_git(inputs: &[f64], variant: GitPhi, events: &mut NumericEvents) -> f64 {
    assert!(!inputs.is_empty(), "check-node reduction over no inputs");
    let mut sum = 0.0;
    let mut negative = false;
    for &x in inputs {
        if x == 0.0 {
            events.zero_llr_inputs += 1;
            return 0.0;
        }
        negative ^= sign_flip(x);
        if x.is_infinite() {
            // A certain input contributes the transform's limit of 0 to
            // the sum; only its sign matters.
            continue;
        }
        sum += variant.eval(x.abs());
    }
    if sum == 0.0 {
        events.transform_collapses += 1;
        return 0.0;
    }
    let m = variant.eval(sum);
    if negative {
        -m
    } else {
        m
    }
}

/// Multiplicative-overflow guard for likelihood-ratio inputs: values at
/// or beyond sqrt of the largest finite value could overflow the product
/// in [`cn_lr`].
pub fn lr_input_guard() -> f64 {
    f64::MAX.sqrt()
}

/// Likelihood-ratio check-node combine `(1 + L1 L2) / (L1 + L2)`.
///
/// Inputs must be positive and inside [`lr_input_guard`]; the guard
/// keeps the intermediate product finite, capping the usable LLR
/// magnitude near 354.89 on binary64.
pub fn cn_lr(a: f64, b: f64) -> Result<f64, KernelError> {
    let guard = lr_input_guard();
    for value in [a, b] {
        assert!(value > 0.0, "likelihood ratios are positive, got {value}");
        if value >= guard {
            return Err(KernelError::LrRange { value, guard });
        }
    }
    Ok((1.0 + a * b) / (a + b))
}

/// How a likelihood-ratio variable-node update combines its factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrVnMode {
    /// Plain running product; can overflow at degree 3 and up, which is
    /// counted and returned as infinity.
    Product,
    /// Sum of logarithms with the final exponential's argument clamped
    /// to the representable range.
    LogSum,
}

/// Likelihood-ratio variable-node update: product of the channel value
/// and all incoming values, in the requested mode.
pub fn vn_lr(channel: f64, incoming: &[f64], mode: LrVnMode, events: &mut NumericEvents) -> f64 {
    match mode {
        LrVnMode::Product => {
            let mut prod = channel;
            for &l in incoming {
                prod *= l;
            }
            if prod.is_infinite() {
                events.lr_overflows += 1;
            }
            prod
        }
        LrVnMode::LogSum => {
            let mut log_sum = channel.ln();
            for &l in incoming {
                log_sum += l.ln();
            }
            let clamped = log_sum.clamp(f64::MIN_POSITIVE.ln(), f64::MAX.ln());
            clamped.exp().clamp(f64::MIN_POSITIVE, f64::MAX)
        }
    }
}

/// Likelihood-difference check-node reduction: the plain product of all
/// inputs in [-1, 1].
pub fn cn_ld(inputs: &[f64]) -> f64 {
    assert!(!inputs.is_empty(), "check-node reduction over no inputs");
    let mut prod = 1.0;
    for &d in inputs {
        debug_assert!(d.abs() <= 1.0, "likelihood difference {d} outside [-1, 1]");
        prod *= d;
    }
    prod
}

/// Likelihood-difference variable-node pair combine
/// `(d1 + d2) / (1 + d1 d2)`.
///
/// The pair (+1, -1) is rejected: two certain, contradictory beliefs
/// make the rule 0/0.
pub fn vn_ld_pair(a: f64, b: f64) -> Result<f64, KernelError> {
    debug_assert!(a.abs() <= 1.0 && b.abs() <= 1.0);
    if a == -b && a.abs() == 1.0 {
        return Err(KernelError::IndeterminateLd { a, b });
    }
    Ok((a + b) / (1.0 + a * b))
}

/// One step of the offset-likelihood-difference recursion,
/// `f1 + f2 - f1 f2`.
pub fn old_combine(f1: f64, f2: f64) -> f64 {
    f1 + f2 - f1 * f2
}

/// Offset-likelihood-difference check-node reduction over LLR inputs.
///
/// Each input folds in as `g = 2 e^-|x| / (1 + e^-|x|)` through
/// [`old_combine`]; the output is `sign * ln((2 - f) / f)`, restated as
/// `ln 2 - ln f` once f drops below one unit in the last place of 1 so
/// the subtraction cannot lose the tiny f. The output only turns
/// infinite when g underflows entirely, past an LLR of about 745.8;
/// that is counted as an event.
pub fn cn_old(inputs: &[f64], events: &mut NumericEvents) -> f64 {
    assert!(!inputs.is_empty(), "check-node reduction over no inputs");
    let mut f = 0.0;
    let mut negative = false;
    let mut first = true;
    for &x in inputs {
        debug_assert!(!x.is_nan());
        negative ^= sign_flip(x);
        let u = (-x.abs()).exp();
        let g = 2.0 * u / (1.0 + u);
        if first {
            f = g;
            first = false;
        } else {
            f = old_combine(f, g);
        }
    }
    let magnitude = if f == 0.0 {
        events.infinite_outputs += 1;
        f64::INFINITY
    } else if f < 2f64.powi(-53) {
        LN_2 - f.ln()
    } else {
        ((2.0 - f) / f).ln()
    };
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// Variable-node update in the LLR domain: channel value plus the sum
/// of incoming values, optionally excluding one index (the extrinsic
/// form).
///
/// Overflow to infinity is counted and returned as is. A sum of
/// conflicting infinities has no meaningful sign; it is intercepted,
/// counted, and returned as 0 so that no NaN escapes into the message
/// state.
pub fn vn_llr(
    channel: f64,
    incoming: &[f64],
    exclude: Option<usize>,
    events: &mut NumericEvents,
) -> f64 {
    let mut sum = channel;
    for (k, &x) in incoming.iter().enumerate() {
        if exclude == Some(k) {
            continue;
        }
        sum += x;
    }
    if sum.is_nan() {
        events.indeterminate_sums += 1;
        return 0.0;
    }
    if sum.is_infinite() {
        events.infinite_outputs += 1;
    }
    sum
}

/// Hard decision from the all-incoming sum: bit 1 on a negative sum,
/// bit 0 otherwise (an exact zero breaks toward 0).
pub fn decision(channel: f64, incoming: &[f64]) -> u8 {
    let mut sum = channel;
    for &x in incoming {
        sum += x;
    }
    if sum < 0.0 {
        1
    } else {
        0
    }
}

/// Check-node update formulation selected for a decode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Tanh,
    PairwiseExact,
    PairwiseRichter,
    Msa,
    MsaNormalized(f64),
    MsaOffset(f64),
    Git(GitPhi),
    Lr,
    Ld,
    Old,
    /// Runs the Richter pairwise approximation until any message
    /// magnitude reaches the threshold, then permanently falls back to
    /// plain min-sum for the rest of the decode.
    Hybrid { switch_threshold: f64 },
}

impl KernelKind {
    pub const ALL_TAGS: [&'static str; 12] = [
        "tanh",
        "pairwise_exact",
        "pairwise_richter",
        "msa",
        "msa_normalized",
        "msa_offset",
        "git",
        "git2",
        "lr",
        "ld",
        "old",
        "hybrid",
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            KernelKind::Tanh => "tanh",
            KernelKind::PairwiseExact => "pairwise_exact",
            KernelKind::PairwiseRichter => "pairwise_richter",
            KernelKind::Msa => "msa",
            KernelKind::MsaNormalized(_) => "msa_normalized",
            KernelKind::MsaOffset(_) => "msa_offset",
            KernelKind::Git(GitPhi::Naive) => "git",
            KernelKind::Git(GitPhi::Amended) => "git2",
            KernelKind::Lr => "lr",
            KernelKind::Ld => "ld",
            KernelKind::Old => "old",
            KernelKind::Hybrid { .. } => "hybrid",
        }
    }

    /// Kernel for a tag, with default parameters where the variant has
    /// any: 0.8 normalization, 0.15 offset, 2^56 hybrid threshold.
    pub fn from_tag(tag: &str) -> Option<KernelKind> {
        Some(match tag {
            "tanh" => KernelKind::Tanh,
            "pairwise_exact" => KernelKind::PairwiseExact,
            "pairwise_richter" => KernelKind::PairwiseRichter,
            "msa" => KernelKind::Msa,
            "msa_normalized" => KernelKind::MsaNormalized(DEFAULT_NORMALIZED_ALPHA),
            "msa_offset" => KernelKind::MsaOffset(DEFAULT_OFFSET_BETA),
            "git" => KernelKind::Git(GitPhi::Naive),
            "git2" => KernelKind::Git(GitPhi::Amended),
            "lr" => KernelKind::Lr,
            "ld" => KernelKind::Ld,
            "old" => KernelKind::Old,
            "hybrid" => KernelKind::Hybrid { switch_threshold: 2f64.powi(56) },
            _ => return None,
        })
    }

    /// Whether outputs scale exactly with inputs under multiplication by
    /// powers of two; the precondition for rescaling message state.
    pub fn positively_homogeneous(&self) -> bool {
        matches!(self, KernelKind::Msa | KernelKind::MsaNormalized(_))
    }
}

/// All extrinsic check-node outputs for one check under the given
/// kernel: `out[k]` combines every input except `inputs[k]`.
///
/// A degree-1 check has an empty extrinsic input set, which every
/// formulation resolves to certainty: the output is positive infinity.
///
/// Pairwise-form kernels run in O(d) via forward-backward reductions;
/// the transform-domain kernels that only appear in small experiments
/// use the direct per-output reduction.
pub fn cn_extrinsic_into(
    kind: KernelKind,
    inputs: &[f64],
    out: &mut [f64],
    scratch: &mut CnScratch,
    events: &mut NumericEvents,
) -> Result<(), KernelError> {
    let d = inputs.len();
    assert!(d >= 1, "check node with no edges");
    assert_eq!(out.len(), d);
    if d == 1 {
        out[0] = f64::INFINITY;
        events.infinite_outputs += 1;
        return Ok(());
    }
    match kind {
        KernelKind::Tanh => {
            scratch.vals.clear();
            scratch.vals.extend(inputs.iter().map(|&x| (x * 0.5).tanh()));
            forward_backward_into(&scratch.vals, out, &mut scratch.fwd, &mut scratch.bwd, &|a, b| {
                a * b
            });
            for o in out.iter_mut() {
                *o = 2.0 * o.atanh();
            }
        }
        KernelKind::PairwiseExact => {
            forward_backward_into(inputs, out, &mut scratch.fwd, &mut scratch.bwd, &cn_pairwise_exact);
        }
        KernelKind::PairwiseRichter | KernelKind::Hybrid { .. } => {
            forward_backward_into(
                inputs,
                out,
                &mut scratch.fwd,
                &mut scratch.bwd,
                &cn_pairwise_richter,
            );
        }
        KernelKind::Msa | KernelKind::MsaNormalized(_) | KernelKind::MsaOffset(_) => {
            let variant = match kind {
                KernelKind::Msa => MinSumVariant::Plain,
                KernelKind::MsaNormalized(a) => MinSumVariant::Normalized(a),
                KernelKind::MsaOffset(b) => MinSumVariant::Offset(b),
                _ => unreachable!(),
            };
            min_sum_extrinsic(inputs, out, variant);
        }
        KernelKind::Git(variant) => {
            for k in 0..d {
                let others = excluding(inputs, k, &mut scratch.vals);
                out[k] = cn_git(others, variant, events);
            }
        }
        KernelKind::Lr => {
            lr_extrinsic(inputs, out, scratch, events)?;
        }
        KernelKind::Ld => {
            scratch.vals.clear();
            scratch.vals.extend(inputs.iter().map(|&x| (x * 0.5).tanh()));
            forward_backward_into(&scratch.vals, out, &mut scratch.fwd, &mut scratch.bwd, &|a, b| {
                a * b
            });
            for o in out.iter_mut() {
                let llr = 2.0 * o.atanh();
                if llr.is_infinite() {
                    events.infinite_outputs += 1;
                }
                *o = llr;
            }
        }
        KernelKind::Old => {
            for k in 0..d {
                let others = excluding(inputs, k, &mut scratch.vals);
                out[k] = cn_old(others, events);
            }
        }
    }
    Ok(())
}

fn excluding<'a>(inputs: &[f64], skip: usize, buf: &'a mut Vec<f64>) -> &'a [f64] {
    buf.clear();
    buf.extend(inputs.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &x)| x));
    buf
}

fn min_sum_extrinsic(inputs: &[f64], out: &mut [f64], variant: MinSumVariant) {
    let mut min1 = f64::INFINITY;
    let mut min2 = f64::INFINITY;
    let mut argmin = 0usize;
    let mut parity = false;
    for (k, &x) in inputs.iter().enumerate() {
        parity ^= sign_flip(x);
        let a = x.abs();
        if a < min1 {
            min2 = min1;
            min1 = a;
            argmin = k;
        } else if a < min2 {
            min2 = a;
        }
    }
    for (k, &x) in inputs.iter().enumerate() {
        let magnitude = variant.apply(if k == argmin { min2 } else { min1 });
        let flip = parity ^ sign_flip(x);
        out[k] = if flip { -magnitude } else { magnitude };
    }
}

fn lr_extrinsic(
    inputs: &[f64],
    out: &mut [f64],
    scratch: &mut CnScratch,
    events: &mut NumericEvents,
) -> Result<(), KernelError> {
    // Decoding in the likelihood-ratio domain clamps incoming LLRs to
    // just inside the domain's own ceiling so the pairwise guard can
    // never fire mid-reduction; each clamp is counted.
    let guard = lr_input_guard();
    let llr_cap = guard.ln();
    let vals = &mut scratch.vals;
    vals.clear();
    for &x in inputs {
        let clamped = x.clamp(-llr_cap, llr_cap);
        if clamped != x {
            events.lr_overflows += 1;
        }
        vals.push(clamped.exp().clamp(1.0 / guard, guard * 0.999_999_999_999_999));
    }
    forward_backward_into(&scratch.vals, out, &mut scratch.fwd, &mut scratch.bwd, &|a, b| {
        cn_lr(a, b).expect("inputs clamped inside the guard")
    });
    for o in out.iter_mut() {
        *o = o.ln();
    }
    Ok(())
}

/// Pairwise-exact reduction carried out in double-double arithmetic,
/// left to right; the reference arm for check-node error measurements.
pub fn cn_pairwise_exact_dd(inputs: &[f64]) -> Dd {
    assert!(!inputs.is_empty());
    let mut acc = Dd::from_f64(inputs[0]);
    for &x in &inputs[1..] {
        acc = pairwise_exact_dd(acc, Dd::from_f64(x));
    }
    acc
}

fn pairwise_exact_dd(a: Dd, b: Dd) -> Dd {
    let abs_a = a.abs();
    let abs_b = b.abs();
    let min_mag = if abs_b.sub(abs_a).is_positive() { abs_a } else { abs_b };
    let negative = a.is_positive() != b.is_positive();
    let signed = if negative { min_mag.neg() } else { min_mag };
    let c1 = a.add(b).abs().neg().exp().ln1p();
    let c2 = a.sub(b).abs().neg().exp().ln1p();
    signed.add(c1).sub(c2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_rel(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= want.abs() * tol,
            "got {got:e}, want {want:e} within rel {tol:e}"
        );
    }

    fn ev() -> NumericEvents {
        NumericEvents::default()
    }

    #[test]
    fn pairwise_exact_matches_closed_forms() {
        // 2 atanh(tanh^2(1/2 * 2)) evaluated at high precision.
        assert_rel(cn_pairwise_exact(1.0, 1.0), 0.4337808304830272, 1e-14);
        assert_rel(cn_pairwise_exact(2.0, 2.0), 1.3250027473578645, 1e-14);
        assert_rel(cn_pairwise_exact(2.0, -3.5), -1.8026651652878183, 1e-14);
        assert_rel(cn_pairwise_exact(0.3, 0.7), 0.10024643511827021, 1e-13);
    }

    #[test]
    fn pairwise_exact_annihilates_on_zero_and_never_overflows() {
        assert_eq!(cn_pairwise_exact(5.0, 0.0), 0.0);
        assert_eq!(cn_pairwise_exact(0.0, -3.0), 0.0);
        let big = cn_pairwise_exact(1e300, 1e300);
        assert!(big.is_finite());
        // min term dominates at this scale: the ln 2 correction is far
        // below one ULP of 1e300.
        assert_eq!(big, 1e300);
        assert!(cn_pairwise_exact(f64::MAX, -f64::MAX).is_finite());
    }

    #[test]
    fn pairwise_magnitude_never_exceeds_min_and_approaches_it() {
        for (a, b) in [(1.0, 2.0), (-3.0, 0.5), (10.0, -10.0), (0.1, 0.1)] {
            assert!(cn_pairwise_exact(a, b).abs() <= a.abs().min(b.abs()));
        }
        let r = cn_pairwise_exact(50.0, 60.0);
        assert!(50.0 - r.abs() <= LN_2);
    }

    #[test]
    fn tanh_reduction_agrees_with_pairwise_at_moderate_inputs() {
        assert_rel(cn_tanh(&[1.0, 1.0], None), 0.4337808304830272, 1e-12);
        let t = cn_tanh(&[2.0, -3.5, 0.8], None);
        let p = cn_pairwise_exact(cn_pairwise_exact(2.0, -3.5), 0.8);
        assert_rel(t, p, 1e-12);
    }

    #[test]
    fn tanh_single_input_is_the_identity() {
        // The identity is exact analytically; in floating point the
        // round trip through atanh amplifies the tanh rounding error by
        // roughly e^|x|, so the tolerance has to grow with magnitude.
        for x in [0.3, -1.7, 2.0] {
            assert_rel(cn_tanh(&[x], None), x, 1e-14);
        }
        for x in [5.0, -20.0] {
            assert_rel(cn_tanh(&[x], None), x, 1e-8);
        }
    }

    #[test]
    fn tanh_clip_makes_large_inputs_indistinguishable() {
        let clipped = cn_tanh(&[2.0, -3.5, 50.0], Some(38.0));
        let replaced = cn_tanh(&[2.0, -3.5, 38.0], None);
        assert_eq!(clipped, replaced);
        // Past the saturation point the unclipped product rounds to 1
        // and the reduction overflows; that outcome is returned, not
        // hidden.
        assert!(cn_tanh(&[40.0, 40.0], None).is_infinite());
    }

    #[test]
    fn richter_correction_is_a_bounded_stand_in() {
        assert_eq!(richter_correction(0.0), 0.6);
        assert_rel(richter_correction(1.0), 0.36, 1e-15);
        assert_eq!(richter_correction(2.5), 0.0);
        assert_eq!(richter_correction(-4.0), 0.0);
        let mut worst: f64 = 0.0;
        for k in 0..=1_000_000u32 {
            let x = -5.0 + k as f64 * 1e-5;
            let err = (richter_correction(x) - (-x.abs()).exp().ln_1p()).abs();
            worst = worst.max(err);
        }
        assert!(worst <= 0.1, "worst {worst}");
        assert!((worst - 0.093).abs() < 2e-3, "worst should sit near 0.093, got {worst}");
    }

    #[test]
    fn forward_backward_matches_direct_exclusion() {
        let inputs = [2.0, 2.0, 2.0];
        let outs = cn_forward_backward(&inputs, cn_pairwise_exact);
        for &o in &outs {
            assert_rel(o, 1.3250027473578645, 1e-14);
        }
        // d = 2 swaps the inputs.
        let outs = cn_forward_backward(&[4.0, -7.0], cn_pairwise_exact);
        assert_eq!(outs, vec![-7.0, 4.0]);
        // A zero input zeroes every output except its own.
        let outs = cn_forward_backward(&[1.5, 0.0, -2.0], cn_pairwise_exact);
        assert_eq!(outs[0], 0.0);
        assert!(outs[1] != 0.0);
        assert_eq!(outs[2], 0.0);
    }

    #[test]
    fn min_sum_variants_treat_the_magnitude() {
        assert_eq!(cn_min_sum(&[2.0, -3.5], MinSumVariant::Plain), -2.0);
        assert_eq!(cn_min_sum(&[2.0, -3.5], MinSumVariant::Offset(0.5)), -1.5);
        assert_rel(cn_min_sum(&[2.0, -3.5], MinSumVariant::Normalized(0.8)), -1.6, 1e-15);
        // Offset floors at zero rather than flipping sign.
        assert_eq!(cn_min_sum(&[0.1, -3.0], MinSumVariant::Offset(0.5)), -0.0);
        // Magnitude always dominates the exact reduction.
        for (a, b) in [(1.0, 2.0), (-0.3, 0.4), (5.0, -5.0)] {
            assert!(cn_min_sum(&[a, b], MinSumVariant::Plain).abs() >= cn_pairwise_exact(a, b).abs());
        }
    }

    #[test]
    fn min_sum_extrinsic_excludes_each_input() {
        let inputs = [3.0, -1.0, 2.0, -4.0];
        let mut out = [0.0; 4];
        min_sum_extrinsic(&inputs, &mut out, MinSumVariant::Plain);
        for k in 0..4 {
            let others: Vec<f64> =
                inputs.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &x)| x).collect();
            assert_eq!(out[k], cn_min_sum(&others, MinSumVariant::Plain), "output {k}");
        }
    }

    #[test]
    fn git_amended_matches_pairwise_and_survives_large_inputs() {
        let mut e = ev();
        assert_rel(cn_git(&[2.0, 2.0], GitPhi::Amended, &mut e), 1.3250027473578645, 1e-11);
        assert_rel(cn_git(&[45.0, 45.0], GitPhi::Amended, &mut e), 44.30685281944005, 1e-11);
        assert!(!e.any());
        // Sign product carries through.
        let m = cn_git(&[-2.0, 2.0], GitPhi::Amended, &mut e);
        assert_rel(m, -1.3250027473578645, 1e-11);
    }

    #[test]
    fn git_naive_collapses_where_the_transform_dies() {
        let mut e = ev();
        assert_eq!(cn_git(&[45.0, 45.0], GitPhi::Naive, &mut e), 0.0);
        assert_eq!(e.transform_collapses, 1);
        // Below the saturation point the naive form still works.
        let mut e = ev();
        assert_rel(cn_git(&[2.0, 2.0], GitPhi::Naive, &mut e), 1.3250027473578645, 1e-11);
        assert!(!e.any());
    }

    #[test]
    fn git_zero_input_returns_the_analytic_limit() {
        let mut e = ev();
        assert_eq!(cn_git(&[3.0, 0.0], GitPhi::Amended, &mut e), 0.0);
        assert_eq!(e.zero_llr_inputs, 1);
    }

    #[test]
    fn lr_combine_matches_closed_forms_and_guards_overflow() {
        let e1 = 1f64.exp();
        assert_rel(cn_lr(e1, e1).unwrap(), 1.5430806348152437, 1e-14);
        assert_rel(cn_lr(e1, e1).unwrap().ln(), 0.4337808304830272, 1e-12);
        // LR 1 is the annihilator: LLR 0.
        assert_eq!(cn_lr(7.25, 1.0).unwrap(), 1.0);
        let ok = 354f64.exp();
        assert!(cn_lr(ok, ok).unwrap().is_finite());
        let too_big = 356f64.exp();
        assert!(matches!(cn_lr(too_big, 2.0), Err(KernelError::LrRange { .. })));
    }

    #[test]
    fn lr_vn_product_overflows_where_log_sum_survives() {
        let l = 300f64.exp();
        let mut e = ev();
        let p = vn_lr(l, &[l, l], LrVnMode::Product, &mut e);
        assert!(p.is_infinite());
        assert_eq!(e.lr_overflows, 1);
        let mut e = ev();
        let s = vn_lr(l, &[l, l], LrVnMode::LogSum, &mut e);
        assert!(s.is_finite() && s > 1e300);
        // Exponent additivity in the benign range.
        let mut e = ev();
        assert_rel(vn_lr(1f64.exp(), &[2f64.exp()], LrVnMode::Product, &mut e), 3f64.exp(), 1e-14);
    }

    #[test]
    fn ld_product_and_pair_combine() {
        assert_eq!(cn_ld(&[0.5, 0.5]), 0.25);
        assert_eq!(cn_ld(&[0.5, 0.0, -0.9]), 0.0);
        assert_eq!(vn_ld_pair(0.5, 0.5).unwrap(), 0.8);
        assert!(matches!(vn_ld_pair(1.0, -1.0), Err(KernelError::IndeterminateLd { .. })));
        assert!(matches!(vn_ld_pair(-1.0, 1.0), Err(KernelError::IndeterminateLd { .. })));
        // Same-signed certainty is fine.
        assert_eq!(vn_ld_pair(1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn old_reduction_tracks_the_exact_pairwise_values() {
        let mut e = ev();
        assert_eq!(old_combine(0.5, 0.5), 0.75);
        let r = cn_old(&[2.0, -2.0], &mut e);
        assert_rel(r, -1.3250027473578645, 1e-9);
        // Far beyond the tanh range but inside its own: finite, close to
        // min minus ln 2, with only subnormal-resolution error left.
        let r = cn_old(&[740.0, 740.0], &mut e);
        assert!(r.is_finite());
        assert!((r - 739.3068528194401).abs() < 0.01, "got {r}");
        assert!(!e.any());
    }

    #[test]
    fn old_reduction_flags_complete_underflow() {
        let mut e = ev();
        let r = cn_old(&[750.0, 750.0], &mut e);
        assert!(r.is_infinite());
        assert_eq!(e.infinite_outputs, 1);
    }

    #[test]
    fn llr_vn_update_sums_with_exclusion() {
        let mut e = ev();
        assert_eq!(vn_llr(4.0, &[1.0, -2.0], None, &mut e), 3.0);
        assert_eq!(vn_llr(0.0, &[7.0], Some(0), &mut e), 0.0);
        assert_eq!(vn_llr(4.0, &[1.0, -2.0], Some(1), &mut e), 5.0);
        assert!(!e.any());
        let r = vn_llr(1e308, &[1e308], None, &mut e);
        assert!(r.is_infinite());
        assert_eq!(e.infinite_outputs, 1);
    }

    #[test]
    fn conflicting_infinite_beliefs_cancel_to_zero() {
        let mut e = ev();
        let r = vn_llr(0.0, &[f64::INFINITY, f64::NEG_INFINITY], None, &mut e);
        assert_eq!(r, 0.0);
        assert_eq!(e.indeterminate_sums, 1);
    }

    #[test]
    fn decisions_follow_the_sign_with_zero_to_bit_zero() {
        assert_eq!(decision(4.0, &[-1.0]), 0);
        assert_eq!(decision(-0.1, &[3.3072]), 0);
        assert_eq!(decision(-4.0, &[1.0]), 1);
        assert_eq!(decision(1.5, &[-1.5]), 0);
    }

    #[test]
    fn kernel_tags_round_trip() {
        for tag in KernelKind::ALL_TAGS {
            let kind = KernelKind::from_tag(tag).unwrap();
            assert_eq!(kind.tag(), tag);
        }
        assert!(KernelKind::from_tag("bogus").is_none());
        assert!(KernelKind::Msa.positively_homogeneous());
        assert!(KernelKind::MsaNormalized(0.8).positively_homogeneous());
        assert!(!KernelKind::MsaOffset(0.15).positively_homogeneous());
        assert!(!KernelKind::PairwiseExact.positively_homogeneous());
    }

    #[test]
    fn extrinsic_batches_agree_with_list_reductions() {
        let inputs = [1.2, -0.7, 2.5, 0.4];
        let mut scratch = CnScratch::default();
        let mut e = ev();
        for tag in ["tanh", "pairwise_exact", "msa", "git2", "lr", "ld", "old"] {
            let kind = KernelKind::from_tag(tag).unwrap();
            let mut out = [0.0; 4];
            cn_extrinsic_into(kind, &inputs, &mut out, &mut scratch, &mut e).unwrap();
            for k in 0..4 {
                let others: Vec<f64> =
                    inputs.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &x)| x).collect();
                let direct = match kind {
                    KernelKind::Tanh => cn_tanh(&others, None),
                    KernelKind::PairwiseExact => {
                        others[1..].iter().fold(others[0], |a, &b| cn_pairwise_exact(a, b))
                    }
                    KernelKind::Msa => cn_min_sum(&others, MinSumVariant::Plain),
                    KernelKind::Git(v) => cn_git(&others, v, &mut e),
                    KernelKind::Lr => {
                        let lr = others[1..]
                            .iter()
                            .fold(others[0].exp(), |a, &b| cn_lr(a, b.exp()).unwrap());
                        lr.ln()
                    }
                    KernelKind::Ld => {
                        let prod: f64 = others.iter().map(|&x| (x * 0.5).tanh()).product();
                        2.0 * prod.atanh()
                    }
                    KernelKind::Old => cn_old(&others, &mut e),
                    _ => unreachable!(),
                };
                assert_rel(out[k], direct, 1e-9);
            }
        }
    }

    #[test]
    fn richter_extrinsic_stays_within_the_bounded_deviation() {
        // The two-piece correction is not associative, so the batched
        // outputs are compared against the exact kernel with the
        // per-step deviation bound, not against a refold of themselves.
        let inputs = [1.2, -0.7, 2.5, 0.4];
        let mut scratch = CnScratch::default();
        let mut e = ev();
        let mut approx = [0.0; 4];
        let mut exact = [0.0; 4];
        cn_extrinsic_into(KernelKind::PairwiseRichter, &inputs, &mut approx, &mut scratch, &mut e)
            .unwrap();
        cn_extrinsic_into(KernelKind::PairwiseExact, &inputs, &mut exact, &mut scratch, &mut e)
            .unwrap();
        for k in 0..4 {
            assert!(
                (approx[k] - exact[k]).abs() <= 0.2 * 3.0,
                "output {k}: {} vs {}",
                approx[k],
                exact[k]
            );
        }
    }

    #[test]
    fn degree_one_checks_pin_their_bit() {
        let mut scratch = CnScratch::default();
        let mut e = ev();
        let mut out = [0.0];
        cn_extrinsic_into(KernelKind::Msa, &[2.0], &mut out, &mut scratch, &mut e).unwrap();
        assert!(out[0].is_infinite() && out[0] > 0.0);
        assert_eq!(e.infinite_outputs, 1);
    }

    #[test]
    fn dd_pairwise_reference_agrees_with_the_f64_kernel() {
        let inputs = [1.5, -2.25, 0.75, 3.0];
        let reference = cn_pairwise_exact_dd(&inputs).to_f64();
        let plain = inputs[1..].iter().fold(inputs[0], |a, &b| cn_pairwise_exact(a, b));
        assert_rel(plain, reference, 1e-12);
        // And on the frozen two-input anchor.
        assert_rel(cn_pairwise_exact_dd(&[2.0, 2.0]).to_f64(), 1.3250027473578645, 1e-15);
    }
}
