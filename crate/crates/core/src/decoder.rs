//! Iterative flooding-schedule decoder binding a check-node kernel to a
//! code graph, with early termination, optional message clipping,
//! hybrid kernel switching, and power-of-two rescaling.
//!
//! One decode owns its message state exclusively; many decodes can run
//! concurrently over one shared graph.

use crate::graph::TannerGraph;
use crate::kernels::{
    cn_extrinsic_into, CnScratch, KernelError, KernelKind, NumericEvents,
};
use std::fmt;

/// Default iteration cap for error-rate runs.
pub const DEFAULT_MAX_ITERS: u32 = 200;

/// Default rescale trigger: close to, but safely inside, the largest
/// finite binary64 value.
pub const DEFAULT_RESCALE_TRIGGER: f64 = 1e305;

/// Default rescale factor 2^-512: halves the exponent range in one
/// exact step.
pub fn default_rescale_factor() -> f64 {
    2f64.powi(-512)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeError {
    DimensionMismatch { expected: usize, got: usize },
    MaxItersZero,
    ClipNotPositive { clip: f64 },
    RescaleFactorNotPow2 { factor: f64 },
    RescaleTriggerOutOfRange { trigger: f64 },
    Kernel(KernelError),
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeError::DimensionMismatch { expected, got } => {
                write!(f, "expected {expected} channel LLRs, got {got}")
            }
            DecodeError::MaxItersZero => write!(f, "max_iters must be at least 1"),
            DecodeError::ClipNotPositive { clip } => {
                write!(f, "clip must be positive and finite, got {clip}")
            }
            DecodeError::RescaleFactorNotPow2 { factor } => {
                write!(f, "rescale factor must be an exact power of two, got {factor:e}")
            }
            DecodeError::RescaleTriggerOutOfRange { trigger } => {
                write!(f, "rescale trigger must be positive and below the format maximum, got {trigger:e}")
            }
            DecodeError::Kernel(e) => write!(f, "kernel failure: {e}"),
        }
    }
}

impl std::error::Error for DecodeError {}

impl From<KernelError> for DecodeError {
    fn from(e: KernelError) -> Self {
        DecodeError::Kernel(e)
    }
}

/// Everything a decode needs to know beyond the graph and the channel
/// values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    pub kernel: KernelKind,
    pub max_iters: u32,
    /// Saturating mode: every v2c and c2v message is clamped to
    /// [-clip, +clip], including the initial copy of the channel LLRs.
    pub clip: Option<f64>,
    pub rescale_trigger: f64,
    pub rescale_factor: f64,
    /// When false, the result reports 0 for `max_abs_llr_seen`; the
    /// hybrid and rescale hooks always see the tracked maximum either
    /// way.
    pub track_extremes: bool,
}

impl DecoderConfig {
    pub fn new(kernel: KernelKind) -> DecoderConfig {
        DecoderConfig {
            kernel,
            max_iters: DEFAULT_MAX_ITERS,
            clip: None,
            rescale_trigger: DEFAULT_RESCALE_TRIGGER,
            rescale_factor: default_rescale_factor(),
            track_extremes: true,
        }
    }

    fn validate(&self) -> Result<(), DecodeError> {
        if self.max_iters == 0 {
            return Err(DecodeError::MaxItersZero);
        }
        if let Some(c) = self.clip {
            if !(c > 0.0 && c.is_finite()) {
                return Err(DecodeError::ClipNotPositive { clip: c });
            }
        }
        if !is_exact_pow2(self.rescale_factor) {
            return Err(DecodeError::RescaleFactorNotPow2 { factor: self.rescale_factor });
        }
        if !(self.rescale_trigger > 0.0 && self.rescale_trigger < f64::MAX) {
            return Err(DecodeError::RescaleTriggerOutOfRange { trigger: self.rescale_trigger });
        }
        Ok(())
    }
}

fn is_exact_pow2(x: f64) -> bool {
    if !(x > 0.0) || !x.is_finite() {
        return false;
    }
    // Normal powers of two have an all-zero significand field.
    let bits = x.to_bits();
    let mantissa = bits & ((1u64 << 52) - 1);
    let exponent = (bits >> 52) & 0x7ff;
    if exponent == 0 {
        // Subnormal: exactly one bit set.
        mantissa.is_power_of_two()
    } else {
        mantissa == 0
    }
}

/// Per-edge message buffers for one decode in flight.
#[derive(Debug, Clone)]
pub struct MessageState {
    /// Variable-to-check messages, indexed by edge id.
    pub v2c: Vec<f64>,
    /// Check-to-variable messages, indexed by edge id.
    pub c2v: Vec<f64>,
    /// Channel LLRs, indexed by variable; rescaling scales these too.
    pub channel_llrs: Vec<f64>,
    /// Completed full iterations.
    pub iteration: u32,
}

/// Outcome and telemetry of one decode.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Whether the syndrome was satisfied within the iteration cap.
    pub converged: bool,
    pub iterations_used: u32,
    pub hard_bits: Vec<u8>,
    /// Largest |LLR| observed across messages, channel values, and
    /// posteriors (0 when extremes tracking is off).
    pub max_abs_llr_seen: f64,
    pub rescale_events: u32,
    pub hybrid_switched: bool,
    /// Numeric conditions accumulated over the whole decode.
    pub overflow_flags: NumericEvents,
    /// Per-variable posterior LLRs from the final iteration.
    pub posterior_llrs: Vec<f64>,
}

/// Runs the flooding schedule: a check-node half-iteration over all
/// edges, a variable-node half-iteration over all edges, then decisions
/// and a syndrome test, stopping on success or at the iteration cap.
pub fn decode(
    graph: &TannerGraph,
    channel_llrs: &[f64],
    config: &DecoderConfig,
) -> Result<DecodeResult, DecodeError> {
    config.validate()?;
    if channel_llrs.len() != graph.n_vars() {
        return Err(DecodeError::DimensionMismatch {
            expected: graph.n_vars(),
            got: channel_llrs.len(),
        });
    }

    let n_edges = graph.n_edges();
    let n_vars = graph.n_vars();
    let clip = config.clip;
    let clamp = |x: f64| match clip {
        Some(c) => x.clamp(-c, c),
        None => x,
    };

    let mut state = MessageState {
        v2c: vec![0.0; n_edges],
        c2v: vec![0.0; n_edges],
        channel_llrs: channel_llrs.to_vec(),
        iteration: 0,
    };
    for e in 0..n_edges {
        state.v2c[e] = clamp(channel_llrs[graph.edge_var(e)]);
    }

    let mut events = NumericEvents::default();
    let mut scratch = CnScratch::default();
    let mut cn_in: Vec<f64> = Vec::with_capacity(graph.max_check_degree());
    let mut cn_out: Vec<f64> = vec![0.0; graph.max_check_degree()];
    let mut bits = vec![0u8; n_vars];
    let mut posterior = vec![0.0; n_vars];

    let is_hybrid = matches!(config.kernel, KernelKind::Hybrid { .. });
    let switch_threshold = match config.kernel {
        KernelKind::Hybrid { switch_threshold } => switch_threshold,
        _ => f64::INFINITY,
    };
    let mut switched = false;
    let mut active = config.kernel;
    let mut rescale_events = 0u32;

    let mut channel_max = state.channel_llrs.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let mut lifetime_max = state.v2c.iter().fold(channel_max, |m, &x| m.max(x.abs()));

    // "Seen" includes the initial messages: a huge channel LLR switches
    // a hybrid decode before its first check-node pass.
    if is_hybrid && !switched && lifetime_max >= switch_threshold {
        switched = true;
        active = KernelKind::Msa;
    }

    let mut converged = false;
    let mut iterations_used = config.max_iters;

    for iter in 1..=config.max_iters {
        // Check-node half-iteration.
        let mut message_max = 0.0f64;
        for c in 0..graph.n_checks() {
            let edges = graph.check_edges(c);
            cn_in.clear();
            cn_in.extend(edges.iter().map(|&e| state.v2c[e as usize]));
            let out = &mut cn_out[..edges.len()];
            cn_extrinsic_into(active, &cn_in, out, &mut scratch, &mut events)?;
            for (slot, &e) in edges.iter().enumerate() {
                let m = clamp(out[slot]);
                state.c2v[e as usize] = m;
                message_max = message_max.max(m.abs());
            }
        }
        if is_hybrid && !switched && message_max.max(lifetime_max) >= switch_threshold {
            switched = true;
            active = KernelKind::Msa;
        }
        lifetime_max = lifetime_max.max(message_max);

        // Variable-node half-iteration, plus decisions and posteriors.
        for v in 0..n_vars {
            let range = graph.var_edges(v);
            let lambda = state.channel_llrs[v];
            let degree = range.len();
            let start = range.start;
            let mut total = lambda;
            for k in 0..degree {
                let incoming = &state.c2v[start..start + degree];
                let m = clamp(extrinsic_sum(lambda, incoming, k, &mut events));
                state.v2c[start + k] = m;
                message_max = message_max.max(m.abs());
            }
            for k in 0..degree {
                total += state.c2v[start + k];
            }
            if total.is_nan() {
                events.indeterminate_sums += 1;
                total = 0.0;
            }
            posterior[v] = total;
            bits[v] = if total < 0.0 { 1 } else { 0 };
            lifetime_max = lifetime_max.max(total.abs());
        }
        if is_hybrid && !switched && message_max.max(lifetime_max) >= switch_threshold {
            switched = true;
            active = KernelKind::Msa;
        }
        lifetime_max = lifetime_max.max(message_max);
        state.iteration = iter;

        debug_assert!(
            state.v2c.iter().chain(state.c2v.iter()).all(|x| !x.is_nan()),
            "NaN in message state at iteration {iter}"
        );

        // Rescale hook, before the convergence test so growth is never
        // left unhandled; restricted to kernels whose outputs scale
        // exactly with their inputs.
        if active.positively_homogeneous() && message_max.max(channel_max) > config.rescale_trigger
        {
            let factor = config.rescale_factor;
            for x in state.v2c.iter_mut() {
                *x *= factor;
            }
            for x in state.c2v.iter_mut() {
                *x *= factor;
            }
            for x in state.channel_llrs.iter_mut() {
                *x *= factor;
            }
            channel_max *= factor;
            rescale_events += 1;
            // Power-of-two scaling leaves every sign, and therefore
            // every decision, untouched; cheap enough to verify on the
            // rare occasions a rescale fires.
            for v in 0..n_vars {
                let range = graph.var_edges(v);
                let mut total = state.channel_llrs[v];
                for e in range {
                    total += state.c2v[e];
                }
                let bit = if total < 0.0 { 1 } else { 0 };
                assert_eq!(
                    bit, bits[v],
                    "rescaling changed the decision of variable {v}"
                );
            }
        }

        if graph.syndrome_ok(&bits) {
            converged = true;
            iterations_used = iter;
            break;
        }
    }

    Ok(DecodeResult {
        converged,
        iterations_used,
        hard_bits: bits,
        max_abs_llr_seen: if config.track_extremes { lifetime_max } else { 0.0 },
        rescale_events,
        hybrid_switched: switched,
        overflow_flags: events,
        posterior_llrs: posterior,
    })
}

// Extrinsic LLR sum excluding the local slot, with interception of the
// indeterminate sum of conflicting infinities.
fn extrinsic_sum(channel: f64, incoming: &[f64], exclude: usize, events: &mut NumericEvents) -> f64 {
    let mut sum = channel;
    for (k, &x) in incoming.iter().enumerate() {
        if k == exclude {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_alist;

    const SPC3: &str = "3 1\n1 3\n1 1 1\n3\n1\n1\n1\n1 2 3\n";

    fn spc3() -> TannerGraph {
        parse_alist(SPC3).unwrap()
    }

    #[test]
    fn spc3_single_check_posterior_matches_the_closed_form() {
        let g = spc3();
        let cfg = DecoderConfig::new(KernelKind::PairwiseExact);
        let r = decode(&g, &[4.0, 4.0, -0.1], &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations_used, 1);
        assert_eq!(r.hard_bits, vec![0, 0, 0]);
        let expected = -0.1 + 3.3071882258129506;
        assert!(
            (r.posterior_llrs[2] - expected).abs() < 1e-12,
            "posterior {} vs {expected}",
            r.posterior_llrs[2]
        );
        assert_eq!(r.rescale_events, 0);
        assert!(!r.hybrid_switched);
    }

    #[test]
    fn unsatisfiable_frame_stops_at_the_iteration_cap() {
        let g = spc3();
        let mut cfg = DecoderConfig::new(KernelKind::PairwiseExact);
        cfg.max_iters = 1;
        let r = decode(&g, &[1.0, -1.0, 0.5], &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations_used, 1);
        assert!(!g.syndrome_ok(&r.hard_bits));
    }

    #[test]
    fn noiseless_transmission_converges_immediately_everywhere() {
        let g = crate::graph::generate_regular(60, 3, 6, 9, 6).unwrap();
        let llrs = vec![1e4; 60];
        for tag in ["pairwise_exact", "msa", "old"] {
            let cfg = DecoderConfig::new(KernelKind::from_tag(tag).unwrap());
            let r = decode(&g, &llrs, &cfg).unwrap();
            assert!(r.converged, "{tag}");
            assert_eq!(r.iterations_used, 1, "{tag}");
            assert!(r.hard_bits.iter().all(|&b| b == 0), "{tag}");
        }
    }

    #[test]
    fn dimension_and_config_validation() {
        let g = spc3();
        let cfg = DecoderConfig::new(KernelKind::Msa);
        assert!(matches!(
            decode(&g, &[1.0, 2.0], &cfg),
            Err(DecodeError::DimensionMismatch { expected: 3, got: 2 })
        ));
        let mut bad = cfg;
        bad.max_iters = 0;
        assert!(matches!(decode(&g, &[1.0; 3], &bad), Err(DecodeError::MaxItersZero)));
        let mut bad = cfg;
        bad.rescale_factor = 0.3;
        assert!(matches!(
            decode(&g, &[1.0; 3], &bad),
            Err(DecodeError::RescaleFactorNotPow2 { .. })
        ));
        let mut bad = cfg;
        bad.clip = Some(-2.0);
        assert!(matches!(decode(&g, &[1.0; 3], &bad), Err(DecodeError::ClipNotPositive { .. })));
    }

    #[test]
    fn clip_applies_to_the_initial_messages_too() {
        let g = spc3();
        let mut cfg = DecoderConfig::new(KernelKind::PairwiseExact);
        cfg.clip = Some(1.0);
        let r = decode(&g, &[4.0, 4.0, -0.1], &cfg).unwrap();
        // v3's extrinsic input is the pair reduction of two clipped +1
        // messages, not of the raw +4s.
        let expected = -0.1 + crate::kernels::cn_pairwise_exact(1.0, 1.0);
        assert!(
            (r.posterior_llrs[2] - expected).abs() < 1e-12,
            "posterior {} vs {expected}",
            r.posterior_llrs[2]
        );
    }

    #[test]
    fn hybrid_switches_on_the_first_large_message() {
        let g = spc3();
        let threshold = 2f64.powi(56);
        let mut cfg = DecoderConfig::new(KernelKind::Hybrid { switch_threshold: threshold });
        cfg.max_iters = 3;
        let big = 2f64.powi(57);
        let r = decode(&g, &[big, 4.0, -0.1], &cfg).unwrap();
        assert!(r.hybrid_switched);
        let r = decode(&g, &[4.0, 4.0, -0.1], &cfg).unwrap();
        assert!(!r.hybrid_switched);
        // Non-hybrid kernels never report a switch.
        let cfg = DecoderConfig::new(KernelKind::Msa);
        let r = decode(&g, &[big, 4.0, -0.1], &cfg).unwrap();
        assert!(!r.hybrid_switched);
    }

    #[test]
    fn switched_hybrid_equals_min_sum_from_that_point_on() {
        let g = crate::graph::generate_regular(60, 3, 6, 3, 6).unwrap();
        // Tiny threshold: the switch fires on the initial messages, so
        // the whole decode runs on the fallback.
        let mut hybrid_cfg =
            DecoderConfig::new(KernelKind::Hybrid { switch_threshold: 1e-12 });
        hybrid_cfg.max_iters = 5;
        let mut msa_cfg = DecoderConfig::new(KernelKind::Msa);
        msa_cfg.max_iters = 5;
        let llrs: Vec<f64> = (0..60).map(|i| ((i * 7919 % 13) as f64 - 6.0) * 0.8).collect();
        let a = decode(&g, &llrs, &hybrid_cfg).unwrap();
        let b = decode(&g, &llrs, &msa_cfg).unwrap();
        assert!(a.hybrid_switched);
        assert_eq!(a.hard_bits, b.hard_bits);
        assert_eq!(a.posterior_llrs, b.posterior_llrs);
        assert_eq!(a.iterations_used, b.iterations_used);
    }

    #[test]
    fn rescaling_fires_scales_exactly_and_keeps_decisions() {
        let g = spc3();
        let cfg = DecoderConfig::new(KernelKind::Msa);
        let r = decode(&g, &[1e306, -1e306, 1e306], &cfg).unwrap();
        assert_eq!(r.rescale_events, 1);
        assert!(r.posterior_llrs.iter().all(|x| x.is_finite()));
        assert!(r.max_abs_llr_seen >= 1e306);
        // The same frame under the exact kernel must not rescale: the
        // hook is reserved for positively homogeneous kernels.
        let cfg = DecoderConfig::new(KernelKind::PairwiseExact);
        let r = decode(&g, &[1e306, -1e306, 1e306], &cfg).unwrap();
        assert_eq!(r.rescale_events, 0);
    }

    #[test]
    fn no_rescale_below_the_trigger() {
        let g = spc3();
        let r = decode(&g, &[10.0, -3.0, 2.0], &DecoderConfig::new(KernelKind::Msa)).unwrap();
        assert_eq!(r.rescale_events, 0);
    }

    #[test]
    fn saturating_mode_respects_the_ceiling() {
        let g = crate::graph::generate_regular(60, 3, 6, 5, 6).unwrap();
        let mut cfg = DecoderConfig::new(KernelKind::PairwiseExact);
        cfg.clip = Some(8.0);
        cfg.max_iters = 10;
        let llrs: Vec<f64> = (0..60).map(|i| if i % 5 == 0 { -40.0 } else { 25.0 }).collect();
        let r = decode(&g, &llrs, &cfg).unwrap();
        // Posteriors may exceed the clip (channel term is unclipped,
        // and the decision sum is not a message), but no message-driven
        // extreme can: the largest LLR seen is bounded by the channel
        // values and clip * degree.
        assert!(r.max_abs_llr_seen <= 40.0 + 3.0 * 8.0);
        for x in &r.posterior_llrs {
            assert!(x.is_finite());
        }
    }

    #[test]
    fn conflicting_certainties_are_intercepted() {
        // v0 sits on two checks whose other members are fully certain
        // in opposite directions, so under the saturating tanh product
        // v0 receives +inf and -inf at once.
        let text = "5 2\n2 3\n2 1 1 1 1\n3 3\n1 2\n1\n1\n2\n2\n1 2 3\n1 4 5\n";
        let g = parse_alist(text).unwrap();
        let mut cfg = DecoderConfig::new(KernelKind::Tanh);
        cfg.max_iters = 2;
        let r = decode(&g, &[0.5, 60.0, 60.0, 60.0, -60.0], &cfg).unwrap();
        assert!(r.posterior_llrs.iter().all(|x| !x.is_nan()));
        assert_eq!(r.posterior_llrs[0], 0.0);
        assert!(r.overflow_flags.indeterminate_sums > 0);
        assert!(r.overflow_flags.infinite_outputs > 0);
    }
}
