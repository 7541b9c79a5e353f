//! AWGN channel with binary antipodal signaling: SNR bookkeeping,
//! noise generation, and channel-LLR computation.
//!
//! Randomness is counter-based: every frame owns a ChaCha stream
//! derived from (master seed, sweep point, frame index), so results
//! are identical regardless of how frames are distributed over worker
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    RateOutOfRange { rate: f64 },
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelError::RateOutOfRange { rate } => {
                write!(f, "code rate must lie in (0, 1), got {rate}")
            }
        }
    }
}

impl std::error::Error for ChannelError {}

/// Noise level for a code rate and Eb/N0 point:
/// `sigma = 1 / sqrt(2 R 10^(ebn0_db / 10))`.
pub fn ebn0_to_sigma(ebn0_db: f64, rate: f64) -> Result<f64, ChannelError> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(ChannelError::RateOutOfRange { rate });
    }
    Ok(1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0)).sqrt())
}

/// Operating point of the channel; the three fields are locked together
/// by `1/sigma^2 = 2 R 10^(ebn0_db/10)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    sigma: f64,
    ebn0_db: f64,
    rate: f64,
}

impl ChannelParams {
    pub fn new(ebn0_db: f64, rate: f64) -> Result<ChannelParams, ChannelError> {
        let sigma = ebn0_to_sigma(ebn0_db, rate)?;
        Ok(ChannelParams { sigma, ebn0_db, rate })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn ebn0_db(&self) -> f64 {
        self.ebn0_db
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Channel LLR of one received value: `2 r / sigma^2`. Positive
    /// means bit 0.
    pub fn llr(&self, r: f64) -> f64 {
        llr_from_channel(r, self.sigma)
    }

    /// Mean of the channel-LLR distribution under bit-0 transmission;
    /// its variance is twice this.
    pub fn llr_mean(&self) -> f64 {
        2.0 / (self.sigma * self.sigma)
    }
}

/// Channel LLR `2 r / sigma^2` of a received value.
pub fn llr_from_channel(r: f64, sigma: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    2.0 * r / (sigma * sigma)
}

/// The deterministic noise stream of one frame. Streams for different
/// (point, frame) pairs are independent by construction; the same
/// triple always reproduces the same noise no matter which worker
/// consumes it.
pub fn frame_rng(master_seed: u64, point_index: u32, frame_index: u64) -> ChaCha8Rng {
    debug_assert!(frame_index < 1 << 40);
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((point_index as u64) << 40) | (frame_index & ((1 << 40) - 1)));
    rng
}

/// Antipodal transmission of a codeword through the AWGN channel:
/// bit 0 maps to +1, bit 1 to -1, and each symbol picks up independent
/// N(0, sigma^2) noise from the given stream.
pub fn transmit(bits: &[u8], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    bits.iter()
        .map(|&b| {
            let t = if b & 1 == 0 { 1.0 } else { -1.0 };
            let n: f64 = StandardNormal.sample(rng);
            t + sigma * n
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_matches_the_snr_formula() {
        assert_eq!(ebn0_to_sigma(0.0, 0.5).unwrap(), 1.0);
        let s = ebn0_to_sigma(3.0103, 0.5).unwrap();
        assert!((s - 0.707106777656652).abs() < 1e-15, "got {s}");
        let s = ebn0_to_sigma(2.4, 0.5).unwrap();
        assert!((s - 0.7585775750291838).abs() < 1e-15, "got {s}");
        assert!(matches!(ebn0_to_sigma(1.0, 0.0), Err(ChannelError::RateOutOfRange { .. })));
        assert!(matches!(ebn0_to_sigma(1.0, 1.0), Err(ChannelError::RateOutOfRange { .. })));
    }

    #[test]
    fn params_keep_the_three_fields_consistent() {
        let p = ChannelParams::new(2.0, 0.5).unwrap();
        let snr = 1.0 / (p.sigma() * p.sigma());
        assert!((snr - 2.0 * p.rate() * 10f64.powf(p.ebn0_db() / 10.0)).abs() < 1e-12);
    }

    #[test]
    fn llr_scales_received_values() {
        // sigma^2 = 0.5 up to one rounding of the square root.
        assert!((llr_from_channel(1.0, 0.5f64.sqrt()) - 4.0).abs() < 1e-14);
        assert_eq!(llr_from_channel(0.0, 0.3), 0.0);
        for r in [-2.5, -0.1, 0.4, 3.0] {
            assert_eq!(llr_from_channel(r, 0.8).signum(), r.signum());
        }
    }

    #[test]
    fn zero_noise_transmits_symbols_exactly() {
        let mut rng = frame_rng(7, 0, 0);
        let r = transmit(&[0, 1, 0, 1], 0.0, &mut rng);
        assert_eq!(r, vec![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn streams_are_deterministic_and_frame_specific() {
        let a = transmit(&[0; 8], 0.8, &mut frame_rng(1, 2, 3));
        let b = transmit(&[0; 8], 0.8, &mut frame_rng(1, 2, 3));
        assert_eq!(a, b);
        let c = transmit(&[0; 8], 0.8, &mut frame_rng(1, 2, 4));
        assert_ne!(a, c);
        let d = transmit(&[0; 8], 0.8, &mut frame_rng(1, 3, 3));
        assert_ne!(a, d);
    }

    #[test]
    fn noise_mean_stays_inside_the_clt_bound() {
        let sigma = 0.9;
        let mut rng = frame_rng(11, 0, 0);
        let n = 1_000_000;
        let r = transmit(&vec![0u8; n], sigma, &mut rng);
        let mean_noise = r.iter().map(|x| x - 1.0).sum::<f64>() / n as f64;
        assert!(mean_noise.abs() < 4.0 * sigma / 1000.0, "mean {mean_noise}");
    }

    #[test]
    fn channel_llrs_match_the_gaussian_moment_model() {
        let p = ChannelParams::new(1.0, 0.5).unwrap();
        let m = p.llr_mean();
        let n = 1_000_000;
        let mut rng = frame_rng(5, 1, 0);
        let r = transmit(&vec![0u8; n], p.sigma(), &mut rng);
        let llrs: Vec<f64> = r.iter().map(|&x| p.llr(x)).collect();
        let mean = llrs.iter().sum::<f64>() / n as f64;
        let var = llrs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - m).abs() < 0.01 * m, "mean {mean} vs {m}");
        assert!((var - 2.0 * m).abs() < 0.01 * 2.0 * m, "var {var} vs {}", 2.0 * m);
    }
}
