//! A laboratory for studying how floating-point range and resolution
//! limits shape belief-propagation decoding of LDPC codes.
//!
//! Iterative decoders push log-likelihood ratios to enormous magnitudes
//! as they converge, and every check-node update formulation stores its
//! messages in a different working domain: plain LLRs, likelihood ratios,
//! likelihood differences, involution-transformed values. Each domain
//! runs out of range or resolution at a different LLR magnitude, and a
//! decoder that silently saturates there can manufacture error floors
//! that the underlying code does not have.
//!
//! The crate is organized in three layers:
//!
//! * [`fp`] quantifies the numeric envelope: per-domain LLR ceilings,
//!   accuracy of the involution-transform evaluations, saturation
//!   thresholds, and quantization-step profiles.
//! * [`kernels`], [`graph`], [`channel`], and [`decoder`] implement the
//!   decoding machinery: every check-node update formulation as a pure
//!   function, Tanner graphs with stable edge indexing, the AWGN channel,
//!   and a flooding-schedule decoder with clipping, hybrid-kernel, and
//!   rescaling policies.
//! * [`sim`] runs seeded, reproducible Monte Carlo experiments: FER/BER
//!   sweeps, check-node noise measurements against an extended-precision
//!   reference, and a brute-force MAP oracle for small codes.
//!
//! [`dd`] provides the double-double arithmetic the reference
//! computations are built on.

pub mod channel;
pub mod dd;
pub mod decoder;
pub mod fp;
pub mod graph;
pub mod kernels;
pub mod sim;
