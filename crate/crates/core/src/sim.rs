//! Monte Carlo layer: seeded parallel FER/BER sweeps, the check-node
//! RMS-error comparison, and a brute-force MAP oracle for codes small
//! enough to enumerate.
//!
//! Every random quantity is derived from a master seed and the frame or
//! sample index, so results are reproducible and independent of the
//! worker count.

use crate::channel::{frame_rng, ChannelError, ChannelParams};
use crate::decoder::{decode, DecodeError, DecoderConfig};
use crate::graph::TannerGraph;
use crate::kernels::{cn_extrinsic_into, cn_pairwise_exact_dd, CnScratch, KernelKind, NumericEvents};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::fmt;

/// Default stop rule: enough error events for a stable estimate.
pub const DEFAULT_MIN_FRAME_ERRORS: u64 = 100;
/// Default frame budget per sweep point.
pub const DEFAULT_MAX_FRAMES: u64 = 10_000_000;
/// Frames per scheduling batch. The stop rule is evaluated only at
/// batch boundaries, and batch totals are sums of per-frame integer
/// counts, so the outcome never depends on the worker count.
pub const SWEEP_BATCH: u64 = 1024;
/// Largest null-space dimension the MAP oracle will enumerate.
pub const MAP_ORACLE_MAX_DIM: usize = 20;
/// Check degree used by the kernel noise experiment.
pub const CN_NOISE_DEGREE: usize = 4;
/// Minimum sample count for a meaningful RMS estimate.
pub const CN_NOISE_MIN_SAMPLES: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    InvalidStopRule { min_frame_errors: u64, max_frames: u64 },
    InvalidWorkers { workers: usize },
    EmptyGrid,
    NonPositiveMean { m_lambda: f64 },
    TooFewSamples { samples: u64 },
    DimensionTooLarge { null_dimension: usize, max: usize },
    DimensionMismatch { expected: usize, got: usize },
    Channel(ChannelError),
    Decode(DecodeError),
    ThreadPool(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::InvalidStopRule { min_frame_errors, max_frames } => write!(
                f,
                "stop rule needs min_frame_errors >= 1 and max_frames >= 1, got ({min_frame_errors}, {max_frames})"
            ),
            SimError::InvalidWorkers { workers } => {
                write!(f, "worker count must be at least 1, got {workers}")
            }
            SimError::EmptyGrid => write!(f, "parameter grid must not be empty"),
            SimError::NonPositiveMean { m_lambda } => {
                write!(f, "mean input LLR must be positive, got {m_lambda}")
            }
            SimError::TooFewSamples { samples } => write!(
                f,
                "RMS estimate needs at least {CN_NOISE_MIN_SAMPLES} samples, got {samples}"
            ),
            SimError::DimensionTooLarge { null_dimension, max } => write!(
                f,
                "codeword enumeration infeasible: null-space dimension {null_dimension} exceeds {max}"
            ),
            SimError::DimensionMismatch { expected, got } => {
                write!(f, "expected {expected} channel LLRs, got {got}")
            }
            SimError::Channel(e) => write!(f, "channel setup failed: {e}"),
            SimError::Decode(e) => write!(f, "decode failed: {e}"),
            SimError::ThreadPool(msg) => write!(f, "worker pool construction failed: {msg}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<ChannelError> for SimError {
    fn from(e: ChannelError) -> Self {
        SimError::Channel(e)
    }
}

impl From<DecodeError> for SimError {
    fn from(e: DecodeError) -> Self {
        SimError::Decode(e)
    }
}

/// When to stop simulating one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_frame_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> StopRule {
        StopRule {
            min_frame_errors: DEFAULT_MIN_FRAME_ERRORS,
            max_frames: DEFAULT_MAX_FRAMES,
        }
    }
}

impl StopRule {
    fn validate(&self) -> Result<(), SimError> {
        if self.min_frame_errors == 0 || self.max_frames == 0 {
            return Err(SimError::InvalidStopRule {
                min_frame_errors: self.min_frame_errors,
                max_frames: self.max_frames,
            });
        }
        Ok(())
    }
}

/// Aggregated outcome of one Eb/N0 point.
#[derive(Debug, Clone, PartialEq)]
pub struct FerPoint {
    pub ebn0_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub avg_iterations: f64,
    pub fer: f64,
    pub ber: f64,
    /// 95% normal-approximation half-width on the FER estimate;
    /// approximate at low error counts.
    pub ci95_halfwidth: f64,
    /// Frames that satisfied the syndrome but decided a nonzero word.
    pub undetected_errors: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct FrameOutcome {
    errored: bool,
    undetected: bool,
    bit_errors: u32,
    iterations: u32,
}

fn simulate_frame(
    graph: &TannerGraph,
    config: &DecoderConfig,
    params: &ChannelParams,
    master_seed: u64,
    point_index: u32,
    frame_index: u64,
) -> Result<FrameOutcome, DecodeError> {
    let mut rng = frame_rng(master_seed, point_index, frame_index);
    let sigma = params.sigma();
    let mut llrs = Vec::with_capacity(graph.n_vars());
    for _ in 0..graph.n_vars() {
        let z: f64 = StandardNormal.sample(&mut rng);
        llrs.push(params.llr(1.0 + sigma * z));
    }
    let result = decode(graph, &llrs, config)?;
    let bit_errors = result.hard_bits.iter().map(|&b| u32::from(b)).sum();
    let errored = bit_errors > 0;
    Ok(FrameOutcome {
        errored,
        undetected: errored && result.converged,
        bit_errors,
        iterations: result.iterations_used,
    })
}

/// Simulates all-zero-codeword transmission at each Eb/N0 point until
/// the stop rule is met, decoding with the given configuration. Frame f
/// of point p always consumes random stream (master_seed, p, f), so the
/// returned points are bit-identical for every worker count.
pub fn run_sweep(
    graph: &TannerGraph,
    config: &DecoderConfig,
    ebn0_db_list: &[f64],
    stop: StopRule,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<FerPoint>, SimError> {
    stop.validate()?;
    if workers == 0 {
        return Err(SimError::InvalidWorkers { workers });
    }
    if ebn0_db_list.is_empty() {
        return Err(SimError::EmptyGrid);
    }
    let rate = graph.design_rate();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SimError::ThreadPool(e.to_string()))?;

    let n = graph.n_vars() as u64;
    let mut points = Vec::with_capacity(ebn0_db_list.len());
    for (point_index, &ebn0_db) in ebn0_db_list.iter().enumerate() {
        let params = ChannelParams::new(ebn0_db, rate)?;
        let mut frames = 0u64;
        let mut frame_errors = 0u64;
        let mut bit_errors = 0u64;
        let mut iterations = 0u64;
        let mut undetected = 0u64;
        while frames < stop.max_frames && frame_errors < stop.min_frame_errors {
            let batch = SWEEP_BATCH.min(stop.max_frames - frames);
            let outcomes: Result<Vec<FrameOutcome>, DecodeError> = pool.install(|| {
                (0..batch)
                    .into_par_iter()
                    .map(|k| {
                        simulate_frame(
                            graph,
                            config,
                            &params,
                            master_seed,
                            point_index as u32,
                            frames + k,
                        )
                    })
                    .collect()
            });
            for o in outcomes? {
                frame_errors += u64::from(o.errored);
                undetected += u64::from(o.undetected);
                bit_errors += u64::from(o.bit_errors);
                iterations += u64::from(o.iterations);
            }
            frames += batch;
        }
        let fer = frame_errors as f64 / frames as f64;
        points.push(FerPoint {
            ebn0_db,
            frames,
            frame_errors,
            bit_errors,
            avg_iterations: iterations as f64 / frames as f64,
            fer,
            ber: bit_errors as f64 / (frames * n) as f64,
            ci95_halfwidth: 1.96 * (fer * (1.0 - fer) / frames as f64).sqrt(),
            undetected_errors: undetected,
        });
    }
    Ok(points)
}

/// RMS disagreement of one kernel against the extended-precision
/// reference at one mean input LLR.
#[derive(Debug, Clone, PartialEq)]
pub struct CnNoisePoint {
    pub m_lambda: f64,
    pub kernel: KernelKind,
    pub rms_error: f64,
    pub samples: u64,
}

/// Draws degree-4 input sets with i.i.d. N(m, 2m) components and
/// measures each kernel's first extrinsic output against the
/// extended-precision pairwise-exact reduction of the same inputs.
/// Every kernel sees identical draws, so points are comparable across
/// kernels; rows come out grid-major, kernel-minor.
pub fn cn_noise_experiment(
    kernels: &[KernelKind],
    m_grid: &[f64],
    samples: u64,
    seed: u64,
) -> Result<Vec<CnNoisePoint>, SimError> {
    if kernels.is_empty() || m_grid.is_empty() {
        return Err(SimError::EmptyGrid);
    }
    if samples < CN_NOISE_MIN_SAMPLES {
        return Err(SimError::TooFewSamples { samples });
    }
    for &m in m_grid {
        if !(m > 0.0) || !m.is_finite() {
            return Err(SimError::NonPositiveMean { m_lambda: m });
        }
    }

    let mut out = vec![0.0f64; CN_NOISE_DEGREE];
    let mut scratch = CnScratch::default();
    let mut events = NumericEvents::default();
    let mut points = Vec::with_capacity(m_grid.len() * kernels.len());
    for (grid_index, &m) in m_grid.iter().enumerate() {
        let sd = (2.0 * m).sqrt();
        let mut sq_sums = vec![0.0f64; kernels.len()];
        let mut inputs = [0.0f64; CN_NOISE_DEGREE];
        for sample in 0..samples {
            let mut rng = frame_rng(seed, grid_index as u32, sample);
            for slot in inputs.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *slot = m + sd * z;
            }
            let reference = cn_pairwise_exact_dd(&inputs[1..]).to_f64();
            for (ki, &kernel) in kernels.iter().enumerate() {
                cn_extrinsic_into(kernel, &inputs, &mut out, &mut scratch, &mut events)
                    .map_err(DecodeError::from)?;
                let diff = out[0] - reference;
                sq_sums[ki] += diff * diff;
            }
        }
        for (ki, &kernel) in kernels.iter().enumerate() {
            points.push(CnNoisePoint {
                m_lambda: m,
                kernel,
                rms_error: (sq_sums[ki] / samples as f64).sqrt(),
                samples,
            });
        }
    }
    Ok(points)
}

/// Exact per-bit posteriors from full codeword enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDecision {
    pub posterior_llrs: Vec<f64>,
    pub hard_bits: Vec<u8>,
}

// Dense GF(2) row: one bit per variable, packed into words.
#[derive(Clone)]
struct BitRow {
    words: Vec<u64>,
}

impl BitRow {
    fn zero(n: usize) -> BitRow {
        BitRow { words: vec![0; n.div_ceil(64)] }
    }

    fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn xor_in(&mut self, other: &BitRow) {
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w ^= o;
        }
    }
}

// Reduced row echelon form over GF(2); returns (pivot columns, reduced
// rows aligned with them).
fn rref(mut rows: Vec<BitRow>, n_cols: usize) -> (Vec<usize>, Vec<BitRow>) {
    let mut pivots = Vec::new();
    let mut rank = 0usize;
    for col in 0..n_cols {
        let Some(src) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
            continue;
        };
        rows.swap(rank, src);
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row.get(col) {
                row.xor_in(&pivot_row);
            }
        }
        pivots.push(col);
        rank += 1;
    }
    rows.truncate(rank);
    (pivots, rows)
}

/// Enumerates the code's codewords by spanning the null space of the
/// parity-check matrix and computes exact per-bit posterior LLRs with
/// max-normalized accumulation. Decisions follow the decoder's
/// convention: negative posterior means bit 1, ties mean bit 0.
pub fn map_oracle(graph: &TannerGraph, channel_llrs: &[f64]) -> Result<MapDecision, SimError> {
    let n = graph.n_vars();
    if channel_llrs.len() != n {
        return Err(SimError::DimensionMismatch { expected: n, got: channel_llrs.len() });
    }

    let mut rows: Vec<BitRow> = (0..graph.n_checks()).map(|_| BitRow::zero(n)).collect();
    for c in 0..graph.n_checks() {
        for &e in graph.check_edges(c) {
            rows[c].set(graph.edge_var(e as usize));
        }
    }
    let (pivots, reduced) = rref(rows, n);
    let rank = pivots.len();
    let k = n - rank;
    if k > MAP_ORACLE_MAX_DIM {
        return Err(SimError::DimensionTooLarge { null_dimension: k, max: MAP_ORACLE_MAX_DIM });
    }

    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let free_cols: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();

    // Null-space basis: one vector per free column, with the pivot
    // coordinates back-substituted from the reduced rows.
    let mut basis: Vec<BitRow> = Vec::with_capacity(k);
    for &f in &free_cols {
        let mut v = BitRow::zero(n);
        v.set(f);
        for (i, &p) in pivots.iter().enumerate() {
            if reduced[i].get(f) {
                v.set(p);
            }
        }
        basis.push(v);
    }

    // Log-likelihood of a codeword, up to a constant shared by all
    // codewords: sum of +llr/2 for bit 0 and -llr/2 for bit 1.
    let metric = |word: &BitRow| -> f64 {
        let mut w = 0.0;
        for (i, &llr) in channel_llrs.iter().enumerate() {
            w += if word.get(i) { -llr } else { llr };
        }
        0.5 * w
    };
    let build = |combo: u64| -> BitRow {
        let mut word = BitRow::zero(n);
        for (j, b) in basis.iter().enumerate() {
            if (combo >> j) & 1 == 1 {
                word.xor_in(b);
            }
        }
        word
    };

    let count = 1u64 << k;
    let mut metrics = Vec::with_capacity(count as usize);
    let mut best = f64::NEG_INFINITY;
    for combo in 0..count {
        let w = metric(&build(combo));
        best = best.max(w);
        metrics.push(w);
    }

    let mut zero_mass = vec![0.0f64; n];
    let mut one_mass = vec![0.0f64; n];
    for combo in 0..count {
        let word = build(combo);
        let weight = (metrics[combo as usize] - best).exp();
        for i in 0..n {
            if word.get(i) {
                one_mass[i] += weight;
            } else {
                zero_mass[i] += weight;
            }
        }
    }

    let posterior_llrs: Vec<f64> =
        (0..n).map(|i| zero_mass[i].ln() - one_mass[i].ln()).collect();
    let hard_bits = posterior_llrs.iter().map(|&l| u8::from(l < 0.0)).collect();
    Ok(MapDecision { posterior_llrs, hard_bits })
}
