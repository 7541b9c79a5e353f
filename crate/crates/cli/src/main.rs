//! Command-line front end: every experiment in the library is exposed
//! as a subcommand that emits one CSV document with its full run
//! manifest embedded as leading comment lines.

use clap::{Args, Parser, Subcommand};
use llrlab::decoder::{decode, DecoderConfig};
use llrlab::fp::{
    accuracy_sweep, llr_limit, log_grid, phi_crossovers, resolution_profile, FpFormat, LlrDomain,
    PhiVariant, SaturationTechnique, BINARY128, BINARY32, BINARY64,
};
use llrlab::graph::{parse_alist, TannerGraph};
use llrlab::kernels::KernelKind;
use llrlab::sim::{cn_noise_experiment, map_oracle, run_sweep, StopRule};
use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "llrlab", version, about = "Floating-point LLR decoding laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the LLR ceiling of each update formulation per float format.
    Limits(LimitsArgs),
    /// Sweep evaluation accuracy of the check-node nonlinearity.
    PhiAccuracy(PhiAccuracyArgs),
    /// Profile the smallest LLR increment each message domain resolves.
    Resolution(ResolutionArgs),
    /// Measure kernel RMS error against the extended-precision reference.
    CnNoise(CnNoiseArgs),
    /// Run a seeded frame-error-rate sweep over Eb/N0.
    Fer(FerArgs),
    /// Decode one frame from explicit channel LLRs.
    DecodeOne(DecodeOneArgs),
    /// Exact per-bit posteriors by codeword enumeration (small codes).
    MapOracle(MapOracleArgs),
}

#[derive(Args)]
struct OutArg {
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct LimitsArgs {
    /// Comma-separated float formats (binary32, binary64, binary128).
    #[arg(long, value_delimiter = ',', default_values = ["binary32", "binary64", "binary128"])]
    formats: Vec<String>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct PhiAccuracyArgs {
    /// Lower end of the evaluation grid.
    #[arg(long, default_value_t = 0.1)]
    min: f64,
    /// Upper end of the evaluation grid.
    #[arg(long, default_value_t = 20.0)]
    max: f64,
    /// Grid density.
    #[arg(long, default_value_t = 512)]
    points_per_decade: u32,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ResolutionArgs {
    /// Comma-separated domains (llr, lr, ld, git2old); default all.
    #[arg(long, value_delimiter = ',')]
    domains: Option<Vec<String>>,
    #[arg(long, default_value_t = 1.0)]
    min: f64,
    /// Upper end; clamped per domain to its representable LLR range.
    #[arg(long, default_value_t = 300.0)]
    max: f64,
    #[arg(long, default_value_t = 64)]
    points_per_decade: u32,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct CnNoiseArgs {
    /// Comma-separated kernel tags.
    #[arg(long, value_delimiter = ',',
          default_values = ["pairwise_exact", "pairwise_richter", "msa", "msa_offset"])]
    kernels: Vec<String>,
    /// Comma-separated mean input LLR values.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0, 8.0, 16.0, 30.0, 40.0])]
    grid: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct FerArgs {
    /// Parity-check matrix in alist format.
    #[arg(long)]
    alist: String,
    #[arg(long, default_value = "pairwise_exact")]
    kernel: String,
    /// Comma-separated Eb/N0 points in dB.
    #[arg(long, value_delimiter = ',', required = true)]
    ebn0: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    max_iters: u32,
    /// Saturating mode: clamp every message to [-clip, clip].
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long, default_value_t = 100)]
    min_frame_errors: u64,
    #[arg(long, default_value_t = 10_000_000)]
    max_frames: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; defaults to LLRLAB_WORKERS or 1. Results never
    /// depend on this.
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct DecodeOneArgs {
    /// Parity-check matrix in alist format.
    #[arg(long)]
    alist: String,
    #[arg(long, default_value = "pairwise_exact")]
    kernel: String,
    #[arg(long, default_value_t = 200)]
    max_iters: u32,
    #[arg(long)]
    clip: Option<f64>,
    /// Comma-separated channel LLRs, one per variable.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    llrs: Vec<f64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct MapOracleArgs {
    /// Parity-check matrix in alist format.
    #[arg(long)]
    alist: String,
    /// Comma-separated channel LLRs, one per variable.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    llrs: Vec<f64>,
    #[command(flatten)]
    out: OutArg,
}

enum CliError {
    /// Bad parameters or unreadable inputs; exit code 2.
    Validation(String),
    /// A NaN reached an output, violating the numeric policy; exit 3.
    Numeric(String),
}

impl CliError {
    fn validation(e: impl std::fmt::Display) -> CliError {
        CliError::Validation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Limits(args) => cmd_limits(args),
        Command::PhiAccuracy(args) => cmd_phi_accuracy(args),
        Command::Resolution(args) => cmd_resolution(args),
        Command::CnNoise(args) => cmd_cn_noise(args),
        Command::Fer(args) => cmd_fer(args),
        Command::DecodeOne(args) => cmd_decode_one(args),
        Command::MapOracle(args) => cmd_map_oracle(args),
    }
}

// Leading manifest block shared by every document: the subcommand, the
// artifact version, and each resolved parameter, one per line. Worker
// counts and output paths are deliberately absent: they never affect
// the bytes that follow.
fn manifest(subcommand: &str, params: &[(&str, String)]) -> String {
    let mut doc = String::new();
    let _ = writeln!(doc, "# llrlab {subcommand}");
    let _ = writeln!(doc, "# version {}", env!("CARGO_PKG_VERSION"));
    for (key, value) in params {
        let _ = writeln!(doc, "# {key} {value}");
    }
    doc
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn join_floats(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

// The numeric policy: no NaN may reach an emitted document.
fn guard_nan(doc: &str) -> Result<(), CliError> {
    if doc.contains("NaN") {
        return Err(CliError::Numeric("NaN reached the output document".into()));
    }
    Ok(())
}

fn emit(out: &OutArg, doc: String) -> Result<(), CliError> {
    guard_nan(&doc)?;
    match &out.out {
        Some(path) => fs::write(path, doc)
            .map_err(|e| CliError::Validation(format!("cannot write output: {e}"))),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

fn load_graph(path: &str) -> Result<TannerGraph, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {path}: {e}")))?;
    parse_alist(&text).map_err(|e| CliError::Validation(format!("{path}: {e}")))
}

fn parse_kernel(tag: &str) -> Result<KernelKind, CliError> {
    KernelKind::from_tag(tag)
        .ok_or_else(|| CliError::Validation(format!("unknown kernel '{tag}'")))
}

fn cmd_limits(args: LimitsArgs) -> Result<(), CliError> {
    let mut formats: Vec<FpFormat> = Vec::new();
    for name in &args.formats {
        let fmt = match name.as_str() {
            "binary32" => BINARY32,
            "binary64" => BINARY64,
            "binary128" => BINARY128,
            other => return Err(CliError::Validation(format!("unknown format '{other}'"))),
        };
        formats.push(fmt);
    }
    let mut doc = manifest("limits", &[("formats", args.formats.join(","))]);
    let _ = writeln!(doc, "technique,format,limit");
    for technique in SaturationTechnique::ALL {
        for fmt in &formats {
            let limit = llr_limit(technique, *fmt);
            let _ = writeln!(doc, "{},{},{}", technique.tag(), fmt.name, limit.decimal_string());
        }
    }
    emit(&args.out, doc)
}

fn cmd_phi_accuracy(args: PhiAccuracyArgs) -> Result<(), CliError> {
    let grid = log_grid(args.min, args.max, args.points_per_decade);
    if grid.is_empty() {
        return Err(CliError::Validation(format!(
            "empty grid: min {} max {} must satisfy 0 < min < max",
            args.min, args.max
        )));
    }
    let mut doc = manifest(
        "phi-accuracy",
        &[
            ("min", args.min.to_string()),
            ("max", args.max.to_string()),
            ("points_per_decade", args.points_per_decade.to_string()),
        ],
    );
    let _ = writeln!(doc, "x,variant,bits");
    for variant in PhiVariant::ALL {
        let points = accuracy_sweep(variant, &grid).map_err(CliError::validation)?;
        for p in points {
            let _ = writeln!(doc, "{},{},{}", float(p.x), p.variant.tag(), float(p.bits));
        }
    }
    for c in phi_crossovers(&grid).map_err(CliError::validation)? {
        let _ = writeln!(
            doc,
            "# crossover {} x={} bits={}",
            c.variant.tag(),
            float(c.x),
            float(c.bits)
        );
    }
    emit(&args.out, doc)
}

fn cmd_resolution(args: ResolutionArgs) -> Result<(), CliError> {
    let domains: Vec<LlrDomain> = match &args.domains {
        None => LlrDomain::ALL.to_vec(),
        Some(names) => {
            let mut picked = Vec::new();
            for name in names {
                let domain = LlrDomain::ALL
                    .into_iter()
                    .find(|d| d.tag() == name)
                    .ok_or_else(|| CliError::Validation(format!("unknown domain '{name}'")))?;
                picked.push(domain);
            }
            picked
        }
    };
    if !(args.min > 0.0 && args.max > args.min) {
        return Err(CliError::Validation(format!(
            "grid needs 0 < min < max, got {} and {}",
            args.min, args.max
        )));
    }
    let mut doc = manifest(
        "resolution",
        &[
            ("domains", domains.iter().map(|d| d.tag()).collect::<Vec<_>>().join(",")),
            ("min", args.min.to_string()),
            ("max", args.max.to_string()),
            ("points_per_decade", args.points_per_decade.to_string()),
        ],
    );
    let _ = writeln!(doc, "lambda,domain,step_llr");
    for domain in domains {
        // Each domain runs out of representable LLRs at its own ceiling;
        // cap the grid there rather than failing the whole sweep.
        let top = args.max.min(domain.llr_limit());
        if top <= args.min {
            continue;
        }
        let grid = log_grid(args.min, top, args.points_per_decade);
        let points = resolution_profile(domain, &grid).map_err(CliError::validation)?;
        for p in points {
            let _ = writeln!(doc, "{},{},{}", float(p.lambda), p.domain.tag(), float(p.step_llr));
        }
    }
    emit(&args.out, doc)
}

fn cmd_cn_noise(args: CnNoiseArgs) -> Result<(), CliError> {
    let mut kernels = Vec::new();
    for tag in &args.kernels {
        kernels.push(parse_kernel(tag)?);
    }
    let points = cn_noise_experiment(&kernels, &args.grid, args.samples, args.seed)
        .map_err(CliError::validation)?;
    let mut doc = manifest(
        "cn-noise",
        &[
            ("kernels", args.kernels.join(",")),
            ("grid", join_floats(&args.grid)),
            ("samples", args.samples.to_string()),
            ("seed", args.seed.to_string()),
        ],
    );
    let _ = writeln!(doc, "m_lambda,kernel,rms_error,samples");
    for p in points {
        let _ = writeln!(
            doc,
            "{},{},{},{}",
            float(p.m_lambda),
            p.kernel.tag(),
            float(p.rms_error),
            p.samples
        );
    }
    emit(&args.out, doc)
}

fn worker_count(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(w) = flag {
        return Ok(w);
    }
    match std::env::var("LLRLAB_WORKERS") {
        Ok(value) => value
            .parse::<usize>()
            .map_err(|_| CliError::Validation(format!("LLRLAB_WORKERS must be a count, got '{value}'"))),
        Err(_) => Ok(1),
    }
}

fn cmd_fer(args: FerArgs) -> Result<(), CliError> {
    let graph = load_graph(&args.alist)?;
    let kernel = parse_kernel(&args.kernel)?;
    let workers = worker_count(args.workers)?;
    let mut config = DecoderConfig::new(kernel);
    config.max_iters = args.max_iters;
    config.clip = args.clip;
    let stop = StopRule { min_frame_errors: args.min_frame_errors, max_frames: args.max_frames };
    let points = run_sweep(&graph, &config, &args.ebn0, stop, args.seed, workers)
        .map_err(CliError::validation)?;
    let mut doc = manifest(
        "fer",
        &[
            ("alist", args.alist.clone()),
            ("kernel", args.kernel.clone()),
            ("ebn0", join_floats(&args.ebn0)),
            ("max_iters", args.max_iters.to_string()),
            ("clip", args.clip.map_or_else(|| "none".into(), |c| c.to_string())),
            ("min_frame_errors", args.min_frame_errors.to_string()),
            ("max_frames", args.max_frames.to_string()),
            ("seed", args.seed.to_string()),
        ],
    );
    let _ = writeln!(doc, "ebn0_db,frames,frame_errors,bit_errors,fer,ber,ci95,avg_iters,undetected");
    for p in points {
        let _ = writeln!(
            doc,
            "{},{},{},{},{},{},{},{},{}",
            float(p.ebn0_db),
            p.frames,
            p.frame_errors,
            p.bit_errors,
            float(p.fer),
            float(p.ber),
            float(p.ci95_halfwidth),
            float(p.avg_iterations),
            p.undetected_errors
        );
    }
    emit(&args.out, doc)
}

fn bits_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

fn cmd_decode_one(args: DecodeOneArgs) -> Result<(), CliError> {
    let graph = load_graph(&args.alist)?;
    let kernel = parse_kernel(&args.kernel)?;
    let mut config = DecoderConfig::new(kernel);
    config.max_iters = args.max_iters;
    config.clip = args.clip;
    let result = decode(&graph, &args.llrs, &config).map_err(CliError::validation)?;
    let mut doc = manifest(
        "decode-one",
        &[
            ("alist", args.alist.clone()),
            ("kernel", args.kernel.clone()),
            ("max_iters", args.max_iters.to_string()),
            ("clip", args.clip.map_or_else(|| "none".into(), |c| c.to_string())),
            ("llrs", join_floats(&args.llrs)),
        ],
    );
    let _ = writeln!(doc, "converged,iterations,max_abs_llr,rescales,bits");
    let _ = writeln!(
        doc,
        "{},{},{},{},{}",
        u8::from(result.converged),
        result.iterations_used,
        float(result.max_abs_llr_seen),
        result.rescale_events,
        bits_string(&result.hard_bits)
    );
    emit(&args.out, doc)
}

fn cmd_map_oracle(args: MapOracleArgs) -> Result<(), CliError> {
    let graph = load_graph(&args.alist)?;
    let decision = map_oracle(&graph, &args.llrs).map_err(CliError::validation)?;
    let mut doc = manifest(
        "map-oracle",
        &[("alist", args.alist.clone()), ("llrs", join_floats(&args.llrs))],
    );
    let _ = writeln!(doc, "variable,posterior_llr,bit");
    for (v, (&llr, &bit)) in decision.posterior_llrs.iter().zip(&decision.hard_bits).enumerate() {
        let _ = writeln!(doc, "{},{},{}", v, float(llr), bit);
    }
    emit(&args.out, doc)
}
