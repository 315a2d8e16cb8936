//! `wsds` command-line tool.
//!
//! Exit codes: 0 ok, 1 usage or I/O error, 2 query argument out of range,
//! 3 corrupt archive, 4 verification failure.

mod bench;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wsds::archive::{Structure, Variant};
use wsds::par::{with_threads, CostMeter};
use wsds::wt::{Algorithm, BuildParams};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_RANGE: u8 = 2;
pub const EXIT_CORRUPT: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, msg: msg.into() }
    }
}

impl From<wsds::Error> for Failure {
    fn from(e: wsds::Error) -> Self {
        use wsds::Error::*;
        let code = match e {
            IndexOutOfRange { .. } | OccurrenceOutOfRange { .. } => EXIT_RANGE,
            CorruptArchive(_) | UnsupportedVersion(_) => EXIT_CORRUPT,
            _ => EXIT_USAGE,
        };
        Failure { code, msg: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, Failure>;

#[derive(Parser)]
#[command(name = "wsds", version, about = "Build and query wavelet trees, wavelet matrices and their variants")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build an archive from raw little-endian fixed-width symbols.
    Build(BuildArgs),
    /// Answer one query against an archive.
    Query(QueryArgs),
    /// Random sweep comparing every builder against the scan oracles.
    Verify(verify::VerifyArgs),
    /// Time and meter builders over a parameter grid, emitting CSV.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Tree,
    Shaped,
    Multiary,
    Matrix,
}

impl VariantArg {
    pub fn variant(self) -> Variant {
        match self {
            VariantArg::Tree => Variant::Tree,
            VariantArg::Shaped => Variant::Shaped,
            VariantArg::Multiary => Variant::Multiary,
            VariantArg::Matrix => Variant::Matrix,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Naive,
    Packed,
    Sorted,
    Domain,
}

impl AlgoArg {
    pub fn algorithm(self) -> Algorithm {
        match self {
            AlgoArg::Naive => Algorithm::Naive,
            AlgoArg::Packed => Algorithm::Packed,
            AlgoArg::Sorted => Algorithm::Sorted,
            AlgoArg::Domain => Algorithm::Domain,
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Input file of raw symbols.
    input: PathBuf,
    /// Archive to write.
    output: PathBuf,
    /// Symbol width in bits.
    #[arg(long, default_value_t = 8, value_parser = clap::builder::TypedValueParser::map(clap::builder::PossibleValuesParser::new(["8", "16", "32"]), |s: String| s.parse::<u32>().unwrap()))]
    width: u32,
    /// Treat the input as text: one symbol per byte.
    #[arg(long, conflicts_with = "width")]
    text: bool,
    #[arg(long, value_enum, default_value_t = VariantArg::Tree)]
    variant: VariantArg,
    #[arg(long, value_enum, default_value_t = AlgoArg::Packed)]
    algo: AlgoArg,
    /// Chunk size in bits; chosen from n when absent.
    #[arg(long)]
    tau: Option<u32>,
    /// Parts for the domain-decomposition builder.
    #[arg(long, default_value_t = 1)]
    parts: usize,
    /// Node degree of the multiary variant (power of two up to 16).
    #[arg(long)]
    degree: Option<u32>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "WSDS_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct QueryArgs {
    archive: PathBuf,
    #[arg(value_enum)]
    op: QueryOp,
    /// `access I`, `rank C I`, `rankle C I` or `select C J`.
    #[arg(num_args = 1..=2, required = true)]
    args: Vec<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum QueryOp {
    Access,
    Rank,
    Select,
    Rankle,
}

/// Runs `f` in a pool of `threads` workers, or the global pool for 0.
pub fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        f()
    } else {
        with_threads(threads, f)
    }
}

pub fn read_symbols(bytes: &[u8], width: u32) -> CliResult<Vec<u64>> {
    let w = width as usize / 8;
    if !bytes.len().is_multiple_of(w) {
        return Err(Failure::usage(format!("input length {} is not a multiple of {w} bytes", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(w)
        .map(|c| c.iter().rev().fold(0u64, |acc, &b| acc << 8 | b as u64))
        .collect())
}

fn cmd_build(a: BuildArgs) -> CliResult<()> {
    let bytes = std::fs::read(&a.input).map_err(|e| Failure::usage(format!("{}: {e}", a.input.display())))?;
    let width = if a.text { 8 } else { a.width };
    let raw = read_symbols(&bytes, width)?;
    let mut params = BuildParams::new(a.algo.algorithm()).parts(a.parts);
    if let Some(t) = a.tau {
        params = params.tau(t);
    }
    let variant = a.variant.variant();
    let start = Instant::now();
    let (s, meter) = in_pool(a.threads, || {
        let mut meter = CostMeter::new();
        Structure::build(&mut meter, &raw, variant, a.degree, &params).map(|s| (s, meter))
    })?;
    let wall = start.elapsed();
    let out = s.to_bytes()?;
    std::fs::write(&a.output, &out).map_err(|e| Failure::usage(format!("{}: {e}", a.output.display())))?;
    println!(
        "n={} sigma={} bytes={} work={} span={} wall_ms={:.3}",
        s.len(),
        s.sigma(),
        out.len(),
        meter.work(),
        meter.span(),
        wall.as_secs_f64() * 1e3
    );
    Ok(())
}

fn cmd_query(a: QueryArgs) -> CliResult<()> {
    let bytes = std::fs::read(&a.archive).map_err(|e| Failure::usage(format!("{}: {e}", a.archive.display())))?;
    let s = Structure::from_bytes(&bytes)?;
    let want = if matches!(a.op, QueryOp::Access) { 1 } else { 2 };
    if a.args.len() != want {
        return Err(Failure::usage(format!("{:?} takes {want} argument(s)", a.op).to_lowercase()));
    }
    let v = match a.op {
        QueryOp::Access => s.access(a.args[0])?,
        QueryOp::Rank => s.rank(a.args[0], a.args[1])?,
        QueryOp::Rankle => s.rank_le(a.args[0], a.args[1])?,
        QueryOp::Select => s.select(a.args[0], a.args[1])?,
    };
    println!("{v}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let r = match cli.cmd {
        Cmd::Build(a) => cmd_build(a),
        Cmd::Query(a) => cmd_query(a),
        Cmd::Verify(a) => verify::run(a),
        Cmd::Bench(a) => bench::run(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
