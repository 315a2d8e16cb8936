//! Builder benchmarks over a parameter grid.
//!
//! CSV columns, one row per grid cell:
//! `algorithm,n,sigma,d,tau,P,threads,wall_ms,work_ops,span_ops,table_bytes,structure_bytes`.
//! `wall_ms` is the median over the repetitions; the meters are exact and
//! identical across repetitions.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wsds::archive::Structure;
use wsds::bits::tables::table_bytes;
use wsds::par::CostMeter;
use wsds::wt::BuildParams;

use crate::{in_pool, AlgoArg, CliResult, Failure, VariantArg};

pub const CSV_HEADER: &str = "algorithm,n,sigma,d,tau,P,threads,wall_ms,work_ops,span_ops,table_bytes,structure_bytes";

#[derive(Args)]
pub struct BenchArgs {
    /// Sequence lengths.
    #[arg(long, value_delimiter = ',', default_values_t = [1u64 << 16, 1 << 18, 1 << 20, 1 << 22])]
    n: Vec<u64>,
    /// Alphabet sizes; symbols are uniform over `0..sigma`.
    #[arg(long, value_delimiter = ',', default_values_t = [256u64])]
    sigma: Vec<u64>,
    /// Chunk sizes; 0 picks the default for n.
    #[arg(long, value_delimiter = ',', default_values_t = [0u32])]
    tau: Vec<u32>,
    /// Part counts for the domain-decomposition builder.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize])]
    parts: Vec<usize>,
    /// Worker thread counts; 0 uses every core.
    #[arg(long, value_delimiter = ',', env = "WSDS_THREADS", default_values_t = [0usize])]
    threads: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "naive,packed")]
    algo: Vec<AlgoArg>,
    #[arg(long, value_enum, default_value_t = VariantArg::Tree)]
    variant: VariantArg,
    /// Node degree of the multiary variant.
    #[arg(long)]
    degree: Option<u32>,
    /// Repetitions per cell, at least 3.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(3..))]
    reps: u32,
    /// Output file; standard output when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

pub fn run(a: BenchArgs) -> CliResult<()> {
    let mut out: Box<dyn Write> = match &a.csv {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout()),
    };
    let io = |e: std::io::Error| Failure::usage(e.to_string());
    writeln!(out, "{CSV_HEADER}").map_err(io)?;
    let variant = a.variant.variant();
    for &n in &a.n {
        for &sigma in &a.sigma {
            let mut rng = ChaCha8Rng::seed_from_u64(n ^ sigma << 40);
            let raw: Vec<u64> = (0..n).map(|_| rng.gen_range(0..sigma.max(1))).collect();
            for &tau in &a.tau {
                for &parts in &a.parts {
                    for &threads in &a.threads {
                        for algo in &a.algo {
                            let mut params = BuildParams::new(algo.algorithm()).parts(parts);
                            if tau > 0 {
                                params = params.tau(tau);
                            }
                            let mut walls = Vec::new();
                            let mut last = None;
                            for _ in 0..a.reps {
                                let start = Instant::now();
                                let (s, meter) = in_pool(threads, || {
                                    let mut meter = CostMeter::new();
                                    Structure::build(&mut meter, &raw, variant, a.degree, &params).map(|s| (s, meter))
                                })?;
                                walls.push(start.elapsed().as_secs_f64() * 1e3);
                                last = Some((s, meter));
                            }
                            let (s, meter) = last.expect("at least one repetition");
                            walls.sort_by(f64::total_cmp);
                            let wall = walls[walls.len() / 2].max(1e-3);
                            writeln!(
                                out,
                                "{},{n},{},{},{},{parts},{threads},{wall:.3},{},{},{},{}",
                                algo.algorithm().name(),
                                s.sigma(),
                                s.degree(),
                                s.tau(),
                                meter.work(),
                                meter.span(),
                                table_bytes(),
                                s.size_in_bytes()
                            )
                            .map_err(io)?;
                        }
                    }
                }
            }
        }
    }
    out.flush().map_err(io)
}
