//! Random sweeps checking every builder against the scan oracles.

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wsds::archive::{Structure, Variant};
use wsds::bits::pack;
use wsds::oracle::{oracle_matrix, oracle_multiary, oracle_rank, oracle_rank_le, oracle_select, oracle_shaped, oracle_tree};
use wsds::par::CostMeter;
use wsds::var::{huffman_codebook, matrix_levels, multiary_digits, shaped_bitmaps, Codebook};
use wsds::wt::{code_width, depth_for, map_alphabet, tree_bitmaps, Algorithm, BuildParams};

use crate::{AlgoArg, CliResult, Failure, VariantArg, EXIT_VERIFY};

/// Inputs up to this length get exhaustive query probes.
const EXHAUSTIVE_N: usize = 4096;
const SAMPLED_PROBES: usize = 10_000;

#[derive(Args)]
pub struct VerifyArgs {
    /// Sequence length of every instance.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Raw symbols are drawn from `0..sigma`.
    #[arg(long, default_value_t = 16)]
    sigma: u64,
    /// Variant to check; all four when absent.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Number of seeds `K` (runs 0..K) or a range `A..B`.
    #[arg(long, default_value = "20")]
    seeds: String,
    /// Comma-separated builders to compare.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "naive,packed,sorted,domain")]
    algo_set: Vec<AlgoArg>,
    /// Flip one payload bit after building, to check that the sweep notices.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

fn parse_seeds(s: &str) -> CliResult<std::ops::Range<u64>> {
    let bad = || Failure::usage(format!("bad --seeds `{s}`"));
    match s.split_once("..") {
        Some((a, b)) => Ok(a.parse().map_err(|_| bad())?..b.parse().map_err(|_| bad())?),
        None => Ok(0..s.parse().map_err(|_| bad())?),
    }
}

/// One random instance: raw symbols, τ and part count all follow the seed.
struct Instance {
    raw: Vec<u64>,
    tau_pick: u32,
    parts: usize,
    degree: u32,
}

fn instance(seed: u64, n: usize, sigma: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skewed = rng.gen_bool(0.5);
    let raw = (0..n)
        .map(|_| {
            let x = rng.gen_range(0..sigma);
            if skewed {
                x * x / sigma
            } else {
                x
            }
        })
        .collect();
    Instance {
        raw,
        tau_pick: rng.gen(),
        parts: [1, 2, 3, 7, 16][rng.gen_range(0..5)],
        degree: [2, 4, 8, 16][rng.gen_range(0..4)],
    }
}

/// τ values allowed for a code tree of `height` built in steps of `k`.
fn pick_tau(height: u32, k: u32, pick: u32) -> Option<u32> {
    let top = height.min(16) / k;
    (top > 0).then(|| k * (1 + pick % top))
}

/// Node payloads as plain integers, keyed by node id (level for the matrix).
type Nodes = Vec<(u64, Vec<u64>)>;

fn as_ints(bits: &[bool]) -> Vec<u64> {
    bits.iter().map(|&b| b as u64).collect()
}

/// Builds the raw node payloads of `variant` and the oracle's version.
fn node_payloads(variant: Variant, inst: &Instance, dense: &[u64], sigma: u64, algo: Algorithm) -> CliResult<(Nodes, Nodes)> {
    let codes = pack(dense, code_width(sigma))?;
    let m = &mut CostMeter::new();
    let params = |height: u32, k: u32| {
        let p = BuildParams::new(algo).parts(inst.parts);
        match pick_tau(height, k, inst.tau_pick) {
            Some(t) => p.tau(t),
            None => p,
        }
    };
    let depth = depth_for(sigma);
    Ok(match variant {
        Variant::Tree => {
            let got = tree_bitmaps(m, &codes, sigma, &params(depth, 1))?;
            let got = got.nodes.iter().map(|(id, b)| (*id, as_ints(&b.to_bools()))).collect();
            let want = oracle_tree(dense, sigma).into_iter().map(|(id, b)| (id, as_ints(&b))).collect();
            (got, want)
        }
        Variant::Shaped => {
            let mut freqs = vec![0; sigma as usize];
            dense.iter().for_each(|&c| freqs[c as usize] += 1);
            let book = if dense.is_empty() { Codebook::from_lengths(&vec![None; sigma as usize])? } else { huffman_codebook(&freqs)? };
            let (got, _) = shaped_bitmaps(m, &codes, &book, &params(book.height(), 1))?;
            let got = got.iter().map(|(id, b)| (*id, as_ints(&b.to_bools()))).collect();
            let strings: Vec<Vec<bool>> = (0..sigma)
                .map(|s| book.get(s).map_or(Vec::new(), |cw| (0..cw.len).map(|l| cw.bit(l)).collect()))
                .collect();
            let want = oracle_shaped(dense, &strings).into_iter().map(|(id, b)| (id, as_ints(&b))).collect();
            (got, want)
        }
        Variant::Multiary => {
            let k = inst.degree.trailing_zeros();
            let padded = depth.div_ceil(k) * k;
            let (got, _) = multiary_digits(m, &codes, sigma, inst.degree, &params(padded, k))?;
            let got = got.into_iter().map(|(id, l)| (id, l.to_vec())).collect();
            (got, oracle_multiary(dense, sigma, inst.degree as u64))
        }
        Variant::Matrix => {
            let got = matrix_levels(m, &codes, sigma, &params(depth, 1))?;
            let got = got.levels.iter().enumerate().map(|(l, b)| (l as u64, as_ints(&b.to_bools()))).collect();
            let (levels, _) = oracle_matrix(dense, sigma);
            let want = levels.iter().enumerate().map(|(l, b)| (l as u64, as_ints(b))).collect();
            (got, want)
        }
    })
}

fn compare_nodes(got: &Nodes, want: &Nodes) -> Result<(), String> {
    for (g, w) in got.iter().zip(want) {
        if g.0 != w.0 {
            return Err(format!("node set differs at node {} vs {}", g.0, w.0));
        }
        if g.1 != w.1 {
            return Err(format!("payload mismatch at node {}", g.0));
        }
    }
    if got.len() != want.len() {
        return Err(format!("node count {} vs {}", got.len(), want.len()));
    }
    Ok(())
}

fn check_queries(s: &Structure, raw: &[u64], rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = raw.len() as u64;
    let mut symbols = raw.to_vec();
    symbols.sort_unstable();
    symbols.dedup();
    let check = |i: u64, c: u64| -> Result<(), String> {
        let got = (s.access(i), s.rank(c, i), s.rank_le(c, i));
        let want = (Ok(raw[i as usize]), oracle_rank(raw, c, i), oracle_rank_le(raw, c, i));
        if got != want {
            return Err(format!("query mismatch at i={i} c={c}: {got:?} vs {want:?}"));
        }
        Ok(())
    };
    let check_select = |c: u64, j: u64| -> Result<(), String> {
        let (got, want) = (s.select(c, j), oracle_select(raw, c, j));
        if got != want {
            return Err(format!("select mismatch at c={c} j={j}: {got:?} vs {want:?}"));
        }
        Ok(())
    };
    if raw.len() <= EXHAUSTIVE_N {
        for i in 0..n {
            for &c in &symbols {
                check(i, c)?;
            }
        }
        for &c in &symbols {
            for j in 1..=s.count(c) + 1 {
                check_select(c, j)?;
            }
        }
    } else {
        for _ in 0..SAMPLED_PROBES {
            let c = symbols[rng.gen_range(0..symbols.len())];
            check(rng.gen_range(0..n), c)?;
            check_select(c, rng.gen_range(1..=s.count(c) + 1))?;
        }
    }
    if s.len() != n {
        return Err(format!("length {} vs {n}", s.len()));
    }
    Ok(())
}

/// Checks one seed of one variant under every builder in `algos`.
fn check_seed(
    seed: u64,
    n: usize,
    sigma: u64,
    variant: Variant,
    algos: &[Algorithm],
    inject: bool,
) -> Result<(), String> {
    let inst = instance(seed, n, sigma);
    let (codes, alphabet) = map_alphabet(&mut CostMeter::new(), &inst.raw);
    let dense = codes.to_vec();
    let s_dense = alphabet.sigma();
    let mut archive: Option<(Algorithm, Vec<u8>)> = None;
    for &algo in algos {
        if variant == Variant::Matrix && algo == Algorithm::Domain {
            continue;
        }
        let tag = format!("{} {}", variant.name(), algo.name());
        let (mut got, want) = node_payloads(variant, &inst, &dense, s_dense, algo).map_err(|f| format!("{tag}: {}", f.msg))?;
        if inject {
            if let Some((_, p)) = got.iter_mut().find(|(_, p)| !p.is_empty()) {
                p[0] ^= 1;
            }
        }
        compare_nodes(&got, &want).map_err(|e| format!("{tag}: {e}"))?;

        let tau = match variant {
            Variant::Multiary => {
                let k = inst.degree.trailing_zeros();
                pick_tau(depth_for(s_dense).div_ceil(k) * k, k, inst.tau_pick)
            }
            Variant::Shaped => None,
            _ => pick_tau(depth_for(s_dense), 1, inst.tau_pick),
        };
        let mut params = BuildParams::new(algo).parts(inst.parts);
        if let Some(t) = tau {
            params = params.tau(t);
        }
        let degree = (variant == Variant::Multiary).then_some(inst.degree);
        let s = Structure::build(&mut CostMeter::new(), &inst.raw, variant, degree, &params)
            .map_err(|e| format!("{tag}: {e}"))?;
        let bytes = s.to_bytes().map_err(|e| format!("{tag}: {e}"))?;
        match &archive {
            None => {
                let back = Structure::from_bytes(&bytes).map_err(|e| format!("{tag}: reload: {e}"))?;
                if back.to_bytes().ok().as_ref() != Some(&bytes) {
                    return Err(format!("{tag}: archive round trip differs"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
                check_queries(&back, &inst.raw, &mut rng).map_err(|e| format!("{tag}: {e}"))?;
                archive = Some((algo, bytes));
            }
            Some((first, b)) if *b != bytes => {
                return Err(format!("{tag}: archive differs from {}", first.name()));
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn run(a: VerifyArgs) -> CliResult<()> {
    let seeds = parse_seeds(&a.seeds)?;
    if a.sigma == 0 && a.n > 0 {
        return Err(Failure::usage("--sigma must be positive"));
    }
    let variants: Vec<Variant> = match a.variant {
        Some(v) => vec![v.variant()],
        None => Variant::ALL.to_vec(),
    };
    let algos: Vec<Algorithm> = a.algo_set.iter().map(|x| x.algorithm()).collect();
    let mut checked = 0;
    for &variant in &variants {
        for seed in seeds.clone() {
            if let Err(msg) = check_seed(seed, a.n, a.sigma, variant, &algos, a.inject_fault) {
                // shrink n while the same seed still fails
                let mut n = a.n;
                let mut m = a.n / 2;
                while m > 0 {
                    if check_seed(seed, m, a.sigma, variant, &algos, a.inject_fault).is_err() {
                        n = m;
                        m /= 2;
                    } else {
                        break;
                    }
                }
                println!("FAIL seed={seed} {msg}");
                let set: Vec<&str> = algos.iter().map(|x| x.name()).collect();
                println!(
                    "reproduce: wsds verify --n {n} --sigma {} --variant {} --seeds {seed}..{} --algo-set {}",
                    a.sigma,
                    variant.name(),
                    seed + 1,
                    set.join(",")
                );
                return Err(Failure { code: EXIT_VERIFY, msg: "verification failed".into() });
            }
            checked += 1;
        }
    }
    println!("PASS {checked} instances (n={}, sigma={})", a.n, a.sigma);
    Ok(())
}
