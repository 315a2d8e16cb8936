use super::*;
use crate::bits::pack;
use crate::oracle::{oracle_rank, oracle_rank_le, oracle_select, oracle_tree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALGOS: [Algorithm; 4] = [Algorithm::Naive, Algorithm::Packed, Algorithm::Sorted, Algorithm::Domain];

fn fig1() -> Vec<u64> {
    "cafgaehbhfd".bytes().map(u64::from).collect()
}

fn bitmaps(s: &[u64], sigma: u64, params: BuildParams) -> Vec<(u64, Vec<bool>)> {
    let codes = pack(s, code_width(sigma)).unwrap();
    tree_bitmaps(&mut CostMeter::new(), &codes, sigma, &params)
        .unwrap()
        .nodes
        .into_iter()
        .map(|(id, b)| (id, b.to_bools()))
        .collect()
}

fn archive(t: &WaveletTree) -> Vec<u8> {
    let mut w = Writer::new();
    t.write(&mut w);
    w.into_bytes()
}

fn check_queries(s: &[u64], t: &WaveletTree) {
    let symbols = t.alphabet().symbols().to_vec();
    for i in 0..s.len() as u64 {
        assert_eq!(t.access(i).unwrap(), s[i as usize]);
        for &c in &symbols {
            assert_eq!(t.rank(c, i).unwrap(), oracle_rank(s, c, i).unwrap());
            assert_eq!(t.rank_le(c, i).unwrap(), oracle_rank_le(s, c, i).unwrap());
        }
    }
    for &c in &symbols {
        let total = t.count(c);
        for j in 1..=total {
            let p = t.select(c, j).unwrap();
            assert_eq!(p, oracle_select(s, c, j).unwrap());
            assert_eq!(t.rank(c, p).unwrap(), j);
        }
        assert!(t.select(c, total + 1).is_err());
    }
}

#[test]
fn alphabet_mapping() {
    let (codes, a) = map_alphabet(&mut CostMeter::new(), &[b'a' as u64, 98, 99, 97]);
    assert_eq!(codes.to_vec(), vec![0, 1, 2, 0]);
    assert_eq!(a.sigma(), 3);
    let (codes, a) = map_alphabet(&mut CostMeter::new(), &fig1());
    assert_eq!(codes.to_vec(), vec![2, 0, 5, 6, 0, 4, 7, 1, 7, 5, 3]);
    assert_eq!(a.sigma(), 8);
    let dense = [0, 3, 1, 2, 1];
    let (codes, _) = map_alphabet(&mut CostMeter::new(), &dense);
    assert_eq!(codes.to_vec(), dense);
}

#[test]
fn fig1_tree() {
    let s = fig1();
    for algo in ALGOS {
        for tau in 1..=3 {
            let params = BuildParams::new(algo).tau(tau).parts(3);
            let t = WaveletTree::build(&mut CostMeter::new(), &s, &params).unwrap();
            assert_eq!(t.bitmap(0, 0).unwrap().to_bit_string(), "00110110110");
            assert_eq!(t.bitmap(1, 0).unwrap().to_bit_string(), "10001");
            assert_eq!(t.access(5).unwrap(), b'e' as u64);
            assert_eq!(t.rank(b'a' as u64, 4).unwrap(), 2);
            assert_eq!(t.select(b'f' as u64, 2).unwrap(), 9);
            assert_eq!(t.rank(b'f' as u64, 10).unwrap(), 2);
            assert!(matches!(t.select(b'f' as u64, 3), Err(Error::OccurrenceOutOfRange { .. })));
            check_queries(&s, &t);
        }
    }
}

#[test]
fn empty_and_single_symbol() {
    for algo in ALGOS {
        let empty = pack(&[], 2).unwrap();
        let t = WaveletTree::from_codes(&mut CostMeter::new(), &empty, 4, &BuildParams::new(algo)).unwrap();
        assert_eq!(t.bitmap(0, 0).unwrap().len(), 0);
        assert_eq!(t.nodes().len(), 1);
        assert!(t.access(0).is_err());

        let t = WaveletTree::build(&mut CostMeter::new(), &[7; 50], &BuildParams::new(algo)).unwrap();
        assert_eq!(t.sigma(), 1);
        assert!(t.nodes().is_empty());
        assert_eq!(t.access(49).unwrap(), 7);
        assert_eq!(t.rank(7, 9).unwrap(), 10);
        assert_eq!(t.select(7, 50).unwrap(), 49);
        assert_eq!(t.rank(8, 9).unwrap(), 0);

        let t = WaveletTree::build(&mut CostMeter::new(), &[], &BuildParams::new(algo)).unwrap();
        assert!(t.is_empty() && t.nodes().is_empty());
    }
}

#[test]
fn rejects_bad_parameters() {
    let codes = pack(&[0, 1, 2, 3], 2).unwrap();
    let m = &mut CostMeter::new();
    assert!(build_packed_serial(m, &codes, 4, 3).is_err());
    assert!(build_parallel_sorted(m, &codes, 4, 0).is_err());
    assert!(build_domain_decomp(m, &codes, 4, 0).is_err());
    assert!(matches!(build_packed_serial(m, &codes, 3, 1), Err(Error::SymbolOutOfRange { .. })));
}

#[test]
fn builders_match_oracle_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..200 {
        let sigma = rng.gen_range(1..=64u64);
        let n = rng.gen_range(0..=4096);
        let s: Vec<u64> = (0..n).map(|_| rng.gen_range(0..sigma)).collect();
        let expect = oracle_tree(&s, sigma);
        let depth = depth_for(sigma);
        let tau = if depth == 0 { 1 } else { rng.gen_range(1..=depth.min(4)) };
        let parts = [1, 2, 3, 7, 16][round % 5];
        for algo in ALGOS {
            let params = BuildParams::new(algo).tau(tau).parts(parts);
            let params = if depth == 0 { BuildParams { tau: None, ..params } } else { params };
            assert_eq!(bitmaps(&s, sigma, params), expect, "{algo:?} sigma={sigma} n={n} tau={tau}");
        }
    }
}

#[test]
fn queries_match_oracle_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..60 {
        let sigma = rng.gen_range(1..=64u64);
        let n = rng.gen_range(1..=1500);
        let raw: Vec<u64> = (0..n).map(|_| rng.gen_range(0..sigma) * 3 + 100).collect();
        let t = WaveletTree::build(&mut CostMeter::new(), &raw, &BuildParams::new(Algorithm::Sorted)).unwrap();
        check_queries(&raw, &t);
        assert!(t.nodes().bitmap_bits() <= n as u64 * t.depth() as u64);
    }
}

#[test]
fn large_alphabet_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let s: Vec<u64> = (0..100_000).map(|_| rng.gen_range(0..200)).collect();
    let expect = oracle_tree(&s, 200);
    for algo in [Algorithm::Packed, Algorithm::Sorted] {
        assert_eq!(bitmaps(&s, 200, BuildParams::new(algo)), expect);
    }
}

#[test]
fn domain_parts_equal_serial() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let s: Vec<u64> = (0..100_000).map(|_| rng.gen_range(0..64)).collect();
    let codes = pack(&s, 6).unwrap();
    let serial = archive(&build_packed_serial(&mut CostMeter::new(), &codes, 64, default_tau(100_000, 6)).unwrap());
    for p in [1, 2, 3, 7, 16] {
        let t = build_domain_decomp(&mut CostMeter::new(), &codes, 64, p).unwrap();
        assert_eq!(archive(&t), serial, "P={p}");
    }
    let sorted = build_parallel_sorted(&mut CostMeter::new(), &codes, 64, default_tau(100_000, 6)).unwrap();
    assert_eq!(archive(&sorted), serial);
}

#[test]
fn domain_with_more_parts_than_elements() {
    let s = fig1();
    let expect = bitmaps(&s.iter().map(|&c| c - 97).collect::<Vec<_>>(), 8, BuildParams::new(Algorithm::Naive));
    let got = bitmaps(
        &s.iter().map(|&c| c - 97).collect::<Vec<_>>(),
        8,
        BuildParams::new(Algorithm::Domain).parts(40),
    );
    assert_eq!(got, expect);
}

#[test]
fn serialization_round_trip_and_corruption() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let raw: Vec<u64> = (0..3000).map(|_| rng.gen_range(0..40)).collect();
    let t = WaveletTree::build(&mut CostMeter::new(), &raw, &BuildParams::default()).unwrap();
    let bytes = archive(&t);
    let back = WaveletTree::read(&mut Reader::new(&bytes)).unwrap();
    assert_eq!(back, t);
    assert_eq!(archive(&back), bytes);
    for _ in 0..40 {
        let mut bad = bytes.clone();
        let at = rng.gen_range(0..bad.len());
        bad[at] ^= 1 << rng.gen_range(0..8);
        if let Ok(t2) = WaveletTree::read(&mut Reader::new(&bad)) {
            // a flip that survives validation must leave a consistent tree
            for i in 0..t2.len() {
                t2.access(i).unwrap();
            }
        }
    }
    assert!(WaveletTree::read(&mut Reader::new(&bytes[..bytes.len() - 1])).is_err());
}

#[test]
fn thread_count_does_not_change_output_or_meter() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let s: Vec<u64> = (0..200_000).map(|_| rng.gen_range(0..256)).collect();
    let codes = pack(&s, 8).unwrap();
    for algo in [Algorithm::Sorted, Algorithm::Domain] {
        let run = |threads| {
            crate::par::with_threads(threads, || {
                let mut m = CostMeter::new();
                let params = BuildParams::new(algo).tau(3).parts(5);
                let t = WaveletTree::from_codes(&mut m, &codes, 256, &params).unwrap();
                (m, archive(&t))
            })
        };
        let one = run(1);
        assert_eq!(run(2), one);
        assert_eq!(run(8), one);
    }
}
