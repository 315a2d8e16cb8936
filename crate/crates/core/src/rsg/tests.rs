use super::*;
use crate::bits::pack;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn build(vals: &[u64], sigma: u32) -> GeneralRS {
    GeneralRS::build(&mut CostMeter::new(), pack(vals, symbol_bits(sigma)).unwrap(), sigma).unwrap()
}

fn scan_rank_le(s: &[u64], c: u64, i: usize) -> u64 {
    s[..=i].iter().filter(|&&x| x <= c).count() as u64
}

fn scan_select(s: &[u64], c: u64, j: u64) -> Option<u64> {
    s.iter().enumerate().filter(|(_, &x)| x == c).nth(j as usize - 1).map(|(p, _)| p as u64)
}

fn check_exhaustive(s: &[u64], sigma: u32, rs: &GeneralRS) {
    for i in 0..s.len() {
        assert_eq!(rs.rank_le(sigma - 1, i as u64).unwrap(), i as u64 + 1);
        let mut prev = 0;
        for c in 0..sigma {
            let r = rs.rank_le(c, i as u64).unwrap();
            assert_eq!(r, scan_rank_le(s, c as u64, i), "rank_le({c}, {i})");
            assert!(r >= prev);
            prev = r;
        }
        let c = s[i] as u32;
        assert_eq!(rs.select_sym(c, rs.rank_eq(c, i as u64).unwrap()).unwrap(), i as u64);
    }
    for c in 0..sigma {
        let total = s.iter().filter(|&&x| x == c as u64).count() as u64;
        assert_eq!(rs.count(c), total);
        let mut last = None;
        for j in 1..=total {
            let p = rs.select_sym(c, j).unwrap();
            assert_eq!(Some(p), scan_select(s, c as u64, j));
            assert_eq!(rs.rank_eq(c, p).unwrap(), j);
            assert!(last < Some(p));
            last = Some(p);
        }
        assert!(rs.select_sym(c, total + 1).is_err());
    }
}

#[test]
fn single_symbol_alphabet() {
    let rs = build(&[0; 100], 1);
    for i in 0..100 {
        assert_eq!(rs.rank_le(0, i).unwrap(), i + 1);
        assert_eq!(rs.select_sym(0, i + 1).unwrap(), i);
    }
}

#[test]
fn fig1_sequence() {
    // cafgaehbhfd
    let s = [2, 0, 5, 6, 0, 4, 7, 1, 7, 5, 3];
    let rs = build(&s, 8);
    assert_eq!(rs.rank_le(3, 10).unwrap(), 5);
    assert_eq!(rs.select_sym(7, 2).unwrap(), 8);
    assert_eq!(rs.select_sym(5, 2).unwrap(), 9);
    check_exhaustive(&s, 8, &rs);
}

#[test]
fn constant_sequence_select() {
    let rs = build(&vec![0; 10_000], 4);
    for j in 1..=10_000 {
        assert_eq!(rs.select_sym(0, j).unwrap(), j - 1);
    }
    assert_eq!(rs.count(3), 0);
}

#[test]
fn rejects_bad_input() {
    let seq = pack(&[0, 5, 1], 3).unwrap();
    assert_eq!(
        GeneralRS::build(&mut CostMeter::new(), seq, 5).unwrap_err(),
        Error::SymbolOutOfRange { symbol: 5, sigma: 5 }
    );
    let seq = pack(&[0, 1], 2).unwrap();
    assert!(GeneralRS::build(&mut CostMeter::new(), seq.clone(), 17).is_err());
    assert!(GeneralRS::build(&mut CostMeter::new(), seq, 8).is_err());
    let rs = build(&[0, 1, 2], 3);
    assert!(matches!(rs.rank_le(3, 0), Err(Error::SymbolOutOfRange { .. })));
    assert!(matches!(rs.rank_le(0, 3), Err(Error::IndexOutOfRange { .. })));
    assert!(matches!(rs.select_sym(1, 2), Err(Error::OccurrenceOutOfRange { .. })));
}

#[test]
fn exhaustive_random_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..80 {
        let sigma = rng.gen_range(1..=16u32);
        let n = rng.gen_range(0..=3000);
        let s: Vec<u64> = (0..n).map(|_| rng.gen_range(0..sigma as u64)).collect();
        check_exhaustive(&s, sigma, &build(&s, sigma));
    }
}

#[test]
fn random_probes_large() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s: Vec<u64> = (0..100_000).map(|_| rng.gen_range(0..8)).collect();
    let rs = build(&s, 8);
    let mut pos: Vec<Vec<u64>> = vec![Vec::new(); 8];
    for (i, &x) in s.iter().enumerate() {
        pos[x as usize].push(i as u64);
    }
    for _ in 0..10_000 {
        let i = rng.gen_range(0..s.len());
        let c = rng.gen_range(0..8u32);
        let expect = pos.iter().take(c as usize + 1).map(|p| p.partition_point(|&x| x <= i as u64) as u64).sum::<u64>();
        assert_eq!(rs.rank_le(c, i as u64).unwrap(), expect);
        let j = rng.gen_range(1..=pos[c as usize].len());
        assert_eq!(rs.select_sym(c, j as u64).unwrap(), pos[c as usize][j - 1]);
    }
}

/// Zipf-like skew leaves rare symbols spread thin, so some ranges are long.
#[test]
fn skewed_sequence_uses_both_range_kinds() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let weights = [4096.0, 2048.0, 1024.0, 256.0, 64.0, 16.0, 4.0, 1.0];
    let total: f64 = weights.iter().sum();
    let s: Vec<u64> = (0..100_000)
        .map(|_| {
            let mut x = rng.gen::<f64>() * total;
            for (c, w) in weights.iter().enumerate() {
                if x < *w {
                    return c as u64;
                }
                x -= w;
            }
            7
        })
        .collect();
    let seq = pack(&s, 3).unwrap();
    // thresholds scaled down so that one input exercises every path
    let params = SelectParams { g1: 32, range_direct: 4096, rule: SubRule::Fixed { g2: 4, sub_direct: 200 } };
    let rs = GeneralRS::build_with(&mut CostMeter::new(), seq.clone(), 8, params).unwrap();
    let (mut direct, mut sparse, mut sub_direct, mut sub_scan) = (0, 0, 0, 0);
    for c in 0..8 {
        let side = rs.select_side(c);
        direct += side.direct_ranges();
        sparse += side.ranges() as u64 - side.direct_ranges();
        sub_direct += side.direct_sub_ranges();
        sub_scan += side.sub_ranges() as u64 - side.direct_sub_ranges();
    }
    assert!(direct > 0 && sparse > 0 && sub_direct > 0 && sub_scan > 0);
    let default = GeneralRS::build(&mut CostMeter::new(), seq, 8).unwrap();
    for _ in 0..10_000 {
        let c = rng.gen_range(0..8u32);
        let cnt = rs.count(c);
        if cnt == 0 {
            continue;
        }
        let j = rng.gen_range(1..=cnt);
        let expect = scan_select(&s, c as u64, j);
        assert_eq!(Some(rs.select_sym(c, j).unwrap()), expect);
        assert_eq!(Some(default.select_sym(c, j).unwrap()), expect);
    }
}

#[test]
fn serialization_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s: Vec<u64> = (0..5000).map(|_| rng.gen_range(0..5)).collect();
    let rs = build(&s, 5);
    let mut w = Writer::new();
    rs.write(&mut w);
    let bytes = w.into_bytes();
    let back = GeneralRS::read(&mut Reader::new(&bytes)).unwrap();
    assert_eq!(back, rs);
    let mut bad = bytes.clone();
    let last = bad.len() - 3;
    bad[last] ^= 0x10;
    assert!(GeneralRS::read(&mut Reader::new(&bad)).is_err());
}
