use proptest::prelude::*;
use wsds::archive::{Structure, Variant};
use wsds::bits::{concat_bits, pack, PackedBitVector};
use wsds::oracle::{oracle_rank, oracle_rank_le, oracle_select};
use wsds::par::{prefix_sum, CostMeter};
use wsds::wt::{Algorithm, BuildParams};

fn variant() -> impl Strategy<Value = Variant> {
    prop::sample::select(Variant::ALL.to_vec())
}

fn algorithm() -> impl Strategy<Value = Algorithm> {
    prop::sample::select(vec![Algorithm::Naive, Algorithm::Packed, Algorithm::Sorted, Algorithm::Domain])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn queries_match_scans(
        raw in prop::collection::vec(0u64..40, 0..300),
        v in variant(),
        algo in algorithm(),
        parts in 1usize..9,
    ) {
        prop_assume!(!(v == Variant::Matrix && algo == Algorithm::Domain));
        let s = Structure::build(&mut CostMeter::new(), &raw, v, None, &BuildParams::new(algo).parts(parts)).unwrap();
        for i in 0..raw.len() as u64 {
            prop_assert_eq!(s.access(i).unwrap(), raw[i as usize]);
            for c in [0, 7, 20, 39, 100] {
                prop_assert_eq!(s.rank(c, i).unwrap(), oracle_rank(&raw, c, i).unwrap());
                prop_assert_eq!(s.rank_le(c, i).unwrap(), oracle_rank_le(&raw, c, i).unwrap());
            }
        }
        for c in [0, 7, 20, 39] {
            for j in 1..=s.count(c) + 1 {
                prop_assert_eq!(s.select(c, j).ok(), oracle_select(&raw, c, j).ok());
            }
        }
    }

    #[test]
    fn archives_round_trip_byte_for_byte(raw in prop::collection::vec(0u64..1000, 0..500), v in variant()) {
        let s = Structure::build(&mut CostMeter::new(), &raw, v, None, &BuildParams::default()).unwrap();
        let bytes = s.to_bytes().unwrap();
        let back = Structure::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    /// The format carries no checksum, so a flipped byte may still decode
    /// (say, into a different alphabet symbol). Whatever loads must be a
    /// self-consistent structure: canonical bytes and panic-free queries.
    #[test]
    fn flipped_archive_bytes_are_rejected_or_consistent(
        raw in prop::collection::vec(0u64..16, 1..200),
        v in variant(),
        at in any::<prop::sample::Index>(),
        mask in 1u8..=255,
    ) {
        let s = Structure::build(&mut CostMeter::new(), &raw, v, None, &BuildParams::default()).unwrap();
        let mut bytes = s.to_bytes().unwrap();
        let k = at.index(bytes.len());
        bytes[k] ^= mask;
        if let Ok(t) = Structure::from_bytes(&bytes) {
            prop_assert_eq!(t.to_bytes().unwrap(), bytes);
            let n = t.len();
            let mut seen = vec![];
            for i in 0..n {
                let c = t.access(i).unwrap();
                seen.push(c);
                prop_assert_eq!(t.rank(c, i).unwrap(), oracle_rank(&seen, c, i).unwrap());
                prop_assert_eq!(t.select(c, t.rank(c, i).unwrap()).unwrap(), i);
            }
        }
    }

    #[test]
    fn concatenation_is_associative(parts in prop::collection::vec(prop::collection::vec(any::<bool>(), 0..200), 1..8)) {
        let vecs: Vec<PackedBitVector> = parts.iter().map(|p| PackedBitVector::from_bools(p)).collect();
        let slices: Vec<(&[u64], u64)> = vecs.iter().map(|v| (v.words(), v.len())).collect();
        let (all, len) = concat_bits(&mut CostMeter::new(), &slices);
        let mid = slices.len() / 2;
        let (l, ll) = concat_bits(&mut CostMeter::new(), &slices[..mid]);
        let (r, rl) = concat_bits(&mut CostMeter::new(), &slices[mid..]);
        let (nested, nl) = concat_bits(&mut CostMeter::new(), &[(&l, ll), (&r, rl)]);
        prop_assert_eq!(len, nl);
        prop_assert_eq!(&all, &nested);
        let flat: Vec<bool> = parts.concat();
        prop_assert_eq!(PackedBitVector::from_words(all, len).unwrap().to_bools(), flat);
    }

    #[test]
    fn prefix_sums_match_a_loop(xs in prop::collection::vec(0u64..1000, 0..5000)) {
        let (pre, total) = prefix_sum(&mut CostMeter::new(), &xs, |a, b| a + b, 0);
        let mut acc = 0;
        for (i, &x) in xs.iter().enumerate() {
            prop_assert_eq!(pre[i], acc);
            acc += x;
        }
        prop_assert_eq!(total, acc);
    }

    #[test]
    fn packing_round_trips(xs in prop::collection::vec(any::<u64>(), 0..300), width in 1u32..=64) {
        let masked: Vec<u64> = xs.iter().map(|&x| if width == 64 { x } else { x & ((1 << width) - 1) }).collect();
        prop_assert_eq!(pack(&masked, width).unwrap().to_vec(), masked);
    }
}
