use super::meter::{parallel_for, parallel_map, CostMeter};
use super::scan::prefix_sum;
use super::SyncPtr;
use crate::error::{Error, Result};

/// Key/payload pair sorted by [`stable_sort_by_key`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SortItem {
    pub key: u64,
    pub payload: u64,
}

/// Widest key handled by a single counting pass.
const PASS_BITS: u32 = 16;
const MIN_BLOCK: usize = 4096;

/// Stable sort of `items` by `key`, all keys `< 2^key_bits`.
pub fn stable_sort_by_key(
    meter: &mut CostMeter,
    items: &[SortItem],
    key_bits: u32,
) -> Result<Vec<SortItem>> {
    stable_sort_by(meter, items, key_bits, |it| it.key)
}

/// Stable counting sort of arbitrary items by an extracted integer key.
///
/// Keys wider than 16 bits are handled by stable LSD passes of at most 16
/// bits each.
pub fn stable_sort_by<T, K>(
    meter: &mut CostMeter,
    items: &[T],
    key_bits: u32,
    key: K,
) -> Result<Vec<T>>
where
    T: Copy + Send + Sync + Default,
    K: Fn(&T) -> u64 + Sync,
{
    if key_bits > 64 {
        return Err(Error::param(format!("key width {key_bits} exceeds word size")));
    }
    if key_bits < 64 {
        let limit = 1u64 << key_bits;
        if let Some(bad) = items.iter().map(&key).find(|&k| k >= limit) {
            return Err(Error::ValueTooWide { value: bad, width: key_bits });
        }
    }
    if key_bits <= PASS_BITS {
        return Ok(counting_pass(meter, items, key_bits, &key));
    }
    let mut cur = items.to_vec();
    let mut shift = 0;
    while shift < key_bits {
        let bits = PASS_BITS.min(key_bits - shift);
        let mask = (1u64 << bits) - 1;
        cur = counting_pass(meter, &cur, bits, &|it: &T| (key(it) >> shift) & mask);
        shift += bits;
    }
    Ok(cur)
}

/// Number of blocks for a counting pass. Depends only on the input, so the
/// cost meter is identical for every thread count.
pub(crate) fn block_count(n: usize, key_bits: u32) -> usize {
    let per = MIN_BLOCK.max(1usize << key_bits);
    n.div_ceil(per).max(1)
}

fn counting_pass<T, K>(meter: &mut CostMeter, items: &[T], key_bits: u32, key: &K) -> Vec<T>
where
    T: Copy + Send + Sync + Default,
    K: Fn(&T) -> u64 + Sync,
{
    let n = items.len();
    if n == 0 {
        return Vec::new();
    }
    let buckets = 1usize << key_bits;
    let blocks = block_count(n, key_bits);
    let block_len = n.div_ceil(blocks);

    // per-block histograms
    let hists: Vec<Vec<u64>> = parallel_map(meter, blocks, 1, |m, b| {
        let lo = b * block_len;
        let hi = (lo + block_len).min(n);
        let mut h = vec![0u64; buckets];
        for it in &items[lo..hi] {
            h[key(it) as usize] += 1;
        }
        // read item, extract key, bump counter
        m.charge(3 * (hi - lo) as u64 + buckets as u64);
        h
    });

    // key-major count matrix: entry (k, b) at k * blocks + b
    let mut matrix = vec![0u64; buckets * blocks];
    for (b, h) in hists.iter().enumerate() {
        for (k, &c) in h.iter().enumerate() {
            matrix[k * blocks + b] = c;
        }
    }
    meter.charge(matrix.len() as u64);
    let (offsets, total) = prefix_sum(meter, &matrix, |a, b| a + b, 0);
    debug_assert_eq!(total as usize, n);

    let mut out: Vec<T> = vec![T::default(); n];
    let ptr = SyncPtr::new(&mut out);
    parallel_for(meter, blocks, 1, |m, range| {
        for b in range {
            let lo = b * block_len;
            let hi = (lo + block_len).min(n);
            let mut cursor: Vec<u64> = (0..buckets).map(|k| offsets[k * blocks + b]).collect();
            for it in &items[lo..hi] {
                let k = key(it) as usize;
                // SAFETY: the key-major prefix sum gives every (key, block)
                // pair a disjoint output interval of exactly its count.
                unsafe { ptr.write(cursor[k] as usize, *it) };
                cursor[k] += 1;
            }
            // read item, extract key, write item, bump cursor
            m.charge(4 * (hi - lo) as u64 + buckets as u64);
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn item(key: u64, payload: u64) -> SortItem {
        SortItem { key, payload }
    }

    #[test]
    fn stable_on_duplicates() {
        let mut m = CostMeter::new();
        let out = stable_sort_by_key(&mut m, &[item(1, 0), item(0, 1), item(1, 2)], 1).unwrap();
        assert_eq!(out, vec![item(0, 1), item(1, 0), item(1, 2)]);
    }

    #[test]
    fn sorted_input_is_unchanged() {
        let xs: Vec<_> = (0..100).map(|i| item(i / 10, i)).collect();
        let out = stable_sort_by_key(&mut CostMeter::new(), &xs, 4).unwrap();
        assert_eq!(out, xs);
    }

    #[test]
    fn key_out_of_range_is_rejected() {
        let err = stable_sort_by_key(&mut CostMeter::new(), &[item(4, 0)], 2).unwrap_err();
        assert_eq!(err, Error::ValueTooWide { value: 4, width: 2 });
    }

    #[test]
    fn random_instances_match_serial_stable_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.gen_range(0..=10_000usize);
            let bits = rng.gen_range(1..=12u32);
            let xs: Vec<_> = (0..n)
                .map(|i| item(rng.gen_range(0..1u64 << bits), i as u64))
                .collect();
            let mut expect = xs.clone();
            expect.sort_by_key(|x| x.key);
            let got = stable_sort_by_key(&mut CostMeter::new(), &xs, bits).unwrap();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn wide_keys_use_multiple_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<_> = (0..20_000).map(|i| item(rng.gen::<u64>() >> 24, i)).collect();
        let mut expect = xs.clone();
        expect.sort_by_key(|x| x.key);
        assert_eq!(stable_sort_by_key(&mut CostMeter::new(), &xs, 40).unwrap(), expect);
    }

    #[test]
    fn work_is_thread_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<_> = (0..50_000).map(|i| item(rng.gen_range(0..32), i)).collect();
        let run = |t| {
            crate::par::with_threads(t, || {
                let mut m = CostMeter::new();
                let out = stable_sort_by_key(&mut m, &xs, 5).unwrap();
                (m, out)
            })
        };
        assert_eq!(run(1), run(8));
    }
}
