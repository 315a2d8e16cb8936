//! Precomputed lookup tables keyed by at most [`KAPPA`] bits, plus a
//! process-wide registry that builds each configuration once.

use std::any::Any;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::words::{mask, KAPPA};
use crate::error::{Error, Result};
use crate::par::{parallel_fill, CostMeter};

const TABLE_GRAIN: usize = 4096;

/// One short-list table entry: the chunk's bitmap and its stable partition
/// into the elements whose tested bit is 0 (`l0`) and 1 (`l1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShortEntry {
    pub bitmap: u64,
    pub l0: u64,
    pub l1: u64,
    pub n0: u32,
}

/// For every chunk of at most `cap` τ-bit elements and every tested bit
/// `t`, where `t = 0` is the most significant bit of an element.
#[derive(Clone, Debug)]
pub struct ShortlistTable {
    tau: u32,
    cap: u32,
    base: Vec<usize>,
    entries: Vec<u64>,
}

impl ShortlistTable {
    pub fn build(meter: &mut CostMeter, tau: u32, cap: u32) -> Result<Self> {
        if tau == 0 || cap == 0 || tau * cap > KAPPA {
            return Err(Error::param(format!(
                "short-list table with tau={tau}, cap={cap} exceeds the {KAPPA}-bit key width"
            )));
        }
        let mut base = Vec::with_capacity(cap as usize + 2);
        let mut acc = 0usize;
        for len in 0..=cap {
            base.push(acc);
            acc += tau as usize * (1usize << (len * tau));
        }
        base.push(acc);
        let mut entries = vec![0u64; acc];
        let b = &base;
        parallel_fill(meter, &mut entries, TABLE_GRAIN, |m, off, out| {
            let mut ops = 0;
            for (k, slot) in out.iter_mut().enumerate() {
                let idx = off + k;
                let len = (b.partition_point(|&x| x <= idx) - 1) as u32;
                let rel = idx - b[len as usize];
                let t = (rel >> (len * tau)) as u32;
                let value = (rel as u64) & mask(len * tau);
                let e = partition_chunk(value, len, tau, t);
                *slot = e.bitmap | e.l0 << 16 | e.l1 << 32 | (e.n0 as u64) << 48;
                ops += len as u64 + 1;
            }
            m.charge(ops);
        });
        Ok(ShortlistTable { tau, cap, base, entries })
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    /// Looks up a chunk of `len` elements packed LSB-first in `value`.
    #[inline]
    pub fn probe(&self, value: u64, len: u32, t: u32) -> ShortEntry {
        debug_assert!(len <= self.cap && t < self.tau);
        let idx = self.base[len as usize] + ((t as usize) << (len * self.tau)) + value as usize;
        let e = self.entries[idx];
        ShortEntry {
            bitmap: e & 0xFFFF,
            l0: (e >> 16) & 0xFFFF,
            l1: (e >> 32) & 0xFFFF,
            n0: ((e >> 48) & 0x1F) as u32,
        }
    }

    pub fn size_in_bytes(&self) -> u64 {
        8 * (self.entries.len() + self.base.len()) as u64
    }
}

/// Direct evaluation of one chunk, used to fill the table.
fn partition_chunk(value: u64, len: u32, tau: u32, t: u32) -> ShortEntry {
    let (mut bitmap, mut l0, mut l1, mut n0, mut n1) = (0u64, 0u64, 0u64, 0u32, 0u32);
    for j in 0..len {
        let x = (value >> (j * tau)) & mask(tau);
        if (x >> (tau - 1 - t)) & 1 == 1 {
            bitmap |= 1 << j;
            l1 |= x << (n1 * tau);
            n1 += 1;
        } else {
            l0 |= x << (n0 * tau);
            n0 += 1;
        }
    }
    ShortEntry { bitmap, l0, l1, n0 }
}

/// Population counts and in-block select positions for every `key_bits`-bit
/// block.
#[derive(Clone, Debug)]
pub struct BlockTables {
    key_bits: u32,
    pop: Vec<u8>,
    /// Position of the j'th set bit in nibble `j`.
    sel: Vec<u64>,
}

impl BlockTables {
    pub fn build(meter: &mut CostMeter, key_bits: u32) -> Result<Self> {
        if key_bits == 0 || key_bits > KAPPA {
            return Err(Error::param(format!("block key width {key_bits} outside 1..={KAPPA}")));
        }
        let size = 1usize << key_bits;
        let mut pop = vec![0u8; size];
        let mut sel = vec![0u64; size];
        parallel_fill(meter, &mut pop, TABLE_GRAIN, |m, off, out| {
            for (k, slot) in out.iter_mut().enumerate() {
                let mut x = off + k;
                let mut c = 0u8;
                while x != 0 {
                    c += (x & 1) as u8;
                    x >>= 1;
                }
                *slot = c;
            }
            m.charge(key_bits as u64 * out.len() as u64);
        });
        parallel_fill(meter, &mut sel, TABLE_GRAIN, |m, off, out| {
            for (k, slot) in out.iter_mut().enumerate() {
                let x = off + k;
                let mut packed = 0u64;
                let mut j = 0;
                for p in 0..key_bits {
                    if (x >> p) & 1 == 1 {
                        packed |= (p as u64) << (4 * j);
                        j += 1;
                    }
                }
                *slot = packed;
            }
            m.charge(key_bits as u64 * out.len() as u64);
        });
        Ok(BlockTables { key_bits, pop, sel })
    }

    pub fn key_bits(&self) -> u32 {
        self.key_bits
    }

    #[inline]
    pub fn popcount(&self, block: u64) -> u32 {
        self.pop[block as usize] as u32
    }

    /// Position of the `j`'th (1-based) set bit of `block`. The caller
    /// guarantees `1 <= j <= popcount(block)`.
    #[inline]
    pub fn select(&self, block: u64, j: u32) -> u32 {
        debug_assert!(j >= 1 && j <= self.popcount(block));
        ((self.sel[block as usize] >> (4 * (j - 1))) & 0xF) as u32
    }

    pub fn size_in_bytes(&self) -> u64 {
        (self.pop.len() + 8 * self.sel.len()) as u64
    }
}

/// Cumulative symbol counts of a block of `per_block` symbols of
/// `symbol_bits` bits each: lane `c` holds the number of symbols `<= c`.
/// Lanes are 16 bits wide, four per word.
#[derive(Clone, Debug)]
pub struct SymbolBlockTable {
    sigma: u32,
    symbol_bits: u32,
    per_block: u32,
    cum: Vec<[u64; 4]>,
}

/// Lane `c` of a 16-bit-lane histogram.
#[inline]
pub fn lane(h: &[u64; 4], c: u32) -> u64 {
    (h[(c / 4) as usize] >> (16 * (c % 4))) & 0xFFFF
}

#[inline]
pub fn lanes_add(a: &[u64; 4], b: &[u64; 4]) -> [u64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

impl SymbolBlockTable {
    pub const MAX_SIGMA: u32 = 16;

    pub fn build(meter: &mut CostMeter, sigma: u32) -> Result<Self> {
        if sigma == 0 || sigma > Self::MAX_SIGMA {
            return Err(Error::param(format!(
                "alphabet size {sigma} outside 1..={}",
                Self::MAX_SIGMA
            )));
        }
        let symbol_bits = symbol_bits(sigma);
        let per_block = (KAPPA / symbol_bits).max(1);
        let size = 1usize << (symbol_bits * per_block);
        let mut cum = vec![[0u64; 4]; size];
        parallel_fill(meter, &mut cum, TABLE_GRAIN, |m, off, out| {
            for (k, slot) in out.iter_mut().enumerate() {
                let key = (off + k) as u64;
                let mut hist = [0u64; 16];
                for j in 0..per_block {
                    let s = (key >> (j * symbol_bits)) & mask(symbol_bits);
                    hist[s as usize] += 1;
                }
                let mut acc = 0;
                let mut e = [0u64; 4];
                for (c, h) in hist.iter().enumerate() {
                    acc += h;
                    e[c / 4] |= acc << (16 * (c % 4));
                }
                *slot = e;
            }
            m.charge((per_block as u64 + 16) * out.len() as u64);
        });
        Ok(SymbolBlockTable { sigma, symbol_bits, per_block, cum })
    }

    pub fn sigma(&self) -> u32 {
        self.sigma
    }

    pub fn symbol_bits(&self) -> u32 {
        self.symbol_bits
    }

    pub fn per_block(&self) -> u32 {
        self.per_block
    }

    #[inline]
    pub fn cumulative(&self, block: u64) -> &[u64; 4] {
        &self.cum[block as usize]
    }

    /// Count of symbols `<= c` in `block`.
    #[inline]
    pub fn count_le(&self, block: u64, c: u32) -> u64 {
        lane(&self.cum[block as usize], c)
    }

    /// Count of symbol `c` in `block`.
    #[inline]
    pub fn count_eq(&self, block: u64, c: u32) -> u64 {
        let e = &self.cum[block as usize];
        lane(e, c) - if c == 0 { 0 } else { lane(e, c - 1) }
    }

    pub fn size_in_bytes(&self) -> u64 {
        32 * self.cum.len() as u64
    }
}

/// Bits per symbol for an alphabet of `sigma` symbols (at least 1).
pub fn symbol_bits(sigma: u32) -> u32 {
    super::words::ceil_log2(sigma as u64).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum TableKey {
    Shortlist { tau: u32, cap: u32 },
    Block,
    Symbol { sigma: u32 },
}

struct Stored {
    table: Arc<dyn Any + Send + Sync>,
    meter: CostMeter,
    bytes: u64,
}

fn registry() -> &'static Mutex<HashMap<TableKey, Stored>> {
    static REG: OnceLock<Mutex<HashMap<TableKey, Stored>>> = OnceLock::new();
    REG.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Fetches (or builds) a table and replays its recorded construction cost
/// into `meter`, so readings do not depend on what ran earlier.
fn acquire<T, F>(meter: &mut CostMeter, key: TableKey, build: F) -> Result<Arc<T>>
where
    T: Any + Send + Sync,
    F: FnOnce(&mut CostMeter) -> Result<(T, u64)>,
{
    if let Some(s) = registry().lock().unwrap().get(&key) {
        meter.replay(s.meter.work(), s.meter.span());
        return Ok(s.table.clone().downcast::<T>().expect("table type"));
    }
    // built outside the lock: the builder forks into the thread pool
    let mut m = CostMeter::new();
    let (table, bytes) = build(&mut m)?;
    let mut reg = registry().lock().unwrap();
    let s = reg
        .entry(key)
        .or_insert_with(|| Stored { table: Arc::new(table), meter: m, bytes });
    meter.replay(s.meter.work(), s.meter.span());
    Ok(s.table.clone().downcast::<T>().expect("table type"))
}

/// Short-list table for τ-bit elements with the largest chunk that fits
/// the key width.
pub fn shortlist_table(meter: &mut CostMeter, tau: u32) -> Result<Arc<ShortlistTable>> {
    let cap = (KAPPA / tau.max(1)).max(1);
    acquire(meter, TableKey::Shortlist { tau, cap }, |m| {
        let t = ShortlistTable::build(m, tau, cap)?;
        let b = t.size_in_bytes();
        Ok((t, b))
    })
}

pub fn block_tables(meter: &mut CostMeter) -> Arc<BlockTables> {
    acquire(meter, TableKey::Block, |m| {
        let t = BlockTables::build(m, KAPPA)?;
        let b = t.size_in_bytes();
        Ok((t, b))
    })
    .expect("block table parameters are fixed")
}

pub fn symbol_table(meter: &mut CostMeter, sigma: u32) -> Result<Arc<SymbolBlockTable>> {
    acquire(meter, TableKey::Symbol { sigma }, |m| {
        let t = SymbolBlockTable::build(m, sigma)?;
        let b = t.size_in_bytes();
        Ok((t, b))
    })
}

/// Total bytes of every table built so far in this process.
pub fn table_bytes() -> u64 {
    registry().lock().unwrap().values().map(|s| s.bytes).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(value: u64, len: u32, tau: u32, t: u32) -> (Vec<bool>, Vec<u64>, Vec<u64>) {
        let elems: Vec<u64> = (0..len).map(|j| (value >> (j * tau)) & mask(tau)).collect();
        let bit = |x: u64| (x >> (tau - 1 - t)) & 1 == 1;
        (
            elems.iter().map(|&x| bit(x)).collect(),
            elems.iter().copied().filter(|&x| !bit(x)).collect(),
            elems.iter().copied().filter(|&x| bit(x)).collect(),
        )
    }

    fn unpack(v: u64, count: u32, tau: u32) -> Vec<u64> {
        (0..count).map(|j| (v >> (j * tau)) & mask(tau)).collect()
    }

    fn check(table: &ShortlistTable, value: u64, len: u32, t: u32) {
        let tau = table.tau();
        let e = table.probe(value, len, t);
        let (bits, l0, l1) = brute(value, len, tau, t);
        let got_bits: Vec<bool> = (0..len).map(|j| (e.bitmap >> j) & 1 == 1).collect();
        assert_eq!(got_bits, bits);
        assert_eq!(e.n0 as usize, l0.len());
        assert_eq!(unpack(e.l0, e.n0, tau), l0);
        assert_eq!(unpack(e.l1, len - e.n0, tau), l1);
    }

    #[test]
    fn single_bit_single_element() {
        let t = ShortlistTable::build(&mut CostMeter::new(), 1, 1).unwrap();
        let e = t.probe(1, 1, 0);
        assert_eq!((e.bitmap, e.n0, e.l1), (1, 0, 1));
    }

    #[test]
    fn two_bit_chunk_example() {
        let t = ShortlistTable::build(&mut CostMeter::new(), 2, 2).unwrap();
        // chunk [2, 1]: element 0 = 2 in the low bits
        let e = t.probe(2 | 1 << 2, 2, 0);
        assert_eq!(e.bitmap, 0b01); // bit string "10" in sequence order
        assert_eq!(unpack(e.l0, e.n0, 2), vec![1]);
        assert_eq!(unpack(e.l1, 2 - e.n0, 2), vec![2]);
    }

    #[test]
    fn exhaustive_tau3_cap4() {
        let t = ShortlistTable::build(&mut CostMeter::new(), 3, 4).unwrap();
        for len in 0..=4 {
            for value in 0..1u64 << (3 * len) {
                for bit in 0..3 {
                    check(&t, value, len, bit);
                }
            }
        }
    }

    #[test]
    fn random_probes_larger_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for tau in [1u32, 2, 4, 5, 8, 16] {
            let cap = KAPPA / tau;
            let t = ShortlistTable::build(&mut CostMeter::new(), tau, cap).unwrap();
            for _ in 0..100_000 / 6 {
                let len = rng.gen_range(0..=cap);
                let value = rng.gen::<u64>() & mask(len * tau);
                check(&t, value, len, rng.gen_range(0..tau));
            }
        }
    }

    #[test]
    fn oversized_table_rejected() {
        assert!(ShortlistTable::build(&mut CostMeter::new(), 3, 6).is_err());
    }

    #[test]
    fn popcount_and_select() {
        let t = BlockTables::build(&mut CostMeter::new(), 8).unwrap();
        assert_eq!(t.popcount(0b1011_0000), 3);
        assert_eq!(t.select(0b1011_0000, 2), 5);
        let t16 = block_tables(&mut CostMeter::new());
        for x in [1u64, 0xFFFF, 0x8001, 0x1234] {
            assert_eq!(t16.popcount(x), x.count_ones());
            for j in 1..=x.count_ones() {
                assert_eq!(Some(t16.select(x, j)), crate::bits::select_in_word(x, j));
            }
        }
    }

    #[test]
    fn symbol_counts() {
        let t = SymbolBlockTable::build(&mut CostMeter::new(), 4).unwrap();
        assert_eq!((t.symbol_bits(), t.per_block()), (2, 8));
        // block "2,0,2" followed by padding zeros
        let key = 2 | 2 << 4;
        let pad = (t.per_block() - 3) as u64;
        let counts: Vec<u64> =
            (0..4).map(|c| t.count_eq(key, c) - if c == 0 { pad } else { 0 }).collect();
        assert_eq!(counts, vec![1, 0, 2, 0]);
        assert_eq!(t.count_le(key, 3), 8);
    }

    #[test]
    fn registry_replays_cost() {
        let mut a = CostMeter::new();
        let t1 = shortlist_table(&mut a, 3).unwrap();
        let mut b = CostMeter::new();
        let t2 = shortlist_table(&mut b, 3).unwrap();
        assert!(Arc::ptr_eq(&t1, &t2));
        assert_eq!(a, b);
        assert!(a.work() > 0);
        assert!(table_bytes() >= t1.size_in_bytes());
    }
}
