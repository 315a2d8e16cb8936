//! Constant-time binary rank and select.
//!
//! Rank samples the absolute count of ones every 256 bits (a range) and the
//! count relative to the range start every 16 bits (a sub-range, one table
//! key). Select keeps one [`SampledSelect`] per bit value.

mod sampled;

use std::sync::Arc;

pub use sampled::{log_params, Occurrences, SampledSelect, SelectParams, SubRule};

use crate::bits::tables::{block_tables, BlockTables};
use crate::bits::{bits_for, mask, pack_with, read_bits, PackedBitVector, PackedList, KAPPA};
use crate::error::{Error, Result};
use crate::io::{corrupt, Reader, Writer};
use crate::par::{parallel_map, prefix_sum, CostMeter};

/// Bits per sub-range.
pub const SUB_BITS: u64 = KAPPA as u64;
/// Bits per range.
pub const RANGE_BITS: u64 = SUB_BITS * SUB_BITS;
const SUBS_PER_RANGE: usize = (RANGE_BITS / SUB_BITS) as usize;
const SUB_FIELD: u32 = 9;
const RANK_GRAIN: usize = 64;

/// One bit value of a bit vector, seen as a stream of occurrences.
pub struct BitOccurrences<'a> {
    words: &'a [u64],
    len: u64,
    value: bool,
    tables: &'a BlockTables,
}

impl<'a> BitOccurrences<'a> {
    pub fn new(bits: &'a PackedBitVector, value: bool, tables: &'a BlockTables) -> Self {
        BitOccurrences { words: bits.words(), len: bits.len(), value, tables }
    }

    #[inline]
    fn block(&self, b: usize) -> (u64, u32) {
        let pos = b as u64 * SUB_BITS;
        let width = SUB_BITS.min(self.len - pos) as u32;
        let x = read_bits(self.words, pos, width);
        (if self.value { x } else { !x & mask(width) }, width)
    }
}

impl Occurrences for BitOccurrences<'_> {
    fn len(&self) -> u64 {
        self.len
    }

    fn unit(&self) -> u64 {
        SUB_BITS
    }

    fn count(&self, b: usize) -> u32 {
        self.tables.popcount(self.block(b).0)
    }

    fn count_prefix(&self, b: usize, upto: u32) -> u32 {
        self.tables.popcount(self.block(b).0 & mask(upto))
    }

    fn nth(&self, b: usize, k: u32) -> u32 {
        self.tables.select(self.block(b).0, k + 1)
    }
}

/// Select parameters derived from the vector length.
pub fn binary_select_params(n: u64) -> SelectParams {
    let (l, lambda) = log_params(n);
    let g1 = l * lambda;
    SelectParams { g1, range_direct: g1 * g1, rule: SubRule::Binary { lambda } }
}

/// Rank part of [`BinaryRS`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryRank {
    ranges: PackedList,
    subs: PackedList,
}

impl BinaryRank {
    /// Per range in parallel: one table probe per sub-range; then a prefix
    /// sum over the range totals and parallel packing of both levels.
    pub fn build(meter: &mut CostMeter, bits: &PackedBitVector, tables: &BlockTables) -> Self {
        let n = bits.len();
        let nr = n.div_ceil(RANGE_BITS) as usize;
        let nsub = n.div_ceil(SUB_BITS) as usize;
        let words = bits.words();
        let per_range: Vec<(u64, [u16; SUBS_PER_RANGE])> =
            parallel_map(meter, nr, RANK_GRAIN, |m, r| {
                let mut subs = [0u16; SUBS_PER_RANGE];
                let mut acc = 0u64;
                let base = r as u64 * RANGE_BITS;
                let mut ops = 0;
                for (s, slot) in subs.iter_mut().enumerate() {
                    let pos = base + s as u64 * SUB_BITS;
                    if pos >= n {
                        break;
                    }
                    *slot = acc as u16;
                    let width = SUB_BITS.min(n - pos) as u32;
                    acc += tables.popcount(read_bits(words, pos, width)) as u64;
                    ops += 2;
                }
                // four word reads per range
                m.charge(ops + 4);
                (acc, subs)
            });
        let totals: Vec<u64> = per_range.iter().map(|x| x.0).collect();
        let (mut abs, ones) = prefix_sum(meter, &totals, |a, b| a + b, 0);
        abs.push(ones);
        let ranges = pack_with(meter, abs.len(), bits_for(ones), |i| abs[i]).expect("width");
        let subs = pack_with(meter, nsub, SUB_FIELD, |i| {
            per_range[i / SUBS_PER_RANGE].1[i % SUBS_PER_RANGE] as u64
        })
        .expect("width");
        BinaryRank { ranges, subs }
    }

    pub fn ones(&self) -> u64 {
        self.ranges.at(self.ranges.len() - 1)
    }

    /// Ones in `bits[0..=i]`.
    #[inline]
    pub fn rank1(&self, bits: &PackedBitVector, tables: &BlockTables, i: u64) -> u64 {
        let s = i / SUB_BITS;
        let pos = s * SUB_BITS;
        let block = read_bits(bits.words(), pos, (i - pos + 1) as u32);
        self.ranges.at((i / RANGE_BITS) as usize)
            + self.subs.at(s as usize)
            + tables.popcount(block) as u64
    }

    pub fn size_in_bytes(&self) -> u64 {
        self.ranges.size_in_bytes() + self.subs.size_in_bytes()
    }
}

/// A bit vector with constant-time rank and select for both bit values.
#[derive(Clone, Debug)]
pub struct BinaryRS {
    bits: PackedBitVector,
    rank: BinaryRank,
    sel: [SampledSelect; 2],
    tables: Arc<BlockTables>,
}

impl PartialEq for BinaryRS {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits && self.rank == other.rank && self.sel == other.sel
    }
}

impl Eq for BinaryRS {}

impl BinaryRS {
    pub fn build(meter: &mut CostMeter, bits: PackedBitVector) -> Self {
        let params = binary_select_params(bits.len());
        Self::build_with(meter, bits, params)
    }

    /// Builds with explicit select parameters.
    pub fn build_with(meter: &mut CostMeter, bits: PackedBitVector, params: SelectParams) -> Self {
        let tables = block_tables(meter);
        let ((rank, s0), s1) = {
            let (bits, t) = (&bits, &*tables);
            meter.join(
                |m| {
                    m.join(
                        |m| BinaryRank::build(m, bits, t),
                        |m| SampledSelect::build(m, &BitOccurrences::new(bits, false, t), params),
                    )
                },
                |m| SampledSelect::build(m, &BitOccurrences::new(bits, true, t), params),
            )
        };
        BinaryRS { bits, rank, sel: [s0, s1], tables }
    }

    /// Rank structure only, for cost measurements.
    pub fn build_rank_only(meter: &mut CostMeter, bits: &PackedBitVector) -> BinaryRank {
        let tables = block_tables(meter);
        BinaryRank::build(meter, bits, &tables)
    }

    pub fn bits(&self) -> &PackedBitVector {
        &self.bits
    }

    pub fn len(&self) -> u64 {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count(&self, v: bool) -> u64 {
        let ones = self.rank.ones();
        if v {
            ones
        } else {
            self.len() - ones
        }
    }

    /// Unchecked rank: occurrences of `v` in `[0, i]`, `i < len`.
    #[inline]
    pub fn rank_unchecked(&self, v: bool, i: u64) -> u64 {
        let r1 = self.rank.rank1(&self.bits, &self.tables, i);
        if v {
            r1
        } else {
            i + 1 - r1
        }
    }

    pub fn rank(&self, v: bool, i: u64) -> Result<u64> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange { index: i, len: self.len() });
        }
        Ok(self.rank_unchecked(v, i))
    }

    pub fn rank1(&self, i: u64) -> Result<u64> {
        self.rank(true, i)
    }

    pub fn rank0(&self, i: u64) -> Result<u64> {
        self.rank(false, i)
    }

    /// Unchecked select, `1 <= j <= count(v)`.
    #[inline]
    pub fn select_unchecked(&self, v: bool, j: u64) -> u64 {
        let src = BitOccurrences::new(&self.bits, v, &self.tables);
        self.sel[v as usize].select(&src, j)
    }

    pub fn select(&self, v: bool, j: u64) -> Result<u64> {
        let available = self.count(v);
        if j == 0 || j > available {
            return Err(Error::OccurrenceOutOfRange { occurrence: j, available });
        }
        Ok(self.select_unchecked(v, j))
    }

    pub fn select1(&self, j: u64) -> Result<u64> {
        self.select(true, j)
    }

    pub fn select0(&self, j: u64) -> Result<u64> {
        self.select(false, j)
    }

    pub fn access(&self, i: u64) -> Result<bool> {
        self.bits.get(i)
    }

    pub fn select_side(&self, v: bool) -> &SampledSelect {
        &self.sel[v as usize]
    }

    /// Bytes of the bit vector plus its rank and select payloads.
    pub fn size_in_bytes(&self) -> u64 {
        self.bits.size_in_bytes()
            + self.rank.size_in_bytes()
            + self.sel[0].size_in_bytes()
            + self.sel[1].size_in_bytes()
    }

    pub fn write(&self, w: &mut Writer) {
        w.bitvec(&self.bits);
        w.packed(&self.rank.ranges);
        w.packed(&self.rank.subs);
        self.sel[0].write(w);
        self.sel[1].write(w);
    }

    /// Reads a structure and checks it against one rebuilt from its bits,
    /// so a damaged payload can never answer a query.
    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let bits = r.bitvec()?;
        let ranges = r.packed()?;
        let subs = r.packed()?;
        let s0 = SampledSelect::read(r)?;
        let s1 = SampledSelect::read(r)?;
        let params = s0.params();
        if s1.params() != params {
            return Err(corrupt("select sides disagree on parameters"));
        }
        let stored = BinaryRS {
            bits: bits.clone(),
            rank: BinaryRank { ranges, subs },
            sel: [s0, s1],
            tables: block_tables(&mut CostMeter::new()),
        };
        let rebuilt = Self::build_with(&mut CostMeter::new(), bits, params);
        if stored != rebuilt {
            return Err(corrupt("rank/select payload does not match its bitmap"));
        }
        Ok(rebuilt)
    }
}
