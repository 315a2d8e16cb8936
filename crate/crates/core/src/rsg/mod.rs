//! Generalized rank (`rank_le`) and per-symbol select over small alphabets.
//!
//! A block is one table key of `u` symbols. Cumulative counts are sampled
//! absolutely every `R` symbols (a range) and relative to the range start at
//! every block (a sub-range).

use std::sync::Arc;

use crate::bits::tables::{lanes_add, symbol_bits, symbol_table, SymbolBlockTable};
use crate::bits::{bits_for, mask, pack_with, PackedList, KAPPA};
use crate::error::{Error, Result};
use crate::io::{corrupt, Reader, Writer};
use crate::par::{parallel_map, prefix_sum, CostMeter};
use crate::rsb::{log_params, Occurrences, SampledSelect, SelectParams, SubRule};

/// Largest alphabet served by these structures.
pub const SIGMA_MAX: u32 = SymbolBlockTable::MAX_SIGMA;
const RANGE_GRAIN: usize = 16;

/// Occurrences of one symbol in a packed sequence.
pub struct SymbolOccurrences<'a> {
    seq: &'a PackedList,
    symbol: u64,
    table: &'a SymbolBlockTable,
}

impl<'a> SymbolOccurrences<'a> {
    pub fn new(seq: &'a PackedList, symbol: u32, table: &'a SymbolBlockTable) -> Self {
        SymbolOccurrences { seq, symbol: symbol as u64, table }
    }

    #[inline]
    fn block(&self, b: usize) -> (u64, u32) {
        let u = self.table.per_block() as usize;
        let start = b * u;
        let len = u.min(self.seq.len() - start);
        (self.seq.raw_range(start, len), len as u32)
    }

    #[inline]
    fn count_key(&self, key: u64, len: u32) -> u32 {
        let pad = if self.symbol == 0 { (self.table.per_block() - len) as u64 } else { 0 };
        (self.table.count_eq(key, self.symbol as u32) - pad) as u32
    }
}

impl Occurrences for SymbolOccurrences<'_> {
    fn len(&self) -> u64 {
        self.seq.len() as u64
    }

    fn unit(&self) -> u64 {
        self.table.per_block() as u64
    }

    fn count(&self, b: usize) -> u32 {
        let (key, len) = self.block(b);
        self.count_key(key, len)
    }

    fn count_prefix(&self, b: usize, upto: u32) -> u32 {
        let (key, _) = self.block(b);
        self.count_key(key & mask(upto * self.seq.width()), upto)
    }

    fn nth(&self, b: usize, mut k: u32) -> u32 {
        let (key, len) = self.block(b);
        let w = self.seq.width();
        for j in 0..len {
            if (key >> (j * w)) & mask(w) == self.symbol {
                if k == 0 {
                    return j;
                }
                k -= 1;
            }
        }
        unreachable!("block {b} has fewer occurrences than requested")
    }
}

/// Select parameters for a sequence of `n` symbols over `sigma`.
pub fn general_select_params(n: u64, sigma: u32) -> SelectParams {
    let (l, lambda) = log_params(n);
    let s = sigma as u64;
    let g1 = s * l * l;
    SelectParams {
        g1,
        range_direct: g1.saturating_mul(g1),
        rule: SubRule::General { sigma: s, lambda },
    }
}

/// Rank part of [`GeneralRS`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralRank {
    sigma: u32,
    range_len: u64,
    /// `rank_le(c)` before every range start, `σ−1` fields per row.
    ranges: PackedList,
    /// Same, relative to the range start, before every block.
    subs: PackedList,
}

fn check_sequence(seq: &PackedList, sigma: u32) -> Result<()> {
    if sigma == 0 || sigma > SIGMA_MAX {
        return Err(Error::param(format!("alphabet size {sigma} outside 1..={SIGMA_MAX}")));
    }
    if seq.width() != symbol_bits(sigma) {
        return Err(Error::WidthMismatch { left: symbol_bits(sigma), right: seq.width() });
    }
    Ok(())
}

impl GeneralRank {
    /// Per range in parallel: one table probe per block, combined by a
    /// prefix sum whose ⊕ adds 16-bit histogram lanes; then a σ-wide prefix
    /// sum across ranges.
    pub fn build(meter: &mut CostMeter, seq: &PackedList, sigma: u32, table: &SymbolBlockTable) -> Result<Self> {
        check_sequence(seq, sigma)?;
        let n = seq.len();
        let u = table.per_block() as usize;
        let fields = (sigma - 1) as usize;
        let range_len = (sigma as usize * (KAPPA * KAPPA) as usize).div_ceil(u) * u;
        let nr = n.div_ceil(range_len);
        let nblocks = n.div_ceil(u);
        let per_block_range = range_len / u;
        let top = sigma - 1;

        type RangeOut = (bool, [u64; 16], Vec<u16>);
        let per_range: Vec<RangeOut> = parallel_map(meter, nr, RANGE_GRAIN, |m, r| {
            let lo = r * per_block_range;
            let hi = (lo + per_block_range).min(nblocks);
            let mut ok = true;
            let entries: Vec<[u64; 4]> = (lo..hi)
                .map(|b| {
                    let start = b * u;
                    let len = u.min(n - start);
                    let key = seq.raw_range(start, len);
                    let e = *table.cumulative(key);
                    // padding zeros are symbol 0 and count below every lane
                    let pad = (u - len) as u64;
                    let pad_lanes = [pad * 0x0001_0001_0001_0001; 4];
                    let e = [e[0] - pad_lanes[0], e[1] - pad_lanes[1], e[2] - pad_lanes[2], e[3] - pad_lanes[3]];
                    if crate::bits::tables::lane(&e, top) != len as u64 {
                        ok = false;
                    }
                    e
                })
                .collect();
            m.charge(2 * (hi - lo) as u64);
            let (rel, total) = prefix_sum(m, &entries, |a, b| lanes_add(&a, &b), [0u64; 4]);
            let mut flat = Vec::with_capacity(rel.len() * fields);
            for e in &rel {
                for c in 0..fields as u32 {
                    flat.push(crate::bits::tables::lane(e, c) as u16);
                }
            }
            m.charge((rel.len() * fields) as u64);
            let mut wide = [0u64; 16];
            for (c, slot) in wide.iter_mut().enumerate() {
                *slot = crate::bits::tables::lane(&total, c as u32);
            }
            (ok, wide, flat)
        });
        if per_range.iter().any(|x| !x.0) {
            let bad = seq.iter().find(|&s| s >= sigma as u64).unwrap_or(sigma as u64);
            return Err(Error::SymbolOutOfRange { symbol: bad, sigma: sigma as u64 });
        }
        let totals: Vec<[u64; 16]> = per_range.iter().map(|x| x.1).collect();
        let add = |a: [u64; 16], b: [u64; 16]| {
            let mut o = a;
            for (x, y) in o.iter_mut().zip(b) {
                *x += y;
            }
            o
        };
        let (mut abs, last) = prefix_sum(meter, &totals, add, [0u64; 16]);
        abs.push(last);
        let aw = bits_for(n as u64);
        let ranges = pack_with(meter, abs.len() * fields, aw, |i| abs[i / fields.max(1)][i % fields.max(1)])?;
        let sw = bits_for(range_len as u64);
        let subs = pack_with(meter, nblocks * fields, sw, |i| {
            let b = i / fields;
            per_range[b / per_block_range].2[(b % per_block_range) * fields + i % fields] as u64
        })?;
        Ok(GeneralRank { sigma, range_len: range_len as u64, ranges, subs })
    }

    /// Symbols `<= c` in `seq[0..=i]`; unchecked.
    #[inline]
    pub fn rank_le(&self, seq: &PackedList, table: &SymbolBlockTable, c: u32, i: u64) -> u64 {
        if c + 1 >= self.sigma {
            return i + 1;
        }
        let fields = (self.sigma - 1) as u64;
        let u = table.per_block() as u64;
        let blk = i / u;
        let within = (i % u + 1) as usize;
        let key = seq.raw_range((blk * u) as usize, within);
        let inner = table.count_le(key, c) - (u - within as u64);
        self.ranges.at(((i / self.range_len) * fields + c as u64) as usize)
            + self.subs.at((blk * fields + c as u64) as usize)
            + inner
    }

    pub fn size_in_bytes(&self) -> u64 {
        self.ranges.size_in_bytes() + self.subs.size_in_bytes() + 16
    }
}

/// A symbol sequence over `σ <= 16` with `rank_le`, `rank_eq` and select.
#[derive(Clone, Debug)]
pub struct GeneralRS {
    seq: PackedList,
    rank: GeneralRank,
    sel: Vec<SampledSelect>,
    table: Arc<SymbolBlockTable>,
}

impl PartialEq for GeneralRS {
    fn eq(&self, o: &Self) -> bool {
        self.seq == o.seq && self.rank == o.rank && self.sel == o.sel
    }
}

impl Eq for GeneralRS {}

impl GeneralRS {
    /// `seq` must be packed at `⌈log2 σ⌉` bits (at least 1).
    pub fn build(meter: &mut CostMeter, seq: PackedList, sigma: u32) -> Result<Self> {
        let params = general_select_params(seq.len() as u64, sigma);
        Self::build_with(meter, seq, sigma, params)
    }

    pub fn build_with(meter: &mut CostMeter, seq: PackedList, sigma: u32, params: SelectParams) -> Result<Self> {
        check_sequence(&seq, sigma)?;
        let table = symbol_table(meter, sigma)?;
        let rank = GeneralRank::build(meter, &seq, sigma, &table)?;
        let (s, t) = (&seq, &*table);
        let sides: Vec<Option<SampledSelect>> = parallel_map(meter, sigma as usize, 1, |m, c| {
            Some(SampledSelect::build(m, &SymbolOccurrences::new(s, c as u32, t), params))
        });
        let sel = sides.into_iter().map(|x| x.expect("built")).collect();
        Ok(GeneralRS { seq, rank, sel, table })
    }

    /// Rank structure only, for cost measurements.
    pub fn build_rank_only(meter: &mut CostMeter, seq: &PackedList, sigma: u32) -> Result<GeneralRank> {
        check_sequence(seq, sigma)?;
        let table = symbol_table(meter, sigma)?;
        GeneralRank::build(meter, seq, sigma, &table)
    }

    pub fn sigma(&self) -> u32 {
        self.rank.sigma
    }

    pub fn len(&self) -> u64 {
        self.seq.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn seq(&self) -> &PackedList {
        &self.seq
    }

    pub fn count(&self, c: u32) -> u64 {
        self.sel.get(c as usize).map_or(0, |s| s.total())
    }

    pub fn select_side(&self, c: u32) -> &SampledSelect {
        &self.sel[c as usize]
    }

    fn check(&self, c: u32, i: u64) -> Result<()> {
        if c >= self.sigma() {
            return Err(Error::SymbolOutOfRange { symbol: c as u64, sigma: self.sigma() as u64 });
        }
        if i >= self.len() {
            return Err(Error::IndexOutOfRange { index: i, len: self.len() });
        }
        Ok(())
    }

    #[inline]
    pub fn access_unchecked(&self, i: u64) -> u32 {
        self.seq.at(i as usize) as u32
    }

    pub fn access(&self, i: u64) -> Result<u32> {
        Ok(self.seq.get(i as usize)? as u32)
    }

    #[inline]
    pub fn rank_le_unchecked(&self, c: u32, i: u64) -> u64 {
        self.rank.rank_le(&self.seq, &self.table, c, i)
    }

    pub fn rank_le(&self, c: u32, i: u64) -> Result<u64> {
        self.check(c, i)?;
        Ok(self.rank_le_unchecked(c, i))
    }

    #[inline]
    pub fn rank_eq_unchecked(&self, c: u32, i: u64) -> u64 {
        let below = if c == 0 { 0 } else { self.rank_le_unchecked(c - 1, i) };
        self.rank_le_unchecked(c, i) - below
    }

    pub fn rank_eq(&self, c: u32, i: u64) -> Result<u64> {
        self.check(c, i)?;
        Ok(self.rank_eq_unchecked(c, i))
    }

    #[inline]
    pub fn select_unchecked(&self, c: u32, j: u64) -> u64 {
        let src = SymbolOccurrences::new(&self.seq, c, &self.table);
        self.sel[c as usize].select(&src, j)
    }

    pub fn select_sym(&self, c: u32, j: u64) -> Result<u64> {
        if c >= self.sigma() {
            return Err(Error::SymbolOutOfRange { symbol: c as u64, sigma: self.sigma() as u64 });
        }
        let available = self.count(c);
        if j == 0 || j > available {
            return Err(Error::OccurrenceOutOfRange { occurrence: j, available });
        }
        Ok(self.select_unchecked(c, j))
    }

    pub fn size_in_bytes(&self) -> u64 {
        self.seq.size_in_bytes()
            + self.rank.size_in_bytes()
            + self.sel.iter().map(|s| s.size_in_bytes()).sum::<u64>()
    }

    pub fn write(&self, w: &mut Writer) {
        w.u32(self.sigma());
        w.packed(&self.seq);
        w.packed(&self.rank.ranges);
        w.packed(&self.rank.subs);
        for s in &self.sel {
            s.write(w);
        }
    }

    /// Reads a structure and checks it against one rebuilt from its sequence.
    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let sigma = r.u32()?;
        if sigma == 0 || sigma > SIGMA_MAX {
            return Err(corrupt(format!("alphabet size {sigma}")));
        }
        let seq = r.packed()?;
        let ranges = r.packed()?;
        let subs = r.packed()?;
        let mut sel = Vec::with_capacity(sigma as usize);
        for _ in 0..sigma {
            sel.push(SampledSelect::read(r)?);
        }
        let params = sel[0].params();
        if sel.iter().any(|s| s.params() != params) {
            return Err(corrupt("select sides disagree on parameters"));
        }
        let rebuilt = Self::build_with(&mut CostMeter::new(), seq.clone(), sigma, params)
            .map_err(|e| corrupt(e.to_string()))?;
        let stored = GeneralRank { sigma, range_len: rebuilt.rank.range_len, ranges, subs };
        if stored != rebuilt.rank || sel != rebuilt.sel {
            return Err(corrupt("rank/select payload does not match its sequence"));
        }
        Ok(rebuilt)
    }
}

#[cfg(test)]
mod tests;
