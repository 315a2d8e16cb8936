//! Bitmap construction for binary code trees.
//!
//! Every element carries a codeword of at most `height` bits, left aligned.
//! The node at `(level, prefix)` holds one bit per element routed through
//! it: bit `height - 1 - level` of the element's code. Nodes whose prefix is
//! a complete codeword are leaves and hold nothing.

use std::sync::Arc;

use crate::bits::tables::{shortlist_table, ShortlistTable};
use crate::bits::{concat_bits, mask, pack_with, BitSlice, PackedBitVector, PackedList};
use crate::error::{Error, Result};
use crate::par::{parallel_map, prefix_sum, stable_sort_by, CostMeter, SyncPtr};

const CHUNK_GRAIN: usize = 512;
const ELEM_GRAIN: usize = 4096;

/// Heap number of the node at `level` with the given prefix.
#[inline]
pub fn heap_id(level: u32, prefix: u64) -> u64 {
    ((1u64 << level) - 1) + prefix
}

/// Inverse of [`heap_id`].
#[inline]
pub fn heap_pos(id: u64) -> (u32, u64) {
    let level = 63 - (id + 1).leading_zeros();
    (level, id + 1 - (1u64 << level))
}

/// How symbols map to codewords.
#[derive(Clone, Copy, Debug)]
pub enum CodeMap<'a> {
    /// Every symbol `s` has the `height`-bit code `s << shift`.
    Shift { shift: u32 },
    /// Per-symbol left-aligned codes and their lengths.
    Table { codes: &'a [u64], lens: &'a [u8], leaves: &'a [(u32, u64)] },
}

/// Tree shape shared by every builder.
#[derive(Clone, Copy, Debug)]
pub struct Shape<'a> {
    pub height: u32,
    pub map: CodeMap<'a>,
    /// Collect the `k`-bit digit sequence of every node at a level
    /// divisible by `k`.
    pub digit_bits: Option<u32>,
}

impl Shape<'_> {
    #[inline]
    pub fn code(&self, sym: u64) -> u64 {
        match self.map {
            CodeMap::Shift { shift } => sym << shift,
            CodeMap::Table { codes, .. } => codes[sym as usize],
        }
    }

    #[inline]
    fn code_len(&self, sym: u64) -> u32 {
        match self.map {
            CodeMap::Shift { .. } => self.height,
            CodeMap::Table { lens, .. } => lens[sym as usize] as u32,
        }
    }

    #[inline]
    pub fn is_leaf(&self, level: u32, prefix: u64) -> bool {
        if level >= self.height {
            return true;
        }
        match self.map {
            CodeMap::Shift { .. } => false,
            CodeMap::Table { leaves, .. } => leaves.binary_search(&(level, prefix)).is_ok(),
        }
    }

    /// `width` bits of the code starting `level` bits below the top.
    #[inline]
    fn slice(&self, sym: u64, level: u32, width: u32) -> u64 {
        (self.code(sym) >> (self.height - level - width)) & mask(width)
    }

    #[inline]
    fn bit(&self, sym: u64, level: u32) -> bool {
        (self.code(sym) >> (self.height - 1 - level)) & 1 == 1
    }

    fn band_width(&self, level: u32, tau: u32) -> u32 {
        tau.min(self.height - level)
    }

    fn is_digit_level(&self, level: u32) -> Option<u32> {
        self.digit_bits.filter(|k| level.is_multiple_of(*k))
    }
}

/// Node bitmaps in heap order, plus optional digit sequences.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EngineOut {
    pub nodes: Vec<(u64, PackedBitVector)>,
    pub digits: Vec<(u64, PackedList)>,
}

impl EngineOut {
    fn sort(&mut self) {
        self.nodes.sort_by_key(|x| x.0);
        self.digits.sort_by_key(|x| x.0);
    }
}

/// Short-list tables indexed by band width.
#[derive(Clone, Default)]
pub struct Tables(Vec<Option<Arc<ShortlistTable>>>);

impl Tables {
    pub fn acquire(meter: &mut CostMeter, shape: &Shape<'_>, tau: u32) -> Result<Self> {
        let mut v: Vec<Option<Arc<ShortlistTable>>> = vec![None; 17];
        let mut level = 0;
        while level < shape.height {
            let tb = shape.band_width(level, tau);
            if v[tb as usize].is_none() {
                v[tb as usize] = Some(shortlist_table(meter, tb)?);
            }
            level += tb;
        }
        Ok(Tables(v))
    }

    pub(crate) fn get(&self, tb: u32) -> &ShortlistTable {
        self.0[tb as usize].as_deref().expect("table acquired for every band width")
    }
}

/// Validates τ for a shape of the given height.
pub fn check_tau(shape: &Shape<'_>, tau: u32) -> Result<()> {
    if shape.height == 0 {
        return Ok(());
    }
    let limit = shape.height.min(crate::bits::KAPPA);
    if tau == 0 || tau > limit {
        return Err(Error::param(format!("tau={tau} outside 1..={limit}")));
    }
    if let Some(k) = shape.digit_bits {
        if !tau.is_multiple_of(k) {
            return Err(Error::param(format!("tau={tau} is not a multiple of the digit width {k}")));
        }
    }
    Ok(())
}

fn empty_root(shape: &Shape<'_>) -> EngineOut {
    let mut out = EngineOut { nodes: vec![(0, PackedBitVector::zeros(0))], digits: Vec::new() };
    if let Some(k) = shape.digit_bits {
        out.digits.push((0, PackedList::new(k).expect("width")));
    }
    out
}

/// Serial stable counting sort by a `bits`-bit key. Also returns the bucket
/// boundaries.
pub(crate) fn counting_sort(
    meter: &mut CostMeter,
    items: &[u64],
    bits: u32,
    key: impl Fn(u64) -> u64,
) -> (Vec<u64>, Vec<usize>) {
    let buckets = 1usize << bits;
    let mut counts = vec![0usize; buckets + 1];
    for &s in items {
        counts[key(s) as usize + 1] += 1;
    }
    for b in 0..buckets {
        counts[b + 1] += counts[b];
    }
    let mut sorted = vec![0u64; items.len()];
    let mut cursor = counts.clone();
    for &s in items {
        let v = key(s) as usize;
        sorted[cursor[v]] = s;
        cursor[v] += 1;
    }
    // histogram (key, count) and scatter (key, cursor, write, bump)
    meter.charge(7 * items.len() as u64 + 2 * buckets as u64);
    (sorted, counts)
}

struct ListNode {
    level: u32,
    prefix: u64,
    list: PackedList,
}

pub(crate) struct Split {
    pub bits: PackedBitVector,
    pub l0: PackedList,
    pub l1: PackedList,
}

/// Chunked table lookups over one node's short list, appending each result
/// in sequence.
pub(crate) fn split_serial(meter: &mut CostMeter, table: &ShortlistTable, list: &PackedList, t: u32) -> Split {
    let tb = table.tau();
    let cap = table.cap() as usize;
    let len = list.len();
    let mut bits = PackedList::default();
    let mut l0 = PackedList::new(tb).expect("width");
    let mut l1 = PackedList::new(tb).expect("width");
    let mut i = 0;
    let mut ops = 0;
    while i < len {
        let c = cap.min(len - i);
        let e = table.probe(list.raw_range(i, c), c as u32, t);
        bits.push_raw(e.bitmap, c);
        l0.push_raw(e.l0, e.n0 as usize);
        l1.push_raw(e.l1, c - e.n0 as usize);
        i += c;
        // chunk read, probe, three appends
        ops += 5;
    }
    meter.charge(ops);
    let bits = PackedBitVector::from_words(bits.words().to_vec(), len as u64).expect("word count");
    Split { bits, l0, l1 }
}

/// Parallel chunk probes, then the bitmap and both child lists assembled by
/// prefix sums over the chunk output lengths and a word-parallel merge.
pub(crate) fn split_parallel(meter: &mut CostMeter, table: &ShortlistTable, list: &PackedList, t: u32) -> Split {
    let tb = table.tau();
    let cap = table.cap() as usize;
    let len = list.len();
    let chunks = len.div_ceil(cap);
    let probes: Vec<[u64; 4]> = parallel_map(meter, chunks, CHUNK_GRAIN, |m, c| {
        let lo = c * cap;
        let cnt = cap.min(len - lo);
        let e = table.probe(list.raw_range(lo, cnt), cnt as u32, t);
        m.charge(2);
        [e.bitmap, e.l0, e.l1, (e.n0 as u64) | (cnt as u64) << 8]
    });
    let n0 = |p: &[u64; 4]| p[3] & 0xFF;
    let cnt = |p: &[u64; 4]| p[3] >> 8;
    let tbw = tb as u64;
    let ((bits, l0), l1) = meter.join(
        |m| {
            m.join(
                |m| {
                    let parts: Vec<BitSlice<'_>> =
                        probes.iter().map(|p| (std::slice::from_ref(&p[0]), cnt(p))).collect();
                    concat_bits(m, &parts)
                },
                |m| {
                    let parts: Vec<BitSlice<'_>> =
                        probes.iter().map(|p| (std::slice::from_ref(&p[1]), n0(p) * tbw)).collect();
                    concat_bits(m, &parts)
                },
            )
        },
        |m| {
            let parts: Vec<BitSlice<'_>> =
                probes.iter().map(|p| (std::slice::from_ref(&p[2]), (cnt(p) - n0(p)) * tbw)).collect();
            concat_bits(m, &parts)
        },
    );
    Split {
        bits: PackedBitVector::from_words(bits.0, bits.1).expect("word count"),
        l0: PackedList::from_raw(l0.0, (l0.1 / tbw) as usize, tb).expect("word count"),
        l1: PackedList::from_raw(l1.0, (l1.1 / tbw) as usize, tb).expect("word count"),
    }
}

/// The `k`-bit digit at band offset `t` of every element of a short list.
fn digits_of(meter: &mut CostMeter, list: &PackedList, t: u32, k: u32, parallel: bool) -> PackedList {
    let tb = list.width();
    let shift = tb - t - k;
    if parallel {
        pack_with(meter, list.len(), k, |i| (list.at(i) >> shift) & mask(k)).expect("width")
    } else {
        let mut out = PackedList::new(k).expect("width");
        for x in list.iter() {
            out.push_raw((x >> shift) & mask(k), 1);
        }
        meter.charge(list.len() as u64 + 1);
        out
    }
}

/// Packed serial construction: big nodes every τ levels hold full codes;
/// the levels in between work on τ-bit short lists through the table.
pub fn packed_serial(
    meter: &mut CostMeter,
    syms: Vec<u64>,
    shape: &Shape<'_>,
    tau: u32,
    tables: &Tables,
) -> EngineOut {
    let mut out = EngineOut::default();
    if shape.is_leaf(0, 0) {
        return out;
    }
    if syms.is_empty() {
        return empty_root(shape);
    }
    let mut stack = vec![(syms, 0u32, 0u64)];
    while let Some((syms, level, prefix)) = stack.pop() {
        let tb = shape.band_width(level, tau);
        let table = tables.get(tb);
        let mut list = PackedList::new(tb).expect("width");
        for &s in &syms {
            list.push_raw(shape.slice(s, level, tb), 1);
        }
        meter.charge(syms.len() as u64 + list.words().len() as u64);
        let mut lists = vec![ListNode { level, prefix, list }];
        for t in 0..tb {
            let mut next = Vec::with_capacity(2 * lists.len());
            for node in lists {
                if shape.is_leaf(node.level, node.prefix) {
                    continue;
                }
                let id = heap_id(node.level, node.prefix);
                if let Some(k) = shape.is_digit_level(node.level) {
                    out.digits.push((id, digits_of(meter, &node.list, t, k, false)));
                }
                let s = split_serial(meter, table, &node.list, t);
                out.nodes.push((id, s.bits));
                for (bit, l) in [(0, s.l0), (1, s.l1)] {
                    if !l.is_empty() {
                        next.push(ListNode { level: node.level + 1, prefix: node.prefix << 1 | bit, list: l });
                    }
                }
            }
            lists = next;
        }
        let below = level + tb;
        if below >= shape.height || lists.is_empty() {
            continue;
        }
        let (sorted, counts) = counting_sort(meter, &syms, tb, |x| shape.slice(x, level, tb));
        // children in reverse so the stack pops them in prefix order
        for node in lists.iter().rev() {
            if shape.is_leaf(node.level, node.prefix) {
                continue;
            }
            let v = (node.prefix & mask(tb)) as usize;
            stack.push((sorted[counts[v]..counts[v + 1]].to_vec(), below, node.prefix));
        }
    }
    out.sort();
    out
}

/// Parallel construction: a stable integer sort on the code prefix at every
/// big-node level, and parallel chunk lookups with merged outputs in between.
pub fn parallel_sorted(
    meter: &mut CostMeter,
    syms: Vec<u64>,
    shape: &Shape<'_>,
    tau: u32,
    tables: &Tables,
) -> Result<EngineOut> {
    let mut out = EngineOut::default();
    if shape.is_leaf(0, 0) {
        return Ok(out);
    }
    if syms.is_empty() {
        return Ok(empty_root(shape));
    }
    let mut arr = syms;
    let mut segs: Vec<(u64, usize)> = vec![(0, arr.len())];
    let mut level = 0;
    loop {
        let tb = shape.band_width(level, tau);
        let table = tables.get(tb);
        let sizes: Vec<u64> = segs.iter().map(|s| s.1 as u64).collect();
        let (starts, _) = prefix_sum(meter, &sizes, |a, b| a + b, 0);
        let a = &arr;
        let big: Vec<PackedList> = parallel_map(meter, segs.len(), 1, |m, j| {
            let st = starts[j] as usize;
            pack_with(m, segs[j].1, tb, |i| shape.slice(a[st + i], level, tb)).expect("width")
        });
        let mut lists: Vec<ListNode> = segs
            .iter()
            .zip(big)
            .map(|(&(prefix, _), list)| ListNode { level, prefix, list })
            .collect();
        for t in 0..tb {
            type NodeResult = Option<(u64, Option<PackedList>, Split)>;
            let results: Vec<NodeResult> = parallel_map(meter, lists.len(), 1, |m, j| {
                let node = &lists[j];
                if shape.is_leaf(node.level, node.prefix) {
                    return None;
                }
                let id = heap_id(node.level, node.prefix);
                let digits = shape.is_digit_level(node.level).map(|k| digits_of(m, &node.list, t, k, true));
                Some((id, digits, split_parallel(m, table, &node.list, t)))
            });
            let mut next = Vec::with_capacity(2 * lists.len());
            for (node, r) in lists.iter().zip(results) {
                let Some((id, digits, s)) = r else { continue };
                if let Some(d) = digits {
                    out.digits.push((id, d));
                }
                out.nodes.push((id, s.bits));
                for (bit, l) in [(0, s.l0), (1, s.l1)] {
                    if !l.is_empty() {
                        next.push(ListNode { level: node.level + 1, prefix: node.prefix << 1 | bit, list: l });
                    }
                }
            }
            lists = next;
        }
        let below = level + tb;
        segs = lists
            .iter()
            .filter(|n| !shape.is_leaf(n.level, n.prefix))
            .map(|n| (n.prefix, n.list.len()))
            .collect();
        if below >= shape.height || segs.is_empty() {
            break;
        }
        arr = stable_sort_by(meter, &arr, below, |&s| shape.code(s) >> (shape.height - below))?;
        if matches!(shape.map, CodeMap::Table { .. }) {
            arr = keep_alive(meter, &arr, shape, below);
        }
        level = below;
    }
    out.sort();
    Ok(out)
}

/// Drops elements whose codeword ends at or above `level`, keeping order.
fn keep_alive(meter: &mut CostMeter, arr: &[u64], shape: &Shape<'_>, level: u32) -> Vec<u64> {
    let flags: Vec<u64> = parallel_map(meter, arr.len(), ELEM_GRAIN, |m, i| {
        m.charge(1);
        (shape.code_len(arr[i]) > level) as u64
    });
    let (pos, total) = prefix_sum(meter, &flags, |a, b| a + b, 0);
    let mut out = vec![0u64; total as usize];
    let ptr = SyncPtr::new(&mut out);
    crate::par::parallel_for(meter, arr.len(), ELEM_GRAIN, |m, r| {
        for i in r.clone() {
            if flags[i] == 1 {
                // SAFETY: kept elements have distinct prefix-sum ranks
                unsafe { ptr.write(pos[i] as usize, arr[i]) };
            }
        }
        m.charge(r.len() as u64);
    });
    out
}

/// Part sizes for `P` parts: the first `n mod P` parts take one extra
/// element. `P > n` degrades to `n` parts.
pub fn part_sizes(n: usize, parts: usize) -> Vec<usize> {
    let p = parts.max(1).min(n.max(1));
    (0..p).map(|i| n / p + usize::from(i < n % p)).collect()
}

/// Domain decomposition: each part is built by [`packed_serial`], then every
/// node's bitstrings are concatenated in part order.
pub fn domain_decomp(
    meter: &mut CostMeter,
    syms: Vec<u64>,
    shape: &Shape<'_>,
    tau: u32,
    parts: usize,
    tables: &Tables,
) -> EngineOut {
    let sizes = part_sizes(syms.len(), parts);
    let sz: Vec<u64> = sizes.iter().map(|&s| s as u64).collect();
    let (starts, _) = prefix_sum(meter, &sz, |a, b| a + b, 0);
    let outs: Vec<EngineOut> = parallel_map(meter, sizes.len(), 1, |m, p| {
        let st = starts[p] as usize;
        m.charge(sizes[p] as u64);
        packed_serial(m, syms[st..st + sizes[p]].to_vec(), shape, tau, tables)
    });
    let nodes = merge_parts(meter, &outs, |o| &o.nodes, |v| (v.words(), v.len()), |w, len| {
        PackedBitVector::from_words(w, len).expect("word count")
    });
    let digits = merge_parts(meter, &outs, |o| &o.digits, |l| (l.words(), l.bit_len()), |w, len| {
        let k = outs.iter().flat_map(|o| o.digits.first()).map(|d| d.1.width()).next().unwrap_or(1);
        PackedList::from_raw(w, (len / k as u64) as usize, k).expect("word count")
    });
    EngineOut { nodes, digits }
}

fn merge_parts<T, G, S, B>(meter: &mut CostMeter, outs: &[EngineOut], get: G, slice: S, make: B) -> Vec<(u64, T)>
where
    T: Send + Sync,
    G: Fn(&EngineOut) -> &Vec<(u64, T)> + Sync,
    S: Fn(&T) -> BitSlice<'_> + Sync,
    B: Fn(Vec<u64>, u64) -> T + Sync,
{
    let mut ids: Vec<u64> = outs.iter().flat_map(|o| get(o).iter().map(|x| x.0)).collect();
    meter.charge(ids.len() as u64);
    ids.sort_unstable();
    ids.dedup();
    let merged: Vec<Option<T>> = parallel_map(meter, ids.len(), 1, |m, j| {
        let id = ids[j];
        let frags: Vec<BitSlice<'_>> = outs
            .iter()
            .filter_map(|o| {
                let v = get(o);
                v.binary_search_by_key(&id, |x| x.0).ok().map(|k| slice(&v[k].1))
            })
            .collect();
        m.charge(outs.len() as u64);
        let (words, len) = concat_bits(m, &frags);
        Some(make(words, len))
    });
    ids.into_iter().zip(merged).map(|(id, t)| (id, t.expect("merged"))).collect()
}

/// Level-by-level construction touching every element at every level.
pub fn naive(meter: &mut CostMeter, syms: Vec<u64>, shape: &Shape<'_>) -> EngineOut {
    let mut out = EngineOut::default();
    if shape.is_leaf(0, 0) {
        return out;
    }
    if syms.is_empty() {
        return empty_root(shape);
    }
    let mut arr = syms;
    let mut segs: Vec<(u64, usize)> = vec![(0, arr.len())];
    let mut level = 0;
    while !segs.is_empty() {
        let mut next_arr = Vec::with_capacity(arr.len());
        let mut next_segs = Vec::with_capacity(2 * segs.len());
        let mut start = 0;
        for &(prefix, len) in &segs {
            let elems = &arr[start..start + len];
            start += len;
            if shape.is_leaf(level, prefix) {
                continue;
            }
            let id = heap_id(level, prefix);
            let mut bits = PackedBitVector::zeros(len as u64);
            let mut ones = Vec::new();
            if let Some(k) = shape.is_digit_level(level) {
                let mut d = PackedList::new(k).expect("width");
                for &s in elems {
                    d.push_raw(shape.slice(s, level, k), 1);
                }
                out.digits.push((id, d));
            }
            let before = next_arr.len();
            for (i, &s) in elems.iter().enumerate() {
                // read, test, write bit, move element
                if shape.bit(s, level) {
                    bits.set(i as u64, true).expect("in range");
                    ones.push(s);
                } else {
                    next_arr.push(s);
                }
            }
            meter.charge(4 * len as u64);
            let zeros = next_arr.len() - before;
            next_arr.extend_from_slice(&ones);
            out.nodes.push((id, bits));
            if zeros > 0 {
                next_segs.push((prefix << 1, zeros));
            }
            if !ones.is_empty() {
                next_segs.push((prefix << 1 | 1, ones.len()));
            }
        }
        arr = next_arr;
        segs = next_segs;
        level += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heap_numbering_round_trip() {
        for level in 0..10 {
            for p in 0..(1u64 << level).min(50) {
                assert_eq!(heap_pos(heap_id(level, p)), (level, p));
            }
        }
        assert_eq!(heap_id(1, 1), 2);
        assert_eq!(heap_pos(heap_id(63, 5)), (63, 5));
    }

    #[test]
    fn part_sizes_balance() {
        assert_eq!(part_sizes(11, 3), vec![4, 4, 3]);
        assert_eq!(part_sizes(3, 7), vec![1, 1, 1]);
        assert_eq!(part_sizes(0, 4), vec![0]);
        assert_eq!(part_sizes(10, 1), vec![10]);
    }
}
