//! Three-tier sampled select over an abstract stream of occurrences.
//!
//! Occurrences are grouped into ranges of `g1`. A range whose extent is at
//! least `range_direct` stores every position; otherwise it stores every
//! `g2`'th position as a sub-range boundary, and each sub-range either stores
//! its positions or is answered by scanning blocks with the lookup tables.

use crate::bits::{bits_for, ceil_log2, concat_bits, pack_with, BitSlice, PackedBitVector, PackedList};
use crate::error::Result;
use crate::io::{corrupt, Reader, Writer};
use crate::par::{parallel_for, parallel_map, prefix_sum, CostMeter, SyncPtr};

const BLOCK_GRAIN: usize = 1024;
const RANGE_GRAIN: usize = 64;

/// A sequence cut into fixed-size blocks, each answering occurrence counts
/// and in-block selects with O(1) table probes.
pub trait Occurrences: Sync {
    fn len(&self) -> u64;
    /// Elements per block.
    fn unit(&self) -> u64;
    fn count(&self, b: usize) -> u32;
    /// Occurrences among the first `upto` elements of block `b`.
    fn count_prefix(&self, b: usize, upto: u32) -> u32;
    /// Offset inside block `b` of its `k`'th (0-based) occurrence.
    fn nth(&self, b: usize, k: u32) -> u32;

    fn blocks(&self) -> usize {
        self.len().div_ceil(self.unit()) as usize
    }

    /// Position of the `k`'th (0-based) occurrence at or after `pos`. The
    /// caller guarantees it exists.
    fn scan_from(&self, pos: u64, k: u64) -> u64 {
        let unit = self.unit();
        let mut b = (pos / unit) as usize;
        let mut need = k + self.count_prefix(b, (pos % unit) as u32) as u64;
        loop {
            let c = self.count(b) as u64;
            if need < c {
                return b as u64 * unit + self.nth(b, need as u32) as u64;
            }
            need -= c;
            b += 1;
        }
    }
}

/// How ranges are split into sub-ranges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubRule {
    /// `g2 = ⌈log r⌉·λ`; a sub-range is stored when
    /// `r' >= ⌈log r'⌉·⌈log r⌉·λ²`.
    Binary { lambda: u64 },
    /// `g2 = σ·λ²`; a sub-range is stored when `r' >= σ³·λ⁴`.
    General { sigma: u64, lambda: u64 },
    /// Fixed spacing and threshold.
    Fixed { g2: u64, sub_direct: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelectParams {
    pub g1: u64,
    pub range_direct: u64,
    pub rule: SubRule,
}

impl SelectParams {
    pub fn g2(&self, extent: u64) -> u64 {
        match self.rule {
            SubRule::Binary { lambda } => (ceil_log2(extent) as u64 * lambda).max(1),
            SubRule::General { sigma, lambda } => (sigma * lambda * lambda).max(1),
            SubRule::Fixed { g2, .. } => g2.max(1),
        }
    }

    pub fn sub_is_direct(&self, extent: u64, sub_extent: u64) -> bool {
        match self.rule {
            SubRule::Binary { lambda } => {
                let lr = ceil_log2(extent) as u64;
                let ls = ceil_log2(sub_extent) as u64;
                sub_extent >= ls.saturating_mul(lr).saturating_mul(lambda * lambda)
            }
            SubRule::General { sigma, lambda } => {
                let l2 = lambda * lambda;
                sub_extent >= sigma.saturating_pow(3).saturating_mul(l2 * l2)
            }
            SubRule::Fixed { sub_direct, .. } => sub_extent >= sub_direct,
        }
    }

    fn write(&self, w: &mut Writer) {
        w.u64(self.g1);
        w.u64(self.range_direct);
        match self.rule {
            SubRule::Binary { lambda } => {
                w.u8(0);
                w.u64(lambda);
                w.u64(0);
            }
            SubRule::General { sigma, lambda } => {
                w.u8(1);
                w.u64(sigma);
                w.u64(lambda);
            }
            SubRule::Fixed { g2, sub_direct } => {
                w.u8(2);
                w.u64(g2);
                w.u64(sub_direct);
            }
        }
    }

    fn read(r: &mut Reader<'_>) -> Result<Self> {
        let g1 = r.u64()?;
        let range_direct = r.u64()?;
        let tag = r.u8()?;
        let (a, b) = (r.u64()?, r.u64()?);
        let rule = match tag {
            0 if b == 0 => SubRule::Binary { lambda: a },
            0 => return Err(corrupt("binary select rule with a nonzero spare field")),
            1 => SubRule::General { sigma: a, lambda: b },
            2 => SubRule::Fixed { g2: a, sub_direct: b },
            t => return Err(corrupt(format!("unknown select rule {t}"))),
        };
        if g1 == 0 {
            return Err(corrupt("zero select sampling rate"));
        }
        Ok(SelectParams { g1, range_direct, rule })
    }
}

/// `⌈log2 n⌉` and `⌈log2 ⌈log2 n⌉⌉`, both at least 1.
pub fn log_params(n: u64) -> (u64, u64) {
    let l = (ceil_log2(n.max(2)) as u64).max(1);
    let lambda = (ceil_log2(l) as u64).max(1);
    (l, lambda)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledSelect {
    params: SelectParams,
    total: u64,
    last: u64,
    samples: PackedList,
    direct: PackedBitVector,
    pay_off: PackedList,
    payload: Vec<u64>,
    sub_base: PackedList,
    sub_direct: PackedBitVector,
    sub_off: PackedList,
    sub_payload: Vec<u64>,
}

fn list_of(meter: &mut CostMeter, v: &[u64]) -> PackedList {
    let width = bits_for(v.iter().copied().max().unwrap_or(0));
    pack_with(meter, v.len(), width, |i| v[i]).expect("width fits")
}

fn bits_of(meter: &mut CostMeter, flags: &[bool]) -> PackedBitVector {
    let l = pack_with(meter, flags.len(), 1, |i| flags[i] as u64).expect("width 1");
    PackedBitVector::from_words(l.words().to_vec(), flags.len() as u64).expect("word count")
}

/// Packs each group of values at its own width and concatenates the groups.
/// Returns the payload words and the bit offset of every group (plus the end).
fn pack_groups(
    meter: &mut CostMeter,
    slots: &[u64],
    base: &[u64],
    widths: &[u32],
) -> (Vec<u64>, Vec<u64>) {
    let groups = widths.len();
    let parts: Vec<PackedList> = parallel_map(meter, groups, RANGE_GRAIN, |m, g| {
        let lo = base[g] as usize;
        let hi = base[g + 1] as usize;
        let mut out = PackedList::new(widths[g]).expect("width fits");
        for &v in &slots[lo..hi] {
            out.push_raw(v, 1);
        }
        m.charge(1 + (hi - lo) as u64);
        out
    })
    .into_iter()
    .collect();
    let lens: Vec<u64> = parts.iter().map(|p| p.bit_len()).collect();
    let (mut offs, total) = prefix_sum(meter, &lens, |a, b| a + b, 0);
    offs.push(total);
    let slices: Vec<BitSlice<'_>> = parts.iter().map(|p| (p.words(), p.bit_len())).collect();
    let (words, _) = concat_bits(meter, &slices);
    (words, offs)
}

impl SampledSelect {
    pub fn build<S: Occurrences>(meter: &mut CostMeter, src: &S, params: SelectParams) -> Self {
        let nb = src.blocks();
        let unit = src.unit();
        let counts: Vec<u64> = parallel_map(meter, nb, BLOCK_GRAIN, |m, b| {
            m.charge(1);
            src.count(b) as u64
        });
        let (mut cum, total) = prefix_sum(meter, &counts, |a, b| a + b, 0);
        cum.push(total);
        let empty = || PackedList::new(1).expect("width 1");
        if total == 0 {
            return SampledSelect {
                params,
                total: 0,
                last: 0,
                samples: empty(),
                direct: PackedBitVector::zeros(0),
                pay_off: empty(),
                payload: Vec::new(),
                sub_base: empty(),
                sub_direct: PackedBitVector::zeros(0),
                sub_off: empty(),
                sub_payload: Vec::new(),
            };
        }
        let g1 = params.g1;
        let nr = total.div_ceil(g1) as usize;

        // first position of every range, and the last occurrence
        let mut samples = vec![0u64; nr];
        let mut last = [0u64; 1];
        {
            let sp = SyncPtr::new(&mut samples);
            let lp = SyncPtr::new(&mut last);
            let cum = &cum;
            parallel_for(meter, nb, BLOCK_GRAIN, |m, blocks| {
                let mut ops = 0;
                for b in blocks {
                    let (lo, hi) = (cum[b], cum[b + 1]);
                    let mut q = lo.div_ceil(g1) * g1;
                    while q < hi {
                        let pos = b as u64 * unit + src.nth(b, (q - lo) as u32) as u64;
                        // SAFETY: occurrence q lies in exactly one block
                        unsafe { sp.write((q / g1) as usize, pos) };
                        q += g1;
                        ops += 2;
                    }
                    if lo < total && total <= hi {
                        let pos = b as u64 * unit + src.nth(b, (total - 1 - lo) as u32) as u64;
                        // SAFETY: only the block holding the last occurrence writes
                        unsafe { lp.write(0, pos) };
                    }
                    ops += 1;
                }
                m.charge(ops);
            });
        }
        let last = last[0];

        let extent = |k: usize| {
            if k + 1 < nr {
                samples[k + 1] - samples[k]
            } else {
                last - samples[k] + 1
            }
        };
        let count_in = |k: usize| g1.min(total - k as u64 * g1);

        // per-range classification
        let info: Vec<(bool, u64, u64, u32)> = parallel_map(meter, nr, RANGE_GRAIN, |m, k| {
            m.charge(4);
            let ext = extent(k);
            let direct = ext >= params.range_direct;
            let cnt = count_in(k);
            let width = bits_for(ext - 1);
            if direct {
                (true, cnt, 0, width)
            } else {
                let subs = cnt.div_ceil(params.g2(ext));
                (false, subs, subs, width)
            }
        });
        let direct: Vec<bool> = info.iter().map(|x| x.0).collect();
        let slots_a: Vec<u64> = info.iter().map(|x| x.1).collect();
        let subs: Vec<u64> = info.iter().map(|x| x.2).collect();
        let widths_a: Vec<u32> = info.iter().map(|x| x.3).collect();
        let g2s: Vec<u64> = (0..nr).map(|k| params.g2(extent(k))).collect();
        let (mut base_a, total_a) = prefix_sum(meter, &slots_a, |a, b| a + b, 0);
        base_a.push(total_a);
        let (mut sub_base, nsubs) = prefix_sum(meter, &subs, |a, b| a + b, 0);
        sub_base.push(nsubs);

        // range payloads: every position, or sub-range boundaries
        let mut slot_a = vec![0u64; total_a as usize];
        {
            let ptr = SyncPtr::new(&mut slot_a);
            let (cum, base_a, samples, direct, g2s) = (&cum, &base_a, &samples, &direct, &g2s);
            parallel_for(meter, nb, BLOCK_GRAIN, |m, blocks| {
                let mut ops = 0;
                for b in blocks {
                    let (lo, hi) = (cum[b], cum[b + 1]);
                    let mut q = lo;
                    while q < hi {
                        let k = (q / g1) as usize;
                        let rel = q - k as u64 * g1;
                        ops += 1;
                        let idx = if direct[k] {
                            rel
                        } else if rel.is_multiple_of(g2s[k]) {
                            rel / g2s[k]
                        } else {
                            q = (q + g2s[k] - rel % g2s[k]).min((k as u64 + 1) * g1);
                            continue;
                        };
                        let pos = b as u64 * unit + src.nth(b, (q - lo) as u32) as u64;
                        // SAFETY: slot (k, idx) belongs to occurrence q alone
                        unsafe { ptr.write((base_a[k] + idx) as usize, pos - samples[k]) };
                        ops += 2;
                        q += 1;
                    }
                    ops += 1;
                }
                m.charge(ops);
            });
        }

        // sub-range classification
        let sub_range: Vec<u64> = {
            let mut v = vec![0u64; nsubs as usize];
            let ptr = SyncPtr::new(&mut v);
            let sub_base = &sub_base;
            parallel_for(meter, nr, RANGE_GRAIN, |m, ks| {
                let mut ops = 0;
                for k in ks {
                    for s in sub_base[k]..sub_base[k + 1] {
                        // SAFETY: each sub-range belongs to one range
                        unsafe { ptr.write(s as usize, k as u64) };
                        ops += 1;
                    }
                }
                m.charge(ops + 1);
            });
            v
        };
        let sub_info: Vec<(bool, u64, u32)> = parallel_map(meter, nsubs as usize, RANGE_GRAIN, |m, s| {
            m.charge(4);
            let k = sub_range[s] as usize;
            let j = s as u64 - sub_base[k];
            let a = base_a[k] as usize + j as usize;
            let start = slot_a[a];
            let end = if j + 1 < subs[k] { slot_a[a + 1] } else { extent(k) };
            let sext = end - start;
            let cnt = g2s[k].min(count_in(k) - j * g2s[k]);
            if params.sub_is_direct(extent(k), sext) {
                (true, cnt, bits_for(sext - 1))
            } else {
                (false, 0, 1)
            }
        });
        let sub_direct: Vec<bool> = sub_info.iter().map(|x| x.0).collect();
        let slots_b: Vec<u64> = sub_info.iter().map(|x| x.1).collect();
        let widths_b: Vec<u32> = sub_info.iter().map(|x| x.2).collect();
        let (mut base_b, total_b) = prefix_sum(meter, &slots_b, |a, b| a + b, 0);
        base_b.push(total_b);

        let mut slot_b = vec![0u64; total_b as usize];
        if total_b > 0 {
            let ptr = SyncPtr::new(&mut slot_b);
            let (cum, base_b, samples, direct, g2s, sub_base, sub_direct, slot_a, base_a) = (
                &cum, &base_b, &samples, &direct, &g2s, &sub_base, &sub_direct, &slot_a, &base_a,
            );
            parallel_for(meter, nb, BLOCK_GRAIN, |m, blocks| {
                let mut ops = 0;
                for b in blocks {
                    let (lo, hi) = (cum[b], cum[b + 1]);
                    let mut q = lo;
                    while q < hi {
                        let k = (q / g1) as usize;
                        let rel = q - k as u64 * g1;
                        ops += 1;
                        if direct[k] {
                            q = (k as u64 + 1) * g1;
                            continue;
                        }
                        let j = rel / g2s[k];
                        let s = (sub_base[k] + j) as usize;
                        if !sub_direct[s] {
                            q = (q + g2s[k] - rel % g2s[k]).min((k as u64 + 1) * g1);
                            continue;
                        }
                        let start = samples[k] + slot_a[(base_a[k] + j) as usize];
                        let pos = b as u64 * unit + src.nth(b, (q - lo) as u32) as u64;
                        // SAFETY: slot (s, rel mod g2) belongs to occurrence q alone
                        unsafe { ptr.write((base_b[s] + rel % g2s[k]) as usize, pos - start) };
                        ops += 2;
                        q += 1;
                    }
                    ops += 1;
                }
                m.charge(ops);
            });
        }

        let (payload, pay_off) = pack_groups(meter, &slot_a, &base_a, &widths_a);
        let (sub_payload, sub_off) = pack_groups(meter, &slot_b, &base_b, &widths_b);
        SampledSelect {
            params,
            total,
            last,
            samples: list_of(meter, &samples),
            direct: bits_of(meter, &direct),
            pay_off: list_of(meter, &pay_off),
            payload,
            sub_base: list_of(meter, &sub_base),
            sub_direct: bits_of(meter, &sub_direct),
            sub_off: list_of(meter, &sub_off),
            sub_payload,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn params(&self) -> SelectParams {
        self.params
    }

    pub fn ranges(&self) -> usize {
        self.samples.len()
    }

    pub fn direct_ranges(&self) -> u64 {
        self.direct.count_ones()
    }

    pub fn sub_ranges(&self) -> usize {
        self.sub_direct.len() as usize
    }

    pub fn direct_sub_ranges(&self) -> u64 {
        self.sub_direct.count_ones()
    }

    fn extent(&self, k: usize) -> u64 {
        if k + 1 < self.samples.len() {
            self.samples.at(k + 1) - self.samples.at(k)
        } else {
            self.last - self.samples.at(k) + 1
        }
    }

    /// Position of the `j`'th (1-based) occurrence; `1 <= j <= total`.
    pub fn select<S: Occurrences>(&self, src: &S, j: u64) -> u64 {
        debug_assert!(j >= 1 && j <= self.total);
        let g1 = self.params.g1;
        let q = j - 1;
        let k = (q / g1) as usize;
        let rel = q - k as u64 * g1;
        let start = self.samples.at(k);
        let ext = self.extent(k);
        let width = bits_for(ext - 1);
        let off = self.pay_off.at(k);
        let read = |words: &[u64], pos: u64, w: u32| crate::bits::read_bits(words, pos, w);
        if self.direct.bit(k as u64) {
            return start + read(&self.payload, off + rel * width as u64, width);
        }
        let g2 = self.params.g2(ext);
        let jj = rel / g2;
        let o = rel % g2;
        let sstart = read(&self.payload, off + jj * width as u64, width);
        let s = (self.sub_base.at(k) + jj) as usize;
        if o == 0 {
            return start + sstart;
        }
        if self.sub_direct.bit(s as u64) {
            let subs = self.sub_base.at(k + 1) - self.sub_base.at(k);
            let end = if jj + 1 < subs {
                read(&self.payload, off + (jj + 1) * width as u64, width)
            } else {
                ext
            };
            let sw = bits_for(end - sstart - 1);
            return start + sstart + read(&self.sub_payload, self.sub_off.at(s) + o * sw as u64, sw);
        }
        src.scan_from(start + sstart, o)
    }

    pub fn size_in_bytes(&self) -> u64 {
        self.samples.size_in_bytes()
            + self.pay_off.size_in_bytes()
            + self.sub_base.size_in_bytes()
            + self.sub_off.size_in_bytes()
            + self.direct.size_in_bytes()
            + self.sub_direct.size_in_bytes()
            + 8 * (self.payload.len() + self.sub_payload.len()) as u64
            + 16
    }

    pub fn write(&self, w: &mut Writer) {
        self.params.write(w);
        w.u64(self.total);
        w.u64(self.last);
        w.packed(&self.samples);
        w.bitvec(&self.direct);
        w.packed(&self.pay_off);
        w.u64(self.payload.len() as u64);
        w.words(&self.payload);
        w.packed(&self.sub_base);
        w.bitvec(&self.sub_direct);
        w.packed(&self.sub_off);
        w.u64(self.sub_payload.len() as u64);
        w.words(&self.sub_payload);
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let params = SelectParams::read(r)?;
        let total = r.u64()?;
        let last = r.u64()?;
        let samples = r.packed()?;
        let direct = r.bitvec()?;
        let pay_off = r.packed()?;
        let n = r.usize()?;
        let payload = r.words(n)?;
        let sub_base = r.packed()?;
        let sub_direct = r.bitvec()?;
        let sub_off = r.packed()?;
        let n = r.usize()?;
        let sub_payload = r.words(n)?;
        Ok(SampledSelect {
            params,
            total,
            last,
            samples,
            direct,
            pay_off,
            payload,
            sub_base,
            sub_direct,
            sub_off,
            sub_payload,
        })
    }
}
