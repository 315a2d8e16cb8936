use super::words::{clear_tail, mask, read_bits, words_for, write_bits, WORD_BITS};
use crate::error::{Error, Result};
use crate::par::{parallel_fill, prefix_sum, CostMeter};

/// `len` integers of `width` bits packed back to back into `⌈len·width/64⌉`
/// words. Element `i` occupies bits `[i·width, (i+1)·width)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PackedList {
    words: Vec<u64>,
    len: usize,
    width: u32,
}

impl PackedList {
    pub fn new(width: u32) -> Result<Self> {
        check_width(width)?;
        Ok(PackedList { words: Vec::new(), len: 0, width })
    }

    pub fn zeros(len: usize, width: u32) -> Result<Self> {
        check_width(width)?;
        Ok(PackedList { words: vec![0; words_for(len as u64 * width as u64)], len, width })
    }

    pub fn from_raw(mut words: Vec<u64>, len: usize, width: u32) -> Result<Self> {
        check_width(width)?;
        let bits = len as u64 * width as u64;
        if words.len() != words_for(bits) {
            return Err(Error::param(format!(
                "{} words cannot hold exactly {len} {width}-bit values",
                words.len()
            )));
        }
        clear_tail(&mut words, bits);
        Ok(PackedList { words, len, width })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit_len(&self) -> u64 {
        self.len as u64 * self.width as u64
    }

    /// Unchecked element read; touches at most two words.
    #[inline]
    pub fn at(&self, i: usize) -> u64 {
        debug_assert!(i < self.len);
        read_bits(&self.words, i as u64 * self.width as u64, self.width)
    }

    pub fn get(&self, i: usize) -> Result<u64> {
        if i >= self.len {
            return Err(Error::IndexOutOfRange { index: i as u64, len: self.len as u64 });
        }
        Ok(self.at(i))
    }

    pub fn set(&mut self, i: usize, value: u64) -> Result<()> {
        if i >= self.len {
            return Err(Error::IndexOutOfRange { index: i as u64, len: self.len as u64 });
        }
        if value > mask(self.width) {
            return Err(Error::ValueTooWide { value, width: self.width });
        }
        write_bits(&mut self.words, i as u64 * self.width as u64, self.width, value);
        Ok(())
    }

    pub fn push(&mut self, value: u64) -> Result<()> {
        if value > mask(self.width) {
            return Err(Error::ValueTooWide { value, width: self.width });
        }
        self.push_raw(value, 1);
        Ok(())
    }

    /// Appends `count` elements whose packed bits are `bits`
    /// (`count · width <= 64`). The caller guarantees `bits` fits.
    #[inline]
    pub fn push_raw(&mut self, bits: u64, count: usize) {
        let nbits = (count as u64 * self.width as u64) as u32;
        if nbits == 0 {
            return;
        }
        let pos = self.bit_len();
        let need = words_for(pos + nbits as u64);
        if self.words.len() < need {
            self.words.resize(need, 0);
        }
        write_bits(&mut self.words, pos, nbits, bits);
        self.len += count;
    }

    /// Reads the packed bits of elements `[start, start + count)`,
    /// `count · width <= 64`.
    #[inline]
    pub fn raw_range(&self, start: usize, count: usize) -> u64 {
        read_bits(
            &self.words,
            start as u64 * self.width as u64,
            (count as u64 * self.width as u64) as u32,
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.at(i))
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }

    /// Appends `other` in place, charging `1 + ⌈bits/64⌉` word operations.
    pub fn extend_from(&mut self, meter: &mut CostMeter, other: &PackedList) -> Result<()> {
        if other.width != self.width {
            return Err(Error::WidthMismatch { left: self.width, right: other.width });
        }
        let nbits = other.bit_len();
        meter.charge(1 + words_for(nbits) as u64);
        if nbits == 0 {
            return Ok(());
        }
        let start = self.bit_len();
        self.words.resize(words_for(start + nbits), 0);
        let mut done = 0u64;
        while done < nbits {
            let take = (nbits - done).min(WORD_BITS) as u32;
            let v = read_bits(&other.words, done, take);
            write_bits(&mut self.words, start + done, take, v);
            done += take as u64;
        }
        self.len += other.len;
        Ok(())
    }

    pub fn append(&self, other: &PackedList) -> Result<PackedList> {
        let mut out = self.clone();
        out.extend_from(&mut CostMeter::new(), other)?;
        Ok(out)
    }

    /// Splits into chunks of `k` elements (the last may be shorter).
    pub fn split(&self, k: usize) -> Result<Vec<PackedList>> {
        if k == 0 {
            return Err(Error::param("split chunk size must be at least 1"));
        }
        let mut out = Vec::with_capacity(self.len.div_ceil(k));
        let mut start = 0;
        while start < self.len {
            let count = k.min(self.len - start);
            let mut words = vec![0u64; words_for(count as u64 * self.width as u64)];
            let nbits = count as u64 * self.width as u64;
            let base = start as u64 * self.width as u64;
            let mut done = 0;
            while done < nbits {
                let take = (nbits - done).min(WORD_BITS) as u32;
                write_bits(&mut words, done, take, read_bits(&self.words, base + done, take));
                done += take as u64;
            }
            out.push(PackedList { words, len: count, width: self.width });
            start += count;
        }
        Ok(out)
    }

    pub fn size_in_bytes(&self) -> u64 {
        8 * self.words.len() as u64 + 16
    }
}

impl Default for PackedList {
    /// An empty list of 1-bit elements.
    fn default() -> Self {
        PackedList { words: Vec::new(), len: 0, width: 1 }
    }
}

fn check_width(width: u32) -> Result<()> {
    if !(1..=64).contains(&width) {
        return Err(Error::param(format!("element width {width} outside 1..=64")));
    }
    Ok(())
}

/// Packs `values` at `width` bits each.
pub fn pack(values: &[u64], width: u32) -> Result<PackedList> {
    check_width(width)?;
    if let Some(&bad) = values.iter().find(|&&v| v > mask(width)) {
        return Err(Error::ValueTooWide { value: bad, width });
    }
    let mut out = PackedList::zeros(values.len(), width)?;
    for (i, &v) in values.iter().enumerate() {
        write_bits(&mut out.words, i as u64 * width as u64, width, v);
    }
    Ok(out)
}

/// Packs `value(i)` for `i in 0..len` at `width` bits, filling output words
/// in parallel. Each word gathers the (at most `64/width + 2`) elements that
/// overlap it. Values must already fit the width.
pub fn pack_with<F>(meter: &mut CostMeter, len: usize, width: u32, value: F) -> Result<PackedList>
where
    F: Fn(usize) -> u64 + Sync,
{
    check_width(width)?;
    let total = len as u64 * width as u64;
    let mut words = vec![0u64; words_for(total)];
    let w = width as u64;
    parallel_fill(meter, &mut words, CONCAT_GRAIN, |m, w0, slice| {
        let mut ops = 0u64;
        for (k, slot) in slice.iter_mut().enumerate() {
            let lo = (w0 + k) as u64 * WORD_BITS;
            let hi = (lo + WORD_BITS).min(total);
            let mut word = 0u64;
            let mut i = lo / w;
            while i * w < hi {
                let v = value(i as usize);
                debug_assert!(v <= mask(width));
                let start = i * w;
                if start >= lo {
                    word |= v << (start - lo);
                } else {
                    word |= v >> (lo - start);
                }
                i += 1;
                ops += 1;
            }
            *slot = word & mask((hi - lo) as u32);
            ops += 1;
        }
        m.charge(ops);
    });
    Ok(PackedList { words, len, width })
}

/// Output words assembled per sequential leaf in [`concat_bits`].
const CONCAT_GRAIN: usize = 256;

/// A borrowed bit string: `(words, length in bits)`.
pub type BitSlice<'a> = (&'a [u64], u64);

/// Concatenates bit strings in order.
///
/// A prefix sum over the lengths gives each part its output offset; every
/// output word is then assembled independently. A word covered by a single
/// part is a shifted copy; a boundary word shared by several parts folds its
/// fragments in part order.
pub fn concat_bits(meter: &mut CostMeter, parts: &[BitSlice<'_>]) -> (Vec<u64>, u64) {
    let lens: Vec<u64> = parts.iter().map(|p| p.1).collect();
    let (offsets, total) = prefix_sum(meter, &lens, |a, b| a + b, 0);
    let mut out = vec![0u64; words_for(total)];
    if total == 0 {
        return (out, 0);
    }
    parallel_fill(meter, &mut out, CONCAT_GRAIN, |m, w0, slice| {
        let first_bit = w0 as u64 * WORD_BITS;
        // first part whose end is past the leaf start
        let mut p = offsets.partition_point(|&o| o <= first_bit).saturating_sub(1);
        let mut ops = 0u64;
        for (k, slot) in slice.iter_mut().enumerate() {
            let wstart = (w0 + k) as u64 * WORD_BITS;
            let wend = (wstart + WORD_BITS).min(total);
            let mut bit = wstart;
            let mut word = 0u64;
            while bit < wend {
                while offsets[p] + lens[p] <= bit {
                    p += 1;
                }
                let take = (wend.min(offsets[p] + lens[p]) - bit) as u32;
                let frag = read_bits(parts[p].0, bit - offsets[p], take);
                word |= frag << (bit - wstart);
                bit += take as u64;
                ops += 1;
            }
            *slot = word;
            ops += 1;
        }
        m.charge(ops);
    });
    (out, total)
}

/// Concatenates packed lists of equal width.
pub fn concat_lists(meter: &mut CostMeter, width: u32, lists: &[&PackedList]) -> Result<PackedList> {
    if let Some(bad) = lists.iter().find(|l| l.width != width) {
        return Err(Error::WidthMismatch { left: width, right: bad.width });
    }
    let parts: Vec<BitSlice<'_>> = lists.iter().map(|l| (l.words(), l.bit_len())).collect();
    let (words, _) = concat_bits(meter, &parts);
    let len = lists.iter().map(|l| l.len).sum();
    PackedList::from_raw(words, len, width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pack_empty() {
        let l = pack(&[], 4).unwrap();
        assert_eq!(l.len(), 0);
        assert!(l.words().is_empty());
    }

    #[test]
    fn pack_three_values_in_one_word() {
        let l = pack(&[5, 0, 7], 3).unwrap();
        assert_eq!(l.words(), &[0b111_000_101]);
        assert_eq!(l.get(2).unwrap(), 7);
        assert!(l.get(3).is_err());
    }

    #[test]
    fn pack_rejects_wide_values() {
        assert_eq!(pack(&[8], 3).unwrap_err(), Error::ValueTooWide { value: 8, width: 3 });
    }

    #[test]
    fn fig1_sequence_packs() {
        let l = pack(&[2, 0, 5, 6, 0, 4, 7, 1, 7, 5, 3], 3).unwrap();
        assert_eq!(l.len(), 11);
        assert_eq!(l.width(), 3);
        assert_eq!(l.words().len(), 1);
    }

    #[test]
    fn full_width_list_reads_like_array() {
        let vals = [u64::MAX, 0, 12345];
        assert_eq!(pack(&vals, 64).unwrap().to_vec(), vals);
    }

    #[test]
    fn set_get_round_trip_on_random_lists() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let width = rng.gen_range(1..=64u32);
            let n = rng.gen_range(1..200usize);
            let mut model: Vec<u64> = (0..n).map(|_| rng.gen::<u64>() & mask(width)).collect();
            let mut l = pack(&model, width).unwrap();
            for _ in 0..20 {
                let i = rng.gen_range(0..n);
                let v = rng.gen::<u64>() & mask(width);
                l.set(i, v).unwrap();
                model[i] = v;
            }
            assert_eq!(l.to_vec(), model);
        }
    }

    #[test]
    fn parallel_pack_matches_serial_pack() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for width in [1u32, 3, 7, 9, 13, 31, 63, 64] {
            let vals: Vec<u64> = (0..5000).map(|_| rng.gen::<u64>() & mask(width)).collect();
            let got = pack_with(&mut CostMeter::new(), vals.len(), width, |i| vals[i]).unwrap();
            assert_eq!(got, pack(&vals, width).unwrap());
        }
    }

    #[test]
    fn append_cases() {
        let x = pack(&[1, 2, 3], 2).unwrap();
        assert_eq!(x.append(&PackedList::new(2).unwrap()).unwrap(), x);
        let y = pack(&[1], 2).unwrap().append(&pack(&[2, 3], 2).unwrap()).unwrap();
        assert_eq!(y, pack(&[1, 2, 3], 2).unwrap());
        assert!(x.append(&pack(&[1], 3).unwrap()).is_err());
        // 11 elements of width 6 end at bit 66; appending crosses a word edge
        let a: Vec<u64> = (0..11).collect();
        let b: Vec<u64> = (20..40).collect();
        let ab = pack(&a, 6).unwrap().append(&pack(&b, 6).unwrap()).unwrap();
        assert_eq!(ab.to_vec(), [a, b].concat());
    }

    #[test]
    fn split_sizes() {
        assert!(PackedList::new(4).unwrap().split(4).unwrap().is_empty());
        let l = pack(&(1..=10).collect::<Vec<_>>(), 4).unwrap();
        let parts = l.split(3).unwrap();
        let sizes: Vec<_> = parts.iter().map(|p| p.len()).collect();
        assert_eq!(sizes, vec![3, 3, 3, 1]);
        assert_eq!(parts[3].to_vec(), vec![10]);
    }

    fn arb_list() -> impl Strategy<Value = PackedList> {
        (1u32..=64).prop_flat_map(|w| {
            prop::collection::vec(any::<u64>().prop_map(move |v| v & mask(w)), 0..300)
                .prop_map(move |vals| pack(&vals, w).unwrap())
        })
    }

    proptest! {
        #[test]
        fn split_then_append_is_identity(
            list in arb_list(),
            k in prop::sample::select(vec![1usize, 2, 3, 5, 8, 16]),
        ) {
            let mut acc = PackedList::new(list.width()).unwrap();
            for part in list.split(k).unwrap() {
                prop_assert!(part.len() <= k);
                acc = acc.append(&part).unwrap();
            }
            prop_assert_eq!(acc, list);
        }

        #[test]
        fn concat_matches_sequential_append(
            lists in prop::collection::vec(
                prop::collection::vec(0u64..32, 0..150).prop_map(|v| pack(&v, 5).unwrap()),
                0..40,
            ),
        ) {
            let refs: Vec<&PackedList> = lists.iter().collect();
            let got = concat_lists(&mut CostMeter::new(), 5, &refs).unwrap();
            let mut expect = PackedList::new(5).unwrap();
            for l in &lists {
                expect = expect.append(l).unwrap();
            }
            prop_assert_eq!(got, expect);
        }
    }
}
