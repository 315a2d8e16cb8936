//! Word-level helpers. Bits are stored least significant first: bit `i` of a
//! stream lives in word `i / 64` at offset `i % 64`.

pub const WORD_BITS: u64 = 64;

/// Table key width used by every lookup table in the crate.
pub const KAPPA: u32 = 16;

#[inline]
pub fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        !0
    } else {
        (1u64 << bits) - 1
    }
}

#[inline]
pub fn words_for(bits: u64) -> usize {
    bits.div_ceil(WORD_BITS) as usize
}

/// Number of bits needed to store every value in `0..=max` (at least 1).
#[inline]
pub fn bits_for(max: u64) -> u32 {
    (64 - max.leading_zeros()).max(1)
}

/// `⌈log2 x⌉`, with `ceil_log2(0) = ceil_log2(1) = 0`.
#[inline]
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// Reads `len <= 64` bits starting at bit `pos`.
#[inline]
pub fn read_bits(words: &[u64], pos: u64, len: u32) -> u64 {
    if len == 0 {
        return 0;
    }
    let i = (pos / WORD_BITS) as usize;
    let o = (pos % WORD_BITS) as u32;
    let mut v = words[i] >> o;
    if o + len > 64 {
        v |= words[i + 1] << (64 - o);
    }
    v & mask(len)
}

/// Overwrites `len <= 64` bits starting at bit `pos` with `val`.
#[inline]
pub fn write_bits(words: &mut [u64], pos: u64, len: u32, val: u64) {
    if len == 0 {
        return;
    }
    let val = val & mask(len);
    let i = (pos / WORD_BITS) as usize;
    let o = (pos % WORD_BITS) as u32;
    words[i] = (words[i] & !(mask(len) << o)) | (val << o);
    if o + len > 64 {
        let spill = o + len - 64;
        words[i + 1] = (words[i + 1] & !mask(spill)) | (val >> (64 - o));
    }
}

/// Zeroes every bit at or beyond `len_bits`.
#[inline]
pub fn clear_tail(words: &mut [u64], len_bits: u64) {
    let rem = (len_bits % WORD_BITS) as u32;
    if rem != 0 {
        if let Some(last) = words.last_mut() {
            *last &= mask(rem);
        }
    }
}

/// Position of the `j`'th (1-based) set bit of `word`, if any.
pub fn select_in_word(mut word: u64, j: u32) -> Option<u32> {
    if j == 0 || word.count_ones() < j {
        return None;
    }
    for _ in 1..j {
        word &= word - 1;
    }
    Some(word.trailing_zeros())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn read_write_across_words() {
        let mut w = vec![0u64; 3];
        write_bits(&mut w, 60, 10, 0b1011001101);
        assert_eq!(read_bits(&w, 60, 10), 0b1011001101);
        assert_eq!(w[0] >> 60, 0b1101);
        assert_eq!(w[1], 0b101100);
        write_bits(&mut w, 62, 3, 0);
        assert_eq!(read_bits(&w, 60, 10), 0b1011000001);
    }

    #[test]
    fn log_helpers() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(bits_for(0), 1);
        assert_eq!(bits_for(256), 9);
        assert_eq!(bits_for(255), 8);
    }

    #[test]
    fn select_in_word_lsb_first() {
        assert_eq!(select_in_word(0b1011_0000, 2), Some(5));
        assert_eq!(select_in_word(0b1011_0000, 4), None);
    }
}
