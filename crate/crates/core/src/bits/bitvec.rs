use super::words::{clear_tail, read_bits, words_for, WORD_BITS};
use crate::error::{Error, Result};

/// `len` bits packed into `⌈len/64⌉` words, least significant bit first.
/// Bits past `len` in the last word are always zero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PackedBitVector {
    words: Vec<u64>,
    len: u64,
}

impl PackedBitVector {
    pub fn zeros(len: u64) -> Self {
        PackedBitVector { words: vec![0; words_for(len)], len }
    }

    pub fn from_words(mut words: Vec<u64>, len: u64) -> Result<Self> {
        if words.len() != words_for(len) {
            return Err(Error::param(format!(
                "{} words cannot hold exactly {len} bits",
                words.len()
            )));
        }
        clear_tail(&mut words, len);
        Ok(PackedBitVector { words, len })
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len() as u64);
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.words[i / 64] |= 1 << (i % 64);
            }
        }
        v
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn into_words(self) -> Vec<u64> {
        self.words
    }

    #[inline]
    pub fn bit(&self, i: u64) -> bool {
        debug_assert!(i < self.len);
        (self.words[(i / WORD_BITS) as usize] >> (i % WORD_BITS)) & 1 == 1
    }

    pub fn get(&self, i: u64) -> Result<bool> {
        if i >= self.len {
            return Err(Error::IndexOutOfRange { index: i, len: self.len });
        }
        Ok(self.bit(i))
    }

    pub fn set(&mut self, i: u64, value: bool) -> Result<()> {
        if i >= self.len {
            return Err(Error::IndexOutOfRange { index: i, len: self.len });
        }
        let w = &mut self.words[(i / WORD_BITS) as usize];
        let m = 1u64 << (i % WORD_BITS);
        if value {
            *w |= m
        } else {
            *w &= !m
        }
        Ok(())
    }

    /// Reads up to 64 bits starting at `pos`; bits past the end read as zero.
    pub fn get_bits(&self, pos: u64, len: u32) -> u64 {
        let len = len.min(self.len.saturating_sub(pos) as u32);
        read_bits(&self.words, pos, len)
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bit(i))
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.iter().collect()
    }

    /// Renders the bits in sequence order, e.g. `"00110110110"`.
    pub fn to_bit_string(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    pub fn size_in_bytes(&self) -> u64 {
        8 * self.words.len() as u64 + 8
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_bits_are_cleared() {
        let v = PackedBitVector::from_words(vec![!0], 5).unwrap();
        assert_eq!(v.words(), &[0b11111]);
        assert_eq!(v.count_ones(), 5);
    }

    #[test]
    fn word_count_must_match() {
        assert!(PackedBitVector::from_words(vec![0, 0], 64).is_err());
        assert!(PackedBitVector::from_words(vec![], 0).is_ok());
    }

    #[test]
    fn set_get_and_bounds() {
        let mut v = PackedBitVector::zeros(70);
        v.set(65, true).unwrap();
        assert!(v.get(65).unwrap());
        assert!(!v.get(64).unwrap());
        assert!(v.get(70).is_err());
        assert_eq!(v.get_bits(60, 10), 0b100000);
    }

    #[test]
    fn bit_string_round_trip() {
        let s = "00110110110";
        let bits: Vec<bool> = s.chars().map(|c| c == '1').collect();
        assert_eq!(PackedBitVector::from_bools(&bits).to_bit_string(), s);
    }
}
