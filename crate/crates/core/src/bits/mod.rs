//! Packed bit vectors, packed integer lists and shared lookup tables.

mod bitvec;
mod packed;
pub mod tables;
mod words;

pub use bitvec::PackedBitVector;
pub use packed::{concat_bits, concat_lists, pack, pack_with, BitSlice, PackedList};
pub use words::{
    bits_for, ceil_log2, clear_tail, mask, read_bits, select_in_word, words_for, write_bits,
    KAPPA, WORD_BITS,
};
