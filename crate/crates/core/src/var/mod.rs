//! Wavelet structure variants: trees shaped by a prefix code, multiary
//! trees and the wavelet matrix.

mod huffman;
mod matrix;
mod multiary;
mod shaped;

pub use huffman::{huffman_codebook, Codebook, Codeword, MAX_CODE_LEN};
pub use matrix::{build_wavelet_matrix, matrix_levels, MatrixLevels, WaveletMatrix};
pub use multiary::{build_multiary, multiary_digits, MultiaryTree, MAX_DEGREE};
pub use shaped::{build_shaped, shaped_bitmaps, ShapedTree};
