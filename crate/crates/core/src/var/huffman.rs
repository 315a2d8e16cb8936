use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::io::{corrupt, Reader, Writer};

/// Longest codeword a tree can route: node numbering needs `level < 64`.
pub const MAX_CODE_LEN: u32 = 64;

/// `len` bits, first bit most significant, right aligned in `bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Codeword {
    pub bits: u64,
    pub len: u32,
}

impl Codeword {
    pub fn bit(&self, level: u32) -> bool {
        (self.bits >> (self.len - 1 - level)) & 1 == 1
    }

    /// The first `level` bits.
    pub fn prefix(&self, level: u32) -> u64 {
        if level == 0 {
            0
        } else {
            self.bits >> (self.len - level)
        }
    }
}

/// Canonical prefix-free code over dense symbols `0..sigma`. Symbols may
/// lack a codeword.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codebook {
    words: Vec<Option<Codeword>>,
    height: u32,
}

impl Codebook {
    /// Canonical codes for the given lengths, assigned in `(len, symbol)`
    /// order.
    pub fn from_lengths(lens: &[Option<u32>]) -> Result<Self> {
        let mut order: Vec<(u32, usize)> =
            lens.iter().enumerate().filter_map(|(s, l)| l.map(|l| (l, s))).collect();
        order.sort_unstable();
        let mut words = vec![None; lens.len()];
        if order.is_empty() {
            return Ok(Codebook { words, height: 0 });
        }
        if order.iter().any(|&(l, _)| l > MAX_CODE_LEN) {
            return Err(Error::param(format!("codeword longer than {MAX_CODE_LEN} bits")));
        }
        if order.len() > 1 && order[0].0 == 0 {
            return Err(Error::param("empty codeword next to other codewords"));
        }
        let mut code: u128 = 0;
        let mut prev = order[0].0;
        for (k, &(len, sym)) in order.iter().enumerate() {
            if k > 0 {
                code = (code + 1) << (len - prev);
            }
            if code >> len != 0 {
                return Err(Error::param("code lengths violate the Kraft inequality"));
            }
            words[sym] = Some(Codeword { bits: code as u64, len });
            prev = len;
        }
        Ok(Codebook { words, height: order.last().unwrap().0 })
    }

    /// Every symbol gets the `⌈log2 σ⌉`-bit binary code of itself.
    pub fn balanced(sigma: u64) -> Self {
        let d = crate::bits::ceil_log2(sigma);
        Self::from_lengths(&vec![Some(d); sigma as usize]).expect("complete code")
    }

    pub fn sigma(&self) -> u64 {
        self.words.len() as u64
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, sym: u64) -> Option<Codeword> {
        self.words.get(sym as usize).copied().flatten()
    }

    pub fn lengths(&self) -> Vec<Option<u32>> {
        self.words.iter().map(|w| w.map(|c| c.len)).collect()
    }

    /// Σ freq · len over symbols with a codeword.
    pub fn cost(&self, freqs: &[u64]) -> u128 {
        freqs
            .iter()
            .zip(&self.words)
            .map(|(&f, w)| w.map_or(0, |c| f as u128 * c.len as u128))
            .sum()
    }

    pub fn write(&self, w: &mut Writer) {
        w.u64(self.words.len() as u64);
        for cw in &self.words {
            match cw {
                Some(c) => {
                    w.u8(1);
                    w.u8(c.len as u8);
                    w.u64(c.bits);
                }
                None => w.u8(0),
            }
        }
    }

    /// Reads a codebook and checks that it is the canonical code for its
    /// lengths.
    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let n = r.usize()?;
        if n > r.remaining() {
            return Err(corrupt("codebook longer than its section"));
        }
        let mut words = Vec::with_capacity(n);
        for _ in 0..n {
            words.push(match r.u8()? {
                0 => None,
                1 => {
                    let len = r.u8()? as u32;
                    Some(Codeword { bits: r.u64()?, len })
                }
                _ => return Err(corrupt("bad codeword tag")),
            });
        }
        let lens: Vec<Option<u32>> = words.iter().map(|w| w.map(|c| c.len)).collect();
        let canonical = Self::from_lengths(&lens).map_err(|e| corrupt(e.to_string()))?;
        if canonical.words != words {
            return Err(corrupt("codebook is not canonical"));
        }
        Ok(canonical)
    }
}

/// Huffman code for the symbols with nonzero frequency. Ties merge the pair
/// with the smallest `(frequency, smallest symbol)`; a lone symbol gets the
/// empty codeword.
pub fn huffman_codebook(freqs: &[u64]) -> Result<Codebook> {
    let mut heap = BinaryHeap::new();
    // parent of every tree node; leaves come first
    let mut parent: Vec<usize> = Vec::new();
    let mut leaf_of = vec![None; freqs.len()];
    for (s, &f) in freqs.iter().enumerate() {
        if f > 0 {
            leaf_of[s] = Some(parent.len());
            heap.push(Reverse((f as u128, s, parent.len())));
            parent.push(usize::MAX);
        }
    }
    if heap.is_empty() {
        return Err(Error::param("all frequencies are zero"));
    }
    while heap.len() > 1 {
        let Reverse((fa, sa, a)) = heap.pop().unwrap();
        let Reverse((fb, sb, b)) = heap.pop().unwrap();
        let id = parent.len();
        parent.push(usize::MAX);
        parent[a] = id;
        parent[b] = id;
        heap.push(Reverse((fa + fb, sa.min(sb), id)));
    }
    // depth of each node, parents always have larger ids
    let mut depth = vec![0u32; parent.len()];
    for v in (0..parent.len()).rev() {
        if parent[v] != usize::MAX {
            depth[v] = depth[parent[v]] + 1;
        }
    }
    let lens: Vec<Option<u32>> = leaf_of.iter().map(|l| l.map(|v| depth[v])).collect();
    Codebook::from_lengths(&lens)
}
