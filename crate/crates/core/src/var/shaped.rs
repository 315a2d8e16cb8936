use std::collections::HashMap;

use super::huffman::{huffman_codebook, Codebook};
use crate::bits::{PackedBitVector, PackedList};
use crate::error::{Error, Result};
use crate::io::{corrupt, Reader, Writer};
use crate::par::CostMeter;
use crate::wt::engine::{heap_id, CodeMap, Shape};
use crate::wt::{
    default_tau, map_alphabet, run_engine, unpack_codes, Alphabet, BinaryNodes, BuildParams, NodeKind,
};

/// Codeword routing tables derived from a codebook.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Routing {
    /// Left-aligned codes and lengths per symbol.
    codes: Vec<u64>,
    lens: Vec<u8>,
    /// Sorted `(len, codeword)` of every leaf, with its symbol.
    leaves: Vec<(u32, u64)>,
    leaf_sym: Vec<u64>,
    /// Smallest and largest symbol below each internal position.
    spans: HashMap<u64, (u64, u64)>,
}

impl Routing {
    fn new(book: &Codebook) -> Self {
        let h = book.height();
        let sigma = book.sigma() as usize;
        let mut codes = vec![0; sigma];
        let mut lens = vec![0; sigma];
        let mut leaves = Vec::new();
        let mut spans: HashMap<u64, (u64, u64)> = HashMap::new();
        for s in 0..sigma as u64 {
            let Some(cw) = book.get(s) else { continue };
            codes[s as usize] = if cw.len == 0 { 0 } else { cw.bits << (h - cw.len) };
            lens[s as usize] = cw.len as u8;
            leaves.push(((cw.len, cw.bits), s));
            for level in 0..cw.len {
                let e = spans.entry(heap_id(level, cw.prefix(level))).or_insert((s, s));
                e.0 = e.0.min(s);
                e.1 = e.1.max(s);
            }
        }
        leaves.sort_unstable();
        Routing {
            codes,
            lens,
            leaf_sym: leaves.iter().map(|x| x.1).collect(),
            leaves: leaves.into_iter().map(|x| x.0).collect(),
            spans,
        }
    }

    fn shape(&self, height: u32) -> Shape<'_> {
        Shape {
            height,
            map: CodeMap::Table { codes: &self.codes, lens: &self.lens, leaves: &self.leaves },
            digit_bits: None,
        }
    }

    fn leaf(&self, level: u32, prefix: u64) -> Option<u64> {
        self.leaves.binary_search(&(level, prefix)).ok().map(|k| self.leaf_sym[k])
    }

    fn kind(&self, level: u32, prefix: u64) -> NodeKind {
        if self.leaf(level, prefix).is_some() {
            NodeKind::Leaf
        } else if level < 64 && self.spans.contains_key(&heap_id(level, prefix)) {
            NodeKind::Internal
        } else {
            NodeKind::Invalid
        }
    }
}

/// Node bitmaps of the tree shaped by `book`, and the τ used.
pub fn shaped_bitmaps(
    meter: &mut CostMeter,
    codes: &PackedList,
    book: &Codebook,
    params: &BuildParams,
) -> Result<(Vec<(u64, PackedBitVector)>, u32)> {
    let syms = unpack_codes(meter, codes, book.sigma())?;
    if let Some(&s) = syms.iter().find(|&&s| book.get(s).is_none()) {
        return Err(Error::param(format!("symbol {s} has no codeword")));
    }
    let routing = Routing::new(book);
    let shape = routing.shape(book.height());
    let n = syms.len() as u64;
    let (out, tau) = run_engine(meter, syms, &shape, params, default_tau(n, book.height()))?;
    Ok((out.nodes, if book.height() == 0 { 0 } else { tau }))
}

/// A binary wavelet tree whose shape follows a prefix code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapedTree {
    n: u64,
    tau: u32,
    alphabet: Alphabet,
    book: Codebook,
    nodes: BinaryNodes,
    routing: Routing,
}

impl ShapedTree {
    /// Huffman-shaped tree over the symbol frequencies of `raw`.
    pub fn build(meter: &mut CostMeter, raw: &[u64], params: &BuildParams) -> Result<Self> {
        let (codes, alphabet) = map_alphabet(meter, raw);
        let mut freqs = vec![0u64; alphabet.sigma() as usize];
        for c in codes.iter() {
            freqs[c as usize] += 1;
        }
        meter.charge(codes.len() as u64);
        if raw.is_empty() {
            let book = Codebook::from_lengths(&[])?;
            return Self::with_book(meter, &codes, book, alphabet, params);
        }
        let book = huffman_codebook(&freqs)?;
        Self::with_book(meter, &codes, book, alphabet, params)
    }

    pub fn with_book(
        meter: &mut CostMeter,
        codes: &PackedList,
        book: Codebook,
        alphabet: Alphabet,
        params: &BuildParams,
    ) -> Result<Self> {
        if alphabet.sigma() != book.sigma() {
            return Err(Error::param("alphabet and codebook sizes differ"));
        }
        let (nodes, tau) = shaped_bitmaps(meter, codes, &book, params)?;
        let nodes = BinaryNodes::build(meter, nodes);
        let routing = Routing::new(&book);
        Ok(ShapedTree { n: codes.len() as u64, tau, alphabet, book, nodes, routing })
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sigma(&self) -> u64 {
        self.alphabet.sigma()
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn codebook(&self) -> &Codebook {
        &self.book
    }

    pub fn nodes(&self) -> &BinaryNodes {
        &self.nodes
    }

    pub fn size_in_bytes(&self) -> u64 {
        self.alphabet.size_in_bytes() + 9 * self.book.sigma() + self.nodes.size_in_bytes()
    }

    fn check_index(&self, i: u64) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, len: self.n });
        }
        Ok(())
    }

    pub fn access_code(&self, i: u64) -> Result<u64> {
        self.check_index(i)?;
        let (mut level, mut prefix, mut pos) = (0u32, 0u64, i);
        loop {
            if let Some(s) = self.routing.leaf(level, prefix) {
                return Ok(s);
            }
            let node = self.nodes.get(heap_id(level, prefix)).expect("routed node present");
            let b = node.bits().bit(pos);
            pos = node.rank_unchecked(b, pos) - 1;
            prefix = prefix << 1 | b as u64;
            level += 1;
        }
    }

    pub fn rank_code(&self, c: u64, i: u64) -> Result<u64> {
        self.check_index(i)?;
        let Some(cw) = self.book.get(c) else { return Ok(0) };
        let mut count = i + 1;
        for level in 0..cw.len {
            let node = self.nodes.get(heap_id(level, cw.prefix(level)));
            count = match node {
                Some(node) => node.rank_unchecked(cw.bit(level), count - 1),
                None => 0,
            };
            if count == 0 {
                break;
            }
        }
        Ok(count)
    }

    /// Occurrences of codes `<= c` in `[0, i]`, pruning subtrees whose
    /// symbols are all on one side of `c`.
    pub fn rank_le_code(&self, c: u64, i: u64) -> Result<u64> {
        self.check_index(i)?;
        let mut total = 0;
        let mut stack = vec![(0u32, 0u64, i + 1)];
        while let Some((level, prefix, count)) = stack.pop() {
            if count == 0 {
                continue;
            }
            if let Some(s) = self.routing.leaf(level, prefix) {
                total += if s <= c { count } else { 0 };
                continue;
            }
            let id = heap_id(level, prefix);
            let (lo, hi) = self.routing.spans[&id];
            if hi <= c {
                total += count;
                continue;
            }
            if lo > c {
                continue;
            }
            let node = self.nodes.get(id).expect("routed node present");
            let zeros = node.rank_unchecked(false, count - 1);
            stack.push((level + 1, prefix << 1, zeros));
            stack.push((level + 1, prefix << 1 | 1, count - zeros));
        }
        Ok(total)
    }

    pub fn count_code(&self, c: u64) -> u64 {
        if self.n == 0 {
            0
        } else {
            self.rank_code(c, self.n - 1).expect("valid")
        }
    }

    pub fn select_code(&self, c: u64, j: u64) -> Result<u64> {
        let available = self.count_code(c);
        if j == 0 || j > available {
            return Err(Error::OccurrenceOutOfRange { occurrence: j, available });
        }
        let cw = self.book.get(c).expect("counted symbol has a codeword");
        let mut j = j;
        for level in (0..cw.len).rev() {
            let node = self.nodes.get(heap_id(level, cw.prefix(level))).expect("routed node present");
            j = node.select_unchecked(cw.bit(level), j) + 1;
        }
        Ok(j - 1)
    }

    pub fn access(&self, i: u64) -> Result<u64> {
        Ok(self.alphabet.decode(self.access_code(i)?))
    }

    pub fn rank(&self, c: u64, i: u64) -> Result<u64> {
        self.check_index(i)?;
        self.alphabet.encode(c).map_or(Ok(0), |code| self.rank_code(code, i))
    }

    pub fn rank_le(&self, c: u64, i: u64) -> Result<u64> {
        self.check_index(i)?;
        match self.alphabet.count_le(c) {
            0 => Ok(0),
            k => self.rank_le_code(k - 1, i),
        }
    }

    pub fn select(&self, c: u64, j: u64) -> Result<u64> {
        match self.alphabet.encode(c) {
            Some(code) => self.select_code(code, j),
            None => Err(Error::OccurrenceOutOfRange { occurrence: j, available: 0 }),
        }
    }

    pub fn count(&self, c: u64) -> u64 {
        self.alphabet.encode(c).map_or(0, |code| self.count_code(code))
    }

    pub fn write(&self, w: &mut Writer) {
        w.u64(self.n);
        w.u8(self.tau as u8);
        w.section(|w| self.alphabet.write(w));
        w.section(|w| self.book.write(w));
        w.section(|w| self.nodes.write(w));
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let n = r.u64()?;
        let tau = r.u8()? as u32;
        let mut s = r.section()?;
        let alphabet = Alphabet::read(&mut s)?;
        s.finish()?;
        let mut s = r.section()?;
        let book = Codebook::read(&mut s)?;
        s.finish()?;
        let mut s = r.section()?;
        let nodes = BinaryNodes::read(&mut s)?;
        s.finish()?;
        if book.sigma() != alphabet.sigma() {
            return Err(corrupt("codebook and alphabet sizes differ"));
        }
        let routing = Routing::new(&book);
        if routing.leaves.is_empty() {
            if n > 0 || !nodes.is_empty() {
                return Err(corrupt("elements or nodes without any codeword"));
            }
        } else {
            nodes.check_routing(n, |level, prefix| routing.kind(level, prefix))?;
        }
        Ok(ShapedTree { n, tau, alphabet, book, nodes, routing })
    }
}

/// Builds the tree shaped by `book` over dense codes.
pub fn build_shaped(meter: &mut CostMeter, codes: &PackedList, book: &Codebook, tau: u32) -> Result<ShapedTree> {
    let alphabet = Alphabet::identity(book.sigma());
    ShapedTree::with_book(meter, codes, book.clone(), alphabet, &BuildParams::default().tau(tau))
}
