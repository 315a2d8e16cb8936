//! Balanced binary wavelet trees.
//!
//! Node `(level, prefix)` covers the codes whose top `level` bits equal
//! `prefix`; its bitmap holds the next code bit of every element routed
//! there. Nodes are numbered in heap order and empty nodes are absent.

pub mod engine;

use crate::bits::{ceil_log2, pack_with, PackedBitVector, PackedList, KAPPA};
use crate::error::{Error, Result};
use crate::io::{corrupt, Reader, Writer};
use crate::par::{parallel_map, CostMeter};
use crate::rsb::BinaryRS;

pub use engine::{heap_id, heap_pos, part_sizes, CodeMap, EngineOut, Shape, Tables};

/// Sorted distinct raw symbols; the dense code of a symbol is its rank.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<u64>,
}

impl Alphabet {
    /// Raw symbols `0..sigma` mapped to themselves.
    pub fn identity(sigma: u64) -> Self {
        Alphabet { symbols: (0..sigma).collect() }
    }

    pub fn from_symbols(mut symbols: Vec<u64>) -> Self {
        symbols.sort_unstable();
        symbols.dedup();
        Alphabet { symbols }
    }

    pub fn sigma(&self) -> u64 {
        self.symbols.len() as u64
    }

    pub fn symbols(&self) -> &[u64] {
        &self.symbols
    }

    pub fn encode(&self, raw: u64) -> Option<u64> {
        self.symbols.binary_search(&raw).ok().map(|c| c as u64)
    }

    pub fn decode(&self, code: u64) -> u64 {
        self.symbols[code as usize]
    }

    /// Number of alphabet symbols `<= raw`.
    pub fn count_le(&self, raw: u64) -> u64 {
        self.symbols.partition_point(|&s| s <= raw) as u64
    }

    pub fn write(&self, w: &mut Writer) {
        w.u64(self.symbols.len() as u64);
        for &s in &self.symbols {
            w.u64(s);
        }
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let n = r.usize()?;
        if n > r.remaining() / 8 {
            return Err(corrupt("alphabet longer than its section"));
        }
        let symbols = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        if symbols.windows(2).any(|w| w[0] >= w[1]) {
            return Err(corrupt("alphabet is not strictly increasing"));
        }
        Ok(Alphabet { symbols })
    }

    pub fn size_in_bytes(&self) -> u64 {
        8 * self.symbols.len() as u64
    }
}

/// Maps raw symbols to dense codes in sorted order.
pub fn map_alphabet(meter: &mut CostMeter, raw: &[u64]) -> (PackedList, Alphabet) {
    let alphabet = Alphabet::from_symbols(raw.to_vec());
    // serial comparison sort
    meter.charge(raw.len() as u64 * ceil_log2(raw.len().max(2) as u64) as u64);
    let width = code_width(alphabet.sigma());
    let a = &alphabet;
    let codes = pack_with(meter, raw.len(), width, |i| a.encode(raw[i]).expect("symbol present"))
        .expect("width");
    (codes, alphabet)
}

/// Levels of the balanced tree over `sigma` codes.
pub fn depth_for(sigma: u64) -> u32 {
    ceil_log2(sigma)
}

/// Field width of dense codes (at least one bit).
pub fn code_width(sigma: u64) -> u32 {
    depth_for(sigma).max(1)
}

/// `⌊√L⌋` clamped to the tree height and the table key width.
pub fn default_tau(n: u64, height: u32) -> u32 {
    let l = ceil_log2(n.max(2)) as f64;
    (l.sqrt().floor() as u32).clamp(1, height.clamp(1, KAPPA))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Level by level, every element touched at every level.
    Naive,
    /// Packed short lists between big nodes, serial.
    Packed,
    /// Integer sort at big-node levels, parallel short-list steps.
    Sorted,
    /// Independent builds of `P` parts merged per node.
    Domain,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::Packed => "packed",
            Algorithm::Sorted => "sorted",
            Algorithm::Domain => "domain",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Algorithm::Naive),
            "packed" => Ok(Algorithm::Packed),
            "sorted" => Ok(Algorithm::Sorted),
            "domain" => Ok(Algorithm::Domain),
            _ => Err(Error::param(format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildParams {
    pub algorithm: Algorithm,
    /// Band width; `None` picks [`default_tau`].
    pub tau: Option<u32>,
    /// Part count for [`Algorithm::Domain`].
    pub parts: usize,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams { algorithm: Algorithm::Packed, tau: None, parts: 1 }
    }
}

impl BuildParams {
    pub fn new(algorithm: Algorithm) -> Self {
        BuildParams { algorithm, ..Default::default() }
    }

    pub fn tau(mut self, tau: u32) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn parts(mut self, parts: usize) -> Self {
        self.parts = parts;
        self
    }
}

/// Runs the selected builder over a code tree shape. Returns the τ used.
pub(crate) fn run_engine(
    meter: &mut CostMeter,
    syms: Vec<u64>,
    shape: &Shape<'_>,
    params: &BuildParams,
    default: u32,
) -> Result<(EngineOut, u32)> {
    if params.parts == 0 {
        return Err(Error::param("parts must be at least 1"));
    }
    let tau = params.tau.unwrap_or(default);
    if params.algorithm == Algorithm::Naive {
        if shape.height > 0 && params.tau.is_some() {
            engine::check_tau(shape, tau)?;
        }
        return Ok((engine::naive(meter, syms, shape), tau));
    }
    engine::check_tau(shape, tau)?;
    let tables = Tables::acquire(meter, shape, tau)?;
    let out = match params.algorithm {
        Algorithm::Packed => engine::packed_serial(meter, syms, shape, tau, &tables),
        Algorithm::Sorted => engine::parallel_sorted(meter, syms, shape, tau, &tables)?,
        Algorithm::Domain => engine::domain_decomp(meter, syms, shape, tau, params.parts, &tables),
        Algorithm::Naive => unreachable!(),
    };
    Ok((out, tau))
}

/// Unpacks codes after checking that each is below `sigma`.
pub(crate) fn unpack_codes(meter: &mut CostMeter, codes: &PackedList, sigma: u64) -> Result<Vec<u64>> {
    let syms = parallel_map(meter, codes.len(), 4096, |m, i| {
        // read and range check
        m.charge(2);
        codes.at(i)
    });
    if let Some(&bad) = syms.iter().find(|&&c| c >= sigma) {
        return Err(Error::SymbolOutOfRange { symbol: bad, sigma });
    }
    Ok(syms)
}

/// Node bitmaps of a balanced tree before rank/select structures are added.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeBitmaps {
    pub n: u64,
    pub sigma: u64,
    pub depth: u32,
    pub tau: u32,
    pub nodes: Vec<(u64, PackedBitVector)>,
}

/// Builds the node bitmaps of the balanced tree over `codes`.
pub fn tree_bitmaps(
    meter: &mut CostMeter,
    codes: &PackedList,
    sigma: u64,
    params: &BuildParams,
) -> Result<TreeBitmaps> {
    let syms = unpack_codes(meter, codes, sigma)?;
    let n = syms.len() as u64;
    let depth = depth_for(sigma);
    let shape = Shape { height: depth, map: CodeMap::Shift { shift: 0 }, digit_bits: None };
    let (out, tau) = run_engine(meter, syms, &shape, params, default_tau(n, depth))?;
    Ok(TreeBitmaps { n, sigma, depth, tau: if depth == 0 { 0 } else { tau }, nodes: out.nodes })
}

/// Present nodes of a binary code tree, each with rank/select.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BinaryNodes {
    ids: Vec<u64>,
    nodes: Vec<BinaryRS>,
}

impl BinaryNodes {
    pub fn build(meter: &mut CostMeter, nodes: Vec<(u64, PackedBitVector)>) -> Self {
        let built = parallel_map(meter, nodes.len(), 1, |m, j| Some(BinaryRS::build(m, nodes[j].1.clone())));
        BinaryNodes {
            ids: nodes.iter().map(|x| x.0).collect(),
            nodes: built.into_iter().map(|x| x.expect("built")).collect(),
        }
    }

    pub fn get(&self, id: u64) -> Option<&BinaryRS> {
        self.ids.binary_search(&id).ok().map(|k| &self.nodes[k])
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &BinaryRS)> + '_ {
        self.ids.iter().copied().zip(&self.nodes)
    }

    pub fn bitmap_bits(&self) -> u64 {
        self.nodes.iter().map(|n| n.len()).sum()
    }

    pub fn size_in_bytes(&self) -> u64 {
        8 * self.ids.len() as u64 + self.nodes.iter().map(|n| n.size_in_bytes()).sum::<u64>()
    }

    pub fn write(&self, w: &mut Writer) {
        w.u64(self.ids.len() as u64);
        for &id in &self.ids {
            w.u64(id);
        }
        for n in &self.nodes {
            w.section(|w| n.write(w));
        }
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let count = r.usize()?;
        if count > r.remaining() / 8 {
            return Err(corrupt("node count larger than its section"));
        }
        let ids = (0..count).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(corrupt("node ids not strictly increasing"));
        }
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            let mut s = r.section()?;
            nodes.push(BinaryRS::read(&mut s)?);
            s.finish()?;
        }
        Ok(BinaryNodes { ids, nodes })
    }

    /// Checks that node lengths agree with their parents' bit counts and
    /// that every routed element reaches a leaf.
    pub(crate) fn check_routing(&self, n: u64, kind: impl Fn(u32, u64) -> NodeKind) -> Result<()> {
        if kind(0, 0) != NodeKind::Internal {
            if !self.is_empty() {
                return Err(corrupt("nodes present in a tree without levels"));
            }
            return Ok(());
        }
        match self.get(0) {
            Some(root) if root.len() == n => {}
            _ => return Err(corrupt("root missing or of the wrong length")),
        }
        for (id, node) in self.iter() {
            let (level, prefix) = heap_pos(id);
            if kind(level, prefix) != NodeKind::Internal {
                return Err(corrupt(format!("node {id} is not an internal node")));
            }
            if id != 0 {
                match self.get(heap_id(level - 1, prefix >> 1)) {
                    Some(p) if p.count(prefix & 1 == 1) == node.len() => {}
                    _ => return Err(corrupt(format!("node {id} does not match its parent"))),
                }
            }
            for b in [false, true] {
                let child = (prefix << 1) | b as u64;
                if node.count(b) == 0 {
                    continue;
                }
                let ok = match kind(level + 1, child) {
                    NodeKind::Leaf => true,
                    NodeKind::Internal => self.get(heap_id(level + 1, child)).is_some(),
                    NodeKind::Invalid => false,
                };
                if !ok {
                    return Err(corrupt(format!("node {id} routes to a missing child")));
                }
            }
        }
        Ok(())
    }
}

/// Role of a tree position, used when validating a stored tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum NodeKind {
    Internal,
    Leaf,
    Invalid,
}

/// A balanced wavelet tree over an arbitrary integer alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WaveletTree {
    n: u64,
    depth: u32,
    tau: u32,
    alphabet: Alphabet,
    nodes: BinaryNodes,
}

impl WaveletTree {
    /// Maps the alphabet of `raw` and builds with the given parameters.
    pub fn build(meter: &mut CostMeter, raw: &[u64], params: &BuildParams) -> Result<Self> {
        let (codes, alphabet) = map_alphabet(meter, raw);
        let bm = tree_bitmaps(meter, &codes, alphabet.sigma(), params)?;
        Ok(Self::from_bitmaps(meter, bm, alphabet))
    }

    /// Builds over dense codes `0..sigma`, which are also the raw symbols.
    pub fn from_codes(meter: &mut CostMeter, codes: &PackedList, sigma: u64, params: &BuildParams) -> Result<Self> {
        let bm = tree_bitmaps(meter, codes, sigma, params)?;
        Ok(Self::from_bitmaps(meter, bm, Alphabet::identity(sigma)))
    }

    pub fn from_bitmaps(meter: &mut CostMeter, bm: TreeBitmaps, alphabet: Alphabet) -> Self {
        assert_eq!(bm.sigma, alphabet.sigma(), "alphabet size");
        let nodes = BinaryNodes::build(meter, bm.nodes);
        WaveletTree { n: bm.n, depth: bm.depth, tau: bm.tau, alphabet, nodes }
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

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn nodes(&self) -> &BinaryNodes {
        &self.nodes
    }

    /// Bitmap of the node at `(level, prefix)`, if present.
    pub fn bitmap(&self, level: u32, prefix: u64) -> Option<&PackedBitVector> {
        self.nodes.get(heap_id(level, prefix)).map(|n| n.bits())
    }

    pub fn size_in_bytes(&self) -> u64 {
        self.alphabet.size_in_bytes() + self.nodes.size_in_bytes()
    }

    fn node(&self, level: u32, prefix: u64) -> &BinaryRS {
        self.nodes.get(heap_id(level, prefix)).expect("routed node present")
    }

    fn check_index(&self, i: u64) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, len: self.n });
        }
        Ok(())
    }

    pub fn access_code(&self, i: u64) -> Result<u64> {
        self.check_index(i)?;
        let (mut pos, mut prefix) = (i, 0u64);
        for level in 0..self.depth {
            let node = self.node(level, prefix);
            let b = node.bits().bit(pos);
            pos = node.rank_unchecked(b, pos) - 1;
            prefix = prefix << 1 | b as u64;
        }
        Ok(prefix)
    }

    /// Occurrences of code `c` in `[0, i]`.
    pub fn rank_code(&self, c: u64, i: u64) -> Result<u64> {
        self.check_index(i)?;
        if c >= self.sigma() {
            return Err(Error::SymbolOutOfRange { symbol: c, sigma: self.sigma() });
        }
        let mut count = i + 1;
        for level in 0..self.depth {
            let b = (c >> (self.depth - 1 - level)) & 1 == 1;
            count = self.node(level, c >> (self.depth - level)).rank_unchecked(b, count - 1);
            if count == 0 {
                break;
            }
        }
        Ok(count)
    }

    /// Occurrences of codes `<= c` in `[0, i]`.
    pub fn rank_le_code(&self, c: u64, i: u64) -> Result<u64> {
        self.check_index(i)?;
        if c >= self.sigma() {
            return Err(Error::SymbolOutOfRange { symbol: c, sigma: self.sigma() });
        }
        let (mut count, mut below) = (i + 1, 0);
        for level in 0..self.depth {
            let node = self.node(level, c >> (self.depth - level));
            let zeros = node.rank_unchecked(false, count - 1);
            if (c >> (self.depth - 1 - level)) & 1 == 1 {
                below += zeros;
                count -= zeros;
            } else {
                count = zeros;
            }
            if count == 0 {
                break;
            }
        }
        Ok(below + count)
    }

    pub fn count_code(&self, c: u64) -> u64 {
        if self.n == 0 || c >= self.sigma() {
            0
        } else {
            self.rank_code(c, self.n - 1).expect("valid")
        }
    }

    /// Position of the `j`'th occurrence of code `c`, walking leaf to root.
    pub fn select_code(&self, c: u64, j: u64) -> Result<u64> {
        let available = self.count_code(c);
        if j == 0 || j > available {
            return Err(Error::OccurrenceOutOfRange { occurrence: j, available });
        }
        let mut j = j;
        for level in (0..self.depth).rev() {
            let b = (c >> (self.depth - 1 - level)) & 1 == 1;
            j = self.node(level, c >> (self.depth - level)).select_unchecked(b, j) + 1;
        }
        Ok(j - 1)
    }

    /// Raw symbol at position `i`.
    pub fn access(&self, i: u64) -> Result<u64> {
        Ok(self.alphabet.decode(self.access_code(i)?))
    }

    /// Occurrences of raw symbol `c` in `[0, i]`.
    pub fn rank(&self, c: u64, i: u64) -> Result<u64> {
        self.check_index(i)?;
        match self.alphabet.encode(c) {
            Some(code) => self.rank_code(code, i),
            None => Ok(0),
        }
    }

    /// Occurrences of raw symbols `<= c` in `[0, i]`.
    pub fn rank_le(&self, c: u64, i: u64) -> Result<u64> {
        self.check_index(i)?;
        match self.alphabet.count_le(c) {
            0 => Ok(0),
            k => self.rank_le_code(k - 1, i),
        }
    }

    /// Position of the `j`'th occurrence of raw symbol `c`.
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
        w.u8(self.depth as u8);
        w.u8(self.tau as u8);
        w.section(|w| self.alphabet.write(w));
        w.section(|w| self.nodes.write(w));
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let n = r.u64()?;
        let depth = r.u8()? as u32;
        let tau = r.u8()? as u32;
        let mut s = r.section()?;
        let alphabet = Alphabet::read(&mut s)?;
        s.finish()?;
        if depth != depth_for(alphabet.sigma()) {
            return Err(corrupt("depth does not match the alphabet"));
        }
        let mut s = r.section()?;
        let nodes = BinaryNodes::read(&mut s)?;
        s.finish()?;
        let sigma = alphabet.sigma();
        nodes.check_routing(n, |level, prefix| {
            if level < depth && (prefix << (depth - level)) >= sigma {
                NodeKind::Invalid
            } else if level >= depth {
                if prefix < sigma { NodeKind::Leaf } else { NodeKind::Invalid }
            } else {
                NodeKind::Internal
            }
        })?;
        Ok(WaveletTree { n, depth, tau, alphabet, nodes })
    }
}

/// Packed serial build over dense codes.
pub fn build_packed_serial(meter: &mut CostMeter, codes: &PackedList, sigma: u64, tau: u32) -> Result<WaveletTree> {
    WaveletTree::from_codes(meter, codes, sigma, &BuildParams::new(Algorithm::Packed).tau(tau))
}

/// Parallel sort-based build over dense codes.
pub fn build_parallel_sorted(
    meter: &mut CostMeter,
    codes: &PackedList,
    sigma: u64,
    tau: u32,
) -> Result<WaveletTree> {
    WaveletTree::from_codes(meter, codes, sigma, &BuildParams::new(Algorithm::Sorted).tau(tau))
}

/// Domain-decomposition build over dense codes with `parts` parts.
pub fn build_domain_decomp(
    meter: &mut CostMeter,
    codes: &PackedList,
    sigma: u64,
    parts: usize,
) -> Result<WaveletTree> {
    WaveletTree::from_codes(meter, codes, sigma, &BuildParams::new(Algorithm::Domain).parts(parts))
}

#[cfg(test)]
mod tests;
