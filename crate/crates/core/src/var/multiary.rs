use crate::bits::{mask, PackedList};
use crate::error::{Error, Result};
use crate::io::{corrupt, Reader, Writer};
use crate::par::{parallel_map, CostMeter};
use crate::rsg::GeneralRS;
use crate::wt::engine::{heap_pos, CodeMap, Shape};
use crate::wt::{default_tau, depth_for, map_alphabet, run_engine, unpack_codes, Alphabet, BuildParams};

/// Largest supported degree.
pub const MAX_DEGREE: u32 = 16;

/// Digit geometry of a multiary tree over `sigma` codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Geometry {
    /// Bits per digit.
    k: u32,
    /// Code bits before padding.
    bits: u32,
    /// Digits per code.
    levels: u32,
}

impl Geometry {
    fn new(sigma: u64, d: u32) -> Result<Self> {
        if !d.is_power_of_two() || !(2..=MAX_DEGREE).contains(&d) {
            return Err(Error::param(format!("degree {d} is not a power of two in 2..={MAX_DEGREE}")));
        }
        let k = d.trailing_zeros();
        let bits = depth_for(sigma);
        Ok(Geometry { k, bits, levels: bits.div_ceil(k) })
    }

    fn padded(&self) -> u32 {
        self.levels * self.k
    }

    fn pad(&self) -> u32 {
        self.padded() - self.bits
    }

    fn d(&self) -> u64 {
        1 << self.k
    }

    /// Number of the node at depth `beta` with digit path `path`.
    fn id(&self, beta: u32, path: u64) -> u64 {
        ((1u64 << (self.k * beta)) - 1) / (self.d() - 1) + path
    }

    fn digit(&self, code: u64, beta: u32) -> u32 {
        ((code << self.pad()) >> (self.padded() - (beta + 1) * self.k)) as u32 & mask(self.k) as u32
    }

    fn path(&self, code: u64, beta: u32) -> u64 {
        if beta == 0 {
            0
        } else {
            (code << self.pad()) >> (self.padded() - beta * self.k)
        }
    }

    fn default_tau(&self, n: u64) -> u32 {
        let t = default_tau(n, self.padded());
        (self.k * (t / self.k).max(1)).min(self.padded())
    }
}

/// Digit sequences of every node, keyed by node number, and the τ used.
pub fn multiary_digits(
    meter: &mut CostMeter,
    codes: &PackedList,
    sigma: u64,
    d: u32,
    params: &BuildParams,
) -> Result<(Vec<(u64, PackedList)>, u32)> {
    let g = Geometry::new(sigma, d)?;
    let syms = unpack_codes(meter, codes, sigma)?;
    let shape = Shape { height: g.padded(), map: CodeMap::Shift { shift: g.pad() }, digit_bits: Some(g.k) };
    let n = syms.len() as u64;
    let (out, tau) = run_engine(meter, syms, &shape, params, g.default_tau(n))?;
    let digits = out
        .digits
        .into_iter()
        .map(|(id, list)| {
            let (level, prefix) = heap_pos(id);
            (g.id(level / g.k, prefix), list)
        })
        .collect();
    Ok((digits, if g.levels == 0 { 0 } else { tau }))
}

/// A wavelet tree of degree `d`: every node holds one `log2 d`-bit digit per
/// routed element, with generalized rank and select.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiaryTree {
    n: u64,
    d: u32,
    tau: u32,
    geo: Geometry,
    alphabet: Alphabet,
    ids: Vec<u64>,
    nodes: Vec<GeneralRS>,
}

impl MultiaryTree {
    pub fn build(meter: &mut CostMeter, raw: &[u64], d: u32, params: &BuildParams) -> Result<Self> {
        let (codes, alphabet) = map_alphabet(meter, raw);
        Self::with_alphabet(meter, &codes, alphabet, d, params)
    }

    pub fn with_alphabet(
        meter: &mut CostMeter,
        codes: &PackedList,
        alphabet: Alphabet,
        d: u32,
        params: &BuildParams,
    ) -> Result<Self> {
        let sigma = alphabet.sigma();
        let geo = Geometry::new(sigma, d)?;
        let (digits, tau) = multiary_digits(meter, codes, sigma, d, params)?;
        let built = parallel_map(meter, digits.len(), 1, |m, j| {
            Some(GeneralRS::build(m, digits[j].1.clone(), d).expect("digits below d"))
        });
        Ok(MultiaryTree {
            n: codes.len() as u64,
            d,
            tau,
            geo,
            alphabet,
            ids: digits.iter().map(|x| x.0).collect(),
            nodes: built.into_iter().map(|x| x.expect("built")).collect(),
        })
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

    pub fn degree(&self) -> u32 {
        self.d
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }

    /// Levels of nodes.
    pub fn levels(&self) -> u32 {
        self.geo.levels
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Node numbers and digit sequences in numbering order.
    pub fn node_digits(&self) -> impl Iterator<Item = (u64, &PackedList)> + '_ {
        self.ids.iter().copied().zip(self.nodes.iter().map(|n| n.seq()))
    }

    pub fn size_in_bytes(&self) -> u64 {
        self.alphabet.size_in_bytes()
            + 8 * self.ids.len() as u64
            + self.nodes.iter().map(|n| n.size_in_bytes()).sum::<u64>()
    }

    fn node(&self, beta: u32, path: u64) -> Option<&GeneralRS> {
        let id = self.geo.id(beta, path);
        self.ids.binary_search(&id).ok().map(|k| &self.nodes[k])
    }

    fn check_index(&self, i: u64) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, len: self.n });
        }
        Ok(())
    }

    fn check_code(&self, c: u64) -> Result<()> {
        if c >= self.sigma() {
            return Err(Error::SymbolOutOfRange { symbol: c, sigma: self.sigma() });
        }
        Ok(())
    }

    pub fn access_code(&self, i: u64) -> Result<u64> {
        self.check_index(i)?;
        let (mut pos, mut path) = (i, 0u64);
        for beta in 0..self.geo.levels {
            let node = self.node(beta, path).expect("routed node present");
            let x = node.access_unchecked(pos);
            pos = node.rank_eq_unchecked(x, pos) - 1;
            path = path * self.geo.d() + x as u64;
        }
        Ok(path >> self.geo.pad())
    }

    pub fn rank_code(&self, c: u64, i: u64) -> Result<u64> {
        self.check_index(i)?;
        self.check_code(c)?;
        let mut count = i + 1;
        for beta in 0..self.geo.levels {
            count = match self.node(beta, self.geo.path(c, beta)) {
                Some(node) => node.rank_eq_unchecked(self.geo.digit(c, beta), count - 1),
                None => 0,
            };
            if count == 0 {
                break;
            }
        }
        Ok(count)
    }

    pub fn rank_le_code(&self, c: u64, i: u64) -> Result<u64> {
        self.check_index(i)?;
        self.check_code(c)?;
        let (mut count, mut below) = (i + 1, 0);
        for beta in 0..self.geo.levels {
            let node = self.node(beta, self.geo.path(c, beta)).expect("routed node present");
            let x = self.geo.digit(c, beta);
            if x > 0 {
                below += node.rank_le_unchecked(x - 1, count - 1);
            }
            count = node.rank_eq_unchecked(x, count - 1);
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

    pub fn select_code(&self, c: u64, j: u64) -> Result<u64> {
        let available = self.count_code(c);
        if j == 0 || j > available {
            return Err(Error::OccurrenceOutOfRange { occurrence: j, available });
        }
        let mut j = j;
        for beta in (0..self.geo.levels).rev() {
            let node = self.node(beta, self.geo.path(c, beta)).expect("routed node present");
            j = node.select_unchecked(self.geo.digit(c, beta), j) + 1;
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
        w.u8(self.d as u8);
        w.u8(self.tau as u8);
        w.section(|w| self.alphabet.write(w));
        w.section(|w| {
            w.u64(self.ids.len() as u64);
            for &id in &self.ids {
                w.u64(id);
            }
            for node in &self.nodes {
                w.section(|w| node.write(w));
            }
        });
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let n = r.u64()?;
        let d = r.u8()? as u32;
        let tau = r.u8()? as u32;
        let mut s = r.section()?;
        let alphabet = Alphabet::read(&mut s)?;
        s.finish()?;
        let geo = Geometry::new(alphabet.sigma(), d).map_err(|e| corrupt(e.to_string()))?;
        let mut s = r.section()?;
        let count = s.usize()?;
        if count > s.remaining() / 8 {
            return Err(corrupt("node count larger than its section"));
        }
        let ids = (0..count).map(|_| s.u64()).collect::<Result<Vec<_>>>()?;
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(corrupt("node ids not strictly increasing"));
        }
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            let mut ns = s.section()?;
            let node = GeneralRS::read(&mut ns)?;
            ns.finish()?;
            if node.sigma() != d {
                return Err(corrupt("node alphabet differs from the degree"));
            }
            nodes.push(node);
        }
        s.finish()?;
        let t = MultiaryTree { n, d, tau, geo, alphabet, ids, nodes };
        t.check_routing()?;
        Ok(t)
    }

    /// Every node is reached with its exact length and every routed code is
    /// below σ.
    fn check_routing(&self) -> Result<()> {
        let sigma = self.sigma();
        if sigma == 0 && self.n > 0 {
            return Err(corrupt("elements without an alphabet"));
        }
        if self.geo.levels == 0 {
            return if self.ids.is_empty() { Ok(()) } else { Err(corrupt("nodes in a tree without levels")) };
        }
        let mut expected = vec![(0u32, 0u64, self.n)];
        let mut seen = 0;
        while let Some((beta, path, len)) = expected.pop() {
            let node = self
                .node(beta, path)
                .ok_or_else(|| corrupt(format!("missing node at depth {beta}")))?;
            if node.len() != len {
                return Err(corrupt("node length does not match its parent"));
            }
            seen += 1;
            for x in 0..self.d {
                let c = node.count(x);
                if c == 0 {
                    continue;
                }
                let child = path * self.geo.d() + x as u64;
                if beta + 1 == self.geo.levels {
                    let code = child >> self.geo.pad();
                    if child & mask(self.geo.pad()) != 0 || code >= sigma {
                        return Err(corrupt("node routes to a code outside the alphabet"));
                    }
                } else {
                    expected.push((beta + 1, child, c));
                }
            }
        }
        if seen != self.ids.len() {
            return Err(corrupt("unreachable nodes present"));
        }
        Ok(())
    }
}

/// Builds the multiary tree of degree `d` over dense codes.
pub fn build_multiary(meter: &mut CostMeter, codes: &PackedList, sigma: u64, d: u32, tau: u32) -> Result<MultiaryTree> {
    MultiaryTree::with_alphabet(meter, codes, Alphabet::identity(sigma), d, &BuildParams::default().tau(tau))
}
