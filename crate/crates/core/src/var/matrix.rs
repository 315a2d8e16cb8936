use crate::bits::{concat_lists, mask, pack_with, PackedBitVector, PackedList};
use crate::error::{Error, Result};
use crate::io::{corrupt, Reader, Writer};
use crate::par::{parallel_map, stable_sort_by, CostMeter};
use crate::rsb::BinaryRS;
use crate::wt::engine::{check_tau, counting_sort, split_parallel, split_serial, CodeMap, Shape, Split, Tables};
use crate::wt::{default_tau, depth_for, map_alphabet, unpack_codes, Algorithm, Alphabet, BuildParams};

/// Level bitmaps and zero counts before rank/select structures are added.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixLevels {
    pub levels: Vec<PackedBitVector>,
    pub zeros: Vec<u64>,
    pub tau: u32,
}

fn reversed(x: u64, bits: u32) -> u64 {
    x.reverse_bits() >> (64 - bits)
}

/// Level bitmaps of the wavelet matrix over `codes`.
///
/// Special levels every τ bits reorder the full codes by a stable sort on
/// their next τ bits reversed; the levels in between route τ-bit short lists
/// through the chunk table, all zeros before all ones.
pub fn matrix_levels(meter: &mut CostMeter, codes: &PackedList, sigma: u64, params: &BuildParams) -> Result<MatrixLevels> {
    let mut arr = unpack_codes(meter, codes, sigma)?;
    let depth = depth_for(sigma);
    let n = arr.len();
    let mut levels = Vec::with_capacity(depth as usize);
    let mut zeros = Vec::with_capacity(depth as usize);
    let tau = params.tau.unwrap_or_else(|| default_tau(n as u64, depth));
    let shape = Shape { height: depth, map: CodeMap::Shift { shift: 0 }, digit_bits: None };
    let parallel = match params.algorithm {
        Algorithm::Naive => {
            if depth > 0 && params.tau.is_some() {
                check_tau(&shape, tau)?;
            }
            naive(meter, arr, depth, &mut levels, &mut zeros);
            return Ok(MatrixLevels { levels, zeros, tau: if depth == 0 { 0 } else { tau } });
        }
        Algorithm::Packed => false,
        Algorithm::Sorted => true,
        Algorithm::Domain => {
            return Err(Error::param("domain decomposition does not apply to the wavelet matrix"));
        }
    };
    check_tau(&shape, tau)?;
    let tables = Tables::acquire(meter, &shape, tau)?;
    let mut level = 0;
    while level < depth {
        let tb = tau.min(depth - level);
        let table = tables.get(tb);
        let shift = depth - level - tb;
        let a = &arr;
        let mut list = if parallel {
            pack_with(meter, n, tb, |i| (a[i] >> shift) & mask(tb))?
        } else {
            let mut l = PackedList::new(tb)?;
            for &x in a {
                l.push_raw((x >> shift) & mask(tb), 1);
            }
            meter.charge(n as u64 + l.words().len() as u64);
            l
        };
        for t in 0..tb {
            let Split { bits, l0, l1 } = if parallel {
                split_parallel(meter, table, &list, t)
            } else {
                split_serial(meter, table, &list, t)
            };
            levels.push(bits);
            zeros.push(l0.len() as u64);
            if t + 1 < tb {
                list = if parallel {
                    concat_lists(meter, tb, &[&l0, &l1])?
                } else {
                    let mut l = l0;
                    l.extend_from(meter, &l1)?;
                    l
                };
            }
        }
        if level + tb < depth {
            let key = |x: &u64| reversed((x >> shift) & mask(tb), tb);
            arr = if parallel {
                stable_sort_by(meter, &arr, tb, key)?
            } else {
                counting_sort(meter, &arr, tb, |x| key(&x)).0
            };
        }
        level += tb;
    }
    Ok(MatrixLevels { levels, zeros, tau: if depth == 0 { 0 } else { tau } })
}

fn naive(meter: &mut CostMeter, mut arr: Vec<u64>, depth: u32, levels: &mut Vec<PackedBitVector>, zeros: &mut Vec<u64>) {
    for l in 0..depth {
        let shift = depth - 1 - l;
        let mut bits = PackedBitVector::zeros(arr.len() as u64);
        let mut left = Vec::with_capacity(arr.len());
        let mut right = Vec::new();
        for (i, &x) in arr.iter().enumerate() {
            if (x >> shift) & 1 == 1 {
                bits.set(i as u64, true).expect("in range");
                right.push(x);
            } else {
                left.push(x);
            }
        }
        meter.charge(4 * arr.len() as u64);
        zeros.push(left.len() as u64);
        left.extend_from_slice(&right);
        levels.push(bits);
        arr = left;
    }
}

/// Wavelet matrix: one bitmap per code bit over the whole sequence, each
/// level stably partitioned by the previous level's bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WaveletMatrix {
    n: u64,
    depth: u32,
    tau: u32,
    alphabet: Alphabet,
    levels: Vec<BinaryRS>,
    zeros: Vec<u64>,
}

impl WaveletMatrix {
    pub fn build(meter: &mut CostMeter, raw: &[u64], params: &BuildParams) -> Result<Self> {
        let (codes, alphabet) = map_alphabet(meter, raw);
        Self::with_alphabet(meter, &codes, alphabet, params)
    }

    pub fn with_alphabet(meter: &mut CostMeter, codes: &PackedList, alphabet: Alphabet, params: &BuildParams) -> Result<Self> {
        let m = matrix_levels(meter, codes, alphabet.sigma(), params)?;
        Ok(Self::from_levels(meter, m, alphabet, codes.len() as u64))
    }

    pub fn from_levels(meter: &mut CostMeter, m: MatrixLevels, alphabet: Alphabet, n: u64) -> Self {
        let lv = &m.levels;
        let built = parallel_map(meter, lv.len(), 1, |mm, l| Some(BinaryRS::build(mm, lv[l].clone())));
        WaveletMatrix {
            n,
            depth: m.levels.len() as u32,
            tau: m.tau,
            alphabet,
            levels: built.into_iter().map(|x| x.expect("built")).collect(),
            zeros: m.zeros,
        }
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

    pub fn level(&self, l: u32) -> &PackedBitVector {
        self.levels[l as usize].bits()
    }

    pub fn zeros(&self) -> &[u64] {
        &self.zeros
    }

    pub fn size_in_bytes(&self) -> u64 {
        self.alphabet.size_in_bytes() + 8 * self.zeros.len() as u64 + self.levels.iter().map(|l| l.size_in_bytes()).sum::<u64>()
    }

    /// Occurrences of `v` in `[0, x)` of level `l`.
    fn before(&self, l: usize, v: bool, x: u64) -> u64 {
        if x == 0 {
            0
        } else {
            self.levels[l].rank_unchecked(v, x - 1)
        }
    }

    /// Maps the half-open range `[s, e)` of level `l` to the next level
    /// along bit `b`.
    fn step(&self, l: usize, b: bool, s: u64, e: u64) -> (u64, u64) {
        let base = if b { self.zeros[l] } else { 0 };
        (base + self.before(l, b, s), base + self.before(l, b, e))
    }

    fn check_index(&self, i: u64) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, len: self.n });
        }
        Ok(())
    }

    fn bit(&self, c: u64, l: u32) -> bool {
        (c >> (self.depth - 1 - l)) & 1 == 1
    }

    pub fn access_code(&self, i: u64) -> Result<u64> {
        self.check_index(i)?;
        let (mut pos, mut code) = (i, 0u64);
        for l in 0..self.depth as usize {
            let b = self.levels[l].bits().bit(pos);
            pos = if b { self.zeros[l] } else { 0 } + self.before(l, b, pos);
            code = code << 1 | b as u64;
        }
        Ok(code)
    }

    /// Codes `<= c` in `[0, i]`, without checking `c` against σ.
    fn count_le(&self, c: u64, i: u64) -> u64 {
        let (mut s, mut e, mut below) = (0, i + 1, 0);
        for l in 0..self.depth as usize {
            let b = self.bit(c, l as u32);
            if b {
                below += self.before(l, false, e) - self.before(l, false, s);
            }
            (s, e) = self.step(l, b, s, e);
            if s == e {
                break;
            }
        }
        below + (e - s)
    }

    pub fn rank_code(&self, c: u64, i: u64) -> Result<u64> {
        self.check_index(i)?;
        if c >= self.sigma() {
            return Err(Error::SymbolOutOfRange { symbol: c, sigma: self.sigma() });
        }
        let (mut s, mut e) = (0, i + 1);
        for l in 0..self.depth as usize {
            (s, e) = self.step(l, self.bit(c, l as u32), s, e);
            if s == e {
                break;
            }
        }
        Ok(e - s)
    }

    pub fn rank_le_code(&self, c: u64, i: u64) -> Result<u64> {
        self.check_index(i)?;
        if c >= self.sigma() {
            return Err(Error::SymbolOutOfRange { symbol: c, sigma: self.sigma() });
        }
        Ok(self.count_le(c, i))
    }

    pub fn count_code(&self, c: u64) -> u64 {
        if self.n == 0 || c >= self.sigma() {
            0
        } else {
            self.rank_code(c, self.n - 1).expect("valid")
        }
    }

    /// Finds where the block of `c` starts on the last level, then walks
    /// back up with select.
    pub fn select_code(&self, c: u64, j: u64) -> Result<u64> {
        let available = self.count_code(c);
        if j == 0 || j > available {
            return Err(Error::OccurrenceOutOfRange { occurrence: j, available });
        }
        let mut s = 0;
        for l in 0..self.depth as usize {
            let b = self.bit(c, l as u32);
            s = if b { self.zeros[l] } else { 0 } + self.before(l, b, s);
        }
        let mut pos = s + j - 1;
        for l in (0..self.depth as usize).rev() {
            let b = self.bit(c, l as u32);
            let k = if b { pos - self.zeros[l] } else { pos } + 1;
            pos = self.levels[l].select_unchecked(b, k);
        }
        Ok(pos)
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
        w.u8(self.depth as u8);
        w.u8(self.tau as u8);
        w.section(|w| self.alphabet.write(w));
        w.section(|w| {
            for (l, z) in self.levels.iter().zip(&self.zeros) {
                w.u64(*z);
                w.section(|w| l.write(w));
            }
        });
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
        if alphabet.sigma() == 0 && n > 0 {
            return Err(corrupt("elements without an alphabet"));
        }
        let mut s = r.section()?;
        let mut levels = Vec::with_capacity(depth as usize);
        let mut zeros = Vec::with_capacity(depth as usize);
        for _ in 0..depth {
            let z = s.u64()?;
            let mut ls = s.section()?;
            let l = BinaryRS::read(&mut ls)?;
            ls.finish()?;
            if l.len() != n || l.count(false) != z {
                return Err(corrupt("level length or zero count mismatch"));
            }
            levels.push(l);
            zeros.push(z);
        }
        s.finish()?;
        let m = WaveletMatrix { n, depth, tau, alphabet, levels, zeros };
        if n > 0 && depth > 0 && m.count_le(m.sigma() - 1, n - 1) != n {
            return Err(corrupt("levels encode codes outside the alphabet"));
        }
        Ok(m)
    }
}

/// Builds the wavelet matrix over dense codes.
pub fn build_wavelet_matrix(meter: &mut CostMeter, codes: &PackedList, sigma: u64, tau: u32) -> Result<WaveletMatrix> {
    WaveletMatrix::with_alphabet(meter, codes, Alphabet::identity(sigma), &BuildParams::new(Algorithm::Sorted).tau(tau))
}
