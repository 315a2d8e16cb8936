//! Self-describing archive around any of the four structures.
//!
//! Layout: magic `WSDS1`, version u32, word size u8, variant tag u8, n u64,
//! σ u32, degree u8, τ u8, then one length-prefixed payload section. All
//! integers little-endian.

use crate::error::{Error, Result};
use crate::io::{corrupt, Reader, Writer};
use crate::par::CostMeter;
use crate::var::{MultiaryTree, ShapedTree, WaveletMatrix};
use crate::wt::{BuildParams, WaveletTree};

pub const MAGIC: &[u8; 5] = b"WSDS1";
pub const FORMAT_VERSION: u32 = 1;
pub const WORD_BITS: u8 = 64;
/// Bytes before the payload section.
pub const HEADER_LEN: usize = 5 + 4 + 1 + 1 + 8 + 4 + 1 + 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Tree,
    Shaped,
    Multiary,
    Matrix,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Tree, Variant::Shaped, Variant::Multiary, Variant::Matrix];

    pub fn tag(self) -> u8 {
        match self {
            Variant::Tree => 0,
            Variant::Shaped => 1,
            Variant::Multiary => 2,
            Variant::Matrix => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Tree => "tree",
            Variant::Shaped => "shaped",
            Variant::Multiary => "multiary",
            Variant::Matrix => "matrix",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::param(format!("unknown variant `{s}`")))
    }
}

/// One of the four sequence structures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Structure {
    Tree(WaveletTree),
    Shaped(ShapedTree),
    Multiary(MultiaryTree),
    Matrix(WaveletMatrix),
}

macro_rules! dispatch {
    ($self:expr, $s:ident => $body:expr) => {
        match $self {
            Structure::Tree($s) => $body,
            Structure::Shaped($s) => $body,
            Structure::Multiary($s) => $body,
            Structure::Matrix($s) => $body,
        }
    };
}

impl Structure {
    /// `degree` is only meaningful for the multiary variant, where it
    /// defaults to 4.
    pub fn build(
        meter: &mut CostMeter,
        raw: &[u64],
        variant: Variant,
        degree: Option<u32>,
        params: &BuildParams,
    ) -> Result<Self> {
        if degree.is_some() && variant != Variant::Multiary {
            return Err(Error::param(format!("--degree does not apply to variant {}", variant.name())));
        }
        Ok(match variant {
            Variant::Tree => Structure::Tree(WaveletTree::build(meter, raw, params)?),
            Variant::Shaped => Structure::Shaped(ShapedTree::build(meter, raw, params)?),
            Variant::Multiary => Structure::Multiary(MultiaryTree::build(meter, raw, degree.unwrap_or(4), params)?),
            Variant::Matrix => Structure::Matrix(WaveletMatrix::build(meter, raw, params)?),
        })
    }

    pub fn variant(&self) -> Variant {
        match self {
            Structure::Tree(_) => Variant::Tree,
            Structure::Shaped(_) => Variant::Shaped,
            Structure::Multiary(_) => Variant::Multiary,
            Structure::Matrix(_) => Variant::Matrix,
        }
    }

    pub fn len(&self) -> u64 {
        dispatch!(self, s => s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sigma(&self) -> u64 {
        dispatch!(self, s => s.sigma())
    }

    pub fn tau(&self) -> u32 {
        dispatch!(self, s => s.tau())
    }

    /// Node fan-out; 2 for the binary variants.
    pub fn degree(&self) -> u32 {
        match self {
            Structure::Multiary(m) => m.degree(),
            _ => 2,
        }
    }

    pub fn size_in_bytes(&self) -> u64 {
        dispatch!(self, s => s.size_in_bytes())
    }

    /// Bits of sequence payload: bitmap bits for the binary variants, digit
    /// count times digit width for the multiary tree.
    pub fn payload_bits(&self) -> u64 {
        match self {
            Structure::Tree(t) => t.nodes().bitmap_bits(),
            Structure::Shaped(t) => t.nodes().bitmap_bits(),
            Structure::Multiary(t) => {
                let k = t.degree().trailing_zeros() as u64;
                t.node_digits().map(|(_, l)| l.len() as u64 * k).sum()
            }
            Structure::Matrix(m) => (0..m.depth()).map(|l| m.level(l).len()).sum(),
        }
    }

    pub fn access(&self, i: u64) -> Result<u64> {
        dispatch!(self, s => s.access(i))
    }

    pub fn rank(&self, c: u64, i: u64) -> Result<u64> {
        dispatch!(self, s => s.rank(c, i))
    }

    pub fn rank_le(&self, c: u64, i: u64) -> Result<u64> {
        dispatch!(self, s => s.rank_le(c, i))
    }

    pub fn select(&self, c: u64, j: u64) -> Result<u64> {
        dispatch!(self, s => s.select(c, j))
    }

    pub fn count(&self, c: u64) -> u64 {
        dispatch!(self, s => s.count(c))
    }

    /// The payload section alone, without the header.
    pub fn payload(&self) -> Vec<u8> {
        let mut w = Writer::new();
        dispatch!(self, s => s.write(&mut w));
        w.into_bytes()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let sigma = u32::try_from(self.sigma()).map_err(|_| Error::param("alphabet larger than 2^32"))?;
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u32(FORMAT_VERSION);
        w.u8(WORD_BITS);
        w.u8(self.variant().tag());
        w.u64(self.len());
        w.u32(sigma);
        w.u8(self.degree() as u8);
        w.u8(self.tau() as u8);
        w.section(|w| dispatch!(self, s => s.write(w)));
        Ok(w.into_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(5).map_err(|_| corrupt("truncated header"))? != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        if r.u8()? != WORD_BITS {
            return Err(corrupt("unsupported word size"));
        }
        let variant = Variant::from_tag(r.u8()?).ok_or_else(|| corrupt("unknown variant tag"))?;
        let n = r.u64()?;
        let sigma = r.u32()? as u64;
        let degree = r.u8()? as u32;
        let tau = r.u8()? as u32;
        let mut p = r.section()?;
        r.finish()?;
        let s = match variant {
            Variant::Tree => Structure::Tree(WaveletTree::read(&mut p)?),
            Variant::Shaped => Structure::Shaped(ShapedTree::read(&mut p)?),
            Variant::Multiary => Structure::Multiary(MultiaryTree::read(&mut p)?),
            Variant::Matrix => Structure::Matrix(WaveletMatrix::read(&mut p)?),
        };
        p.finish()?;
        if s.len() != n || s.sigma() != sigma || s.degree() != degree || s.tau() != tau {
            return Err(corrupt("header disagrees with payload"));
        }
        Ok(s)
    }
}
