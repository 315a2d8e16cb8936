//! Little-endian binary encoding shared by every serializable structure.

use crate::bits::{words_for, PackedBitVector, PackedList};
use crate::error::{Error, Result};

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn words(&mut self, ws: &[u64]) {
        for &w in ws {
            self.u64(w);
        }
    }

    /// Packed list as `(width: u8, count: u64, words)`.
    pub fn packed(&mut self, l: &PackedList) {
        self.u8(l.width() as u8);
        self.u64(l.len() as u64);
        self.words(l.words());
    }

    pub fn bitvec(&mut self, v: &PackedBitVector) {
        self.u64(v.len());
        self.words(v.words());
    }

    /// Writes a section produced by `body`, prefixed by its byte length.
    pub fn section(&mut self, body: impl FnOnce(&mut Writer)) {
        let mut inner = Writer::new();
        body(&mut inner);
        self.u64(inner.buf.len() as u64);
        self.buf.extend_from_slice(&inner.buf);
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

pub(crate) fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptArchive(msg.into())
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn finish(&self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(corrupt(format!("{} trailing bytes", self.buf.len() - self.pos)))
        }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(corrupt("unexpected end of data"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| corrupt("length overflows usize"))
    }

    pub fn words(&mut self, count: usize) -> Result<Vec<u64>> {
        let bytes = self.take(count.checked_mul(8).ok_or_else(|| corrupt("word count overflow"))?)?;
        Ok(bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn packed(&mut self) -> Result<PackedList> {
        let width = self.u8()? as u32;
        let len = self.usize()?;
        let bits = (len as u64)
            .checked_mul(width as u64)
            .ok_or_else(|| corrupt("packed list size overflow"))?;
        let words = self.words(words_for(bits))?;
        let l = PackedList::from_raw(words.clone(), len, width).map_err(|e| corrupt(e.to_string()))?;
        if l.words() != words.as_slice() {
            return Err(corrupt("nonzero bits past the end of a packed list"));
        }
        Ok(l)
    }

    pub fn bitvec(&mut self) -> Result<PackedBitVector> {
        let len = self.u64()?;
        let words = self.words(words_for(len))?;
        let v = PackedBitVector::from_words(words.clone(), len).map_err(|e| corrupt(e.to_string()))?;
        if v.words() != words.as_slice() {
            return Err(corrupt("nonzero bits past the end of a bitmap"));
        }
        Ok(v)
    }

    /// Reads a length-prefixed section and hands its bytes to a fresh reader.
    pub fn section(&mut self) -> Result<Reader<'a>> {
        let len = self.usize()?;
        Ok(Reader::new(self.take(len)?))
    }
}
