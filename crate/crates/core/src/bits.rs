//! Plain bit vectors, fixed-width packed integer arrays and LEB128 varints.
//!
//! Everything here is serialized little-endian, LSB-first within each byte.

use crate::error::{Error, Result};

/// Growable bit vector backed by 64-bit words.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        let (w, b) = (self.len / 64, self.len % 64);
        if w == self.words.len() {
            self.words.push(0);
        }
        if bit {
            self.words[w] |= 1 << b;
        }
        self.len += 1;
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of ones in `[start, end)`.
    pub fn count_ones_in(&self, start: usize, end: usize) -> usize {
        debug_assert!(start <= end && end <= self.len);
        if start == end {
            return 0;
        }
        let (sw, ew) = (start / 64, (end - 1) / 64);
        let lo_mask = !0u64 << (start % 64);
        let hi_mask = !0u64 >> (63 - (end - 1) % 64);
        if sw == ew {
            return (self.words[sw] & lo_mask & hi_mask).count_ones() as usize;
        }
        let mut n = (self.words[sw] & lo_mask).count_ones() as usize;
        n += self.words[sw + 1..ew]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum::<usize>();
        n + (self.words[ew] & hi_mask).count_ones() as usize
    }

    pub fn byte_len(&self) -> usize {
        self.len.div_ceil(8)
    }

    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        let n = self.byte_len();
        out.extend(
            self.words
                .iter()
                .flat_map(|w| w.to_le_bytes())
                .take(n),
        );
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::InvalidArgument(format!(
                "{} bytes cannot hold exactly {len} bits",
                bytes.len()
            )));
        }
        let mut words: Vec<u64> = bytes
            .chunks(8)
            .map(|c| {
                let mut buf = [0u8; 8];
                buf[..c.len()].copy_from_slice(c);
                u64::from_le_bytes(buf)
            })
            .collect();
        if !len.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        Ok(Self { words, len })
    }
}

impl FromIterator<bool> for BitVec {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut bv = BitVec::new();
        for b in iter {
            bv.push(b);
        }
        bv
    }
}

impl std::fmt::Display for BitVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Array of unsigned integers, each stored in exactly `width` bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntVec {
    words: Vec<u64>,
    width: u8,
    len: usize,
}

impl IntVec {
    pub fn with_capacity(width: u8, cap: usize) -> Self {
        assert!((1..=64).contains(&width), "width {width} out of range");
        Self {
            words: Vec::with_capacity((cap * width as usize).div_ceil(64)),
            width,
            len: 0,
        }
    }

    pub fn from_values(width: u8, values: impl IntoIterator<Item = u64>) -> Self {
        let iter = values.into_iter();
        let mut iv = Self::with_capacity(width, iter.size_hint().0);
        for v in iter {
            iv.push(v);
        }
        iv
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn mask(&self) -> u64 {
        if self.width == 64 {
            !0
        } else {
            (1u64 << self.width) - 1
        }
    }

    pub fn push(&mut self, v: u64) {
        assert!(v & !self.mask() == 0, "{v} does not fit in {} bits", self.width);
        let bit = self.len * self.width as usize;
        let (w, b) = (bit / 64, bit % 64);
        let end_word = (bit + self.width as usize - 1) / 64;
        while self.words.len() <= end_word {
            self.words.push(0);
        }
        self.words[w] |= v << b;
        if b + self.width as usize > 64 {
            self.words[w + 1] |= v >> (64 - b);
        }
        self.len += 1;
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        debug_assert!(i < self.len);
        let bit = i * self.width as usize;
        let (w, b) = (bit / 64, bit % 64);
        let mut v = self.words[w] >> b;
        if b + self.width as usize > 64 {
            v |= self.words[w + 1] << (64 - b);
        }
        v & self.mask()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn byte_len(&self) -> usize {
        (self.len * self.width as usize).div_ceil(8)
    }

    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        let n = self.byte_len();
        out.extend(
            self.words
                .iter()
                .flat_map(|w| w.to_le_bytes())
                .take(n),
        );
    }

    pub fn from_bytes(bytes: &[u8], width: u8, len: usize) -> Result<Self> {
        if !(1..=64).contains(&width) {
            return Err(Error::InvalidArgument(format!("bit width {width}")));
        }
        let need = (len * width as usize).div_ceil(8);
        if bytes.len() != need {
            return Err(Error::InvalidArgument(format!(
                "{} bytes cannot hold {len} entries of {width} bits",
                bytes.len()
            )));
        }
        let words = bytes
            .chunks(8)
            .map(|c| {
                let mut buf = [0u8; 8];
                buf[..c.len()].copy_from_slice(c);
                u64::from_le_bytes(buf)
            })
            .collect();
        Ok(Self { words, width, len })
    }
}

/// Bits needed to store `max_value` as `1 + floor(log2(max_value))`, at least 1.
pub fn bit_width(max_value: u64) -> u8 {
    (64 - max_value.max(1).leading_zeros()) as u8
}

pub fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

/// Little-endian cursor over a byte slice.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8], what: &'static str) -> Self {
        Self { buf, pos: 0, what }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::corrupt(
                self.what,
                format!("truncated: need {n} bytes at offset {}", self.pos),
            ));
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

    /// Reads a u64 that must fit a `usize`-sized allocation bounded by `limit`.
    pub fn len_u64(&mut self, limit: usize) -> Result<usize> {
        let v = self.u64()?;
        if v > limit as u64 {
            return Err(Error::corrupt(
                self.what,
                format!("length {v} exceeds remaining data bound {limit}"),
            ));
        }
        Ok(v as usize)
    }

    pub fn varint(&mut self) -> Result<u64> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.u8()?;
            v |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(Error::corrupt(self.what, "varint longer than 10 bytes"))
    }

    pub fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::corrupt(
                self.what,
                format!("{} trailing bytes", self.remaining()),
            ));
        }
        Ok(())
    }
}
