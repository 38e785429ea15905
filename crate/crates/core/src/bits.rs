//! Explicit-length binary sequences.
//!
//! Every stage of the transmit and receive chains hands bits around as a
//! [`BitSequence`]: one `u8` per symbol, each either 0 or 1, with no implicit
//! padding to a byte boundary. Packing to and from octets is always
//! most-significant-bit first.

use std::fmt;
use std::ops::Index;

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitSequence {
    bits: Vec<u8>,
}

impl BitSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            bits: Vec::with_capacity(n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    /// Builds a sequence from arbitrary integers, treating any nonzero value
    /// as a 1.
    pub fn from_bits<I, T>(iter: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<u64>,
    {
        Self {
            bits: iter.into_iter().map(|b| (b.into() != 0) as u8).collect(),
        }
    }

    /// Unpacks octets MSB first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut out = Self::with_capacity(bytes.len() * 8);
        for &b in bytes {
            out.push_word(b as u64, 8);
        }
        out
    }

    /// Packs into octets MSB first; a trailing partial octet is zero-filled.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (b << (7 - i)))
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push(&mut self, bit: u8) {
        self.bits.push(bit & 1);
    }

    /// Appends the low `width` bits of `word`, MSB first.
    pub fn push_word(&mut self, word: u64, width: usize) {
        for i in (0..width).rev() {
            self.bits.push(((word >> i) & 1) as u8);
        }
    }

    /// Reads `width` bits starting at `start` as an unsigned integer, MSB first.
    pub fn read_word(&self, start: usize, width: usize) -> u64 {
        self.bits[start..start + width]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn extend_from(&mut self, other: &BitSequence) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn slice(&self, start: usize, end: usize) -> BitSequence {
        BitSequence {
            bits: self.bits[start..end].to_vec(),
        }
    }

    pub fn truncate(&mut self, len: usize) {
        self.bits.truncate(len);
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.bits.iter().copied()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Number of positions at which the two sequences differ, over the
    /// shorter length.
    pub fn hamming_distance(&self, other: &BitSequence) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Longest run of identical consecutive symbols.
    pub fn max_run(&self) -> usize {
        let mut best = 0;
        let mut run = 0;
        let mut prev = None;
        for &b in &self.bits {
            if Some(b) == prev {
                run += 1;
            } else {
                run = 1;
                prev = Some(b);
            }
            best = best.max(run);
        }
        best
    }
}

impl Index<usize> for BitSequence {
    type Output = u8;

    fn index(&self, i: usize) -> &u8 {
        &self.bits[i]
    }
}

impl FromIterator<u8> for BitSequence {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        Self {
            bits: iter.into_iter().map(|b| b & 1).collect(),
        }
    }
}

impl From<Vec<u8>> for BitSequence {
    fn from(v: Vec<u8>) -> Self {
        v.into_iter().collect()
    }
}

impl From<&[u8]> for BitSequence {
    fn from(v: &[u8]) -> Self {
        v.iter().copied().collect()
    }
}

impl fmt::Debug for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitSequence[{}](", self.len())?;
        for b in self.bits.iter().take(128) {
            write!(f, "{b}")?;
        }
        if self.len() > 128 {
            write!(f, "...")?;
        }
        write!(f, ")")
    }
}

/// Splits bits into `width`-bit symbols MSB first. The length must be a
/// multiple of `width`.
pub(crate) fn bits_to_symbols(bits: &BitSequence, width: usize) -> Vec<u16> {
    debug_assert_eq!(bits.len() % width, 0);
    (0..bits.len() / width)
        .map(|i| bits.read_word(i * width, width) as u16)
        .collect()
}

pub(crate) fn symbols_to_bits(symbols: &[u16], width: usize) -> BitSequence {
    let mut out = BitSequence::with_capacity(symbols.len() * width);
    for &s in symbols {
        out.push_word(s as u64, width);
    }
    out
}
