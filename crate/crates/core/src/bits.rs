//! Fixed-width bit vectors used for propositional states.
//!
//! Bit `i` of a vector is the truth value of proposition `z_i`. The textual
//! form lists bits left to right starting at index 0, so `"100"` has only
//! `z_0` set.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

const BLOCK: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitParseError {
    #[error("invalid bit character {found:?} at offset {offset}")]
    InvalidChar { offset: usize, found: char },
    #[error("empty bit string")]
    Empty,
}

/// A packed vector of `width` booleans. Bits past `width` in the last block
/// are always zero so derived equality and hashing stay exact.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    width: usize,
    blocks: Vec<u64>,
}

impl BitVector {
    pub fn zeros(width: usize) -> Self {
        BitVector {
            width,
            blocks: vec![0; width.div_ceil(BLOCK)],
        }
    }

    pub fn ones(width: usize) -> Self {
        let mut v = BitVector {
            width,
            blocks: vec![u64::MAX; width.div_ceil(BLOCK)],
        };
        v.clear_tail();
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Bit `i` of the result is bit `i` of `value`.
    pub fn from_u64(width: usize, value: u64) -> Self {
        assert!(width <= BLOCK, "from_u64 supports widths up to 64");
        let mut v = BitVector::zeros(width);
        if width > 0 {
            v.blocks[0] = value;
            v.clear_tail();
        }
        v
    }

    pub fn from_indices(width: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = BitVector::zeros(width);
        for i in indices {
            v.set(i, true);
        }
        v
    }

    /// Inverse of [`BitVector::from_u64`]; only valid for widths up to 64.
    pub fn to_u64(&self) -> u64 {
        assert!(self.width <= BLOCK, "to_u64 supports widths up to 64");
        self.blocks.first().copied().unwrap_or(0)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.width,
            "bit index {i} out of range for width {}",
            self.width
        );
        (self.blocks[i / BLOCK] >> (i % BLOCK)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.width,
            "bit index {i} out of range for width {}",
            self.width
        );
        let mask = 1u64 << (i % BLOCK);
        if value {
            self.blocks[i / BLOCK] |= mask;
        } else {
            self.blocks[i / BLOCK] &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        assert!(
            i < self.width,
            "bit index {i} out of range for width {}",
            self.width
        );
        self.blocks[i / BLOCK] ^= 1u64 << (i % BLOCK);
    }

    pub fn count_ones(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        self.zip_blocks(other, |a, b| a ^ b)
    }

    pub fn and(&self, other: &BitVector) -> BitVector {
        self.zip_blocks(other, |a, b| a & b)
    }

    pub fn or(&self, other: &BitVector) -> BitVector {
        self.zip_blocks(other, |a, b| a | b)
    }

    /// `self & !other`
    pub fn and_not(&self, other: &BitVector) -> BitVector {
        self.zip_blocks(other, |a, b| a & !b)
    }

    pub fn intersects(&self, other: &BitVector) -> bool {
        assert_eq!(self.width, other.width, "bit vector width mismatch");
        self.blocks
            .iter()
            .zip(&other.blocks)
            .any(|(a, b)| a & b != 0)
    }

    pub fn hamming(&self, other: &BitVector) -> usize {
        assert_eq!(self.width, other.width, "bit vector width mismatch");
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// `self ; other`, with `other`'s bits at indices `width(self)..`.
    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut v = BitVector::zeros(self.width + other.width);
        for i in self.iter_ones() {
            v.set(i, true);
        }
        for i in other.iter_ones() {
            v.set(self.width + i, true);
        }
        v
    }

    /// Bits `start..end` as a new vector.
    pub fn slice(&self, start: usize, end: usize) -> BitVector {
        assert!(
            start <= end && end <= self.width,
            "slice {start}..{end} out of range"
        );
        let mut v = BitVector::zeros(end - start);
        for i in start..end {
            if self.get(i) {
                v.set(i - start, true);
            }
        }
        v
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.width).map(move |i| self.get(i))
    }

    /// Indices of set bits in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().enumerate().flat_map(|(bi, &block)| {
            let mut rest = block;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(bi * BLOCK + tz)
            })
        })
    }

    fn zip_blocks(&self, other: &BitVector, op: impl Fn(u64, u64) -> u64) -> BitVector {
        assert_eq!(self.width, other.width, "bit vector width mismatch");
        let mut v = BitVector {
            width: self.width,
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        };
        v.clear_tail();
        v
    }

    fn clear_tail(&mut self) {
        let rem = self.width % BLOCK;
        if rem != 0 {
            if let Some(last) = self.blocks.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

/// Lexicographic order over the textual form: index 0 is most significant
/// and `0 < 1`. Shorter vectors that are a prefix of longer ones sort first.
impl Ord for BitVector {
    fn cmp(&self, other: &Self) -> Ordering {
        let common = self.width.min(other.width);
        for i in 0..common {
            match (self.get(i), other.get(i)) {
                (false, true) => return Ordering::Less,
                (true, false) => return Ordering::Greater,
                _ => {}
            }
        }
        self.width.cmp(&other.width)
    }
}

impl PartialOrd for BitVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = BitParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(BitParseError::Empty);
        }
        let mut v = BitVector::zeros(s.chars().count());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                other => {
                    return Err(BitParseError::InvalidChar {
                        offset: i,
                        found: other,
                    })
                }
            }
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn text_form_is_index_order() {
        let v: BitVector = "1001".parse().unwrap();
        assert!(v.get(0));
        assert!(!v.get(1));
        assert!(v.get(3));
        assert_eq!(v.to_string(), "1001");
        assert_eq!(v.to_u64(), 0b1001);
    }

    #[test]
    fn rejects_bad_characters() {
        assert_eq!(
            "10x1".parse::<BitVector>(),
            Err(BitParseError::InvalidChar {
                offset: 2,
                found: 'x'
            })
        );
    }

    #[test]
    fn wide_vectors_keep_tail_clear() {
        let v = BitVector::ones(70);
        assert_eq!(v.count_ones(), 70);
        let w = v.xor(&BitVector::zeros(70));
        assert_eq!(w, v);
        assert_eq!(
            v.iter_ones().collect::<Vec<_>>(),
            (0..70).collect::<Vec<_>>()
        );
    }

    #[test]
    fn concat_and_slice() {
        let a: BitVector = "10".parse().unwrap();
        let b: BitVector = "011".parse().unwrap();
        let c = a.concat(&b);
        assert_eq!(c.to_string(), "10011");
        assert_eq!(c.slice(2, 5), b);
    }

    #[test]
    fn ordering_is_lexicographic() {
        let a: BitVector = "0111".parse().unwrap();
        let b: BitVector = "1000".parse().unwrap();
        assert!(a < b);
    }

    proptest! {
        #[test]
        fn string_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..150)) {
            let v = BitVector::from_bools(&bits);
            let back: BitVector = v.to_string().parse().unwrap();
            prop_assert_eq!(back, v);
        }
    }
}
