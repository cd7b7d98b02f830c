//! Fixed-length bit vectors over 𝔹^m.
//!
//! Bit `k` of a [`BitVector`] is the coefficient of 2^k, so the vector
//! `b_{m-1} … b_0` renders most-significant bit first ("10" has bit 1 set
//! and bit 0 clear). Lengths run from 1 to [`MAX_BITS`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Longest supported vector; one machine word.
pub const MAX_BITS: usize = 64;

/// Default ceiling on `m` for exhaustive enumeration over 𝔹^m.
pub const ENUMERATION_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitError {
    #[error("bit vector length {0} outside 1..={MAX_BITS}")]
    InvalidLength(usize),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("value {value:#x} does not fit in {len} bits")]
    ValueOverflow { value: u64, len: usize },
    #[error("invalid bit string {0:?}: expected only '0' and '1'")]
    Parse(String),
    #[error("enumeration over 2^{len} vectors exceeds the cap of 2^{cap}")]
    EnumerationCap { len: usize, cap: usize },
}

/// An element of 𝔹^m packed into a `u64`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    len: u8,
    bits: u64,
}

fn mask(len: usize) -> u64 {
    if len == MAX_BITS {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl BitVector {
    pub fn new(len: usize, value: u64) -> Result<Self, BitError> {
        if len == 0 || len > MAX_BITS {
            return Err(BitError::InvalidLength(len));
        }
        if value & !mask(len) != 0 {
            return Err(BitError::ValueOverflow { value, len });
        }
        Ok(Self {
            len: len as u8,
            bits: value,
        })
    }

    /// The all-zero vector of the given length.
    pub fn zero(len: usize) -> Result<Self, BitError> {
        Self::new(len, 0)
    }

    /// Uniform sample from 𝔹^len.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self, BitError> {
        let probe = Self::zero(len)?;
        Ok(Self {
            bits: rng.random::<u64>() & mask(len),
            ..probe
        })
    }

    /// Builds a vector from bits listed least-significant first.
    pub fn from_bits_lsb_first(bits: &[bool]) -> Result<Self, BitError> {
        let value = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &b)| acc | ((b as u64) << k));
        Self::new(bits.len(), value)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    /// Always false: a bit vector has at least one bit.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Numeric form: bit `k` of the result is `b_k`.
    pub fn value(&self) -> u64 {
        self.bits
    }

    /// Returns `b_k`. Panics if `k >= len`.
    pub fn bit(&self, k: usize) -> bool {
        assert!(k < self.len(), "bit index {k} out of range for length {}", self.len);
        (self.bits >> k) & 1 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Indices `k` with `b_k = 1`, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.bit(k))
    }

    fn check_len(&self, other: &Self) -> Result<(), BitError> {
        if self.len != other.len {
            return Err(BitError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// Componentwise addition modulo 2.
    pub fn xor(&self, other: &Self) -> Result<Self, BitError> {
        self.check_len(other)?;
        Ok(Self {
            len: self.len,
            bits: self.bits ^ other.bits,
        })
    }

    /// `x • y = x_{m-1}y_{m-1} ⊕ … ⊕ x_0 y_0`.
    pub fn inner_product_mod2(&self, other: &Self) -> Result<bool, BitError> {
        self.check_len(other)?;
        Ok((self.bits & other.bits).count_ones() % 2 == 1)
    }

    /// All 2^len vectors of this length in numeric order.
    pub fn enumerate(len: usize) -> Result<impl Iterator<Item = BitVector>, BitError> {
        let probe = Self::zero(len)?;
        if len > ENUMERATION_CAP {
            return Err(BitError::EnumerationCap {
                len,
                cap: ENUMERATION_CAP,
            });
        }
        Ok((0..1u64 << len).map(move |bits| BitVector { bits, ..probe }))
    }
}

/// XOR of a non-empty list of equal-length vectors.
pub fn xor_all(vectors: &[BitVector]) -> Result<BitVector, BitError> {
    let (first, rest) = vectors.split_first().ok_or(BitError::InvalidLength(0))?;
    rest.iter().try_fold(*first, |acc, v| acc.xor(v))
}

/// Counts `x ∈ 𝔹^m` with `c • x = 0` and `c • x = 1` by enumeration.
///
/// For `c = 0` the census is `(2^m, 0)`; for any other `c` it splits evenly.
pub fn cip_census(c: &BitVector) -> Result<(u64, u64), BitError> {
    cip_census_capped(c, ENUMERATION_CAP)
}

pub fn cip_census_capped(c: &BitVector, cap: usize) -> Result<(u64, u64), BitError> {
    if c.len() > cap {
        return Err(BitError::EnumerationCap { len: c.len(), cap });
    }
    let mut zero = 0u64;
    let mut one = 0u64;
    for x in BitVector::enumerate(c.len())? {
        if c.inner_product_mod2(&x)? {
            one += 1;
        } else {
            zero += 1;
        }
    }
    Ok((zero, one))
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in (0..self.len()).rev() {
            f.write_str(if self.bit(k) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = BitError;

    /// Parses the big-endian digit string, e.g. `"110010"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || s.len() > MAX_BITS {
            return Err(BitError::InvalidLength(s.len()));
        }
        let mut bits = 0u64;
        for ch in s.chars() {
            bits <<= 1;
            match ch {
                '0' => {}
                '1' => bits |= 1,
                _ => return Err(BitError::Parse(s.to_string())),
            }
        }
        Self::new(s.len(), bits)
    }
}

impl Serialize for BitVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
