//! Fixed-length binary vectors over at most 64 pools.
//!
//! Pools are numbered from 1 in every user-facing view (`indices`,
//! `from_indices`, `Display`) and from 0 in the underlying bit mask, where
//! bit `i` holds pool `i + 1`.

use std::cmp::Ordering;
use std::fmt;

use crate::error::CodeError;

/// Largest pool count an [`Address`] can hold.
pub const MAX_POOLS: usize = 64;

/// A binary vector of length `m`; bit `i` marks membership in pool `i + 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Address {
    bits: u64,
    len: u8,
}

pub(crate) fn full_mask(m: usize) -> u64 {
    if m >= 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

pub(crate) fn check_pool_count(m: usize) -> Result<(), CodeError> {
    if m == 0 || m > MAX_POOLS {
        Err(CodeError::PoolCount(m))
    } else {
        Ok(())
    }
}

/// Index-set lexicographic comparison of two masks: the set owning the
/// lowest differing pool sorts first.
#[inline]
pub(crate) fn lex_cmp_bits(a: u64, b: u64) -> Ordering {
    let diff = a ^ b;
    if diff == 0 {
        Ordering::Equal
    } else if a & (diff & diff.wrapping_neg()) != 0 {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

impl Address {
    /// Builds an address from a raw mask. Bits above `m` are rejected.
    pub fn from_mask(m: usize, bits: u64) -> Result<Self, CodeError> {
        check_pool_count(m)?;
        if bits & !full_mask(m) != 0 {
            let index = 64 - bits.leading_zeros() as usize;
            return Err(CodeError::IndexOutOfRange { index, m });
        }
        Ok(Address { bits, len: m as u8 })
    }

    pub(crate) fn from_mask_unchecked(m: usize, bits: u64) -> Self {
        debug_assert!((1..=MAX_POOLS).contains(&m) && bits & !full_mask(m) == 0);
        Address { bits, len: m as u8 }
    }

    /// The all-zero vector of length `m`.
    pub fn zeros(m: usize) -> Result<Self, CodeError> {
        Self::from_mask(m, 0)
    }

    /// Builds an address from 1-based pool indices. Duplicates collapse.
    pub fn from_indices(m: usize, indices: &[usize]) -> Result<Self, CodeError> {
        check_pool_count(m)?;
        let mut bits = 0u64;
        for &index in indices {
            if index == 0 || index > m {
                return Err(CodeError::IndexOutOfRange { index, m });
            }
            bits |= 1 << (index - 1);
        }
        Ok(Address { bits, len: m as u8 })
    }

    /// Builds an address from a 0/1 slice in pool order.
    pub fn from_bools(bits: &[bool]) -> Result<Self, CodeError> {
        check_pool_count(bits.len())?;
        let mask = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0u64, |acc, (i, _)| acc | (1 << i));
        Ok(Address {
            bits: mask,
            len: bits.len() as u8,
        })
    }

    #[inline]
    pub fn mask(&self) -> u64 {
        self.bits
    }

    /// Ambient pool count `m`.
    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    /// Number of ones.
    #[inline]
    pub fn weight(&self) -> usize {
        self.bits.count_ones() as usize
    }

    /// Membership of 1-based pool `pool`.
    pub fn contains(&self, pool: usize) -> bool {
        pool >= 1 && pool <= self.len() && self.bits & (1 << (pool - 1)) != 0
    }

    /// Sorted 1-based index set `I(a)`.
    pub fn indices(&self) -> Vec<usize> {
        iter_bits(self.bits).map(|i| i + 1).collect()
    }

    /// Largest pool index in the set, i.e. the last entry of `indices()`.
    pub fn last_index(&self) -> Option<usize> {
        if self.bits == 0 {
            None
        } else {
            Some(64 - self.bits.leading_zeros() as usize)
        }
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.bits & (1 << i) != 0).collect()
    }

    fn check_len(&self, other: &Address) -> Result<(), CodeError> {
        if self.len != other.len {
            Err(CodeError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Bitwise OR-sum, i.e. the union of the two index sets.
    pub fn or_sum(&self, other: &Address) -> Result<Address, CodeError> {
        self.check_len(other)?;
        Ok(Address {
            bits: self.bits | other.bits,
            len: self.len,
        })
    }

    /// Number of positions where the two vectors differ.
    pub fn hamming_distance(&self, other: &Address) -> Result<usize, CodeError> {
        self.check_len(other)?;
        Ok((self.bits ^ other.bits).count_ones() as usize)
    }

    /// True when every pool of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &Address) -> bool {
        self.len == other.len && self.bits & !other.bits == 0
    }

    /// Flips every bit.
    pub fn complement(&self) -> Address {
        Address {
            bits: !self.bits & full_mask(self.len()),
            len: self.len,
        }
    }
}

/// Iterates the 0-based positions of set bits in ascending order.
pub(crate) fn iter_bits(mut bits: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if bits == 0 {
            None
        } else {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(i)
        }
    })
}

impl PartialOrd for Address {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by length, then lexicographically by sorted index set, so
/// `{1,2,3} < {1,2,4} < {1,3,4}`.
impl Ord for Address {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| lex_cmp_bits(self.bits, other.bits))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address(m={}, {})", self.len, self)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in iter_bits(self.bits).enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str("}")
    }
}

/// All weight-`r` masks over `m` pools in index-set lexicographic order.
pub(crate) fn all_masks_of_weight(m: usize, r: usize) -> Vec<u64> {
    fn rec(start: usize, m: usize, left: usize, acc: u64, out: &mut Vec<u64>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for i in start..=(m - left) {
            rec(i + 1, m, left - 1, acc | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    if r <= m {
        rec(0, m, r, 0, &mut out);
    }
    out
}
