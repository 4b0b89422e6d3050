//! Codes, incidence matrices and balance statistics.

use serde::{Deserialize, Serialize};

use crate::address::{check_pool_count, Address};
use crate::error::CodeError;

/// Binomial coefficient, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Upper bound on the length of any code with `m` pools and weight `r`:
/// `min{C(m,r), C(m,r+1)+1}`.
pub fn length_bound(m: usize, r: usize) -> Result<usize, CodeError> {
    if r < 1 || r > m {
        return Err(CodeError::InvalidWeight { m, r });
    }
    Ok(length_bound_any(m, r))
}

/// Same bound without the `r >= 1` restriction; `r = 0` admits one address.
pub(crate) fn length_bound_any(m: usize, r: usize) -> usize {
    if r > m {
        return 0;
    }
    let by_addresses = binomial(m, r);
    let by_unions = binomial(m, r + 1).saturating_add(1);
    by_addresses.min(by_unions).min(usize::MAX as u64) as usize
}

/// An ordered sequence of weight-`r` addresses over `m` pools.
///
/// Only the shape (length `m`, weight `r`) is enforced here; whether the
/// sequence satisfies the Gray-code constraints is the validator's job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayCode {
    m: usize,
    r: usize,
    addresses: Vec<Address>,
}

impl GrayCode {
    pub fn new(m: usize, r: usize, addresses: Vec<Address>) -> Result<Self, CodeError> {
        check_pool_count(m)?;
        if r > m {
            return Err(CodeError::InvalidWeight { m, r });
        }
        for (j, a) in addresses.iter().enumerate() {
            if a.len() != m {
                return Err(CodeError::LengthMismatch {
                    left: m,
                    right: a.len(),
                });
            }
            if a.weight() != r {
                return Err(CodeError::WeightMismatch {
                    index: j + 1,
                    found: a.weight(),
                    expected: r,
                });
            }
        }
        Ok(GrayCode { m, r, addresses })
    }

    /// Builds a code from 1-based index sets.
    pub fn from_index_sets(m: usize, r: usize, sets: &[Vec<usize>]) -> Result<Self, CodeError> {
        let addresses = sets
            .iter()
            .map(|s| Address::from_indices(m, s))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(m, r, addresses)
    }

    pub(crate) fn from_masks_unchecked(m: usize, r: usize, masks: &[u64]) -> Self {
        let addresses = masks
            .iter()
            .map(|&b| Address::from_mask_unchecked(m, b))
            .collect();
        GrayCode { m, r, addresses }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Number of addresses `n`.
    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }

    pub fn addresses(&self) -> &[Address] {
        &self.addresses
    }

    pub fn into_addresses(self) -> Vec<Address> {
        self.addresses
    }

    pub(crate) fn masks(&self) -> Vec<u64> {
        self.addresses.iter().map(|a| a.mask()).collect()
    }

    pub fn first(&self) -> Option<&Address> {
        self.addresses.first()
    }

    pub fn last(&self) -> Option<&Address> {
        self.addresses.last()
    }

    /// OR-sums of consecutive addresses, `n - 1` of them.
    pub fn consecutive_unions(&self) -> Vec<Address> {
        consecutive_unions(&self.addresses)
    }

    pub fn balance(&self) -> BalanceVector {
        balance_of(self.m, &self.addresses)
    }

    /// The same addresses in reverse order.
    pub fn reversed(&self) -> GrayCode {
        let mut addresses = self.addresses.clone();
        addresses.reverse();
        GrayCode {
            m: self.m,
            r: self.r,
            addresses,
        }
    }

    /// Sorted 1-based index sets, one per address.
    pub fn index_sets(&self) -> Vec<Vec<usize>> {
        self.addresses.iter().map(|a| a.indices()).collect()
    }

    pub fn to_incidence(&self) -> IncidenceMatrix {
        let rows = (0..self.m)
            .map(|i| {
                self.addresses
                    .iter()
                    .map(|a| a.mask() & (1 << i) != 0)
                    .collect()
            })
            .collect();
        IncidenceMatrix {
            m: self.m,
            n: self.len(),
            rows,
        }
    }

    /// Reads a code back from its incidence matrix. The weight is taken from
    /// the first column; an empty matrix yields `r = 0`.
    pub fn from_incidence(h: &IncidenceMatrix) -> Result<Self, CodeError> {
        let columns = h.columns()?;
        let r = columns.first().map(|a| a.weight()).unwrap_or(0);
        Self::new(h.m, r, columns)
    }
}

/// OR-sums of consecutive entries of `addresses`; empty for fewer than two.
pub fn consecutive_unions(addresses: &[Address]) -> Vec<Address> {
    addresses
        .windows(2)
        .map(|w| Address::from_mask_unchecked(w[0].len(), w[0].mask() | w[1].mask()))
        .collect()
}

/// Per-pool occupancy counts and their spread.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceVector {
    pub counts: Vec<usize>,
    pub deviation: usize,
}

impl BalanceVector {
    pub fn from_counts(counts: Vec<usize>) -> Self {
        let max = counts.iter().copied().max().unwrap_or(0);
        let min = counts.iter().copied().min().unwrap_or(0);
        BalanceVector {
            counts,
            deviation: max - min,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Row sums of the incidence matrix of `addresses` over `m` pools.
pub fn balance_of(m: usize, addresses: &[Address]) -> BalanceVector {
    BalanceVector::from_counts(pool_counts(m, addresses.iter().map(|a| a.mask())))
}

pub(crate) fn pool_counts(m: usize, masks: impl IntoIterator<Item = u64>) -> Vec<usize> {
    let mut counts = vec![0usize; m];
    for bits in masks {
        for i in crate::address::iter_bits(bits) {
            counts[i] += 1;
        }
    }
    counts
}

/// An `m x n` binary matrix; row `i` lists pool `i`'s items, column `j` is
/// the transpose of address `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    m: usize,
    n: usize,
    rows: Vec<Vec<bool>>,
}

impl IncidenceMatrix {
    pub fn from_rows(rows: Vec<Vec<bool>>) -> Result<Self, CodeError> {
        let m = rows.len();
        let n = rows.first().map(|r| r.len()).unwrap_or(0);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(CodeError::Ragged {
                    row: i + 1,
                    found: row.len(),
                    expected: n,
                });
            }
        }
        Ok(IncidenceMatrix { m, n, rows })
    }

    /// Parses rows of `0`/`1` integers; anything else is rejected.
    pub fn from_int_rows(rows: &[Vec<u8>]) -> Result<Self, CodeError> {
        let mut out = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let mut bits = Vec::with_capacity(row.len());
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => bits.push(false),
                    1 => bits.push(true),
                    other => {
                        return Err(CodeError::NonBinary {
                            row: i + 1,
                            column: j + 1,
                            symbol: other.to_string(),
                        })
                    }
                }
            }
            out.push(bits);
        }
        Self::from_rows(out)
    }

    /// Number of pools (rows).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of items (columns).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn get(&self, row: usize, column: usize) -> bool {
        self.rows[row][column]
    }

    /// Columns as addresses (without any weight check).
    pub fn columns(&self) -> Result<Vec<Address>, CodeError> {
        check_pool_count(self.m)?;
        Ok((0..self.n)
            .map(|j| {
                let bits = self
                    .rows
                    .iter()
                    .enumerate()
                    .filter(|(_, row)| row[j])
                    .fold(0u64, |acc, (i, _)| acc | (1 << i));
                Address::from_mask_unchecked(self.m, bits)
            })
            .collect())
    }

    /// Row sums.
    pub fn balance(&self) -> BalanceVector {
        BalanceVector::from_counts(
            self.rows
                .iter()
                .map(|row| row.iter().filter(|&&b| b).count())
                .collect(),
        )
    }

    /// Appends the columns of `other` to the right.
    pub fn hconcat(&self, other: &IncidenceMatrix) -> Result<IncidenceMatrix, CodeError> {
        if self.m != other.m {
            return Err(CodeError::LengthMismatch {
                left: self.m,
                right: other.m,
            });
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Ok(IncidenceMatrix {
            m: self.m,
            n: self.n + other.n,
            rows,
        })
    }
}
