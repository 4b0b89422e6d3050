//! Interpreting pooled outcomes against a code.
//!
//! An error-free pair `(j, j+1)` lights exactly the `r + 1` pools of
//! `a_j ∨ a_{j+1}` and an error-free single item exactly the `r` pools of
//! `a_j`; any other count proves an error. Under false negatives the true
//! union is a superset of the observed pools, under false positives a
//! subset, which narrows the candidates.
//!
//! The false-positive model (`|P| > r + 1`) is an extension: pairs whose
//! union is contained in the observed pools, plus contained single
//! addresses when singles are allowed.

use std::collections::{BTreeSet, HashMap};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::address::{iter_bits, Address};
use crate::code::GrayCode;
use crate::error::CodeError;

/// Set of positive pools, 1-based in the public view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    m: usize,
    mask: u64,
}

impl Outcome {
    /// Duplicate indices collapse; out-of-range indices are rejected.
    pub fn new(m: usize, positive_pools: &[usize]) -> Result<Self, CodeError> {
        let a = Address::from_indices(m, positive_pools)?;
        Ok(Outcome { m, mask: a.mask() })
    }

    pub fn from_address(a: &Address) -> Self {
        Outcome {
            m: a.len(),
            mask: a.mask(),
        }
    }

    pub fn positive_pools(&self) -> Vec<usize> {
        iter_bits(self.mask).map(|i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeStatus {
    ExactPair,
    ExactSingle,
    ErrorFalseNegative,
    ErrorFalsePositive,
    Ambiguous,
}

/// Item indices are 1-based; a pair is reported by its start index `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub status: DecodeStatus,
    pub pair: Option<(usize, usize)>,
    pub single: Option<usize>,
    pub inferred_error_count: usize,
    pub candidate_items: Vec<usize>,
    pub candidate_pairs: Vec<usize>,
}

/// A code with lookup tables from address and union patterns to positions.
/// Build once, share read-only.
#[derive(Debug, Clone)]
pub struct Decoder {
    m: usize,
    r: usize,
    addresses: Vec<u64>,
    unions: Vec<u64>,
    address_index: HashMap<u64, usize>,
    union_index: HashMap<u64, usize>,
}

impl Decoder {
    pub fn new(code: &GrayCode) -> Self {
        let addresses = code.masks();
        let unions: Vec<u64> = addresses.windows(2).map(|w| w[0] | w[1]).collect();
        let address_index = addresses
            .iter()
            .enumerate()
            .rev()
            .map(|(j, &a)| (a, j))
            .collect();
        let union_index = unions
            .iter()
            .enumerate()
            .rev()
            .map(|(j, &u)| (u, j))
            .collect();
        Decoder {
            m: code.m(),
            r: code.r(),
            addresses,
            unions,
            address_index,
            union_index,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Number of items.
    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }

    pub(crate) fn union_mask(&self, j: usize) -> u64 {
        self.unions[j]
    }

    pub fn decode(&self, outcome: &Outcome, allow_single: bool) -> Result<DecodeResult, CodeError> {
        if outcome.m != self.m {
            return Err(CodeError::LengthMismatch {
                left: self.m,
                right: outcome.m,
            });
        }
        Ok(self.decode_mask(outcome.mask, allow_single))
    }

    /// 0-based pair starts whose union contains `p`.
    fn pairs_covering(&self, p: u64) -> impl Iterator<Item = usize> + '_ {
        self.unions
            .iter()
            .enumerate()
            .filter(move |(_, &u)| p & !u == 0)
            .map(|(j, _)| j)
    }

    fn singles_covering(&self, p: u64) -> impl Iterator<Item = usize> + '_ {
        self.addresses
            .iter()
            .enumerate()
            .filter(move |(_, &a)| p & !a == 0)
            .map(|(j, _)| j)
    }

    fn pairs_within(&self, p: u64) -> impl Iterator<Item = usize> + '_ {
        self.unions
            .iter()
            .enumerate()
            .filter(move |(_, &u)| u & !p == 0)
            .map(|(j, _)| j)
    }

    fn singles_within(&self, p: u64) -> impl Iterator<Item = usize> + '_ {
        self.addresses
            .iter()
            .enumerate()
            .filter(move |(_, &a)| a & !p == 0)
            .map(|(j, _)| j)
    }

    pub(crate) fn decode_mask(&self, p: u64, allow_single: bool) -> DecodeResult {
        let k = p.count_ones() as usize;
        let r = self.r;

        if k == r + 1 {
            if let Some(&j) = self.union_index.get(&p) {
                return DecodeResult {
                    status: DecodeStatus::ExactPair,
                    pair: Some((j + 1, j + 2)),
                    single: None,
                    inferred_error_count: 0,
                    candidate_items: vec![j + 1, j + 2],
                    candidate_pairs: vec![j + 1],
                };
            }
        }

        let exact_single = if allow_single && k == r {
            self.address_index.get(&p).copied()
        } else {
            None
        };

        if k <= r {
            let pairs: Vec<usize> = self.pairs_covering(p).collect();
            let singles: Vec<usize> = if allow_single {
                self.singles_covering(p).collect()
            } else {
                Vec::new()
            };
            let items = collect_items(&pairs, &singles);
            let pairs = pairs.into_iter().map(|j| j + 1).collect::<Vec<_>>();
            if let Some(j) = exact_single {
                let status = if pairs.is_empty() {
                    DecodeStatus::ExactSingle
                } else {
                    DecodeStatus::Ambiguous
                };
                let candidate_items = if pairs.is_empty() { vec![j + 1] } else { items };
                return DecodeResult {
                    status,
                    pair: None,
                    single: Some(j + 1),
                    inferred_error_count: 0,
                    candidate_items,
                    candidate_pairs: pairs,
                };
            }
            return DecodeResult {
                status: DecodeStatus::ErrorFalseNegative,
                pair: None,
                single: None,
                inferred_error_count: r + 1 - k,
                candidate_items: items,
                candidate_pairs: pairs,
            };
        }

        // k >= r + 1 and no exact pair: at least one pool too many.
        let pairs: Vec<usize> = self.pairs_within(p).collect();
        let singles: Vec<usize> = if allow_single {
            self.singles_within(p).collect()
        } else {
            Vec::new()
        };
        let inferred_error_count = if k > r + 1 {
            k - (r + 1)
        } else if !singles.is_empty() {
            1
        } else {
            // Same count as a pair but a different pattern: one missing and
            // one spurious pool at least.
            2
        };
        let items = collect_items(&pairs, &singles);
        DecodeResult {
            status: DecodeStatus::ErrorFalsePositive,
            pair: None,
            single: None,
            inferred_error_count,
            candidate_items: items,
            candidate_pairs: pairs.into_iter().map(|j| j + 1).collect(),
        }
    }
}

fn collect_items(pairs: &[usize], singles: &[usize]) -> Vec<usize> {
    let mut items = BTreeSet::new();
    for &j in pairs {
        items.insert(j + 1);
        items.insert(j + 2);
    }
    for &j in singles {
        items.insert(j + 1);
    }
    items.into_iter().collect()
}

/// One-shot decode; builds the lookup tables each call.
pub fn decode(
    code: &GrayCode,
    outcome: &Outcome,
    allow_single: bool,
) -> Result<DecodeResult, CodeError> {
    Decoder::new(code).decode(outcome, allow_single)
}

/// Splits items `1..=n_items` into `ceil(n/(d-1))` contiguous groups of at
/// most `d - 1` items whose sizes differ by at most one, larger groups
/// first. With at most `d` consecutive positives, at most two adjacent
/// groups contain positives.
pub fn partition_items(n_items: usize, d: usize) -> Result<Vec<RangeInclusive<usize>>, CodeError> {
    if d < 2 {
        return Err(CodeError::Parse(format!("group span d={d} must be at least 2")));
    }
    if n_items == 0 {
        return Err(CodeError::Parse("need at least one item".into()));
    }
    let groups = n_items.div_ceil(d - 1);
    let base = n_items / groups;
    let extra = n_items % groups;
    let mut out = Vec::with_capacity(groups);
    let mut start = 1;
    for g in 0..groups {
        let size = base + usize::from(g < extra);
        out.push(start..=start + size - 1);
        start += size;
    }
    Ok(out)
}
