//! Codes meeting the length bound, built by induction on `m`.
//!
//! For `m = 2r + 1` a base code using every weight-`r` address is found by
//! BBA, requiring one union to stay free above the last address. For larger
//! `m` the `(m-1, r-1)` and `(m-1, r)` maximal codes are joined, the second
//! one permuted so that it starts at the closing union of the first. For
//! `m < 2r + 1` the `(m, m-r-1)` maximal code is complemented through its
//! union path, closed by a free union at each end.

use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{free_supersets, matching_permutation, permute_mask};
use crate::address::{check_pool_count, full_mask, Address};
use crate::bba::{run, BbaConfig, BbaOutcome, Request, SearchLimits};
use crate::code::{binomial, length_bound, GrayCode};
use crate::error::ConstructError;

/// Visits allowed per restart of the base search.
const BASE_ATTEMPT_BUDGET: u64 = 20_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaximalCode {
    pub code: GrayCode,
    /// A free union above the last address, when one exists.
    pub closing_union: Option<Address>,
}

/// Builds an `(m, r, min{C(m,r), C(m,r+1)+1})` code.
pub fn build_maximal(m: usize, r: usize, config: &BbaConfig) -> Result<MaximalCode, ConstructError> {
    if r < 1 || r >= m {
        return Err(ConstructError::InvalidParameter(format!(
            "need 1 <= r < m, got m={m}, r={r}"
        )));
    }
    check_pool_count(m)?;
    let mut builder = Builder {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        limits: SearchLimits::new(config.budget, config.time_limit),
        config: config.clone(),
        memo: HashMap::new(),
    };
    let masks = if m > 2 * r {
        builder.upper(m, r)?.masks
    } else {
        builder.flipped(m, r)?
    };
    let bound = length_bound(m, r)?;
    if masks.len() != bound {
        return Err(ConstructError::Exhausted);
    }
    let unions: HashSet<u64> = masks.windows(2).map(|w| w[0] | w[1]).collect();
    let closing = masks
        .last()
        .and_then(|&a| free_supersets(m, a, &unions).first().copied())
        .map(|u| Address::from_mask_unchecked(m, u));
    Ok(MaximalCode {
        code: GrayCode::from_masks_unchecked(m, r, &masks),
        closing_union: closing,
    })
}

#[derive(Clone)]
struct Piece {
    masks: Vec<u64>,
    tail: Option<u64>,
}

struct Builder {
    rng: ChaCha8Rng,
    limits: SearchLimits,
    config: BbaConfig,
    memo: HashMap<(usize, usize), Piece>,
}

impl Builder {
    /// Maximal `(m, r)` code for `m >= 2r + 1`, with its closing union.
    fn upper(&mut self, m: usize, r: usize) -> Result<Piece, ConstructError> {
        if let Some(p) = self.memo.get(&(m, r)) {
            return Ok(p.clone());
        }
        let piece = if r == 0 {
            Piece {
                masks: vec![0],
                tail: Some(1),
            }
        } else if m == 2 * r + 1 {
            let req = Request {
                m,
                r,
                n: binomial(m, r) as usize,
                first: Some(full_mask(r)),
                desired: None,
                closing: true,
                union_scoring: self.config.union_scoring,
            };
            let out = self.base_search(&req)?;
            Piece {
                masks: out.code.masks(),
                tail: out.closing_union.map(|u| u.mask()),
            }
        } else {
            let left = self.upper(m - 1, r - 1)?;
            let right = self.upper(m - 1, r)?;
            let join = left.tail.ok_or(ConstructError::NoJoiningAddress)?;
            let perm = matching_permutation(m - 1, right.masks[0], join);
            let top = 1u64 << (m - 1);
            let masks: Vec<u64> = left
                .masks
                .iter()
                .map(|a| a | top)
                .chain(right.masks.iter().map(|&a| permute_mask(a, &perm)))
                .collect();
            let unions: HashSet<u64> = masks.windows(2).map(|w| w[0] | w[1]).collect();
            let last = *masks.last().expect("non-empty");
            let carried = right
                .tail
                .map(|y| permute_mask(y, &perm))
                .filter(|y| last & !y == 0 && !unions.contains(y));
            let tail = carried.or_else(|| free_supersets(m, last, &unions).first().copied());
            Piece { masks, tail }
        };
        self.memo.insert((m, r), piece.clone());
        Ok(piece)
    }

    /// Restarts the base search with fresh first-union draws, each attempt
    /// capped, until one succeeds or the overall budget is gone.
    fn base_search(&mut self, req: &Request) -> Result<BbaOutcome, ConstructError> {
        loop {
            let mut child = self.limits.child(BASE_ATTEMPT_BUDGET);
            let res = run(req, &mut self.rng, &mut child);
            self.limits.visited += child.visited.min(child.budget);
            match res {
                Ok(out) => return Ok(out),
                Err(ConstructError::BudgetExhausted { .. }) if self.limits.remaining() > 0 => {}
                Err(ConstructError::BudgetExhausted { .. }) => {
                    return Err(ConstructError::BudgetExhausted {
                        budget: self.limits.budget,
                    })
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Maximal `(m, r)` code for `m < 2r + 1` by complementing the union
    /// path of the `(m, m-r-1)` maximal code, extended at both ends.
    fn flipped(&mut self, m: usize, r: usize) -> Result<Vec<u64>, ConstructError> {
        let source = self.upper(m, m - r - 1)?;
        let unions: HashSet<u64> = source.masks.windows(2).map(|w| w[0] | w[1]).collect();
        let tail = source.tail.ok_or(ConstructError::NoJoiningAddress)?;
        let lead = free_supersets(m, source.masks[0], &unions)
            .into_iter()
            .find(|&u| u != tail)
            .ok_or(ConstructError::NoJoiningAddress)?;
        let full = full_mask(m);
        Ok(std::iter::once(lead)
            .chain(source.masks.windows(2).map(|w| w[0] | w[1]))
            .chain(std::iter::once(tail))
            .map(|u| !u & full)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validator::validate;

    fn check(m: usize, r: usize) -> MaximalCode {
        let out = build_maximal(m, r, &BbaConfig::default()).unwrap();
        let report = validate(&out.code);
        assert!(report.is_valid, "({m},{r}): {:?}", report.violations);
        assert!(report.meets_bound, "({m},{r}) has length {}", out.code.len());
        out
    }

    #[test]
    fn five_two_is_perfectly_balanced() {
        let out = check(5, 2);
        assert_eq!(out.code.len(), 10);
        assert_eq!(out.code.balance().deviation, 0);
    }

    #[test]
    fn six_two_by_combination() {
        assert_eq!(check(6, 2).code.len(), 15);
    }

    #[test]
    fn four_two_by_complement() {
        assert_eq!(check(4, 2).code.len(), 5);
    }

    #[test]
    fn desk_scale_table() {
        for m in 2..=9 {
            for r in 1..m.min(4) {
                check(m, r);
            }
        }
    }

    #[test]
    fn top_weight() {
        assert_eq!(check(5, 4).code.len(), 2);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_maximal(3, 3, &BbaConfig::default()).is_err());
        assert!(build_maximal(3, 0, &BbaConfig::default()).is_err());
    }
}
