//! Brute-force ground truth for small parameters.
//!
//! Both searches enumerate every valid sequence by plain recursion over an
//! explicit table of weight-`r` addresses, sharing nothing with the
//! heuristic constructors. They are exponential and meant for `C(m, r)` in
//! the tens.

use std::collections::HashMap;

use crate::address::{all_masks_of_weight, iter_bits};
use crate::code::{binomial, length_bound, GrayCode};
use crate::error::ConstructError;

/// Largest `C(m, r)` the oracle accepts.
pub const MAX_ADDRESSES: u64 = 1_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub max_length: usize,
    pub witness: GrayCode,
    pub search_nodes: u64,
    /// False when the node limit cut the search short.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceOptimum {
    pub deviation: usize,
    pub witness: GrayCode,
    pub search_nodes: u64,
}

/// Address table with distance-2 neighbours precomputed.
struct Graph {
    m: usize,
    r: usize,
    masks: Vec<u64>,
    neighbours: Vec<Vec<usize>>,
    union_id: HashMap<u64, usize>,
}

impl Graph {
    fn new(m: usize, r: usize) -> Result<Self, ConstructError> {
        if r < 1 || r > m {
            return Err(ConstructError::InvalidParameter(format!(
                "need 1 <= r <= m, got m={m}, r={r}"
            )));
        }
        if m > 20 || binomial(m, r) > MAX_ADDRESSES {
            return Err(ConstructError::InvalidParameter(format!(
                "C({m},{r}) is too large for exhaustive search"
            )));
        }
        let masks = all_masks_of_weight(m, r);
        let neighbours = masks
            .iter()
            .map(|&a| {
                masks
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| (a ^ b).count_ones() == 2)
                    .map(|(k, _)| k)
                    .collect()
            })
            .collect();
        let union_id = all_masks_of_weight(m, r + 1)
            .into_iter()
            .enumerate()
            .map(|(k, u)| (u, k))
            .collect();
        Ok(Graph {
            m,
            r,
            masks,
            neighbours,
            union_id,
        })
    }

    fn code(&self, path: &[usize]) -> GrayCode {
        let masks: Vec<u64> = path.iter().map(|&k| self.masks[k]).collect();
        GrayCode::from_masks_unchecked(self.m, self.r, &masks)
    }
}

struct Walk<'g> {
    g: &'g Graph,
    path: Vec<usize>,
    used_address: Vec<bool>,
    used_union: Vec<bool>,
    nodes: u64,
    limit: u64,
}

impl<'g> Walk<'g> {
    fn new(g: &'g Graph, limit: u64) -> Self {
        Walk {
            g,
            path: Vec::new(),
            used_address: vec![false; g.masks.len()],
            used_union: vec![false; g.union_id.len()],
            nodes: 0,
            limit,
        }
    }

    /// Extensions of the current path in lexicographic order, each with the
    /// union it would use.
    fn moves(&self) -> Vec<(usize, usize)> {
        let last = *self.path.last().expect("non-empty path");
        let a = self.g.masks[last];
        self.g.neighbours[last]
            .iter()
            .filter(|&&k| !self.used_address[k])
            .map(|&k| (k, self.g.union_id[&(a | self.g.masks[k])]))
            .filter(|&(_, u)| !self.used_union[u])
            .collect()
    }

    fn push(&mut self, k: usize, union: Option<usize>) {
        self.path.push(k);
        self.used_address[k] = true;
        if let Some(u) = union {
            self.used_union[u] = true;
        }
    }

    fn pop(&mut self, union: Option<usize>) {
        let k = self.path.pop().expect("non-empty path");
        self.used_address[k] = false;
        if let Some(u) = union {
            self.used_union[u] = false;
        }
    }
}

/// Longest valid `(m, r, ·)` sequence. The first address is fixed to
/// `{1..r}`, which loses nothing since relabelling pools preserves
/// validity. The search stops early once the length bound is reached.
pub fn exhaustive_max(m: usize, r: usize, node_limit: u64) -> Result<OracleResult, ConstructError> {
    let g = Graph::new(m, r)?;
    let bound = length_bound(m, r)?;
    let mut walk = Walk::new(&g, node_limit);
    let mut best: Vec<usize> = vec![0];
    walk.push(0, None);
    walk.nodes = 1;
    let complete = longest(&mut walk, &mut best, bound);
    Ok(OracleResult {
        max_length: best.len(),
        witness: g.code(&best),
        search_nodes: walk.nodes,
        exact: complete,
    })
}

/// Returns false if the node limit was hit.
fn longest(walk: &mut Walk, best: &mut Vec<usize>, bound: usize) -> bool {
    if walk.path.len() > best.len() {
        *best = walk.path.clone();
    }
    if best.len() == bound {
        return true;
    }
    for (k, u) in walk.moves() {
        if walk.nodes >= walk.limit {
            return false;
        }
        walk.nodes += 1;
        walk.push(k, Some(u));
        let ok = longest(walk, best, bound);
        walk.pop(Some(u));
        if !ok {
            return false;
        }
        if best.len() == bound {
            return true;
        }
    }
    true
}

struct BalanceSearch {
    n: usize,
    counts: Vec<usize>,
    best: Option<(usize, Vec<usize>)>,
    floor: usize,
}

/// A valid `(m, r, n)` code of smallest deviation, by complete search with
/// every first address tried. Fails when the node limit is exceeded or no
/// code of length `n` exists.
pub fn exhaustive_best_balance(
    m: usize,
    r: usize,
    n: usize,
    node_limit: u64,
) -> Result<BalanceOptimum, ConstructError> {
    let g = Graph::new(m, r)?;
    if n < 1 {
        return Err(ConstructError::InvalidParameter("n must be at least 1".into()));
    }
    let bound = length_bound(m, r)?;
    if n > bound {
        return Err(ConstructError::Infeasible { m, r, n, bound });
    }
    let floor = usize::from(!(n * r).is_multiple_of(m));
    let mut walk = Walk::new(&g, node_limit);
    let mut search = BalanceSearch {
        n,
        counts: vec![0; m],
        best: None,
        floor,
    };
    for start in 0..g.masks.len() {
        if walk.nodes >= walk.limit {
            return Err(ConstructError::BudgetExhausted { budget: node_limit });
        }
        walk.nodes += 1;
        walk.push(start, None);
        add(&mut search.counts, g.masks[start], 1);
        let ok = balanced(&mut walk, &mut search);
        add(&mut search.counts, g.masks[start], -1);
        walk.pop(None);
        if !ok {
            return Err(ConstructError::BudgetExhausted { budget: node_limit });
        }
        if matches!(search.best, Some((d, _)) if d == search.floor) {
            break;
        }
    }
    let (deviation, path) = search.best.ok_or(ConstructError::Exhausted)?;
    Ok(BalanceOptimum {
        deviation,
        witness: g.code(&path),
        search_nodes: walk.nodes,
    })
}

fn add(counts: &mut [usize], mask: u64, sign: i32) {
    for i in iter_bits(mask) {
        if sign > 0 {
            counts[i] += 1;
        } else {
            counts[i] -= 1;
        }
    }
}

fn balanced(walk: &mut Walk, s: &mut BalanceSearch) -> bool {
    let max = *s.counts.iter().max().expect("m >= 1");
    let min = *s.counts.iter().min().expect("m >= 1");
    if walk.path.len() == s.n {
        let d = max - min;
        if s.best.as_ref().is_none_or(|(b, _)| d < *b) {
            s.best = Some((d, walk.path.clone()));
        }
        return true;
    }
    // every later address raises a pool by at most one
    let remaining = s.n - walk.path.len();
    let lower = (max - min).saturating_sub(remaining).max(s.floor);
    if let Some((b, _)) = &s.best {
        if lower >= *b {
            return true;
        }
    }
    for (k, u) in walk.moves() {
        if walk.nodes >= walk.limit {
            return false;
        }
        walk.nodes += 1;
        walk.push(k, Some(u));
        add(&mut s.counts, walk.g.masks[k], 1);
        let ok = balanced(walk, s);
        add(&mut s.counts, walk.g.masks[k], -1);
        walk.pop(Some(u));
        if !ok {
            return false;
        }
        if matches!(s.best, Some((d, _)) if d == s.floor) {
            return true;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validator::validate;

    const LIMIT: u64 = 50_000_000;

    #[test]
    fn maxima_at_desk_scale() {
        for (m, r, expected) in [(5, 2, 10), (4, 2, 5), (3, 1, 3), (4, 3, 2)] {
            let res = exhaustive_max(m, r, LIMIT).unwrap();
            assert!(res.exact);
            assert_eq!(res.max_length, expected, "({m},{r})");
            assert!(validate(&res.witness).is_valid);
            assert_eq!(res.witness.addresses()[0].indices(), (1..=r).collect::<Vec<_>>());
        }
    }

    #[test]
    fn node_limit_marks_result_partial() {
        let res = exhaustive_max(6, 2, 5).unwrap();
        assert!(!res.exact);
        assert!(res.max_length < 15);
        assert!(validate(&res.witness).is_valid);
    }

    #[test]
    fn perfect_balance_at_the_bound() {
        let res = exhaustive_best_balance(5, 2, 10, LIMIT).unwrap();
        assert_eq!(res.deviation, 0);
        assert!(validate(&res.witness).is_valid);
    }

    #[test]
    fn single_address_deviation() {
        assert_eq!(exhaustive_best_balance(5, 2, 1, LIMIT).unwrap().deviation, 1);
        assert_eq!(exhaustive_best_balance(3, 3, 1, LIMIT).unwrap().deviation, 0);
    }

    #[test]
    fn five_two_five_optimum() {
        // 5 addresses of weight 2 over 5 pools: counts 2 each are possible
        let res = exhaustive_best_balance(5, 2, 5, LIMIT).unwrap();
        assert_eq!(res.deviation, 0);
        assert_eq!(res.witness.balance().counts, vec![2; 5]);
    }

    #[test]
    fn rejects_large_and_infeasible() {
        assert!(exhaustive_max(20, 10, LIMIT).is_err());
        assert!(matches!(
            exhaustive_best_balance(4, 2, 6, LIMIT),
            Err(ConstructError::Infeasible { .. })
        ));
        assert!(matches!(
            exhaustive_best_balance(6, 2, 15, 10),
            Err(ConstructError::BudgetExhausted { .. })
        ));
    }
}
