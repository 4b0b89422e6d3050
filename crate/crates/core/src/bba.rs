//! Balance-guided depth-first construction of codes.
//!
//! The search walks the bipartite graph whose left nodes are the weight-`r`
//! addresses and whose right nodes are the weight-`(r+1)` unions, an edge
//! joining `a` and `u` whenever `a ⊂ u`. A path that alternates address,
//! union, address, ... with no repeated node is exactly a valid code: the
//! unions along the path are the consecutive OR-sums. At every node the
//! unvisited neighbours are ranked by the variance of the residual
//! `W_des - W_{A ∪ next}` and explored in that order, backtracking out of
//! dead ends.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::address::{iter_bits, lex_cmp_bits, Address};
use crate::code::{length_bound, GrayCode};
use crate::error::ConstructError;

pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// How union candidates are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnionScoring {
    /// Union bits are added to the path balance before taking the variance.
    #[default]
    WithUnionBits,
    /// Unions are not counted, so every union candidate scores the same and
    /// the lexicographic tie-break alone orders them.
    PathOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BbaConfig {
    pub seed: u64,
    /// Maximum number of node visits (address and union pushes).
    pub budget: u64,
    pub union_scoring: UnionScoring,
    pub time_limit: Option<Duration>,
}

impl Default for BbaConfig {
    fn default() -> Self {
        BbaConfig {
            seed: 0,
            budget: DEFAULT_BUDGET,
            union_scoring: UnionScoring::default(),
            time_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BbaOutcome {
    pub code: GrayCode,
    /// The `n - 1` consecutive unions in path order.
    pub unions: Vec<Address>,
    /// An unvisited union covering the last address, when one was requested.
    pub closing_union: Option<Address>,
    pub desired: Vec<i64>,
    pub nodes_visited: u64,
}

/// Target balance with deviation at most one: every pool gets
/// `w = floor(r*n/m)` and the first `r*n - m*w` pools get one more.
pub fn initial_balance(m: usize, r: usize, n: usize) -> Vec<i64> {
    if m == 0 {
        return Vec::new();
    }
    let total = r * n;
    let w = total / m;
    let extra = total - m * w;
    (0..m)
        .map(|i| if i < extra { (w + 1) as i64 } else { w as i64 })
        .collect()
}

/// Population variance of `desired - counts`.
pub fn penalty(desired: &[i64], counts: &[i64]) -> f64 {
    assert_eq!(desired.len(), counts.len(), "penalty needs equal-length vectors");
    if desired.is_empty() {
        return 0.0;
    }
    let len = desired.len() as f64;
    let residual: Vec<f64> = desired
        .iter()
        .zip(counts)
        .map(|(d, c)| (d - c) as f64)
        .collect();
    let mean = residual.iter().sum::<f64>() / len;
    residual.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / len
}

/// Builds an `(m, r, n)` code by balance-guided depth-first search.
///
/// When `first_address` is absent it is drawn uniformly from the weight-`r`
/// vectors with the seeded generator; the first union is drawn the same way
/// and the remaining first-step unions are kept as fallbacks. `desired`
/// defaults to [`initial_balance`].
pub fn bba(
    m: usize,
    r: usize,
    n: usize,
    first_address: Option<&Address>,
    desired: Option<&[i64]>,
    config: &BbaConfig,
) -> Result<BbaOutcome, ConstructError> {
    if r < 1 || r >= m {
        return Err(ConstructError::InvalidParameter(format!(
            "need 1 <= r < m, got m={m}, r={r}"
        )));
    }
    if n < 1 {
        return Err(ConstructError::InvalidParameter("n must be at least 1".into()));
    }
    crate::address::check_pool_count(m)?;
    let bound = length_bound(m, r)?;
    if n > bound {
        return Err(ConstructError::Infeasible { m, r, n, bound });
    }
    if let Some(a) = first_address {
        if a.len() != m || a.weight() != r {
            return Err(ConstructError::InvalidParameter(format!(
                "first address {a} is not a weight-{r} vector of length {m}"
            )));
        }
    }
    if let Some(w) = desired {
        if w.len() != m {
            return Err(ConstructError::InvalidParameter(format!(
                "desired balance has length {}, expected {m}",
                w.len()
            )));
        }
        let sum: i64 = w.iter().sum();
        let target = (n * r) as i64;
        if (sum - target).abs() > m as i64 {
            return Err(ConstructError::InvalidParameter(format!(
                "desired balance sums to {sum}, expected about {target}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut search = SearchLimits::new(config.budget, config.time_limit);
    let req = Request {
        m,
        r,
        n,
        first: first_address.map(|a| a.mask()),
        desired: desired.map(|d| d.to_vec()),
        closing: false,
        union_scoring: config.union_scoring,
    };
    run(&req, &mut rng, &mut search)
}

/// Everything the inner search needs; shared with the recombination code.
#[derive(Debug, Clone)]
pub(crate) struct Request {
    pub m: usize,
    pub r: usize,
    pub n: usize,
    pub first: Option<u64>,
    pub desired: Option<Vec<i64>>,
    /// Require an unvisited union above the last address at success.
    pub closing: bool,
    pub union_scoring: UnionScoring,
}

/// Node-visit accounting, possibly shared across several searches.
#[derive(Debug, Clone)]
pub(crate) struct SearchLimits {
    pub budget: u64,
    pub visited: u64,
    deadline: Option<Instant>,
}

impl SearchLimits {
    pub fn new(budget: u64, time_limit: Option<Duration>) -> Self {
        SearchLimits {
            budget,
            visited: 0,
            deadline: time_limit.map(|t| Instant::now() + t),
        }
    }

    pub fn remaining(&self) -> u64 {
        self.budget.saturating_sub(self.visited)
    }

    /// A child allowance of at most `cap` visits that keeps the parent's deadline.
    pub fn child(&self, cap: u64) -> SearchLimits {
        SearchLimits {
            budget: self.remaining().min(cap),
            visited: 0,
            deadline: self.deadline,
        }
    }

    #[inline]
    fn tick(&mut self) -> Result<(), ConstructError> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(ConstructError::BudgetExhausted {
                budget: self.budget,
            });
        }
        if self.visited.is_multiple_of(1024) {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    return Err(ConstructError::TimeLimit {
                        visited: self.visited,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Membership set over masks; a flat bitmap when `2^m` is small.
pub(crate) enum MaskSet {
    Dense(Vec<u64>),
    Sparse(HashSet<u64>),
}

impl MaskSet {
    pub fn new(m: usize) -> Self {
        if m <= 22 {
            MaskSet::Dense(vec![0u64; (1usize << m).div_ceil(64)])
        } else {
            MaskSet::Sparse(HashSet::new())
        }
    }

    #[inline]
    pub fn contains(&self, x: u64) -> bool {
        match self {
            MaskSet::Dense(v) => v[(x >> 6) as usize] & (1 << (x & 63)) != 0,
            MaskSet::Sparse(s) => s.contains(&x),
        }
    }

    #[inline]
    pub fn insert(&mut self, x: u64) {
        match self {
            MaskSet::Dense(v) => v[(x >> 6) as usize] |= 1 << (x & 63),
            MaskSet::Sparse(s) => {
                s.insert(x);
            }
        }
    }

    #[inline]
    pub fn remove(&mut self, x: u64) {
        match self {
            MaskSet::Dense(v) => v[(x >> 6) as usize] &= !(1 << (x & 63)),
            MaskSet::Sparse(s) => {
                s.remove(&x);
            }
        }
    }
}

pub(crate) fn random_mask<R: Rng>(m: usize, r: usize, rng: &mut R) -> u64 {
    sample(rng, m, r).iter().fold(0u64, |acc, i| acc | (1 << i))
}

struct Frame {
    is_union: bool,
    children: Vec<u64>,
    next: usize,
}

/// Mutable search state: the two paths, their visited sets and the running
/// residual `W_des - W_A` with its first two moments.
struct State {
    m: usize,
    addresses: Vec<u64>,
    unions: Vec<u64>,
    seen_addresses: MaskSet,
    seen_unions: MaskSet,
    residual: Vec<i64>,
    sum: i64,
    sum_sq: i64,
}

impl State {
    fn push_address(&mut self, a: u64) {
        self.addresses.push(a);
        self.seen_addresses.insert(a);
        for i in iter_bits(a) {
            let x = self.residual[i];
            self.sum_sq += 1 - 2 * x;
            self.residual[i] = x - 1;
        }
        self.sum -= a.count_ones() as i64;
    }

    fn pop_address(&mut self) {
        let a = self.addresses.pop().expect("non-empty address path");
        self.seen_addresses.remove(a);
        for i in iter_bits(a) {
            let x = self.residual[i] + 1;
            self.sum_sq += 2 * x - 1;
            self.residual[i] = x;
        }
        self.sum += a.count_ones() as i64;
    }

    /// `m^2` times the variance of the residual after also subtracting
    /// `extra`; exact, so ordering is platform independent.
    #[inline]
    fn score(&self, extra: u64) -> i128 {
        let mut s1 = self.sum;
        let mut s2 = self.sum_sq;
        for i in iter_bits(extra) {
            let x = self.residual[i];
            s2 += 1 - 2 * x;
            s1 -= 1;
        }
        self.m as i128 * s2 as i128 - (s1 as i128) * (s1 as i128)
    }

    fn sort_by_score(&self, mut candidates: Vec<u64>, scored: bool) -> Vec<u64> {
        if scored {
            let mut keyed: Vec<(i128, u64)> =
                candidates.iter().map(|&c| (self.score(c), c)).collect();
            keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| lex_cmp_bits(a.1, b.1)));
            keyed.into_iter().map(|(_, c)| c).collect()
        } else {
            candidates.sort_by(|&a, &b| lex_cmp_bits(a, b));
            candidates
        }
    }

    fn union_children(&self, a: u64, scoring: UnionScoring) -> Vec<u64> {
        let free = !a & crate::address::full_mask(self.m);
        let candidates: Vec<u64> = iter_bits(free)
            .map(|x| a | (1 << x))
            .filter(|&u| !self.seen_unions.contains(u))
            .collect();
        self.sort_by_score(candidates, scoring == UnionScoring::WithUnionBits)
    }

    fn address_children(&self, u: u64) -> Vec<u64> {
        let candidates: Vec<u64> = iter_bits(u)
            .map(|y| u & !(1 << y))
            .filter(|&a| !self.seen_addresses.contains(a))
            .collect();
        self.sort_by_score(candidates, true)
    }

    /// Lexicographically smallest unvisited union above `a`.
    fn closing_union(&self, a: u64) -> Option<u64> {
        let free = !a & crate::address::full_mask(self.m);
        iter_bits(free)
            .map(|x| a | (1 << x))
            .filter(|&u| !self.seen_unions.contains(u))
            .min_by(|&x, &y| lex_cmp_bits(x, y))
    }
}

/// Runs one search. The generator is advanced for the random first address
/// (when absent) and the random first union.
pub(crate) fn run<R: Rng>(
    req: &Request,
    rng: &mut R,
    limits: &mut SearchLimits,
) -> Result<BbaOutcome, ConstructError> {
    let (m, r, n) = (req.m, req.r, req.n);
    let desired = req
        .desired
        .clone()
        .unwrap_or_else(|| initial_balance(m, r, n));
    let first = match req.first {
        Some(a) => a,
        None => random_mask(m, r, rng),
    };

    let mut state = State {
        m,
        addresses: Vec::with_capacity(n),
        unions: Vec::with_capacity(n),
        seen_addresses: MaskSet::new(m),
        seen_unions: MaskSet::new(m),
        residual: desired.clone(),
        sum: desired.iter().sum(),
        sum_sq: desired.iter().map(|x| x * x).sum(),
    };

    let finish = |state: &State, closing: Option<u64>, visited: u64| BbaOutcome {
        code: GrayCode::from_masks_unchecked(m, r, &state.addresses),
        unions: state
            .unions
            .iter()
            .map(|&u| Address::from_mask_unchecked(m, u))
            .collect(),
        closing_union: closing.map(|u| Address::from_mask_unchecked(m, u)),
        desired: desired.clone(),
        nodes_visited: visited,
    };

    let base = limits.visited;
    limits.tick()?;
    state.push_address(first);
    if n == 1 {
        let closing = state.closing_union(first);
        if !req.closing || closing.is_some() {
            let visited = limits.visited - base;
            return Ok(finish(&state, closing.filter(|_| req.closing), visited));
        }
        return Err(ConstructError::Exhausted);
    }

    let mut root_children = state.union_children(first, req.union_scoring);
    if !root_children.is_empty() {
        let pick = rng.gen_range(0..root_children.len());
        let chosen = root_children.remove(pick);
        root_children.insert(0, chosen);
    }
    let mut stack = vec![Frame {
        is_union: false,
        children: root_children,
        next: 0,
    }];

    while let Some(top) = stack.last_mut() {
        if top.next >= top.children.len() {
            let done = stack.pop().expect("non-empty stack");
            if done.is_union {
                let u = state.unions.pop().expect("union path");
                state.seen_unions.remove(u);
            } else {
                state.pop_address();
            }
            continue;
        }
        let child = top.children[top.next];
        top.next += 1;
        let child_is_union = !top.is_union;
        limits.tick()?;

        if child_is_union {
            state.unions.push(child);
            state.seen_unions.insert(child);
            let children = state.address_children(child);
            stack.push(Frame {
                is_union: true,
                children,
                next: 0,
            });
        } else {
            state.push_address(child);
            if state.addresses.len() == n {
                if !req.closing {
                    let visited = limits.visited - base;
                    return Ok(finish(&state, None, visited));
                }
                if let Some(y) = state.closing_union(child) {
                    let visited = limits.visited - base;
                    return Ok(finish(&state, Some(y), visited));
                }
                state.pop_address();
                continue;
            }
            let children = state.union_children(child, req.union_scoring);
            stack.push(Frame {
                is_union: false,
                children,
                next: 0,
            });
        }
    }
    Err(ConstructError::Exhausted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validator::validate;

    fn cfg(seed: u64) -> BbaConfig {
        BbaConfig {
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn penalty_examples() {
        assert_eq!(penalty(&[0; 5], &[0; 5]), 0.0);
        assert_eq!(penalty(&[3; 5], &[1; 5]), 0.0);
        assert_eq!(penalty(&[1, 0, 1, 0], &[0; 4]), 0.25);
    }

    #[test]
    fn integer_score_tracks_variance() {
        let desired = vec![3, 1, 2, 2];
        let mut state = State {
            m: 4,
            addresses: Vec::new(),
            unions: Vec::new(),
            seen_addresses: MaskSet::new(4),
            seen_unions: MaskSet::new(4),
            residual: desired.clone(),
            sum: desired.iter().sum(),
            sum_sq: desired.iter().map(|x| x * x).sum(),
        };
        state.push_address(0b0011);
        for extra in [0u64, 0b0101, 0b1100, 0b1110] {
            let mut counts = vec![0i64; 4];
            for i in iter_bits(0b0011) {
                counts[i] += 1;
            }
            for i in iter_bits(extra) {
                counts[i] += 1;
            }
            let expected = penalty(&desired, &counts) * 16.0;
            assert!((state.score(extra) as f64 - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn builds_the_maximal_five_two_code() {
        let first = Address::from_indices(5, &[2, 3]).unwrap();
        let out = bba(5, 2, 10, Some(&first), None, &cfg(0)).unwrap();
        let report = validate(&out.code);
        assert!(report.is_valid);
        assert!(report.meets_bound);
        assert_eq!(out.code.first(), Some(&first));
        assert_eq!(out.code.balance().deviation, 0);
        assert_eq!(out.unions, out.code.consecutive_unions());
    }

    #[test]
    fn single_address() {
        let first = Address::from_indices(6, &[1, 4]).unwrap();
        let out = bba(6, 2, 1, Some(&first), None, &cfg(3)).unwrap();
        assert_eq!(out.code.addresses(), &[first]);
        assert!(out.unions.is_empty());
    }

    #[test]
    fn over_the_bound() {
        assert!(matches!(
            bba(4, 2, 6, None, None, &cfg(0)),
            Err(ConstructError::Infeasible { bound: 5, .. })
        ));
    }

    #[test]
    fn parameter_errors() {
        let c = cfg(0);
        assert!(bba(4, 0, 2, None, None, &c).is_err());
        assert!(bba(4, 4, 1, None, None, &c).is_err());
        assert!(bba(4, 2, 0, None, None, &c).is_err());
        let wrong = Address::from_indices(4, &[1]).unwrap();
        assert!(bba(4, 2, 3, Some(&wrong), None, &c).is_err());
        assert!(bba(4, 2, 3, None, Some(&[1, 1, 1]), &c).is_err());
        assert!(bba(4, 2, 3, None, Some(&[9, 9, 9, 9]), &c).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let tight = BbaConfig {
            budget: 10,
            ..Default::default()
        };
        assert!(matches!(
            bba(10, 3, 100, None, None, &tight),
            Err(ConstructError::BudgetExhausted { budget: 10 })
        ));
    }

    #[test]
    fn same_seed_same_code() {
        let a = bba(9, 3, 60, None, None, &cfg(5)).unwrap();
        let b = bba(9, 3, 60, None, None, &cfg(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn path_only_scoring_still_valid() {
        let c = BbaConfig {
            union_scoring: UnionScoring::PathOnly,
            ..Default::default()
        };
        let out = bba(8, 3, 40, None, None, &c).unwrap();
        assert!(validate(&out.code).is_valid);
    }

    #[test]
    fn full_weight_class_is_perfectly_balanced() {
        let out = bba(6, 2, 15, None, None, &cfg(1)).unwrap();
        assert_eq!(out.code.balance().deviation, 0);
        assert_eq!(out.code.balance().counts, vec![5; 6]);
    }

    #[test]
    fn closing_request_leaves_a_free_union() {
        let req = Request {
            m: 5,
            r: 2,
            n: 10,
            first: Some(0b00011),
            desired: None,
            closing: true,
            union_scoring: UnionScoring::WithUnionBits,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut limits = SearchLimits::new(DEFAULT_BUDGET, None);
        let out = run(&req, &mut rng, &mut limits).unwrap();
        let y = out.closing_union.unwrap();
        assert!(out.code.last().unwrap().is_subset_of(&y));
        assert!(!out.unions.contains(&y));
    }

    #[test]
    fn initial_balance_shape() {
        assert_eq!(initial_balance(5, 2, 7), vec![3, 3, 3, 3, 2]);
        assert_eq!(initial_balance(5, 2, 10), vec![4; 5]);
    }
}
