//! Recursive combination of BBA-generated components.
//!
//! Starting at `j = m`, each iteration builds a `(j-1, r-1, n_j)` code,
//! lifts it with one all-one row and `m - j` all-zero rows, and permutes the
//! rows so that its first address becomes the chosen joining address `b_j`
//! and the all-one row lands on the largest pool of `b_j`. That pool is then
//! finished: its count equals its initial target exactly. Once `j` reaches
//! `m0` the remaining length is filled by one `(m0, r, n - n_H)` BBA run
//! steered towards the residual balance.
//!
//! Beyond the plain recursion, iterations whose lengths cannot possibly fit
//! are skipped (a zero-length component, a component longer than its own
//! bound, or a remainder longer than every later component can hold), and
//! when no arrangement works for `m0 = 2r` the threshold is raised one step
//! at a time up to `m`, where the whole run is a single BBA call.

use std::collections::HashSet;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::permute_mask;
use crate::address::{check_pool_count, full_mask, iter_bits, lex_cmp_bits};
use crate::bba::{initial_balance, random_mask, run, Request, SearchLimits, UnionScoring, DEFAULT_BUDGET};
use crate::code::{length_bound, length_bound_any, pool_counts, GrayCode};
use crate::error::ConstructError;

/// Default cap on the visits a single component search may spend before the
/// driver gives up on it and backtracks.
pub const DEFAULT_COMPONENT_BUDGET: u64 = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RcbbaConfig {
    pub seed: u64,
    /// Total node visits across all component searches.
    pub budget: u64,
    pub component_budget: u64,
    pub union_scoring: UnionScoring,
    pub time_limit: Option<Duration>,
    /// Raise `m0` above `2r` when the recursion dead-ends.
    pub escalate: bool,
}

impl Default for RcbbaConfig {
    fn default() -> Self {
        RcbbaConfig {
            seed: 0,
            budget: DEFAULT_BUDGET,
            component_budget: DEFAULT_COMPONENT_BUDGET,
            union_scoring: UnionScoring::default(),
            time_limit: None,
            escalate: true,
        }
    }
}

/// One appended component. Pools and items are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentRecord {
    /// Iteration counter; equals `m0` for the final component.
    pub j: usize,
    pub pools: usize,
    pub weight: usize,
    pub length: usize,
    /// First item of the component in the combined code.
    pub start: usize,
    /// Pool completed by this component; `None` for the final one.
    pub consumed_pool: Option<usize>,
    pub first_address: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RcbbaProvenance {
    pub seed: u64,
    pub m0: usize,
    pub components: Vec<ComponentRecord>,
    pub initial_balance: Vec<i64>,
    /// Target handed to the final BBA run, in its own `m0` pool order.
    pub final_desired: Vec<i64>,
    /// Balance the final run achieved, same order.
    pub final_balance: Vec<i64>,
    /// `2 * max |final_balance - final_desired| + 2`.
    pub theorem_bound: i64,
    pub deviation: usize,
    pub nodes_visited: u64,
}

impl RcbbaProvenance {
    pub fn lengths(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.length).collect()
    }

    pub fn consumed_pools(&self) -> Vec<usize> {
        self.components.iter().filter_map(|c| c.consumed_pool).collect()
    }

    pub fn theorem_holds(&self) -> bool {
        (self.deviation as i64) <= self.theorem_bound
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RcbbaOutcome {
    pub code: GrayCode,
    pub provenance: RcbbaProvenance,
}

/// Builds an `(m, r, n)` code by recursive combination.
pub fn rcbba(m: usize, r: usize, n: usize, config: &RcbbaConfig) -> Result<RcbbaOutcome, ConstructError> {
    if r < 1 || r >= m {
        return Err(ConstructError::InvalidParameter(format!(
            "need 1 <= r < m, got m={m}, r={r}"
        )));
    }
    if n < 1 {
        return Err(ConstructError::InvalidParameter("n must be at least 1".into()));
    }
    check_pool_count(m)?;
    let bound = length_bound(m, r)?;
    if n > bound {
        return Err(ConstructError::Infeasible { m, r, n, bound });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut limits = SearchLimits::new(config.budget, config.time_limit);
    // A weight-0 component holds a single address, so r = 1 goes straight
    // to the final regime.
    let first_m0 = if r == 1 { m } else { (2 * r).min(m) };
    let last_m0 = if config.escalate { m } else { first_m0 };

    // Each threshold gets an equal share of what is left, so a dead end at a
    // low m0 cannot starve the higher ones.
    let mut last_err = ConstructError::NoJoiningAddress;
    for m0 in first_m0..=last_m0 {
        let levels_left = (last_m0 - m0 + 1) as u64;
        let mut attempt = limits.child(limits.remaining() / levels_left);
        let mut driver = Driver::new(m, r, n, m0, config, &mut rng, &mut attempt);
        let res = driver.start();
        let capped = driver.capped;
        let out = res.map(|()| driver.finish());
        limits.visited += attempt.visited.min(attempt.budget);
        match out {
            Ok(mut out) => {
                out.provenance.nodes_visited = limits.visited;
                return Ok(out);
            }
            Err(Fail::Fatal(ConstructError::BudgetExhausted { .. })) if limits.remaining() > 0 => {
                last_err = ConstructError::BudgetExhausted {
                    budget: limits.budget,
                };
            }
            Err(Fail::Fatal(ConstructError::BudgetExhausted { .. })) => {
                return Err(ConstructError::BudgetExhausted {
                    budget: limits.budget,
                })
            }
            Err(Fail::Fatal(e)) => return Err(e),
            Err(Fail::Backtrack) => {
                last_err = if capped {
                    ConstructError::BudgetExhausted {
                        budget: limits.budget,
                    }
                } else if m0 == m {
                    ConstructError::Exhausted
                } else {
                    ConstructError::NoJoiningAddress
                };
            }
        }
    }
    Err(last_err)
}

enum Fail {
    Backtrack,
    Fatal(ConstructError),
}

impl From<ConstructError> for Fail {
    fn from(e: ConstructError) -> Self {
        Fail::Fatal(e)
    }
}

struct FinalRun {
    desired: Vec<i64>,
    balance: Vec<i64>,
}

struct Driver<'a> {
    m: usize,
    r: usize,
    n: usize,
    m0: usize,
    seed: u64,
    scoring: UnionScoring,
    component_budget: u64,
    rng: &'a mut ChaCha8Rng,
    limits: &'a mut SearchLimits,
    w_ini: Vec<i64>,
    w_res: Vec<i64>,
    i_res: u64,
    h: Vec<u64>,
    unions: HashSet<u64>,
    components: Vec<ComponentRecord>,
    final_run: Option<FinalRun>,
    /// Some component search stopped at its visit cap.
    capped: bool,
    /// `capacity[k]`: most items iterations `k, k-1, ..., m0+1` plus the
    /// final regime can hold.
    capacity: Vec<usize>,
}

impl<'a> Driver<'a> {
    fn new(
        m: usize,
        r: usize,
        n: usize,
        m0: usize,
        config: &RcbbaConfig,
        rng: &'a mut ChaCha8Rng,
        limits: &'a mut SearchLimits,
    ) -> Self {
        let w_ini = initial_balance(m, r, n);
        let mut capacity = vec![0usize; m + 1];
        capacity[m0] = length_bound_any(m0, r);
        for k in m0 + 1..=m {
            capacity[k] = capacity[k - 1].saturating_add(length_bound_any(k - 1, r - 1));
        }
        Driver {
            m,
            r,
            n,
            m0,
            seed: config.seed,
            scoring: config.union_scoring,
            component_budget: config.component_budget,
            rng,
            limits,
            w_res: w_ini.clone(),
            w_ini,
            i_res: full_mask(m),
            h: Vec::with_capacity(n),
            unions: HashSet::with_capacity(n),
            components: Vec::new(),
            final_run: None,
            capped: false,
            capacity,
        }
    }

    fn start(&mut self) -> Result<(), Fail> {
        if self.m0 >= self.m {
            return self.final_regime(None);
        }
        let n_m = self.w_res[self.m - 1];
        if !self.length_fits(self.m, n_m) {
            return Err(Fail::Backtrack);
        }
        self.iterate(self.m, None, n_m as usize)
    }

    /// Whether a component of length `n_j` at iteration `j` leaves a
    /// remainder the later iterations can still absorb.
    fn length_fits(&self, j: usize, n_j: i64) -> bool {
        if n_j < 1 {
            return false;
        }
        let n_j = n_j as usize;
        let placed = self.h.len() + n_j;
        n_j <= length_bound_any(j - 1, self.r - 1)
            && placed <= self.n
            && self.n - placed <= self.capacity[j - 1]
    }

    /// Runs one component search with its own visit cap. `Ok(None)` means
    /// the component failed and the caller should backtrack.
    fn search(&mut self, req: &Request) -> Result<Option<Vec<u64>>, ConstructError> {
        let mut child = self.limits.child(self.component_budget);
        let res = run(req, &mut *self.rng, &mut child);
        self.limits.visited += child.visited.min(child.budget);
        match res {
            Ok(out) => Ok(Some(out.code.masks())),
            Err(ConstructError::Exhausted) => Ok(None),
            Err(ConstructError::BudgetExhausted { .. }) if self.limits.remaining() > 0 => {
                self.capped = true;
                Ok(None)
            }
            Err(ConstructError::BudgetExhausted { .. }) => Err(ConstructError::BudgetExhausted {
                budget: self.limits.budget,
            }),
            Err(e) => Err(e),
        }
    }

    fn append(&mut self, masks: &[u64]) {
        let mut prev = self.h.last().copied();
        for &a in masks {
            if let Some(p) = prev {
                self.unions.insert(p | a);
            }
            self.h.push(a);
            prev = Some(a);
        }
        for (i, c) in pool_counts(self.m, masks.iter().copied()).into_iter().enumerate() {
            self.w_res[i] -= c as i64;
        }
    }

    fn truncate(&mut self, len: usize) {
        while self.h.len() > len {
            let a = self.h.pop().expect("non-empty");
            for i in iter_bits(a) {
                self.w_res[i] += 1;
            }
            if let Some(&p) = self.h.last() {
                self.unions.remove(&(p | a));
            }
        }
    }

    /// Weight-`r` addresses inside `I_res` at distance 2 from the current
    /// tail whose joining union is new, sorted by `W_res` at their largest
    /// pool (descending), then lexicographically.
    fn joining_candidates(&self) -> Vec<u64> {
        let last = *self.h.last().expect("non-empty base");
        let mut out: Vec<u64> = Vec::new();
        for y in iter_bits(last) {
            let core = last & !(1 << y);
            if core & !self.i_res != 0 {
                continue;
            }
            for x in iter_bits(self.i_res & !last) {
                let b = core | 1 << x;
                if !self.unions.contains(&(last | b)) {
                    out.push(b);
                }
            }
        }
        out.sort_by(|&a, &b| {
            self.w_res[top_bit(b)]
                .cmp(&self.w_res[top_bit(a)])
                .then_with(|| lex_cmp_bits(a, b))
        });
        out
    }

    fn iterate(&mut self, j: usize, b: Option<u64>, n_j: usize) -> Result<(), Fail> {
        let req = Request {
            m: j - 1,
            r: self.r - 1,
            n: n_j,
            first: None,
            desired: None,
            closing: false,
            union_scoring: self.scoring,
        };
        let Some(component) = self.search(&req)? else {
            return Err(Fail::Backtrack);
        };
        let plus = 1u64 << (j - 1);
        let lifted: Vec<u64> = component.iter().map(|a| a | plus).collect();
        let perm = match b {
            None => (0..self.m).collect::<Vec<_>>(),
            Some(b) => self.component_permutation(j, lifted[0], b),
        };
        let placed: Vec<u64> = lifted.iter().map(|&a| permute_mask(a, &perm)).collect();
        let consumed = perm[j - 1];

        let base_len = self.h.len();
        let saved_res = self.i_res;
        self.append(&placed);
        self.i_res &= !(1 << consumed);
        self.components.push(ComponentRecord {
            j,
            pools: j - 1,
            weight: self.r - 1,
            length: n_j,
            start: base_len + 1,
            consumed_pool: Some(consumed + 1),
            first_address: iter_bits(placed[0]).map(|i| i + 1).collect(),
        });

        let next = j - 1;
        let outcome = if self.h.len() == self.n {
            self.record_empty_final();
            Ok(())
        } else {
            self.try_candidates(next)
        };
        if outcome.is_ok() {
            return Ok(());
        }
        self.components.pop();
        self.i_res = saved_res;
        self.truncate(base_len);
        outcome
    }

    fn try_candidates(&mut self, j: usize) -> Result<(), Fail> {
        for b in self.joining_candidates() {
            let res = if j > self.m0 {
                let n_j = self.w_res[top_bit(b)];
                if !self.length_fits(j, n_j) {
                    continue;
                }
                self.iterate(j, Some(b), n_j as usize)
            } else {
                self.final_regime(Some(b))
            };
            match res {
                Ok(()) => return Ok(()),
                Err(Fail::Backtrack) => continue,
                Err(fatal) => return Err(fatal),
            }
        }
        Err(Fail::Backtrack)
    }

    /// `P` with `ã_1 -> b`, the all-one row `j` onto the largest pool of
    /// `b`, the rest of `{1..j}` onto the rest of `I_res` and `{j+1..m}`
    /// onto the consumed pools, each in ascending order.
    fn component_permutation(&self, j: usize, first: u64, b: u64) -> Vec<usize> {
        let plus = 1u64 << (j - 1);
        let top = 1u64 << top_bit(b);
        let mut perm = vec![0usize; self.m];
        perm[j - 1] = top_bit(b);
        for (i, t) in iter_bits(first & !plus).zip(iter_bits(b & !top)) {
            perm[i] = t;
        }
        let low = full_mask(j - 1) & !first;
        for (i, t) in iter_bits(low).zip(iter_bits(self.i_res & !b)) {
            perm[i] = t;
        }
        let high = full_mask(self.m) & !full_mask(j);
        for (i, t) in iter_bits(high).zip(iter_bits(!self.i_res & full_mask(self.m))) {
            perm[i] = t;
        }
        perm
    }

    /// `P` with `a_1 -> b`, `{1..m0}` onto `I_res` and the rest onto the
    /// consumed pools, each in ascending order. Identity when nothing has
    /// been placed yet.
    fn final_permutation(&self, first: u64, b: Option<u64>) -> Vec<usize> {
        let Some(b) = b else {
            return (0..self.m).collect();
        };
        let mut perm = vec![0usize; self.m];
        for (i, t) in iter_bits(first).zip(iter_bits(b)) {
            perm[i] = t;
        }
        for (i, t) in iter_bits(full_mask(self.m0) & !first).zip(iter_bits(self.i_res & !b)) {
            perm[i] = t;
        }
        let high = full_mask(self.m) & !full_mask(self.m0);
        for (i, t) in iter_bits(high).zip(iter_bits(!self.i_res & full_mask(self.m))) {
            perm[i] = t;
        }
        perm
    }

    fn final_regime(&mut self, b: Option<u64>) -> Result<(), Fail> {
        let m0 = self.m0;
        let n_f = self.n - self.h.len();
        if n_f == 0 {
            self.record_empty_final();
            return Ok(());
        }
        if n_f > length_bound_any(m0, self.r) {
            return Err(Fail::Backtrack);
        }
        // With nothing before it to backtrack into, the final search is
        // restarted from fresh draws until the budget runs out.
        let (component, perm, desired) = loop {
            let first = random_mask(m0, self.r, &mut *self.rng);
            let perm = self.final_permutation(first, b);
            let desired: Vec<i64> = (0..m0).map(|i| self.w_res[perm[i]]).collect();
            let req = Request {
                m: m0,
                r: self.r,
                n: n_f,
                first: Some(first),
                desired: Some(desired.clone()),
                closing: false,
                union_scoring: self.scoring,
            };
            match self.search(&req)? {
                Some(component) => break (component, perm, desired),
                None if self.h.is_empty() && self.limits.remaining() > 0 => {}
                None => return Err(Fail::Backtrack),
            }
        };
        let balance: Vec<i64> = pool_counts(m0, component.iter().copied())
            .into_iter()
            .map(|c| c as i64)
            .collect();
        let placed: Vec<u64> = component.iter().map(|&a| permute_mask(a, &perm)).collect();
        let start = self.h.len() + 1;
        self.append(&placed);
        self.components.push(ComponentRecord {
            j: m0,
            pools: m0,
            weight: self.r,
            length: n_f,
            start,
            consumed_pool: None,
            first_address: iter_bits(placed[0]).map(|i| i + 1).collect(),
        });
        self.final_run = Some(FinalRun { desired, balance });
        Ok(())
    }

    fn record_empty_final(&mut self) {
        let desired: Vec<i64> = iter_bits(self.i_res).map(|i| self.w_res[i]).collect();
        let balance = vec![0; desired.len()];
        self.final_run = Some(FinalRun { desired, balance });
    }

    fn finish(self) -> RcbbaOutcome {
        let code = GrayCode::from_masks_unchecked(self.m, self.r, &self.h);
        let deviation = code.balance().deviation;
        let run = self.final_run.expect("successful run records its final regime");
        let worst = run
            .balance
            .iter()
            .zip(&run.desired)
            .map(|(a, d)| (a - d).abs())
            .max()
            .unwrap_or(0);
        RcbbaOutcome {
            code,
            provenance: RcbbaProvenance {
                seed: self.seed,
                m0: self.m0,
                components: self.components,
                initial_balance: self.w_ini,
                final_desired: run.desired,
                final_balance: run.balance,
                theorem_bound: 2 * worst + 2,
                deviation,
                nodes_visited: self.limits.visited,
            },
        }
    }
}

#[inline]
fn top_bit(mask: u64) -> usize {
    63 - mask.leading_zeros() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validator::{validate, validate_addresses};

    fn run_ok(m: usize, r: usize, n: usize, seed: u64) -> RcbbaOutcome {
        let cfg = RcbbaConfig {
            seed,
            budget: 10_000_000,
            ..Default::default()
        };
        rcbba(m, r, n, &cfg).unwrap_or_else(|e| panic!("rcbba({m},{r},{n}) failed: {e}"))
    }

    #[test]
    fn initial_balance_example() {
        assert_eq!(initial_balance(5, 2, 7), vec![3, 3, 3, 3, 2]);
    }

    #[test]
    fn six_two_fifteen() {
        let out = run_ok(6, 2, 15, 0);
        assert_eq!(out.code.len(), 15);
        assert!(validate(&out.code).is_valid);
        assert!(out.provenance.theorem_holds());
    }

    #[test]
    fn over_the_bound_is_infeasible() {
        let err = rcbba(5, 2, 11, &RcbbaConfig::default()).unwrap_err();
        assert!(matches!(err, ConstructError::Infeasible { bound: 10, .. }));
    }

    #[test]
    fn small_m_is_a_single_bba_run() {
        let out = run_ok(6, 3, 12, 1);
        assert_eq!(out.provenance.m0, 6);
        assert_eq!(out.provenance.components.len(), 1);
        assert!(validate(&out.code).is_valid);
    }

    #[test]
    fn first_component_is_unpermuted() {
        let out = run_ok(14, 3, 200, 3);
        let first = &out.provenance.components[0];
        assert_eq!(first.j, 14);
        assert_eq!(first.consumed_pool, Some(14));
        assert!(out.code.addresses()[..first.length]
            .iter()
            .all(|a| a.contains(14)));
    }

    #[test]
    fn structure_of_a_long_run() {
        let (m, r, n) = (14, 4, 550);
        let out = run_ok(m, r, n, 7);
        let prov = &out.provenance;
        assert!(validate(&out.code).is_valid);
        assert!(prov.theorem_holds());

        // lengths add up and every prefix ending at a component boundary
        // is itself a valid code
        assert_eq!(prov.lengths().iter().sum::<usize>(), n);
        for c in &prov.components {
            let end = c.start - 1 + c.length;
            let prefix = &out.code.addresses()[..end];
            assert!(validate_addresses(m, r, prefix).is_valid, "prefix up to {end}");
        }

        // finished pools hit their initial target exactly
        let w = r * n / m;
        let counts = out.code.balance().counts;
        for p in prov.consumed_pools() {
            assert!(counts[p - 1] == w || counts[p - 1] == w + 1, "pool {p}: {}", counts[p - 1]);
            assert_eq!(counts[p - 1] as i64, prov.initial_balance[p - 1]);
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = run_ok(12, 3, 150, 11);
        let b = run_ok(12, 3, 150, 11);
        assert_eq!(a, b);
    }

    #[test]
    fn single_weight_codes() {
        let out = run_ok(7, 1, 7, 0);
        assert!(validate(&out.code).is_valid);
        assert_eq!(out.code.balance().deviation, 0);
    }

    #[test]
    fn lone_final_search_restarts_after_its_cap() {
        // the first draw for this seed needs more than one component cap
        let cfg = RcbbaConfig {
            seed: 14834002688871229242,
            budget: 2_000_000,
            ..RcbbaConfig::default()
        };
        let out = rcbba(7, 3, 35, &cfg).unwrap();
        assert!(validate(&out.code).is_valid);
        assert!(out.provenance.nodes_visited > DEFAULT_COMPONENT_BUDGET);
    }

    #[test]
    fn capped_searches_report_budget_exhaustion() {
        let cfg = RcbbaConfig {
            seed: 14834002688871229242,
            budget: 150_000,
            ..RcbbaConfig::default()
        };
        let err = rcbba(7, 3, 35, &cfg).unwrap_err();
        assert!(err.is_resource_limit(), "{err:?}");
    }
}
