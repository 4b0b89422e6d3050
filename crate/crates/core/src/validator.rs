//! Checks a sequence of addresses against the four code constraints and
//! reports every violation found.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::code::{balance_of, length_bound, BalanceVector, GrayCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    DistinctAddresses,
    DistinctOrSums,
    ConstantWeight,
    AdjacentDistance,
}

/// One failed check. `items` holds 1-based item (column) indices: a pair of
/// colliding items, a pair of colliding union start indices, a single
/// off-weight item, or an adjacent pair `(j, j+1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub items: Vec<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub m: usize,
    pub r: usize,
    pub n: usize,
    pub is_valid: bool,
    pub violations: Vec<Violation>,
    pub balance: BalanceVector,
    pub meets_bound: bool,
}

impl ValidationReport {
    pub fn count(&self, constraint: Constraint) -> usize {
        self.violations
            .iter()
            .filter(|v| v.constraint == constraint)
            .count()
    }
}

pub fn validate(code: &GrayCode) -> ValidationReport {
    validate_addresses(code.m(), code.r(), code.addresses())
}

/// Validates raw addresses that may not share a weight (e.g. read from an
/// untrusted matrix). All addresses must have length `m`.
pub fn validate_addresses(m: usize, r: usize, addresses: &[Address]) -> ValidationReport {
    let n = addresses.len();
    let mut violations = Vec::new();

    let mut first_seen: HashMap<u64, usize> = HashMap::with_capacity(n);
    for (j, a) in addresses.iter().enumerate() {
        if let Some(&i) = first_seen.get(&a.mask()) {
            violations.push(Violation {
                constraint: Constraint::DistinctAddresses,
                items: vec![i + 1, j + 1],
                detail: format!("address {a} repeats"),
            });
        } else {
            first_seen.insert(a.mask(), j);
        }
    }

    for (j, a) in addresses.iter().enumerate() {
        if a.weight() != r {
            violations.push(Violation {
                constraint: Constraint::ConstantWeight,
                items: vec![j + 1],
                detail: format!("weight {} != {r}", a.weight()),
            });
        }
    }

    for (j, w) in addresses.windows(2).enumerate() {
        let d = (w[0].mask() ^ w[1].mask()).count_ones();
        if d != 2 {
            violations.push(Violation {
                constraint: Constraint::AdjacentDistance,
                items: vec![j + 1, j + 2],
                detail: format!("distance {d} != 2"),
            });
        }
    }

    let mut union_seen: HashMap<u64, usize> = HashMap::with_capacity(n);
    for (j, w) in addresses.windows(2).enumerate() {
        let u = w[0].mask() | w[1].mask();
        if let Some(&k) = union_seen.get(&u) {
            violations.push(Violation {
                constraint: Constraint::DistinctOrSums,
                items: vec![k + 1, j + 1],
                detail: format!(
                    "union of items ({}, {}) equals union of items ({}, {})",
                    k + 1,
                    k + 2,
                    j + 1,
                    j + 2
                ),
            });
        } else {
            union_seen.insert(u, j);
        }
    }

    let balance = balance_of(m, addresses);
    let meets_bound = length_bound(m, r).map(|b| b == n).unwrap_or(false);
    ValidationReport {
        m,
        r,
        n,
        is_valid: violations.is_empty(),
        violations,
        balance,
        meets_bound,
    }
}

pub fn is_valid(code: &GrayCode) -> bool {
    validate(code).is_valid
}
