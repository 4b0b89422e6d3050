//! Combination calculus: augmentation, joining two codes, row
//! permutation, closing unions and the complement flip. The recursive
//! constructors built on top of it live in [`rcbba`](self::rcbba) and
//! [`maximal`](self::maximal).

mod maximal;
mod rcbba;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::address::{full_mask, iter_bits, lex_cmp_bits, Address};
use crate::code::GrayCode;
use crate::error::{CodeError, CombineError};

pub use maximal::{build_maximal, MaximalCode};
pub use rcbba::{rcbba, ComponentRecord, RcbbaConfig, RcbbaOutcome, RcbbaProvenance};

/// One augmentation step: append an all-one (`Plus`) or all-zero (`Minus`)
/// row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AugSign {
    Plus,
    Minus,
}

/// Parses specs such as `"+,2-"` or `"+, (3)-"`; `"−"` (U+2212) is accepted
/// as a minus sign. The empty string is the empty spec.
pub fn parse_aug_spec(spec: &str) -> Result<Vec<AugSign>, CodeError> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part: String = part
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '(' && *c != ')')
            .collect();
        if part.is_empty() {
            continue;
        }
        let (count, sign) = part.split_at(part.len() - part.chars().last().unwrap().len_utf8());
        let sign = match sign {
            "+" => AugSign::Plus,
            "-" | "\u{2212}" => AugSign::Minus,
            other => return Err(CodeError::Parse(format!("bad augmentation sign {other:?}"))),
        };
        let count = if count.is_empty() {
            1
        } else {
            count
                .parse::<usize>()
                .map_err(|_| CodeError::Parse(format!("bad augmentation count {count:?}")))?
        };
        out.extend(std::iter::repeat_n(sign, count));
    }
    Ok(out)
}

/// A code together with the rows appended to it, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedCode {
    pub base: GrayCode,
    pub rows: Vec<AugSign>,
}

impl AugmentedCode {
    pub fn plus_rows(&self) -> usize {
        self.rows.iter().filter(|s| **s == AugSign::Plus).count()
    }

    pub fn minus_rows(&self) -> usize {
        self.rows.len() - self.plus_rows()
    }

    pub fn m(&self) -> usize {
        self.base.m() + self.rows.len()
    }

    pub fn r(&self) -> usize {
        self.base.r() + self.plus_rows()
    }

    pub fn to_code(&self) -> Result<GrayCode, CodeError> {
        let m = self.m();
        crate::address::check_pool_count(m)?;
        let extra = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == AugSign::Plus)
            .fold(0u64, |acc, (k, _)| acc | 1 << (self.base.m() + k));
        let masks: Vec<u64> = self.base.masks().iter().map(|a| a | extra).collect();
        Ok(GrayCode::from_masks_unchecked(m, self.r(), &masks))
    }
}

pub fn augment(code: &GrayCode, rows: &[AugSign]) -> AugmentedCode {
    AugmentedCode {
        base: code.clone(),
        rows: rows.to_vec(),
    }
}

/// Joins `C1 = (m, r-1, n1)` and `C2 = (m, r, n2)` into the
/// `(m+1, r, n1+n2)` code `[C1^+, C2^-]`.
///
/// Requires the last address of `C1` to lie inside the first address of
/// `C2`, and that first address to differ from every consecutive union of
/// `C1`.
pub fn combine_pair(c1: &GrayCode, c2: &GrayCode) -> Result<GrayCode, CombineError> {
    if c1.m() != c2.m() {
        return Err(CombineError::Parameters(format!(
            "pool counts differ: {} vs {}",
            c1.m(),
            c2.m()
        )));
    }
    if c2.r() != c1.r() + 1 {
        return Err(CombineError::Parameters(format!(
            "weights must be r-1 and r, got {} and {}",
            c1.r(),
            c2.r()
        )));
    }
    let (Some(last), Some(first)) = (c1.last(), c2.first()) else {
        return Err(CombineError::Parameters("both codes must be non-empty".into()));
    };
    if !last.is_subset_of(first) {
        return Err(CombineError::NotSubset);
    }
    if let Some(k) = c1
        .consecutive_unions()
        .iter()
        .position(|u| u.mask() == first.mask())
    {
        return Err(CombineError::UnionCollision(k + 1));
    }
    let m = c1.m();
    crate::address::check_pool_count(m + 1)?;
    let top = 1u64 << m;
    let masks: Vec<u64> = c1
        .masks()
        .into_iter()
        .map(|a| a | top)
        .chain(c2.masks())
        .collect();
    Ok(GrayCode::from_masks_unchecked(m + 1, c2.r(), &masks))
}

/// Checks that `perm` (1-based images, `perm[i-1] = P(i)`) is a bijection
/// on `1..=m` and returns it 0-based.
pub(crate) fn check_permutation(m: usize, perm: &[usize]) -> Result<Vec<usize>, CodeError> {
    if perm.len() != m {
        return Err(CodeError::Permutation(format!(
            "expected {m} images, got {}",
            perm.len()
        )));
    }
    let mut seen = vec![false; m];
    let mut out = Vec::with_capacity(m);
    for &p in perm {
        if p == 0 || p > m {
            return Err(CodeError::Permutation(format!("image {p} outside 1..={m}")));
        }
        if seen[p - 1] {
            return Err(CodeError::Permutation(format!("image {p} repeated")));
        }
        seen[p - 1] = true;
        out.push(p - 1);
    }
    Ok(out)
}

/// Moves bit `i` to bit `perm[i]` (0-based).
#[inline]
pub(crate) fn permute_mask(mask: u64, perm: &[usize]) -> u64 {
    iter_bits(mask).fold(0u64, |acc, i| acc | 1 << perm[i])
}

/// Row permutation `P·H`: pool `i` of the input becomes pool `P(i)`.
/// `perm` lists the 1-based images `P(1), ..., P(m)`.
pub fn apply_row_permutation(code: &GrayCode, perm: &[usize]) -> Result<GrayCode, CodeError> {
    let p = check_permutation(code.m(), perm)?;
    let masks: Vec<u64> = code.masks().iter().map(|&a| permute_mask(a, &p)).collect();
    Ok(GrayCode::from_masks_unchecked(code.m(), code.r(), &masks))
}

/// All weight-`(r+1)` supersets of `a` that are not in `used`, in
/// lexicographic order.
pub(crate) fn free_supersets(m: usize, a: u64, used: &HashSet<u64>) -> Vec<u64> {
    let mut out: Vec<u64> = iter_bits(!a & full_mask(m))
        .map(|x| a | 1 << x)
        .filter(|u| !used.contains(u))
        .collect();
    out.sort_by(|&x, &y| lex_cmp_bits(x, y));
    out
}

fn union_set(code: &GrayCode) -> HashSet<u64> {
    code.masks().windows(2).map(|w| w[0] | w[1]).collect()
}

/// The lexicographically smallest weight-`(r+1)` superset of the last
/// address that is not a consecutive union of the code.
pub fn find_closing_union(code: &GrayCode) -> Option<Address> {
    closing_unions(code).into_iter().next()
}

/// Every valid closing union, lexicographically ordered.
pub fn closing_unions(code: &GrayCode) -> Vec<Address> {
    let Some(last) = code.last() else {
        return Vec::new();
    };
    free_supersets(code.m(), last.mask(), &union_set(code))
        .into_iter()
        .map(|u| Address::from_mask_unchecked(code.m(), u))
        .collect()
}

fn check_closing(code: &GrayCode, end: &Address, y: &Address) -> Result<(), CombineError> {
    if y.len() != code.m() {
        return Err(CombineError::InvalidClosingUnion(format!(
            "length {} differs from m={}",
            y.len(),
            code.m()
        )));
    }
    if y.weight() != code.r() + 1 {
        return Err(CombineError::InvalidClosingUnion(format!(
            "{y} does not have weight {}",
            code.r() + 1
        )));
    }
    if !end.is_subset_of(y) {
        return Err(CombineError::InvalidClosingUnion(format!("{y} does not contain {end}")));
    }
    if union_set(code).contains(&y.mask()) {
        return Err(CombineError::InvalidClosingUnion(format!(
            "{y} is already a consecutive union"
        )));
    }
    Ok(())
}

/// Complements `(u_1, ..., u_{n-1}, y)` into an `(m, m-r-1, n)` code.
pub fn flip_complement(code: &GrayCode, y: &Address) -> Result<GrayCode, CombineError> {
    let last = *code
        .last()
        .ok_or_else(|| CombineError::Parameters("code is empty".into()))?;
    check_closing(code, &last, y)?;
    let full = full_mask(code.m());
    let masks: Vec<u64> = code
        .masks()
        .windows(2)
        .map(|w| w[0] | w[1])
        .chain(std::iter::once(y.mask()))
        .map(|u| !u & full)
        .collect();
    Ok(GrayCode::from_masks_unchecked(
        code.m(),
        code.m() - code.r() - 1,
        &masks,
    ))
}

/// Complements `(y_0, u_1, ..., u_{n-1}, y)` into an `(m, m-r-1, n+1)`
/// code. `lead` must be a free superset of the first address and `tail` a
/// free superset of the last, distinct from each other.
pub fn flip_complement_closed(
    code: &GrayCode,
    lead: &Address,
    tail: &Address,
) -> Result<GrayCode, CombineError> {
    let (first, last) = match (code.first(), code.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(CombineError::Parameters("code is empty".into())),
    };
    check_closing(code, &first, lead)?;
    check_closing(code, &last, tail)?;
    if lead == tail {
        return Err(CombineError::InvalidClosingUnion(format!(
            "lead and tail unions coincide at {lead}"
        )));
    }
    let full = full_mask(code.m());
    let masks: Vec<u64> = std::iter::once(lead.mask())
        .chain(code.masks().windows(2).map(|w| w[0] | w[1]))
        .chain(std::iter::once(tail.mask()))
        .map(|u| !u & full)
        .collect();
    Ok(GrayCode::from_masks_unchecked(
        code.m(),
        code.m() - code.r() - 1,
        &masks,
    ))
}

/// The canonical permutation taking `from` onto `to` (equal weights):
/// members of `from` go to members of `to` in ascending order, the rest to
/// the rest in ascending order. Returned 0-based.
pub(crate) fn matching_permutation(m: usize, from: u64, to: u64) -> Vec<usize> {
    let full = full_mask(m);
    let mut perm = vec![0usize; m];
    for (i, t) in iter_bits(from).zip(iter_bits(to)) {
        perm[i] = t;
    }
    for (i, t) in iter_bits(!from & full).zip(iter_bits(!to & full)) {
        perm[i] = t;
    }
    perm
}

impl fmt::Display for AugSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AugSign::Plus => "+",
            AugSign::Minus => "-",
        })
    }
}

impl FromStr for AugSign {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match parse_aug_spec(s)?.as_slice() {
            [one] => Ok(*one),
            _ => Err(CodeError::Parse(format!("expected a single sign, got {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden::{example1, example2_combined, example2_first};
    use crate::validator::validate;

    #[test]
    fn plus_appends_a_one() {
        let v = GrayCode::new(6, 3, vec![Address::from_indices(6, &[1, 2, 6]).unwrap()]).unwrap();
        let aug = augment(&v, &parse_aug_spec("+").unwrap()).to_code().unwrap();
        assert_eq!(aug.m(), 7);
        assert_eq!(aug.addresses()[0].to_bools(), vec![true, true, false, false, false, true, true]);
    }

    #[test]
    fn plus_then_two_minus() {
        let spec = parse_aug_spec("+,2-").unwrap();
        assert_eq!(spec, vec![AugSign::Plus, AugSign::Minus, AugSign::Minus]);
        let h = augment(&example1(), &spec);
        assert_eq!((h.plus_rows(), h.minus_rows()), (1, 2));
        let code = h.to_code().unwrap();
        let rows = code.to_incidence();
        assert_eq!(rows.m(), 8);
        assert!(rows.rows()[5].iter().all(|&b| b));
        assert!(rows.rows()[6].iter().all(|&b| !b));
        assert!(rows.rows()[7].iter().all(|&b| !b));
        assert_eq!(code.r(), 3);
        assert!(validate(&code).is_valid);
    }

    #[test]
    fn empty_spec_is_identity() {
        let code = augment(&example1(), &parse_aug_spec("").unwrap()).to_code().unwrap();
        assert_eq!(code, example1());
    }

    #[test]
    fn spec_parsing_variants() {
        assert_eq!(parse_aug_spec("+,(3)\u{2212}").unwrap().len(), 4);
        assert_eq!(parse_aug_spec("2+").unwrap(), vec![AugSign::Plus; 2]);
        assert!(parse_aug_spec("x").is_err());
        assert_eq!("-".parse::<AugSign>().unwrap(), AugSign::Minus);
    }

    #[test]
    fn example2_combination_is_bit_exact() {
        let combined = combine_pair(&example2_first(), &example1()).unwrap();
        assert_eq!(combined.to_incidence(), example2_combined().to_incidence());
        assert_eq!(combined.balance().deviation, 0);
        assert!(validate(&combined).is_valid);
    }

    #[test]
    fn combine_rejects_non_subset() {
        // reversed, the first code ends at {1}, which is not inside {2,3}
        let err = combine_pair(&example2_first().reversed(), &example1()).unwrap_err();
        assert_eq!(err, CombineError::NotSubset);
    }

    #[test]
    fn combine_rejects_used_union() {
        // unions of c1 are {1,3} and {2,3}
        let c1 = GrayCode::from_index_sets(3, 1, &[vec![1], vec![3], vec![2]]).unwrap();
        let c2 = GrayCode::from_index_sets(3, 2, &[vec![2, 3], vec![1, 2]]).unwrap();
        assert_eq!(combine_pair(&c1, &c2).unwrap_err(), CombineError::UnionCollision(2));
        let c2 = GrayCode::from_index_sets(3, 2, &[vec![1, 2], vec![2, 3]]).unwrap();
        assert!(combine_pair(&c1, &c2).is_ok());
    }

    #[test]
    fn permutation_identity_and_reversal() {
        let code = example1();
        assert_eq!(apply_row_permutation(&code, &[1, 2, 3, 4, 5]).unwrap(), code);
        let rev = apply_row_permutation(&code, &[5, 4, 3, 2, 1]).unwrap();
        assert!(validate(&rev).is_valid);
        assert_eq!(rev.addresses()[0].indices(), vec![3, 4]);
    }

    #[test]
    fn permutation_moves_balance() {
        let code = GrayCode::from_index_sets(4, 2, &[vec![1, 2], vec![1, 3]]).unwrap();
        let p = apply_row_permutation(&code, &[2, 3, 4, 1]).unwrap();
        assert_eq!(code.balance().counts, vec![2, 1, 1, 0]);
        assert_eq!(p.balance().counts, vec![0, 2, 1, 1]);
    }

    #[test]
    fn malformed_permutations() {
        let code = example1();
        assert!(apply_row_permutation(&code, &[1, 2, 3, 4]).is_err());
        assert!(apply_row_permutation(&code, &[1, 1, 3, 4, 5]).is_err());
        assert!(apply_row_permutation(&code, &[0, 2, 3, 4, 5]).is_err());
    }

    #[test]
    fn example1_has_no_closing_union() {
        // last address {1,2}; supersets {1,2,3}, {1,2,4}, {1,2,5} are all used
        let code = example1();
        let used: Vec<Vec<usize>> = code.consecutive_unions().iter().map(|u| u.indices()).collect();
        for s in [[1, 2, 3], [1, 2, 4], [1, 2, 5]] {
            assert!(used.contains(&s.to_vec()));
        }
        assert_eq!(find_closing_union(&code), None);
    }

    #[test]
    fn single_address_closing_union() {
        let code = GrayCode::from_index_sets(5, 2, &[vec![2, 4]]).unwrap();
        assert_eq!(find_closing_union(&code).unwrap().indices(), vec![1, 2, 4]);
        assert_eq!(closing_unions(&code).len(), 3);
    }

    #[test]
    fn flip_of_example2_first_code() {
        let code = example2_first();
        let y = find_closing_union(&code).expect("a free superset of {3}");
        let flipped = flip_complement(&code, &y).unwrap();
        assert_eq!((flipped.m(), flipped.r(), flipped.len()), (5, 3, 5));
        assert!(validate(&flipped).is_valid);
        // complementing again gives back the union path
        let back: Vec<u64> = flipped.masks().iter().map(|a| !a & 0b11111).collect();
        let mut unions: Vec<u64> = code.masks().windows(2).map(|w| w[0] | w[1]).collect();
        unions.push(y.mask());
        assert_eq!(back, unions);
    }

    #[test]
    fn flip_rejects_bad_union() {
        let code = example2_first();
        let used = code.consecutive_unions()[0];
        assert!(flip_complement(&code, &used).is_err());
        let wrong_weight = Address::from_indices(5, &[3]).unwrap();
        assert!(flip_complement(&code, &wrong_weight).is_err());
    }

    #[test]
    fn closed_flip_adds_one_address() {
        let code = example2_first();
        let tail = find_closing_union(&code).unwrap();
        let lead = closing_unions(&code.reversed())
            .into_iter()
            .find(|u| *u != tail)
            .unwrap();
        let flipped = flip_complement_closed(&code, &lead, &tail).unwrap();
        assert_eq!(flipped.len(), 6);
        assert!(validate(&flipped).is_valid);
        assert!(flip_complement_closed(&code, &tail, &tail).is_err());
    }

    #[test]
    fn matching_permutation_maps_sets() {
        let p = matching_permutation(6, 0b000011, 0b100100);
        assert_eq!(permute_mask(0b000011, &p), 0b100100);
        let mut sorted = p.clone();
        sorted.sort();
        assert_eq!(sorted, (0..6).collect::<Vec<_>>());
    }
}
