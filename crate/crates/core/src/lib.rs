//! Balanced constant-weight Gray codes for detecting consecutive positives.
//!
//! A code is a sequence of distinct weight-`r` binary addresses over `m`
//! pools in which adjacent addresses differ in exactly two positions and the
//! OR-sums of adjacent addresses are pairwise distinct. Used as a pooling
//! design, every item lands in `r` pools, every adjacent pair of items lights
//! up a unique set of `r + 1` pools, and a wrong pool count flags an error.
//!
//! The crate provides the code model and validator, two constructors
//! ([`bba()`] and [`recombine::rcbba`]), the combination calculus used to
//! build maximal codes, an outcome decoder, an error-injection simulator and
//! a brute-force oracle for small instances.

pub mod address;
pub mod bba;
pub mod code;
pub mod decoder;
pub mod error;
pub mod golden;
pub mod io;
pub mod oracle;
pub mod recombine;
pub mod simulator;
pub mod validator;

pub use address::Address;
pub use bba::{bba, BbaConfig, BbaOutcome, UnionScoring};
pub use code::{balance_of, binomial, length_bound, BalanceVector, GrayCode, IncidenceMatrix};
pub use decoder::{decode, partition_items, DecodeResult, DecodeStatus, Decoder, Outcome};
pub use error::{CodeError, CombineError, ConstructError, SimError};
pub use oracle::{exhaustive_best_balance, exhaustive_max, BalanceOptimum, OracleResult};
pub use recombine::{
    apply_row_permutation, augment, build_maximal, combine_pair, find_closing_union,
    flip_complement, rcbba, AugSign, AugmentedCode, RcbbaConfig, RcbbaOutcome,
};
pub use simulator::{simulate_sweep, ErrorKind, SimConfig, SimMode, SimSweepRecord};
pub use validator::{validate, validate_addresses, Constraint, ValidationReport, Violation};
