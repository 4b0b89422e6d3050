//! Error-injection study: take the outcome of each consecutive positive
//! pair, drop (or add) `e` pools, decode, and record how many items remain
//! candidates.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::address::{all_masks_of_weight, full_mask, iter_bits};
use crate::code::{binomial, GrayCode};
use crate::decoder::Decoder;
use crate::error::SimError;

/// `auto` mode stays exhaustive up to this many trials per error level.
pub const AUTO_EXHAUSTIVE_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    Exhaustive,
    Sampled,
    /// Exhaustive when the trial count is at most [`AUTO_EXHAUSTIVE_LIMIT`].
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    /// Positive pools read as negative.
    #[default]
    FalseNegative,
    /// Negative pools read as positive.
    FalsePositive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub max_errors: usize,
    pub mode: SimMode,
    /// Trials per error level in sampled mode.
    pub samples: usize,
    pub seed: u64,
    pub kind: ErrorKind,
    pub allow_single: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            max_errors: 1,
            mode: SimMode::Auto,
            samples: 100_000,
            seed: 0,
            kind: ErrorKind::FalseNegative,
            allow_single: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSweepRecord {
    pub n: usize,
    pub e: usize,
    pub trials: u64,
    pub mean_candidates: f64,
    pub max_candidates: usize,
    pub fraction_of_n: f64,
    /// Trials whose candidate items contained both true items.
    #[serde(skip)]
    pub true_pair_kept: u64,
}

/// Exhaustive trial count at one error level.
pub fn exhaustive_trials(n: usize, m: usize, r: usize, e: usize, kind: ErrorKind) -> u64 {
    let pool = match kind {
        ErrorKind::FalseNegative => r + 1,
        ErrorKind::FalsePositive => m.saturating_sub(r + 1),
    };
    (n.saturating_sub(1) as u64).saturating_mul(binomial(pool, e))
}

#[derive(Clone, Copy, Default)]
struct Tally {
    sum: u64,
    max: usize,
    count: u64,
    kept: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            sum: self.sum + o.sum,
            max: self.max.max(o.max),
            count: self.count + o.count,
            kept: self.kept + o.kept,
        }
    }
}

/// Spreads the low bits of `pattern` over the set bits of `support`.
fn deposit(pattern: u64, support: u64) -> u64 {
    iter_bits(support)
        .enumerate()
        .filter(|(k, _)| pattern & (1 << k) != 0)
        .fold(0u64, |acc, (_, bit)| acc | 1 << bit)
}

fn run_trial(dec: &Decoder, j: usize, pattern: u64, kind: ErrorKind, allow_single: bool) -> Tally {
    let union = dec.union_mask(j);
    let observed = match kind {
        ErrorKind::FalseNegative => union & !deposit(pattern, union),
        ErrorKind::FalsePositive => union | deposit(pattern, !union & full_mask(dec.m())),
    };
    let res = dec.decode_mask(observed, allow_single);
    let items = &res.candidate_items;
    let kept = items.binary_search(&(j + 1)).is_ok() && items.binary_search(&(j + 2)).is_ok();
    Tally {
        sum: items.len() as u64,
        max: items.len(),
        count: 1,
        kept: u64::from(kept),
    }
}

/// Runs the study for `e = 0..=max_errors`. Trials are evaluated in
/// parallel and reduced in trial order.
pub fn simulate_sweep(code: &GrayCode, config: &SimConfig) -> Result<Vec<SimSweepRecord>, SimError> {
    let n = code.len();
    if n < 2 {
        return Err(SimError::TooShort);
    }
    let (m, r) = (code.m(), code.r());
    let (kind_name, limit) = match config.kind {
        ErrorKind::FalseNegative => ("false-negative", r),
        ErrorKind::FalsePositive => ("false-positive", m - r - 1),
    };
    if config.max_errors > limit {
        return Err(SimError::TooManyErrors {
            kind: kind_name,
            max_errors: config.max_errors,
            limit,
        });
    }
    let support = match config.kind {
        ErrorKind::FalseNegative => r + 1,
        ErrorKind::FalsePositive => m - r - 1,
    };
    let dec = Decoder::new(code);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::with_capacity(config.max_errors + 1);

    for e in 0..=config.max_errors {
        let total = exhaustive_trials(n, m, r, e, config.kind);
        let exhaustive = match config.mode {
            SimMode::Exhaustive => true,
            SimMode::Sampled => false,
            SimMode::Auto => total <= AUTO_EXHAUSTIVE_LIMIT,
        };
        let tallies: Vec<Tally> = if exhaustive {
            let patterns = all_masks_of_weight(support, e);
            (0..n - 1)
                .into_par_iter()
                .map(|j| {
                    patterns
                        .iter()
                        .map(|&p| run_trial(&dec, j, p, config.kind, config.allow_single))
                        .fold(Tally::default(), Tally::merge)
                })
                .collect()
        } else {
            if config.samples == 0 {
                return Err(SimError::NoSamples);
            }
            let draws: Vec<(usize, u64)> = (0..config.samples)
                .map(|_| {
                    let j = rng.gen_range(0..n - 1);
                    let p = sample(&mut rng, support, e)
                        .iter()
                        .fold(0u64, |acc, k| acc | 1 << k);
                    (j, p)
                })
                .collect();
            draws
                .par_iter()
                .map(|&(j, p)| run_trial(&dec, j, p, config.kind, config.allow_single))
                .collect()
        };
        let t = tallies.into_iter().fold(Tally::default(), Tally::merge);
        let mean = if t.count == 0 { 0.0 } else { t.sum as f64 / t.count as f64 };
        records.push(SimSweepRecord {
            n,
            e,
            trials: t.count,
            mean_candidates: mean,
            max_candidates: t.max,
            fraction_of_n: mean / n as f64,
            true_pair_kept: t.kept,
        });
    }
    Ok(records)
}

pub const CSV_HEADER: &str = "n,e,trials,mean_candidates,max_candidates,fraction_of_n";

pub fn records_to_csv(records: &[SimSweepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for rec in records {
        out.push_str(&format!(
            "{},{},{},{:.6},{},{:.6}\n",
            rec.n, rec.e, rec.trials, rec.mean_candidates, rec.max_candidates, rec.fraction_of_n
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden::{example1, example2_combined};

    fn exhaustive(max_errors: usize) -> SimConfig {
        SimConfig {
            max_errors,
            mode: SimMode::Exhaustive,
            ..Default::default()
        }
    }

    #[test]
    fn error_free_pairs_decode_to_two_items() {
        let recs = simulate_sweep(&example1(), &exhaustive(0)).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].trials, 9);
        assert_eq!(recs[0].mean_candidates, 2.0);
        assert_eq!(recs[0].max_candidates, 2);
        assert_eq!(recs[0].fraction_of_n, 0.2);
    }

    #[test]
    fn trial_counts_and_monotone_means() {
        let code = example2_combined();
        let recs = simulate_sweep(&code, &exhaustive(2)).unwrap();
        for rec in &recs {
            assert_eq!(rec.trials, 14 * binomial(3, rec.e));
            assert_eq!(rec.true_pair_kept, rec.trials);
        }
        assert!(recs.windows(2).all(|w| w[0].mean_candidates <= w[1].mean_candidates));
    }

    #[test]
    fn too_many_errors() {
        assert!(matches!(
            simulate_sweep(&example1(), &exhaustive(3)),
            Err(SimError::TooManyErrors { limit: 2, .. })
        ));
    }

    #[test]
    fn sampled_mode_is_seeded() {
        let cfg = SimConfig {
            max_errors: 1,
            mode: SimMode::Sampled,
            samples: 500,
            seed: 9,
            ..Default::default()
        };
        let a = simulate_sweep(&example2_combined(), &cfg).unwrap();
        let b = simulate_sweep(&example2_combined(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[1].trials, 500);
    }

    #[test]
    fn false_positive_injection() {
        let cfg = SimConfig {
            max_errors: 2,
            kind: ErrorKind::FalsePositive,
            mode: SimMode::Exhaustive,
            ..Default::default()
        };
        let recs = simulate_sweep(&example2_combined(), &cfg).unwrap();
        assert_eq!(recs[2].trials, 14 * binomial(3, 2));
        assert!(recs.iter().all(|r| r.true_pair_kept == r.trials));
    }

    #[test]
    fn csv_layout() {
        let recs = simulate_sweep(&example1(), &exhaustive(1)).unwrap();
        let csv = records_to_csv(&recs);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("10,0,9,2.000000,2,0.200000"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn deposit_spreads_bits() {
        assert_eq!(deposit(0b101, 0b1011_0000), 0b1001_0000);
    }
}
