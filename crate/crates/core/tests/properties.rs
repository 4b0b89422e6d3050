use proptest::prelude::*;
use proptest::sample::subsequence;

use dcpgray::bba::initial_balance;
use dcpgray::io::{from_csv, from_json, to_csv, to_json};
use dcpgray::recombine::AugSign;
use dcpgray::simulator::exhaustive_trials;
use dcpgray::{
    apply_row_permutation, augment, bba, binomial, combine_pair, length_bound, partition_items, rcbba,
    simulate_sweep, validate, Address, BbaConfig, DecodeStatus, Decoder, ErrorKind, GrayCode, Outcome,
    RcbbaConfig, SimConfig, SimMode,
};

const SMALL_BUDGET: u64 = 300_000;

/// `(m, r, n)` with `1 <= r < m <= 8` and `1 <= n <= bound`.
fn params() -> impl Strategy<Value = (usize, usize, usize)> {
    (3usize..=8)
        .prop_flat_map(|m| (Just(m), 1..m))
        .prop_flat_map(|(m, r)| (Just(m), Just(r), 1..=length_bound(m, r).unwrap()))
}

fn address(m: usize) -> impl Strategy<Value = Address> {
    proptest::collection::vec(any::<bool>(), m).prop_map(|bits| Address::from_bools(&bits).unwrap())
}

fn small_code() -> impl Strategy<Value = GrayCode> {
    (params(), any::<u64>()).prop_filter_map("search budget ran out", |((m, r, n), seed)| {
        let cfg = BbaConfig {
            seed,
            budget: SMALL_BUDGET,
            ..BbaConfig::default()
        };
        bba(m, r, n, None, None, &cfg).ok().map(|o| o.code)
    })
}

fn permutation(m: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((1..=m).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn or_sum_laws((a, b, c) in (1usize..=20).prop_flat_map(|m| (address(m), address(m), address(m)))) {
        let ab = a.or_sum(&b).unwrap();
        prop_assert_eq!(&ab, &b.or_sum(&a).unwrap());
        prop_assert_eq!(ab.or_sum(&c).unwrap(), a.or_sum(&b.or_sum(&c).unwrap()).unwrap());
        prop_assert_eq!(&a.or_sum(&a).unwrap(), &a);
        let d = |x: &Address, y: &Address| x.hamming_distance(y).unwrap();
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        if a != b {
            prop_assert!(d(&a, &b) > 0);
        }
    }

    #[test]
    fn distance_two_union_has_weight_r_plus_one(
        (m, a, i, j) in (2usize..=20)
            .prop_flat_map(|m| (Just(m), address(m), 0..m, 0..m))
    ) {
        // swap one set bit for one clear bit
        let bits = a.to_bools();
        let on: Vec<usize> = (0..m).filter(|&k| bits[k]).collect();
        let off: Vec<usize> = (0..m).filter(|&k| !bits[k]).collect();
        prop_assume!(!on.is_empty() && !off.is_empty());
        let mut swapped = bits.clone();
        swapped[on[i % on.len()]] = false;
        swapped[off[j % off.len()]] = true;
        let b = Address::from_bools(&swapped).unwrap();
        prop_assert_eq!(a.hamming_distance(&b).unwrap(), 2);
        prop_assert_eq!(a.or_sum(&b).unwrap().weight(), a.weight() + 1);
    }

    #[test]
    fn initial_balance_is_nearly_flat((m, r, n) in (1usize..=40, 0usize..=40, 0usize..=5000)) {
        let w = initial_balance(m, r, n);
        prop_assert_eq!(w.len(), m);
        prop_assert_eq!(w.iter().sum::<i64>(), (r * n) as i64);
        prop_assert!(w.iter().max().unwrap() - w.iter().min().unwrap() <= 1);
    }

    #[test]
    fn partition_covers_items((n, d) in (1usize..=500, 2usize..=20)) {
        let groups = partition_items(n, d).unwrap();
        prop_assert_eq!(groups.len(), n.div_ceil(d - 1));
        prop_assert_eq!(*groups[0].start(), 1);
        prop_assert_eq!(*groups.last().unwrap().end(), n);
        for w in groups.windows(2) {
            prop_assert_eq!(*w[0].end() + 1, *w[1].start());
        }
        let sizes: Vec<usize> = groups.iter().map(|g| g.end() - g.start() + 1).collect();
        prop_assert!(sizes.iter().all(|&s| s >= 1 && s < d));
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bba_output_is_valid_and_deterministic(((m, r, n), seed) in (params(), any::<u64>())) {
        let cfg = BbaConfig { seed, budget: SMALL_BUDGET, ..BbaConfig::default() };
        match bba(m, r, n, None, None, &cfg) {
            Ok(out) => {
                let report = validate(&out.code);
                prop_assert!(report.is_valid);
                prop_assert_eq!(out.code.len(), n);
                prop_assert_eq!(report.balance.total(), n * r);
                if n as u64 == binomial(m, r) {
                    prop_assert_eq!(report.balance.deviation, 0);
                }
                let again = bba(m, r, n, None, None, &cfg).unwrap();
                prop_assert_eq!(again.code, out.code);
            }
            Err(e) => prop_assert!(e.is_resource_limit(), "unexpected failure {}", e),
        }
    }

    #[test]
    fn bba_honours_first_address(((m, r, n), seed, pick) in (params(), any::<u64>(), any::<prop::sample::Index>())) {
        let all: Vec<Address> = (0u64..1 << m)
            .filter(|x| x.count_ones() as usize == r)
            .map(|x| Address::from_mask(m, x).unwrap())
            .collect();
        let first = pick.get(&all);
        let cfg = BbaConfig { seed, budget: SMALL_BUDGET, ..BbaConfig::default() };
        if let Ok(out) = bba(m, r, n, Some(first), None, &cfg) {
            prop_assert_eq!(&out.code.addresses()[0], first);
            prop_assert!(validate(&out.code).is_valid);
        }
    }

    #[test]
    fn file_formats_round_trip(code in small_code()) {
        prop_assert_eq!(&from_csv(&to_csv(&code)).unwrap(), &code);
        prop_assert_eq!(&from_json(&to_json(&code, None)).unwrap(), &code);
        prop_assert_eq!(&GrayCode::from_incidence(&code.to_incidence()).unwrap(), &code);
    }

    #[test]
    fn validity_survives_row_permutation(
        (code, perm) in small_code().prop_flat_map(|c| { let m = c.m(); (Just(c), permutation(m)) })
    ) {
        let before = validate(&code);
        let after = validate(&apply_row_permutation(&code, &perm).unwrap());
        prop_assert_eq!(before.is_valid, after.is_valid);
        prop_assert_eq!(before.meets_bound, after.meets_bound);
        let mut x = before.balance.counts.clone();
        let mut y = after.balance.counts.clone();
        x.sort_unstable();
        y.sort_unstable();
        prop_assert_eq!(x, y);
    }

    #[test]
    fn decoding_recovers_pairs_and_survives_one_drop(code in small_code()) {
        let dec = Decoder::new(&code);
        let addrs = code.addresses();
        for (j, a) in addrs.iter().enumerate() {
            let single = dec.decode(&Outcome::from_address(a), true).unwrap();
            prop_assert_eq!(Outcome::from_address(a).len(), code.r());
            prop_assert!(single.candidate_items.contains(&(j + 1)));
            if j + 1 == addrs.len() {
                break;
            }
            let union = a.or_sum(&addrs[j + 1]).unwrap();
            prop_assert_eq!(union.weight(), code.r() + 1);
            let res = dec.decode(&Outcome::from_address(&union), true).unwrap();
            prop_assert_eq!(res.status, DecodeStatus::ExactPair);
            prop_assert_eq!(res.pair, Some((j + 1, j + 2)));
            let pools = union.indices();
            for drop in &pools {
                let kept: Vec<usize> = pools.iter().copied().filter(|p| p != drop).collect();
                let res = dec.decode(&Outcome::new(code.m(), &kept).unwrap(), true).unwrap();
                prop_assert!(res.candidate_pairs.contains(&(j + 1)));
                prop_assert!(res.candidate_items.contains(&(j + 1)) && res.candidate_items.contains(&(j + 2)));
            }
        }
    }

    #[test]
    fn exhaustive_means_grow_with_errors(code in small_code().prop_filter("two items", |c| c.len() >= 2)) {
        let cfg = SimConfig { max_errors: code.r(), mode: SimMode::Exhaustive, ..SimConfig::default() };
        let recs = simulate_sweep(&code, &cfg).unwrap();
        for rec in &recs {
            prop_assert_eq!(rec.trials, exhaustive_trials(code.len(), code.m(), code.r(), rec.e, ErrorKind::FalseNegative));
            prop_assert_eq!(rec.trials, (code.len() as u64 - 1) * binomial(code.r() + 1, rec.e));
            prop_assert_eq!(rec.true_pair_kept, rec.trials);
        }
        for w in recs.windows(2) {
            prop_assert!(w[0].mean_candidates <= w[1].mean_candidates + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rcbba_outputs_satisfy_the_deviation_bound(
        ((m, r, n), seed) in ((5usize..=10)
            .prop_flat_map(|m| (Just(m), 1..m.min(5)))
            .prop_flat_map(|(m, r)| (Just(m), Just(r), 1..=length_bound(m, r).unwrap().min(300))), any::<u64>())
    ) {
        let cfg = RcbbaConfig { seed, budget: 2_000_000, ..RcbbaConfig::default() };
        match rcbba(m, r, n, &cfg) {
            Ok(out) => {
                let p = &out.provenance;
                prop_assert!(validate(&out.code).is_valid);
                prop_assert_eq!(out.code.len(), n);
                prop_assert!(p.theorem_holds(), "deviation {} above bound {}", p.deviation, p.theorem_bound);
                prop_assert_eq!(p.lengths().iter().sum::<usize>(), n);

                let addrs = out.code.addresses();
                for c in &p.components {
                    let end = c.start - 1 + c.length;
                    let prefix = GrayCode::new(m, r, addrs[..end].to_vec()).unwrap();
                    prop_assert!(validate(&prefix).is_valid, "prefix through j={} invalid", c.j);
                }
                let w = r * n / m;
                let counts = out.code.balance().counts;
                for pool in p.consumed_pools() {
                    let c = counts[pool - 1];
                    prop_assert!(c == w || c == w + 1, "pool {} has count {}, w = {}", pool, c, w);
                }
            }
            Err(e) => prop_assert!(e.is_resource_limit(), "unexpected failure {}", e),
        }
    }

    #[test]
    fn combination_is_column_concatenation(
        (m, r, n1, n2, seed, extra) in (4usize..=8)
            .prop_flat_map(|m| (Just(m), 2..m - 1))
            .prop_flat_map(|(m, r)| (
                Just(m),
                Just(r),
                1..=length_bound(m - 1, r - 1).unwrap(),
                1..=length_bound(m - 1, r).unwrap(),
                any::<u64>(),
                subsequence((0..m - 1).collect::<Vec<_>>(), 1..=m - 1),
            ))
    ) {
        let cfg = BbaConfig { seed, budget: SMALL_BUDGET, ..BbaConfig::default() };
        let c1 = bba(m - 1, r - 1, n1, None, None, &cfg);
        prop_assume!(c1.is_ok());
        let c1 = c1.unwrap().code;
        let last = c1.last().unwrap().indices();
        let grow = extra.iter().map(|k| k + 1).find(|p| !last.contains(p));
        prop_assume!(grow.is_some());
        let mut first: Vec<usize> = last.clone();
        first.push(grow.unwrap());
        let first = Address::from_indices(m - 1, &first).unwrap();
        let c2 = bba(m - 1, r, n2, Some(&first), None, &cfg);
        prop_assume!(c2.is_ok());
        let c2 = c2.unwrap().code;

        let direct = augment(&c1, &[AugSign::Plus])
            .to_code()
            .unwrap()
            .to_incidence()
            .hconcat(&augment(&c2, &[AugSign::Minus]).to_code().unwrap().to_incidence())
            .unwrap();
        match combine_pair(&c1, &c2) {
            Ok(joined) => {
                prop_assert_eq!(joined.to_incidence(), direct);
                prop_assert!(validate(&joined).is_valid);
            }
            Err(_) => {
                let codes = GrayCode::from_incidence(&direct);
                prop_assert!(codes.map(|c| !validate(&c).is_valid).unwrap_or(true));
            }
        }
    }
}
