use std::collections::BTreeMap;

use num_traits::{One, Zero};
use permutest::engine::{count_assignments, p_value, permutation_distribution, randomized_decision, Outcome};
use permutest::statistics::{ksample_quadratic, mean_diff_studentized, Parameter};
use permutest::{run_test, GroupedSample, PermutationScheme, Rational, Statistic, StatisticDescriptor};
use proptest::prelude::*;

fn stat(name: &str) -> StatisticDescriptor {
    StatisticDescriptor::from_name(name).unwrap()
}

fn alpha_strategy() -> impl Strategy<Value = Rational> {
    prop_oneof![
        Just(Rational::new(1, 100)),
        Just(Rational::new(1, 20)),
        Just(Rational::new(1, 10)),
        Just(Rational::new(1, 4)),
        (1i128..99).prop_map(|n| Rational::new(n, 100)),
    ]
}

/// Two groups, each at least `min` long, `N <= max_total`, values on a small
/// integer grid so that ties are common.
fn tied_sample(min: usize, max_total: usize) -> impl Strategy<Value = GroupedSample> {
    (min..=max_total - min)
        .prop_flat_map(move |m| (Just(m), min..=max_total - m))
        .prop_flat_map(|(m, n)| (Just(m), prop::collection::vec(0i32..4, m + n)))
        .prop_map(|(m, v)| {
            let n = v.len() - m;
            GroupedSample::new(v.into_iter().map(f64::from).collect(), vec![m, n]).unwrap()
        })
}

fn continuous_sample(min: usize, max_total: usize) -> impl Strategy<Value = GroupedSample> {
    (min..=max_total - min)
        .prop_flat_map(move |m| (Just(m), min..=max_total - m))
        .prop_flat_map(|(m, n)| (Just(m), prop::collection::vec(-10.0f64..10.0, m + n)))
        .prop_map(|(m, v)| {
            let n = v.len() - m;
            GroupedSample::new(v, vec![m, n]).unwrap()
        })
}

fn for_each_permutation(n: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], f: &mut impl FnMut(&[usize])) {
        if prefix.len() == used.len() {
            f(prefix);
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, f);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], f);
}

/// The permutation distribution over all `N!` orderings as a weighted multiset.
fn brute_force(sample: &GroupedSample, s: &dyn Statistic) -> BTreeMap<u64, Rational> {
    let mut counts: BTreeMap<u64, i128> = BTreeMap::new();
    let mut total = 0i128;
    for_each_permutation(sample.total(), &mut |order| {
        let v = s.evaluate(&sample.permuted(order)).unwrap();
        *counts.entry(v.to_bits()).or_default() += 1;
        total += 1;
    });
    counts.into_iter().map(|(k, c)| (k, Rational::new(c, total))).collect()
}

fn engine_multiset(sample: &GroupedSample, s: &dyn Statistic) -> BTreeMap<u64, Rational> {
    let d = permutation_distribution(sample, s, &PermutationScheme::exhaustive()).unwrap();
    d.atoms().into_iter().map(|(v, w)| (v.to_bits(), w)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exactness_identity(sample in tied_sample(1, 10), alpha in alpha_strategy(), which in 0usize..2) {
        let s = stat(["mean", "median"][which]);
        let r = run_test(&sample, &s, &PermutationScheme::exhaustive(), &alpha).unwrap();
        prop_assert_eq!(r.decision.attained_level(), alpha);
        prop_assert_eq!(r.decision.total as u128, count_assignments(sample.sizes()));
        prop_assert!(r.decision.a >= Rational::zero() && r.decision.a <= Rational::one());
    }

    #[test]
    fn sampled_exactness_identity(sample in continuous_sample(2, 30), alpha in alpha_strategy(), b in 1u64..300, seed in any::<u64>()) {
        let scheme = PermutationScheme::sampled(b, seed).unwrap();
        let r = run_test(&sample, &stat("mean_t"), &scheme, &alpha).unwrap();
        prop_assert_eq!(r.decision.total, b + 1);
        prop_assert_eq!(r.decision.attained_level(), alpha);
    }

    #[test]
    fn matches_full_permutation_oracle(sample in tied_sample(2, 7), which in 0usize..3) {
        let s = stat(["mean", "median", "mean_t"][which]);
        if s.evaluate(&sample).is_err() {
            return Ok(());
        }
        let exhaustive = permutation_distribution(&sample, &s, &PermutationScheme::exhaustive());
        if exhaustive.is_err() {
            return Ok(());
        }
        prop_assert_eq!(engine_multiset(&sample, &s), brute_force(&sample, &s));
    }

    #[test]
    fn cdf_is_a_distribution(sample in tied_sample(1, 9)) {
        let d = permutation_distribution(&sample, &stat("median"), &PermutationScheme::exhaustive()).unwrap();
        let atoms = d.atoms();
        let total: Rational = atoms.iter().map(|a| a.1).sum();
        prop_assert_eq!(total, Rational::one());
        let mut prev = Rational::zero();
        for (v, _) in &atoms {
            let c = d.cdf(*v);
            prop_assert!(c > prev);
            prev = c;
        }
        prop_assert_eq!(prev, Rational::one());
        prop_assert_eq!(d.cdf(atoms[0].0 - 1.0), Rational::zero());
    }

    #[test]
    fn p_value_in_unit_interval(sample in continuous_sample(2, 25), b in 1u64..200, seed in any::<u64>()) {
        let scheme = PermutationScheme::sampled(b, seed).unwrap();
        let d = permutation_distribution(&sample, &stat("mean_t"), &scheme).unwrap();
        let p = p_value(&d, d.observed());
        prop_assert!(p >= Rational::new(1, b as i128 + 1) && p <= Rational::one());
        let exhaustive = permutation_distribution(&sample, &stat("mean"), &PermutationScheme::exhaustive_with_cap(1 << 20));
        if let Ok(d) = exhaustive {
            let p = p_value(&d, d.observed());
            prop_assert!(p > Rational::zero() && p <= Rational::one());
        }
    }

    #[test]
    fn reject_iff_p_value_small(sample in continuous_sample(2, 10), alpha in alpha_strategy()) {
        let s = stat("mean");
        let d = permutation_distribution(&sample, &s, &PermutationScheme::exhaustive()).unwrap();
        let dec = randomized_decision(&d, d.observed(), &alpha).unwrap();
        let p = p_value(&d, d.observed());
        match dec.outcome {
            Outcome::Reject => prop_assert!(p <= alpha),
            Outcome::Accept => prop_assert!(p > alpha),
            Outcome::Randomize => {}
        }
    }

    #[test]
    fn scale_invariance(sample in continuous_sample(2, 10), j in -6i32..6, which in 0usize..3) {
        let s = stat(["mean", "mean_t", "median_t"][which]);
        let c = 2f64.powi(j);
        let scaled = sample.map_values(|v| v * c).unwrap();
        let alpha = Rational::new(1, 10);
        let a = run_test(&sample, &s, &PermutationScheme::exhaustive(), &alpha).unwrap();
        let b = run_test(&scaled, &s, &PermutationScheme::exhaustive(), &alpha).unwrap();
        prop_assert_eq!(a.p_value, b.p_value);
        prop_assert_eq!(a.decision.outcome, b.decision.outcome);
        prop_assert_eq!(a.decision.a, b.decision.a);
    }

    #[test]
    fn location_invariance(sample in continuous_sample(3, 10), shift in -50.0f64..50.0, which in 0usize..2) {
        let s = stat(["mean_t", "median_t"][which]);
        let shifted = sample.map_values(|v| v + shift).unwrap();
        let alpha = Rational::new(1, 10);
        let a = run_test(&sample, &s, &PermutationScheme::exhaustive(), &alpha).unwrap();
        let b = run_test(&shifted, &s, &PermutationScheme::exhaustive(), &alpha).unwrap();
        prop_assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn ksample_collapses_to_squared_mean_t(sample in continuous_sample(2, 40)) {
        let q = ksample_quadratic(&sample, Parameter::Mean, true).unwrap();
        let t = mean_diff_studentized(&sample).unwrap();
        prop_assert!((q - t * t).abs() <= 1e-9 * q.max(1.0), "{} vs {}", q, t * t);
    }

    #[test]
    fn within_group_order_is_irrelevant(sample in continuous_sample(2, 30), seed in any::<u64>(), which in 0usize..7) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let names: Vec<&str> = StatisticDescriptor::names().collect();
        let s = stat(names[which]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut groups: Vec<Vec<f64>> = sample.groups().map(<[f64]>::to_vec).collect();
        for g in &mut groups {
            g.shuffle(&mut rng);
        }
        let shuffled = GroupedSample::from_groups(&groups).unwrap();
        prop_assert_eq!(s.evaluate(&sample).ok().map(f64::to_bits), s.evaluate(&shuffled).ok().map(f64::to_bits));
    }
}

#[test]
fn three_group_oracle() {
    let sample = GroupedSample::new(vec![1.0, 2.0, 2.5, 5.0, 0.5, 3.0, 4.0], vec![2, 2, 3]).unwrap();
    let s = stat("ksample_median_t");
    assert_eq!(engine_multiset(&sample, &s), brute_force(&sample, &s));
    assert_eq!(count_assignments(sample.sizes()), 210);
}
