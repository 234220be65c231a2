use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use permutest::distributions::sample;
use permutest::statistics::{
    bootstrap_median_variance, median_atom_probabilities_exact, median_atom_weights, median_diff_studentized, variance_diff_studentized,
};
use permutest::{DistributionSpec, GroupedSample, RngStream};
use proptest::prelude::*;
use std::f64::consts::PI;

proptest! {
    #[test]
    fn bootstrap_probabilities_sum_to_one(m in 1usize..60) {
        let exact = median_atom_probabilities_exact(m);
        prop_assert_eq!(exact.len(), m);
        prop_assert!(exact.iter().all(|w| *w >= BigRational::zero()));
        prop_assert_eq!(exact.iter().cloned().sum::<BigRational>(), BigRational::one());
        let float = median_atom_weights(m);
        for (a, b) in float.iter().zip(&exact) {
            prop_assert!((a - b.to_f64().unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn bootstrap_weights_are_symmetric_for_odd_sizes(h in 0usize..40) {
        let m = 2 * h + 1;
        let w = median_atom_probabilities_exact(m);
        for l in 0..m {
            prop_assert_eq!(&w[l], &w[m - 1 - l]);
        }
    }

    #[test]
    fn bootstrap_variance_is_scale_equivariant(x in prop::collection::vec(-5.0f64..5.0, 2..40), j in -4i32..4) {
        let c = 2f64.powi(j);
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let a = bootstrap_median_variance(&x).unwrap();
        let b = bootstrap_median_variance(&scaled).unwrap();
        prop_assert!((b - c * c * a).abs() <= 1e-12 * b.abs().max(1e-300));
    }

    #[test]
    fn studentized_statistics_flip_sign_under_group_swap(x in prop::collection::vec(-5.0f64..5.0, 3..20), y in prop::collection::vec(-5.0f64..5.0, 3..20)) {
        let xy = GroupedSample::two(&x, &y).unwrap();
        let yx = GroupedSample::two(&y, &x).unwrap();
        for f in [median_diff_studentized, variance_diff_studentized] {
            if let (Ok(a), Ok(b)) = (f(&xy), f(&yx)) {
                prop_assert!((a + b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }
    }
}

/// The (m-scaled) bootstrap variance of the median should settle near `1 / (4 f(0)^2) = pi / 2` for N(0, 1).
#[test]
fn bootstrap_variance_is_consistent() {
    let normal = DistributionSpec::normal(0.0, 1.0).unwrap();
    for m in [101usize, 401] {
        let reps = 300;
        let avg = (0..reps)
            .map(|r| bootstrap_median_variance(&sample(&normal, m, &RngStream::new(17, r))).unwrap())
            .sum::<f64>()
            / reps as f64;
        assert!((avg / (PI / 2.0) - 1.0).abs() < 0.15, "m = {m}: {avg}");
    }
}
