use permutest::distributions::{hypergeometric_draw, multinomial_draw, sample};
use permutest::{DistributionSpec, RngStream};
use proptest::prelude::*;

fn moments(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (mean, x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn sampler_moments() {
    let specs = [
        "normal(1,4)",
        "t(5)",
        "logistic(0,1)",
        "uniform(-10,10)",
        "laplace(0.6931471805599453,1)",
        "exp(1)",
    ];
    let n = 200_000;
    for (i, text) in specs.iter().enumerate() {
        let spec: DistributionSpec = text.parse().unwrap();
        let x = sample(&spec, n, &RngStream::new(99, i as u64));
        let (mean, var) = moments(&x);
        let sd = spec.variance().sqrt();
        assert!((mean - spec.mean()).abs() < 5.0 * sd / (n as f64).sqrt(), "{text}: mean {mean}");
        assert!((var / spec.variance() - 1.0).abs() < 0.05, "{text}: variance {var}");
        let below = x.iter().filter(|&&v| v <= spec.median()).count() as f64 / n as f64;
        assert!((below - 0.5).abs() < 0.01, "{text}: median mass {below}");
    }
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let spec = DistributionSpec::normal(0.0, 1.0).unwrap();
    let a = sample(&spec, 10, &RngStream::new(5, 0));
    assert_eq!(a, sample(&spec, 10, &RngStream::new(5, 0)));
    assert_ne!(a, sample(&spec, 10, &RngStream::new(5, 1)));
    assert_ne!(a, sample(&spec, 10, &RngStream::new(6, 0)));
}

#[test]
fn one_draw_reduces_to_bernoulli() {
    let reps = 40_000;
    let mut multi = 0u64;
    let mut hyper = 0u64;
    for r in 0..reps {
        let mut rng = RngStream::new(3, r).rng();
        multi += multinomial_draw(1, &[0.3, 0.7], &mut rng)[0];
        hyper += hypergeometric_draw(1, &[3, 7], &mut rng).unwrap()[0];
    }
    for hits in [multi, hyper] {
        let p = hits as f64 / reps as f64;
        assert!((p - 0.3).abs() < 4.0 * (0.21f64 / reps as f64).sqrt(), "{p}");
    }
}

proptest! {
    #[test]
    fn counts_sum_to_draws(s in 0u64..200, pops in prop::collection::vec(1u64..60, 2..5), seed in any::<u64>()) {
        let total: u64 = pops.iter().sum();
        let probs: Vec<f64> = pops.iter().map(|&p| p as f64 / total as f64).collect();
        let mut rng = RngStream::new(seed, 0).rng();
        let m = multinomial_draw(s, &probs, &mut rng);
        prop_assert_eq!(m.iter().sum::<u64>(), s);
        let s = s.min(total);
        let h = hypergeometric_draw(s, &pops, &mut rng).unwrap();
        prop_assert_eq!(h.iter().sum::<u64>(), s);
        prop_assert!(h.iter().zip(&pops).all(|(c, p)| c <= p));
    }

    #[test]
    fn display_round_trips(i in 0usize..6, a in -5.0f64..5.0, b in 0.1f64..5.0) {
        let spec = match i {
            0 => DistributionSpec::normal(a, b),
            1 => DistributionSpec::student_t(b + 2.0),
            2 => DistributionSpec::logistic(a, b),
            3 => DistributionSpec::uniform(a, a + b),
            4 => DistributionSpec::laplace(a, b),
            _ => DistributionSpec::exponential(b),
        }
        .unwrap();
        prop_assert_eq!(spec.to_string().parse::<DistributionSpec>().unwrap(), spec);
    }
}

#[test]
fn hypergeometric_rejects_oversized_draws() {
    let mut rng = RngStream::new(0, 0).rng();
    assert!(hypergeometric_draw(11, &[3, 7], &mut rng).is_err());
}
