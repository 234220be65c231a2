//! Acceptance checks. Each criterion prints detail lines followed by a single
//! `PASS`/`FAIL` line; the process exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::One;
use permutest::diagnostics::contiguity::expected_ratio_exact;
use permutest::diagnostics::coupling::coupling_bound_check;
use permutest::diagnostics::hoeffding::{hoeffding_pair_check, SampleSource, DEFAULT_THRESHOLD};
use permutest::diagnostics::ks::one_sample_distance;
use permutest::diagnostics::contiguity_limit_check;
use permutest::distributions::sample;
use permutest::engine::permutation_distribution;
use permutest::montecarlo::{rejection_probability, RejectionRule, Sidedness, SimulationPlan, SimulationTable};
use permutest::statistics::PooledSum;
use permutest::{run_test, DistributionSpec, GroupedSample, PermutationScheme, Rational, RngStream, Statistic, StatisticDescriptor};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { passed: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.details.push(format!("{} {line}", if ok { "ok  " } else { "MISS" }));
    }
}

fn stat(name: &str) -> StatisticDescriptor {
    StatisticDescriptor::from_name(name).unwrap()
}

fn spec(text: &str) -> DistributionSpec {
    text.parse().unwrap()
}

fn plan(dists: &[&str], sizes: Vec<Vec<usize>>, stats: &[&str], replications: u64, seed: u64) -> SimulationPlan {
    SimulationPlan {
        distributions: dists.iter().map(|d| spec(d)).collect(),
        sizes,
        statistics: stats.iter().map(|s| stat(s)).collect(),
        alpha: Rational::new(1, 20),
        replications,
        permutations: 999,
        seed,
        sided: Sidedness::Upper,
        rule: RejectionRule::Randomized,
        shift: 0.0,
    }
}

fn random_split<R: Rng>(rng: &mut R, total: usize, groups: usize, min: usize) -> Vec<usize> {
    let mut sizes = vec![min; groups];
    for _ in 0..total - min * groups {
        sizes[rng.random_range(0..groups)] += 1;
    }
    sizes
}

fn exactness_identity() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let alphas = [Rational::new(1, 100), Rational::new(1, 20), Rational::new(1, 10), Rational::new(1, 4)];
    let mut misses = 0;
    for case in 0..200 {
        let alpha = alphas[rng.random_range(0..alphas.len())];
        let (name, sizes, values): (&str, Vec<usize>, Vec<f64>) = match case % 4 {
            0 | 1 => {
                let n = rng.random_range(2..=10);
                let sizes = random_split(&mut rng, n, 2, 1);
                let values = (0..n).map(|_| f64::from(rng.random_range(0..4))).collect();
                (["mean", "median"][case % 2], sizes, values)
            }
            2 => {
                let n = rng.random_range(4..=10);
                let sizes = random_split(&mut rng, n, 2, 2);
                let values = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
                ("mean_t", sizes, values)
            }
            _ => {
                let n = rng.random_range(6..=10);
                let sizes = random_split(&mut rng, n, 3, 2);
                let values = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
                ("ksample_mean_t", sizes, values)
            }
        };
        let sample = GroupedSample::new(values, sizes).unwrap();
        let report = run_test(&sample, &stat(name), &PermutationScheme::exhaustive(), &alpha).unwrap();
        if report.decision.attained_level() != alpha {
            misses += 1;
            out.details.push(format!("MISS {name} {:?} alpha {alpha}", sample.sizes()));
        }
    }
    let elapsed = start.elapsed();
    out.check(misses == 0, format!("200 datasets, {misses} with (M+ + a M0)/M != alpha"));
    out.check(elapsed < Duration::from_secs(60), format!("runtime {elapsed:.2?}"));
    out
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

fn brute_force(sample: &GroupedSample, s: &dyn Statistic) -> BTreeMap<u64, Rational> {
    let mut counts: BTreeMap<u64, i128> = BTreeMap::new();
    let mut total = 0;
    for_each_permutation(sample.total(), &mut |order| {
        *counts.entry(s.evaluate(&sample.permuted(order)).unwrap().to_bits()).or_default() += 1;
        total += 1;
    });
    counts.into_iter().map(|(k, c)| (k, Rational::new(c, total))).collect()
}

fn oracle_equivalence() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for name in ["mean", "median", "mean_t"] {
        let s = stat(name);
        let mut mismatches = 0;
        let cases = 30;
        for case in 0..cases {
            let n = rng.random_range(4..=7);
            let sizes = random_split(&mut rng, n, 2, 2);
            // tied data for the unstudentized statistics; mean_t needs nonzero group variances
            let values: Vec<f64> = if case % 2 == 0 && name != "mean_t" {
                (0..n).map(|_| f64::from(rng.random_range(0..3))).collect()
            } else {
                let mut v: Vec<f64> = (0..n).map(|i| i as f64 * 0.75).collect();
                v.shuffle(&mut rng);
                v
            };
            let sample = GroupedSample::new(values, sizes).unwrap();
            let dist = permutation_distribution(&sample, &s, &PermutationScheme::exhaustive()).unwrap();
            let engine: BTreeMap<u64, Rational> = dist.atoms().into_iter().map(|(v, w)| (v.to_bits(), w)).collect();
            mismatches += usize::from(engine != brute_force(&sample, &s));
        }
        out.check(mismatches == 0, format!("{name}: {cases} datasets with N <= 7, {mismatches} mismatches"));
    }
    let elapsed = start.elapsed();
    out.check(elapsed < Duration::from_secs(60), format!("runtime {elapsed:.2?}"));
    out
}

fn median_rejection_rates() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let sizes = vec![vec![101, 101], vec![101, 201], vec![401, 401]];
    let laplace = format!("laplace({LN_2},1)");
    let rows: [(&str, &str, [f64; 3], [f64; 3]); 4] = [
        ("normal(0,1)", "normal(0,25)", [0.2309, 0.2266, 0.2249], [0.0615, 0.0517, 0.0531]),
        ("normal(0,1)", "t(5)", [0.1769, 0.1849, 0.1853], [0.0776, 0.0661, 0.0611]),
        ("logistic(0,1)", "uniform(-10,10)", [0.2258, 0.2233, 0.2261], [0.0686, 0.0574, 0.0574]),
        ("laplace", "exp(1)", [0.048, 0.0493, 0.0501], [0.0502, 0.0485, 0.0531]),
    ];
    for (d1, d2, raw, studentized) in rows {
        let d1 = if d1 == "laplace" { laplace.as_str() } else { d1 };
        let table = rejection_probability(&plan(&[d1, d2], sizes.clone(), &["median", "median_t"], 2000, 2024)).unwrap();
        for (j, sz) in sizes.iter().enumerate() {
            check_cell(&mut out, &table, "median_t", sz, studentized[j], 0.02);
            check_cell(&mut out, &table, "median", sz, raw[j], 0.03);
        }
    }
    let elapsed = start.elapsed();
    out.check(elapsed < Duration::from_secs(45 * 60), format!("runtime {elapsed:.2?}"));
    out
}

fn check_cell(out: &mut Outcome, table: &SimulationTable, statistic: &str, sizes: &[usize], target: f64, tol: f64) {
    let cell = table.get(statistic, sizes).unwrap();
    out.check(
        (cell.estimate - target).abs() <= tol,
        format!(
            "{} {statistic} {sizes:?}: {:.4} (se {:.4}) vs {target} +/- {tol}",
            cell.distributions, cell.estimate, cell.se
        ),
    );
}

fn studentized_mean_robustness() -> Outcome {
    let mut out = Outcome::new();
    let p = plan(&["normal(0,1)", "normal(0,25)"], vec![vec![50, 200]], &["mean_t", "mean"], 2000, 4);
    let table = rejection_probability(&p).unwrap();
    let t = table.get("mean_t", &[50, 200]).unwrap();
    out.check((t.estimate - 0.05).abs() <= 0.02, format!("mean_t: {:.4} (se {:.4}) vs 0.05 +/- 0.02", t.estimate, t.se));
    let m = table.get("mean", &[50, 200]).unwrap();
    out.check(m.estimate > 0.10, format!("mean: {:.4} (se {:.4}) vs > 0.10", m.estimate, m.se));
    out
}

fn ksample_chi_squared() -> Outcome {
    let mut out = Outcome::new();
    let dists = ["normal(0,1)", "normal(0,4)", "normal(0,9)"];
    let p = plan(&dists, vec![vec![150, 150, 150]], &["ksample_mean_t"], 2000, 5);
    let cell = rejection_probability(&p).unwrap().cells.remove(0);
    out.check(
        (cell.estimate - 0.05).abs() <= 0.02,
        format!("permutation test rejection {:.4} (se {:.4}) vs 0.05 +/- 0.02", cell.estimate, cell.se),
    );
    let specs: Vec<DistributionSpec> = dists.iter().map(|d| spec(d)).collect();
    let s = stat("ksample_mean_t");
    let draws: Vec<f64> = (0..5000u64)
        .map(|r| {
            let groups: Vec<Vec<f64>> = specs.iter().enumerate().map(|(j, d)| sample(d, 150, &RngStream::new(55, 3 * r + j as u64))).collect();
            s.evaluate(&GroupedSample::from_groups(&groups).unwrap()).unwrap()
        })
        .collect();
    let ks = one_sample_distance(&draws, |x| if x <= 0.0 { 0.0 } else { 1.0 - (-x / 2.0).exp() });
    out.check(ks <= 0.05, format!("KS distance of T_n,1 from chi2(2) over 5000 draws: {ks:.4} vs <= 0.05"));
    out
}

fn coupling_bound() -> Outcome {
    let mut out = Outcome::new();
    for n in [100usize, 400, 1600] {
        for shares in [&[0.4, 0.6][..], &[0.2, 0.3, 0.5][..]] {
            let sizes: Vec<usize> = shares.iter().map(|s| (s * n as f64).round() as usize).collect();
            let r = coupling_bound_check(&sizes, 1000, 6).unwrap();
            out.check(
                r.mean_d_over_n <= r.bound && r.invariant_failures == 0,
                format!(
                    "sizes {sizes:?}: E(D/N) ~ {:.4} (se {:.4}) vs N^-1/2 = {:.4}, invariant failures {}",
                    r.mean_d_over_n, r.se, r.bound, r.invariant_failures
                ),
            );
        }
    }
    out
}

fn contiguity() -> Outcome {
    let mut out = Outcome::new();
    let e = expected_ratio_exact(3, &[3, 3]).unwrap();
    out.check(e == BigRational::one(), format!("sum P(M) L(M) at s = 3, sizes (3, 3) = {e}"));
    let r = contiguity_limit_check(&[1000, 1000], 1000, 5000, 5000, 7).unwrap();
    out.check((r.mean_l - 1.0).abs() <= 0.05, format!("theta = 0.5, N = 2000: mean L {:.4} (se {:.4}) vs 1 +/- 0.05", r.mean_l, r.se_l));
    out.check(r.ks_distance <= 0.05, format!("KS distance of log L from the limit law: {:.4} vs <= 0.05", r.ks_distance));
    out
}

fn hoeffding() -> Outcome {
    let mut out = Outcome::new();
    let source = SampleSource::Generated { distributions: vec![spec("normal(0,1)"); 2], sizes: vec![100, 100] };
    let pooled = hoeffding_pair_check(&source, &PooledSum, 5000, 8, DEFAULT_THRESHOLD).unwrap();
    out.check(!pooled.passes, format!("pooled sum: discrepancy {:.4}, expected above {DEFAULT_THRESHOLD}", pooled.max_discrepancy));
    let t = hoeffding_pair_check(&source, &stat("mean_t"), 5000, 8, DEFAULT_THRESHOLD).unwrap();
    out.check(t.passes, format!("mean_t: discrepancy {:.4}, expected at most {DEFAULT_THRESHOLD}", t.max_discrepancy));
    out
}

fn power() -> Outcome {
    let mut out = Outcome::new();
    let mut p = plan(&["normal(0,1)", "normal(1,1)"], vec![vec![101, 101]], &["mean_t"], 1000, 9);
    p.sided = Sidedness::Two;
    let cell = rejection_probability(&p).unwrap().cells.remove(0);
    out.check(cell.estimate >= 0.99, format!("two-sided mean_t rejection {:.4} vs >= 0.99", cell.estimate));
    out
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 exactness identity", exactness_identity),
        ("2 brute-force oracle equivalence", oracle_equivalence),
        ("3 two-sample median rejection rates", median_rejection_rates),
        ("4 studentized-mean robustness", studentized_mean_robustness),
        ("5 k-sample chi-squared limit", ksample_chi_squared),
        ("6 coupling bound", coupling_bound),
        ("7 contiguity", contiguity),
        ("8 Hoeffding discrimination", hoeffding),
        ("9 power", power),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        for line in &outcome.details {
            println!("    {line}");
        }
        println!("{} criterion {name} ({:.1?})", if outcome.passed { "PASS" } else { "FAIL" }, start.elapsed());
        failed += usize::from(!outcome.passed);
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
