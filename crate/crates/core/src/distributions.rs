//! Seedable samplers for the simulation distributions, plus multinomial and
//! multivariate hypergeometric count draws.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp, Hypergeometric, Normal, Open01, StudentT};
use serde::{Deserialize, Serialize};

use crate::engine::scheme_rng;
use crate::error::{Error, Result};

/// A continuous distribution family with its parameters. `Normal` takes a
/// mean and a variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DistributionSpec {
    Normal { mean: f64, variance: f64 },
    StudentT { df: f64 },
    Logistic { location: f64, scale: f64 },
    Uniform { lower: f64, upper: f64 },
    Laplace { location: f64, scale: f64 },
    Exponential { rate: f64 },
}

impl DistributionSpec {
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        Self::Normal { mean, variance }.validated()
    }

    pub fn student_t(df: f64) -> Result<Self> {
        Self::StudentT { df }.validated()
    }

    pub fn logistic(location: f64, scale: f64) -> Result<Self> {
        Self::Logistic { location, scale }.validated()
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        Self::Uniform { lower, upper }.validated()
    }

    pub fn laplace(location: f64, scale: f64) -> Result<Self> {
        Self::Laplace { location, scale }.validated()
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::Exponential { rate }.validated()
    }

    fn validated(self) -> Result<Self> {
        let params = self.params();
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config(format!("{self}: parameters must be finite")));
        }
        let ok = match self {
            Self::Normal { variance, .. } => variance > 0.0,
            Self::StudentT { df } => df > 0.0,
            Self::Logistic { scale, .. } | Self::Laplace { scale, .. } => scale > 0.0,
            Self::Uniform { lower, upper } => lower < upper,
            Self::Exponential { rate } => rate > 0.0,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::Config(format!("{self}: invalid parameters")))
        }
    }

    fn family(&self) -> &'static str {
        match self {
            Self::Normal { .. } => "normal",
            Self::StudentT { .. } => "t",
            Self::Logistic { .. } => "logistic",
            Self::Uniform { .. } => "uniform",
            Self::Laplace { .. } => "laplace",
            Self::Exponential { .. } => "exp",
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            Self::Normal { mean, variance } => vec![mean, variance],
            Self::StudentT { df } => vec![df],
            Self::Logistic { location, scale } | Self::Laplace { location, scale } => vec![location, scale],
            Self::Uniform { lower, upper } => vec![lower, upper],
            Self::Exponential { rate } => vec![rate],
        }
    }

    pub fn median(&self) -> f64 {
        match *self {
            Self::Normal { mean, .. } => mean,
            Self::StudentT { .. } => 0.0,
            Self::Logistic { location, .. } | Self::Laplace { location, .. } => location,
            Self::Uniform { lower, upper } => 0.5 * (lower + upper),
            Self::Exponential { rate } => LN_2 / rate,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Normal { mean, .. } => mean,
            Self::StudentT { df } => {
                if df > 1.0 {
                    0.0
                } else {
                    f64::NAN
                }
            }
            Self::Logistic { location, .. } | Self::Laplace { location, .. } => location,
            Self::Uniform { lower, upper } => 0.5 * (lower + upper),
            Self::Exponential { rate } => 1.0 / rate,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Normal { variance, .. } => variance,
            Self::StudentT { df } => {
                if df > 2.0 {
                    df / (df - 2.0)
                } else {
                    f64::INFINITY
                }
            }
            Self::Logistic { scale, .. } => scale * scale * PI * PI / 3.0,
            Self::Uniform { lower, upper } => (upper - lower).powi(2) / 12.0,
            Self::Laplace { scale, .. } => 2.0 * scale * scale,
            Self::Exponential { rate } => 1.0 / (rate * rate),
        }
    }

    /// One draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Normal { mean, variance } => Normal::new(mean, variance.sqrt()).expect("validated").sample(rng),
            Self::StudentT { df } => StudentT::new(df).expect("validated").sample(rng),
            Self::Logistic { location, scale } => {
                let u: f64 = Open01.sample(rng);
                location + scale * (u / (1.0 - u)).ln()
            }
            Self::Uniform { lower, upper } => {
                let u: f64 = Open01.sample(rng);
                lower + (upper - lower) * u
            }
            Self::Laplace { location, scale } => {
                let u: f64 = Open01.sample(rng);
                let d = u - 0.5;
                location - scale * d.signum() * (-2.0 * d.abs()).ln_1p()
            }
            Self::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
        }
    }

    /// `n` i.i.d. draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

/// Sample `n` values from `spec` using the given stream.
pub fn sample(spec: &DistributionSpec, n: usize, stream: &RngStream) -> Vec<f64> {
    spec.sample(n, &mut stream.rng())
}

/// Analytic median.
pub fn true_median(spec: &DistributionSpec) -> f64 {
    spec.median()
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params().iter().map(|p| p.to_string()).collect();
        write!(f, "{}({})", self.family(), params.join(","))
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let s = text.trim().to_ascii_lowercase();
        let bad = || Error::Parse(format!("cannot parse distribution `{text}`"));
        let (family, rest) = s.split_once('(').ok_or_else(bad)?;
        let inner = rest.strip_suffix(')').ok_or_else(bad)?;
        let params = inner
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<f64>>>()?;
        let arity = |n: usize| if params.len() == n { Ok(()) } else { Err(bad()) };
        match family.trim() {
            "normal" | "n" => {
                arity(2)?;
                Self::normal(params[0], params[1])
            }
            "t" | "studentt" | "student_t" => {
                arity(1)?;
                Self::student_t(params[0])
            }
            "logistic" => {
                arity(2)?;
                Self::logistic(params[0], params[1])
            }
            "uniform" | "u" => {
                arity(2)?;
                Self::uniform(params[0], params[1])
            }
            "laplace" => {
                arity(2)?;
                Self::laplace(params[0], params[1])
            }
            "exp" | "exponential" => {
                arity(1)?;
                Self::exponential(params[0])
            }
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for DistributionSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DistributionSpec> for String {
    fn from(d: DistributionSpec) -> String {
        d.to_string()
    }
}

/// A reproducible random stream: ChaCha8 keyed by `seed`, on stream `stream_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        scheme_rng(self.seed, self.stream_id)
    }
}

/// Counts of each type when `s` items are drawn with replacement.
pub fn multinomial_draw<R: Rng + ?Sized>(s: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0; probs.len()];
    let mut left = s;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(left, q).expect("probability in [0,1]").sample(rng);
        counts[i] = c;
        left -= c;
        mass -= p;
    }
    counts
}

/// Counts of each type when `s` items are drawn without replacement from a
/// population holding `pop_counts[i]` items of type `i`.
pub fn hypergeometric_draw<R: Rng + ?Sized>(s: u64, pop_counts: &[u64], rng: &mut R) -> Result<Vec<u64>> {
    let mut remaining: u64 = pop_counts.iter().sum();
    if s > remaining {
        return Err(Error::Config(format!("cannot draw {s} from a population of {remaining}")));
    }
    let mut counts = vec![0; pop_counts.len()];
    let mut left = s;
    for (i, &k) in pop_counts.iter().enumerate() {
        if left == 0 {
            break;
        }
        let c = if k == remaining {
            left
        } else {
            Hypergeometric::new(remaining, k, left).expect("valid hypergeometric").sample(rng)
        };
        counts[i] = c;
        left -= c;
        remaining -= k;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let cases = [
            ("normal(0,1)", DistributionSpec::Normal { mean: 0.0, variance: 1.0 }),
            ("Normal(0, 5)", DistributionSpec::Normal { mean: 0.0, variance: 5.0 }),
            ("t(5)", DistributionSpec::StudentT { df: 5.0 }),
            ("logistic(0,1)", DistributionSpec::Logistic { location: 0.0, scale: 1.0 }),
            ("uniform(-10,10)", DistributionSpec::Uniform { lower: -10.0, upper: 10.0 }),
            ("laplace(0.6931471805599453,1)", DistributionSpec::Laplace { location: LN_2, scale: 1.0 }),
            ("EXP(1)", DistributionSpec::Exponential { rate: 1.0 }),
        ];
        for (text, spec) in cases {
            let parsed: DistributionSpec = text.parse().unwrap();
            assert_eq!(parsed, spec);
            assert_eq!(parsed.to_string().parse::<DistributionSpec>().unwrap(), spec);
        }
        for bad in ["normal(0)", "normal(0,-1)", "uniform(3,1)", "gamma(1,1)", "t5", "exp(0)"] {
            assert!(bad.parse::<DistributionSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn medians() {
        assert_eq!(true_median(&DistributionSpec::normal(0.0, 5.0).unwrap()), 0.0);
        assert_eq!(true_median(&DistributionSpec::exponential(1.0).unwrap()), LN_2);
        assert_eq!(true_median(&DistributionSpec::uniform(-10.0, 10.0).unwrap()), 0.0);
    }

    #[test]
    fn uniform_support() {
        let u = DistributionSpec::uniform(-10.0, 10.0).unwrap();
        assert!(sample(&u, 10_000, &RngStream::new(1, 0)).iter().all(|&x| x > -10.0 && x < 10.0));
    }

    #[test]
    fn streams_are_reproducible() {
        let d = DistributionSpec::student_t(5.0).unwrap();
        let a = sample(&d, 100, &RngStream::new(3, 4));
        assert_eq!(a, sample(&d, 100, &RngStream::new(3, 4)));
        assert_ne!(a, sample(&d, 100, &RngStream::new(3, 5)));
    }

    #[test]
    fn count_draw_edges() {
        let mut rng = RngStream::new(1, 1).rng();
        assert_eq!(multinomial_draw(0, &[0.5, 0.5], &mut rng), vec![0, 0]);
        assert_eq!(hypergeometric_draw(0, &[3, 4], &mut rng).unwrap(), vec![0, 0]);
        assert_eq!(hypergeometric_draw(12, &[3, 4, 5], &mut rng).unwrap(), vec![3, 4, 5]);
        assert!(hypergeometric_draw(13, &[3, 4, 5], &mut rng).is_err());
        for _ in 0..200 {
            let m = multinomial_draw(17, &[0.2, 0.3, 0.5], &mut rng);
            assert_eq!(m.iter().sum::<u64>(), 17);
            let h = hypergeometric_draw(9, &[3, 4, 5], &mut rng).unwrap();
            assert_eq!(h.iter().sum::<u64>(), 9);
            assert!(h[0] <= 3 && h[1] <= 4 && h[2] <= 5);
        }
    }
}
