use clap::Subcommand;
use permutest::diagnostics::coupling::coupling_gap_check;
use permutest::diagnostics::hoeffding::{hoeffding_pair_check, SampleSource};
use permutest::diagnostics::{contiguity_limit_check, coupling_bound_check_with, random_subset_convergence_check, SubsetStatistic};
use permutest::rational::sig6;
use permutest::statistics::{Constant, PooledSum};
use permutest::{DistributionSpec, Statistic, StatisticDescriptor};
use serde::Serialize;

use crate::{emit, input, record, CliError, CliResult, Format, OutputArgs};

fn parse_dist(s: &str) -> Result<DistributionSpec, String> {
    s.trim().parse::<DistributionSpec>().map_err(|e| e.to_string())
}

fn parse_probability(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(p) if p > 0.0 && p <= 1.0 => Ok(p),
        Ok(p) => Err(format!("mixture probabilities must be strictly positive and at most 1, got {p}")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_subset_stat(s: &str) -> Result<SubsetStatistic, String> {
    match s {
        "mean" => Ok(SubsetStatistic::Mean),
        "variance" => Ok(SubsetStatistic::Variance),
        _ => s
            .strip_prefix("constant(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|c| c.parse().ok())
            .map(SubsetStatistic::Constant)
            .ok_or_else(|| format!("expected mean, variance or constant(c), got `{s}`")),
    }
}

#[derive(Debug, Subcommand)]
pub enum Diagnostic {
    /// Mean of D/N for the coupling construction against N^(-1/2).
    Coupling {
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Mixture probabilities; defaults to n_i / N.
        #[arg(long, value_delimiter = ',', value_parser = parse_probability)]
        p: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also report the statistic gap for this statistic.
        #[arg(long)]
        stat: Option<String>,
        /// Distributions for the gap check, separated by `;`.
        #[arg(long, value_parser = parse_dist, value_delimiter = ';')]
        dists: Option<Vec<DistributionSpec>>,
    },
    /// Likelihood ratio of hypergeometric to multinomial type counts against its limit law.
    Contiguity {
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<u64>,
        #[arg(long)]
        s: u64,
        #[arg(long, default_value_t = 5000)]
        replications: u64,
        #[arg(long, default_value_t = 5000)]
        reference: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dependence between the statistic under two independent random permutations.
    Hoeffding {
        /// A registered statistic, `pooled_sum` or `constant`.
        #[arg(long, default_value = "mean_t")]
        stat: String,
        /// Use this CSV as fixed data instead of generating samples.
        #[arg(long)]
        input: Option<std::path::PathBuf>,
        #[arg(long, value_parser = parse_dist, value_delimiter = ';', default_value = "normal(0,1);normal(0,1)")]
        dists: Vec<DistributionSpec>,
        #[arg(long, value_delimiter = ',', default_value = "100,100")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5000)]
        pairs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = permutest::diagnostics::hoeffding::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// A statistic on random subsets of pooled data against i.i.d. mixture samples.
    Subset {
        #[arg(long, value_parser = parse_dist, value_delimiter = ';', required = true)]
        dists: Vec<DistributionSpec>,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long)]
        s: usize,
        #[arg(long, value_parser = parse_subset_stat, default_value = "mean")]
        w: SubsetStatistic,
        #[arg(long, default_value_t = 1000)]
        replications: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        target: Option<f64>,
    },
}

fn finish(output: &OutputArgs, reports: &[(&str, serde_json::Value, bool)]) -> CliResult<bool> {
    let passes = reports.iter().all(|r| r.2);
    let text = match output.format {
        Format::Records => reports.iter().map(|r| record(&r.1)).collect(),
        Format::Text => {
            let mut out = String::new();
            for (name, value, ok) in reports {
                out.push_str(&format!("{name}: {}\n", if *ok { "pass" } else { "FAIL" }));
                if let serde_json::Value::Object(fields) = value {
                    for (k, v) in fields {
                        out.push_str(&format!("  {k:<20}{}\n", text_value(v)));
                    }
                }
            }
            out
        }
    };
    emit(output, &text)?;
    Ok(passes)
}

fn text_value(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => sig6(n.as_f64().expect("f64 number")),
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Array(items) => format!("[{}]", items.iter().map(text_value).collect::<Vec<_>>().join(", ")),
        serde_json::Value::Object(fields) => {
            let parts: Vec<String> = fields.iter().map(|(k, v)| format!("{k} {}", text_value(v))).collect();
            parts.join(", ")
        }
        other => other.to_string(),
    }
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn named_statistic(name: &str) -> CliResult<Box<dyn Statistic>> {
    Ok(match name {
        "pooled_sum" => Box::new(PooledSum),
        "constant" => Box::new(Constant(0.0)),
        other => Box::new(StatisticDescriptor::from_name(other)?),
    })
}

/// Returns whether every threshold passed.
pub fn run(which: Diagnostic, output: &OutputArgs) -> CliResult<bool> {
    match which {
        Diagnostic::Coupling { sizes, p, runs, seed, stat, dists } => {
            let total: usize = sizes.iter().sum();
            let p = p.unwrap_or_else(|| sizes.iter().map(|&n| n as f64 / total as f64).collect());
            let bound = coupling_bound_check_with(&sizes, &p, runs, seed)?;
            let mut reports = vec![("coupling bound", json(&bound), bound.passes)];
            if let Some(name) = stat {
                let stat = named_statistic(&name)?;
                let dists = match dists {
                    Some(d) => d,
                    None => vec![DistributionSpec::normal(0.0, 1.0)?; sizes.len()],
                };
                let gap = coupling_gap_check(&sizes, &dists, stat.as_ref(), runs, seed)?;
                reports.push(("coupling gap", json(&gap), gap.passes));
            }
            finish(output, &reports)
        }
        Diagnostic::Contiguity { sizes, s, replications, reference, seed } => {
            let r = contiguity_limit_check(&sizes, s, replications, reference, seed)?;
            finish(output, &[("contiguity", json(&r), r.passes)])
        }
        Diagnostic::Hoeffding { stat, input, dists, sizes, pairs, seed, threshold } => {
            let source = match input {
                Some(path) => SampleSource::Fixed(input::read_csv_file(&path)?),
                None => {
                    if dists.len() != sizes.len() {
                        return Err(CliError::Config("give one distribution per group".into()));
                    }
                    SampleSource::Generated { distributions: dists, sizes }
                }
            };
            let stat = named_statistic(&stat)?;
            let r = hoeffding_pair_check(&source, stat.as_ref(), pairs, seed, threshold)?;
            finish(output, &[("hoeffding", json(&r), r.passes)])
        }
        Diagnostic::Subset { dists, sizes, s, w, replications, seed, target } => {
            let r = random_subset_convergence_check(&dists, &sizes, s, w, replications, seed, target)?;
            finish(output, &[("subset", json(&r), r.passes)])
        }
    }
}
