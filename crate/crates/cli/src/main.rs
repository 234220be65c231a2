mod diagnose;
mod input;
mod plans;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use permutest::montecarlo::{rejection_probability, Sidedness};
use permutest::rational::{display_exact, parse_rational, sig6};
use permutest::statistics::Absolute;
use permutest::{run_test, PermutationScheme, Rational, Statistic, StatisticDescriptor, TestReport};

#[derive(Debug)]
pub enum CliError {
    /// Malformed input: exit code 2.
    Parse(String),
    /// Invalid configuration or inputs the library rejects: exit code 3.
    Config(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
        }
    }
}

impl From<permutest::Error> for CliError {
    fn from(e: permutest::Error) -> Self {
        match e {
            permutest::Error::Parse(m) => CliError::Parse(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    /// One JSON object per line.
    Records,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sided {
    Upper,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Permutations {
    Exhaustive,
    Sampled(u64),
}

fn parse_permutations(s: &str) -> Result<Permutations, String> {
    if s.eq_ignore_ascii_case("exhaustive") {
        return Ok(Permutations::Exhaustive);
    }
    match s.parse::<u64>() {
        Ok(0) => Err("at least one permutation is required".into()),
        Ok(b) => Ok(Permutations::Sampled(b)),
        Err(_) => Err(format!("expected a count or `exhaustive`, got `{s}`")),
    }
}

fn parse_alpha(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "permutest", version, about = "Exact and studentized permutation tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a permutation test on a CSV file with header `group,value`.
    Test {
        input: PathBuf,
        #[arg(long, default_value = "mean_t")]
        stat: String,
        #[arg(long, default_value = "1/20", value_parser = parse_alpha)]
        alpha: Rational,
        /// Number of random permutations, or `exhaustive`.
        #[arg(long, default_value = "999", value_parser = parse_permutations)]
        permutations: Permutations,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "upper")]
        sided: Sided,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Estimate rejection probabilities for a plan file or a bundled plan.
    Simulate {
        /// Plan file (TOML) or the name of a bundled plan.
        #[arg(required_unless_present = "list_plans")]
        plan: Option<String>,
        #[arg(long)]
        list_plans: bool,
        #[arg(long)]
        replications: Option<u64>,
        #[arg(long, value_parser = parse_permutations)]
        permutations: Option<Permutations>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_alpha)]
        alpha: Option<Rational>,
        #[arg(long, value_enum)]
        sided: Option<Sided>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Empirical checks of the coupling, contiguity, subset and Hoeffding arguments.
    Diagnose {
        #[command(subcommand)]
        which: diagnose::Diagnostic,
        #[command(flatten)]
        output: OutputArgs,
    },
}

pub fn emit(output: &OutputArgs, text: &str) -> CliResult<()> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

pub fn record<T: serde::Serialize>(value: &T) -> String {
    let mut line = serde_json::to_string(value).expect("reports serialize");
    line.push('\n');
    line
}

fn render_report(r: &TestReport) -> String {
    let d = &r.decision;
    let outcome = match d.outcome {
        permutest::engine::Outcome::Reject => "reject".to_string(),
        permutest::engine::Outcome::Accept => "accept".to_string(),
        permutest::engine::Outcome::Randomize => format!("reject with probability {}", display_exact(&d.a)),
    };
    let scheme = if r.scheme.is_sampled() {
        format!("{} random permutations plus the identity (seed {})", r.scheme.permutations, r.scheme.seed)
    } else {
        "all group assignments".to_string()
    };
    let mut out = String::new();
    let mut line = |k: &str, v: String| out.push_str(&format!("{k:<16}{v}\n"));
    line("statistic", r.statistic.clone());
    line("observed", sig6(r.observed));
    line("scheme", scheme);
    line("alpha", display_exact(&r.alpha));
    line("p-value", display_exact(&r.p_value));
    line("critical value", sig6(d.critical_value));
    line("M / M+ / M0", format!("{} / {} / {}", d.total, d.m_plus, d.m_zero));
    line("a", display_exact(&d.a));
    line("phi", display_exact(&d.phi));
    line("decision", outcome);
    let quantiles: Vec<String> = r
        .distribution
        .levels
        .iter()
        .zip(&r.distribution.quantiles)
        .map(|(l, q)| format!("{l}:{}", sig6(*q)))
        .collect();
    line("quantiles", quantiles.join(" "));
    out
}

fn cmd_test(
    input: &Path,
    stat: &str,
    alpha: Rational,
    permutations: Permutations,
    seed: u64,
    sided: Sided,
    output: &OutputArgs,
) -> CliResult<()> {
    let sample = input::read_csv_file(input)?;
    let descriptor = StatisticDescriptor::from_name(stat)?;
    let scheme = match permutations {
        Permutations::Exhaustive => PermutationScheme::exhaustive(),
        Permutations::Sampled(b) => PermutationScheme::sampled(b, seed)?,
    };
    let absolute = Absolute(descriptor.clone());
    let statistic: &dyn Statistic = match sided {
        Sided::Upper => &descriptor,
        Sided::Two => &absolute,
    };
    let report = run_test(&sample, statistic, &scheme, &alpha)?;
    let text = match output.format {
        Format::Text => render_report(&report),
        Format::Records => record(&report),
    };
    emit(output, &text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    plan: Option<&str>,
    list_plans: bool,
    replications: Option<u64>,
    permutations: Option<Permutations>,
    seed: Option<u64>,
    alpha: Option<Rational>,
    sided: Option<Sided>,
    output: &OutputArgs,
) -> CliResult<()> {
    if list_plans {
        let names: String = plans::BUNDLED.iter().map(|(name, _)| format!("{name}\n")).collect();
        return emit(output, &names);
    }
    let mut plan = plans::load(plan.expect("clap enforces a plan"))?;
    if let Some(r) = replications {
        plan.replications = r;
    }
    match permutations {
        Some(Permutations::Sampled(b)) => plan.permutations = b,
        Some(Permutations::Exhaustive) => {
            return Err(CliError::Config("simulations use random permutations; give a count".into()));
        }
        None => {}
    }
    if let Some(s) = seed {
        plan.seed = s;
    }
    if let Some(a) = alpha {
        plan.alpha = a;
    }
    if let Some(s) = sided {
        plan.sided = match s {
            Sided::Upper => Sidedness::Upper,
            Sided::Two => Sidedness::Two,
        };
    }
    let table = rejection_probability(&plan)?;
    let text = match output.format {
        Format::Text => table.render_text(),
        Format::Records => table.cells.iter().map(record).collect(),
    };
    emit(output, &text)
}

fn configure_threads() -> CliResult<()> {
    if let Ok(value) = std::env::var("PERMUTEST_THREADS") {
        let threads: usize = value
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("PERMUTEST_THREADS must be a positive integer, got `{value}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<bool> {
    configure_threads()?;
    match cli.command {
        Command::Test { input, stat, alpha, permutations, seed, sided, output } => {
            cmd_test(&input, &stat, alpha, permutations, seed, sided, &output).map(|_| true)
        }
        Command::Simulate { plan, list_plans, replications, permutations, seed, alpha, sided, output } => {
            cmd_simulate(plan.as_deref(), list_plans, replications, permutations, seed, alpha, sided, &output).map(|_| true)
        }
        Command::Diagnose { which, output } => diagnose::run(which, &output),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("permutest: {e}");
            ExitCode::from(e.code())
        }
    }
}
