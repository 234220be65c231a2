//! Permutation distributions, the exact randomized decision rule and p-values.

mod assignments;
mod decision;
mod distribution;
mod report;
mod scheme;

pub use assignments::{count_assignments, enumerate_assignments, sample_assignments, Assignment, AssignmentIter, SampledAssignments};
pub(crate) use assignments::scheme_rng;
pub use decision::{check_alpha, p_value, randomized_decision, Outcome, RandomizedDecision};
pub use distribution::{permutation_distribution, permutation_distributions, Execution, PermutationDistribution};
pub use report::{run_test, run_test_with, DistributionSummary, TestReport, SUMMARY_LEVELS};
pub use scheme::{PermutationScheme, SchemeMode, DEFAULT_EXHAUSTIVE_CAP};
