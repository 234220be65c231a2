//! Empirical checks of the asymptotic machinery: coupling, contiguity,
//! random-subset convergence and the Hoeffding pair condition.

pub mod contiguity;
pub mod coupling;
pub mod hoeffding;
pub mod ks;
pub mod subset;

pub use contiguity::{contiguity_limit_check, likelihood_ratio, ContiguityDraw, ContiguityReport};
pub use coupling::{couple, coupling_bound_check, coupling_bound_check_with, coupling_gap_check, coupling_statistic_gap, CouplingResult};
pub use hoeffding::{hoeffding_pair_check, HoeffdingReport, SampleSource};
pub use subset::{random_subset_convergence_check, SubsetReport, SubsetStatistic};
