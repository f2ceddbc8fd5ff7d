//! Exact return-time statistics for cylinder sets of stationary
//! finite-alphabet Markov shifts.

pub mod automaton;
mod chain;
mod counts;
mod mixing;
mod spec;
mod word;

pub use chain::MarkovChainModel;
pub use counts::{
    conditional_return_counts, conditional_return_tail, count_distribution_exact,
    count_distributions, default_kmax, entry_time_tail, CountDistribution,
};
pub use mixing::{dobrushin_coefficient, phi_bound, MixingBound, MixingKind};
pub use spec::ChainSpec;
pub use word::{word_measure, CylinderWord};
