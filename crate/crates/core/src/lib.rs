//! Return-time statistics for mixing symbolic systems: exact count laws of
//! cylinder targets in Markov shifts, Monte Carlo for interval maps, compound
//! Poisson limit laws, and numerical checks of the approximation lemmas.
//!
//! ```
//! use returnlab::limits::cluster_law_from_counts;
//! use returnlab::markov::{count_distribution_exact, CylinderWord, MarkovChainModel};
//!
//! let chain = MarkovChainModel::doubling();
//! let counts = count_distribution_exact(&chain, &CylinderWord::zeros(12)?, 256, 6)?;
//! let lambda = cluster_law_from_counts(&counts)?;
//! assert!((lambda.get(1) - 0.5).abs() < 0.02);
//! # Ok::<(), returnlab::Error>(())
//! ```

pub mod distributions;
pub mod error;
pub mod export;
pub mod interval_mc;
pub mod lemmas;
pub mod limits;
pub mod markov;

pub use error::{Error, Result};

/// The guide's code blocks, compiled and run as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/exact-counts.md")]
    struct ExactCounts;
    #[doc = include_str!("../../../book/src/clusters.md")]
    struct Clusters;
    #[doc = include_str!("../../../book/src/limit-laws.md")]
    struct LimitLaws;
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    struct MonteCarlo;
    #[doc = include_str!("../../../book/src/lemma-checks.md")]
    struct LemmaChecks;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
