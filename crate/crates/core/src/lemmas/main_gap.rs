use serde::{Deserialize, Serialize};

use crate::distributions::{compound_binomial_table, CompoundPoissonParams, DiscreteLaw, total_variation};
use crate::error::Result;
use crate::limits::{cluster_law_from_counts, ScalingSchedule};
use crate::markov::{count_distributions, MarkovChainModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub n: usize,
    pub k: usize,
    /// `P(Z^{N_n} = k)`.
    pub exact: f64,
    /// Compound binomial with `⌊r_n⌋` trials, success `p_n`, sizes `λ̂(n)`.
    pub binomial: f64,
    /// Compound Poisson with parameter `t` and sizes `λ̂(n)`.
    pub poisson: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub n: usize,
    pub s: usize,
    pub trials: u64,
    pub window: usize,
    pub skipped: bool,
    /// `max_k |P(Z^{N_n} = k) − compound binomial|`.
    pub max_gap: f64,
    /// The same gap at `k = 0`.
    pub zero_gap: f64,
    /// `|P(Z^{N_n} = 0) − e^{−t}|`.
    pub zero_vs_limit: f64,
    /// Total variation between the compound binomial and compound Poisson tables.
    pub binomial_poisson_tv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainGapTable {
    pub t: f64,
    pub rows: Vec<GapRow>,
    pub summaries: Vec<GapSummary>,
}

impl MainGapTable {
    pub fn evaluated(&self) -> impl Iterator<Item = &GapSummary> {
        self.summaries.iter().filter(|s| !s.skipped)
    }
}

/// Exact `P(Z^{N_n} = k)` against the block approximation along a schedule.
/// Entries whose window exceeds `budget` symbols are marked skipped.
pub fn main_theorem_gap(
    chain: &MarkovChainModel,
    schedule: &ScalingSchedule,
    kmax: usize,
    budget: usize,
) -> Result<MainGapTable> {
    let t = schedule.params.t;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for e in &schedule.entries {
        let skip = e.window > budget || e.trials == 0;
        let mut summary = GapSummary {
            n: e.n,
            s: e.s,
            trials: e.trials,
            window: e.window,
            skipped: skip,
            max_gap: f64::NAN,
            zero_gap: f64::NAN,
            zero_vs_limit: f64::NAN,
            binomial_poisson_tv: f64::NAN,
        };
        if skip {
            summaries.push(summary);
            continue;
        }
        let dists = count_distributions(chain, &e.word, &[e.s, e.window], kmax)?;
        let law = cluster_law_from_counts(&dists[0])?;
        let binomial = compound_binomial_table(e.p, e.trials, &law, kmax)?;
        let poisson = CompoundPoissonParams::new(t, law)?.pmf_table(kmax)?;
        let exact = &dists[1].probs;
        for k in 0..=kmax {
            rows.push(GapRow {
                n: e.n,
                k,
                exact: exact[k],
                binomial: binomial[k],
                poisson: poisson[k],
                gap: (exact[k] - binomial[k]).abs(),
            });
        }
        let gaps = rows[rows.len() - (kmax + 1)..].iter().map(|r| r.gap);
        summary.max_gap = gaps.fold(0.0, f64::max);
        summary.zero_gap = (exact[0] - binomial[0]).abs();
        summary.zero_vs_limit = (exact[0] - (-t).exp()).abs();
        summary.binomial_poisson_tv = total_variation(
            &DiscreteLaw::with_remainder(binomial)?,
            &DiscreteLaw::with_remainder(poisson)?,
        );
        summaries.push(summary);
    }
    Ok(MainGapTable { t, rows, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::ClusterLaw;
    use crate::limits::{build_schedule, ScheduleParams, WordFamily};

    #[test]
    fn compound_binomial_mean_is_wald() {
        let law = ClusterLaw::geometric(0.5, 60).unwrap();
        let (p, n) = (0.01, 100u64);
        let table = compound_binomial_table(p, n, &law, 60).unwrap();
        let mean: f64 = table.iter().enumerate().map(|(k, q)| k as f64 * q).sum();
        assert!((mean - n as f64 * p * 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_column_tracks_the_exponential() {
        let chain = MarkovChainModel::doubling();
        let ns: Vec<usize> = (6..=12).collect();
        let sched = build_schedule(&chain, &WordFamily::zeros(), &ns, &ScheduleParams::default()).unwrap();
        let table = main_theorem_gap(&chain, &sched, 6, 1 << 20).unwrap();
        let zero: Vec<f64> = table.evaluated().map(|s| s.zero_gap).collect();
        assert_eq!(zero.len(), ns.len());
        assert!(zero.windows(2).all(|w| w[1] < w[0]), "{zero:?}");
        let last = table.summaries.last().unwrap();
        assert!(last.zero_vs_limit < 0.05);
        let tiny = main_theorem_gap(&chain, &sched, 6, 10).unwrap();
        assert!(tiny.summaries.iter().all(|s| s.skipped));
        assert!(tiny.rows.is_empty());
    }
}
