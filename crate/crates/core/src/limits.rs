//! Cluster-size estimators, the extremal-index spectrum, the Kac identity,
//! scaling schedules and convergence scans along nested word families.
//!
//! Conventions: `λ_k(L, U) = P(Z^L = k) / P(Z^L ≥ 1)` and
//! `α_k(L, U) = P(τ^{k−1} < L ≤ τ^k | U)`, the probability that a point of
//! `U` returns exactly `k − 1` times at times `1..L−1`.

use serde::{Deserialize, Serialize};

use crate::distributions::ClusterLaw;
use crate::error::{invalid, Error, Result};
use crate::markov::{
    conditional_return_counts, conditional_return_tail, count_distributions, entry_time_tail,
    word_measure, CountDistribution, CylinderWord, MarkovChainModel,
};

/// Default number of cluster sizes tracked.
pub const DEFAULT_MAX_CLUSTER: usize = 8;

/// Cluster values below this are flagged as unreliable in scans.
pub const UNRELIABLE_LAMBDA: f64 = 1e-6;

/// `λ_k = P(Z = k) / P(Z ≥ 1)` for `k = 1..=kmax`, with the overflow scaled
/// into the tail.
pub fn cluster_law_from_counts(dist: &CountDistribution) -> Result<ClusterLaw> {
    // Summing the hit side directly keeps relative accuracy when P(Z ≥ 1) is tiny.
    let hit: f64 = dist.probs.iter().skip(1).sum::<f64>() + dist.tail_mass;
    if !(hit > 0.0) {
        return Err(Error::Degenerate(format!(
            "window {} never hits the target",
            dist.window
        )));
    }
    let probs: Vec<f64> = dist.probs.iter().skip(1).map(|p| p / hit).collect();
    let tail = dist.tail_mass / hit;
    let total: f64 = probs.iter().sum::<f64>() + tail;
    // Renormalise rounding only; the mass was already complete.
    ClusterLaw::new(probs.iter().map(|p| p / total).collect(), tail / total)
}

/// `α_1(L,U), ..., α_K(L,U)` and the leftover mass `P(≥ K returns | U)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSpectrum {
    pub window: usize,
    pub alpha: Vec<f64>,
    pub remainder: f64,
}

impl AlphaSpectrum {
    /// The extremal index at this window.
    pub fn extremal_index(&self) -> f64 {
        self.alpha.first().copied().unwrap_or(0.0)
    }
}

pub fn alpha_spectrum(
    chain: &MarkovChainModel,
    word: &CylinderWord,
    window: usize,
    k: usize,
) -> Result<AlphaSpectrum> {
    if k == 0 {
        return Err(invalid("k", "spectrum needs at least one coefficient"));
    }
    if window == 0 {
        return Err(invalid("window", "must be at least 1"));
    }
    let d = conditional_return_counts(chain, word, &[window], k - 1)?.remove(0);
    Ok(AlphaSpectrum {
        window,
        alpha: d.probs,
        remainder: d.tail_mass,
    })
}

/// `λ_k = (α_k − α_{k+1}) / α_1` for `k < K`; the last coefficient's share
/// `α_K / α_1` becomes the tail, so the law telescopes to total mass one.
pub fn lambda_from_alpha(spectrum: &AlphaSpectrum) -> Result<ClusterLaw> {
    let a = &spectrum.alpha;
    let a1 = spectrum.extremal_index();
    if !(a1 > 0.0) {
        return Err(Error::Degenerate("extremal index is zero".into()));
    }
    let mut probs = Vec::with_capacity(a.len().saturating_sub(1));
    for k in 0..a.len().saturating_sub(1) {
        let d = a[k] - a[k + 1];
        if d < -1e-12 {
            return Err(Error::NonMonotoneSpectrum { k: k + 1 });
        }
        probs.push(d.max(0.0) / a1);
    }
    let tail = a[a.len() - 1] / a1;
    let total: f64 = probs.iter().sum::<f64>() + tail;
    ClusterLaw::new(probs.iter().map(|p| p / total).collect(), tail / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KacCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
}

/// `P(Z^L ≥ 1)` against `μ(U) Σ_{ℓ=1}^{L} P(τ ≥ ℓ | U)`.
pub fn kac_identity_check(chain: &MarkovChainModel, word: &CylinderWord, window: usize) -> Result<KacCheck> {
    if window == 0 {
        return Err(invalid("window", "must be at least 1"));
    }
    let lhs = 1.0 - entry_time_tail(chain, word, window)?[window];
    let tail = conditional_return_tail(chain, word, window, 1)?;
    let rhs = word_measure(chain, word) * tail.iter().sum::<f64>();
    Ok(KacCheck {
        lhs,
        rhs,
        diff: (lhs - rhs).abs(),
    })
}

/// Rule producing nested words `U_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WordFamily {
    /// `a^n` for a fixed symbol `a`.
    Constant { symbol: usize },
    /// First `n` symbols of the periodic repetition of `period`.
    Periodic { period: Vec<usize> },
    /// First `n` symbols of a fixed finite sequence.
    Prefixes { sequence: Vec<usize> },
    /// Explicit words, indexed by `n − 1`.
    Explicit { words: Vec<Vec<usize>> },
}

impl WordFamily {
    pub fn zeros() -> Self {
        Self::Constant { symbol: 0 }
    }

    pub fn word(&self, n: usize) -> Result<CylinderWord> {
        match self {
            Self::Constant { symbol } => CylinderWord::constant(*symbol, n),
            Self::Periodic { period } => CylinderWord::periodic(period, n),
            Self::Prefixes { sequence } => {
                if n > sequence.len() {
                    return Err(invalid("n", format!("sequence has only {} symbols", sequence.len())));
                }
                CylinderWord::new(sequence[..n].to_vec())
            }
            Self::Explicit { words } => {
                let w = n
                    .checked_sub(1)
                    .and_then(|i| words.get(i))
                    .ok_or_else(|| invalid("n", format!("no word with index {n}")))?;
                CylinderWord::new(w.clone())
            }
        }
    }

    /// Words for increasing `ns`, checking that each extends the previous.
    pub fn words(&self, ns: &[usize]) -> Result<Vec<CylinderWord>> {
        if ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("n grid", "must be strictly increasing"));
        }
        let words: Vec<CylinderWord> = ns.iter().map(|&n| self.word(n)).collect::<Result<_>>()?;
        for (i, pair) in words.windows(2).enumerate() {
            if !pair[1].extends(&pair[0]) {
                return Err(Error::NotNested { index: i + 1 });
            }
        }
        Ok(words)
    }
}

/// How the block length `s_n` is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SRule {
    /// `s_n = ⌊μ(U_n)^{−ω}⌋`.
    KacPower { omega: f64 },
    /// Explicit lengths, matched to the `n` grid by position.
    Explicit { lengths: Vec<usize> },
}

impl SRule {
    pub fn block_length(&self, measure: f64, index: usize) -> Result<usize> {
        match self {
            Self::KacPower { omega } => {
                if !(*omega > 0.0 && *omega < 1.0) {
                    return Err(invalid("omega", format!("{omega} is outside (0, 1)")));
                }
                // The guard keeps exact powers like 2^{n/2} from flooring down.
                let s = (measure.powf(-omega) * (1.0 + 1e-9)).floor();
                Ok((s as usize).max(1))
            }
            Self::Explicit { lengths } => lengths
                .get(index)
                .copied()
                .filter(|s| *s >= 1)
                .ok_or_else(|| invalid("lengths", format!("no positive length at position {index}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleParams {
    pub t: f64,
    pub s_rule: SRule,
    pub alpha_exp: f64,
    pub eta: f64,
}

impl ScheduleParams {
    /// `ω` with `η = (1 + ω)/2` and `α = 1/2`.
    pub fn with_omega(t: f64, omega: f64) -> Self {
        Self {
            t,
            s_rule: SRule::KacPower { omega },
            alpha_exp: 0.5,
            eta: (1.0 + omega) / 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(invalid("t", format!("{} must be positive", self.t)));
        }
        if !(self.alpha_exp > 0.0 && self.alpha_exp < 1.0) {
            return Err(invalid("alpha_exp", format!("{} is outside (0, 1)", self.alpha_exp)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(invalid("eta", format!("{} is outside (0, 1)", self.eta)));
        }
        Ok(())
    }
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self::with_omega(1.0, 0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub n: usize,
    pub word: CylinderWord,
    pub measure: f64,
    /// Block length `s_n`.
    pub s: usize,
    /// `P(Z^{s_n} ≥ 1)`.
    pub p: f64,
    /// `r_n = t / p_n`, kept real so that `r_n p_n = t`.
    pub r: f64,
    /// Whole blocks used by integer-window computations: `⌊r_n⌋`.
    pub trials: u64,
    /// `N_n = r_n s_n`.
    pub big_n: f64,
    /// `trials · s_n`, the integer observation window.
    pub window: usize,
    /// `Δ_n = ⌊s_n^{alpha_exp}⌋`.
    pub delta: usize,
    /// `s_n μ(τ ≤ s_n) = s_n p_n`.
    pub s_hit_product: f64,
    /// `s_n μ(U_n)`.
    pub s_measure_product: f64,
}

impl ScheduleEntry {
    pub fn new(n: usize, word: CylinderWord, measure: f64, s: usize, p: f64, t: f64, alpha_exp: f64) -> Result<Self> {
        if !(p > 0.0) {
            return Err(Error::Degenerate(format!("block of length {s} never hits the word of length {n}")));
        }
        let r = t / p;
        let trials = r.floor() as u64;
        Ok(Self {
            n,
            word,
            measure,
            s,
            p,
            r,
            trials,
            big_n: r * s as f64,
            window: (trials as usize).saturating_mul(s),
            delta: (s as f64).powf(alpha_exp).floor() as usize,
            s_hit_product: s as f64 * p,
            s_measure_product: s as f64 * measure,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFlags {
    pub s_increasing: bool,
    pub p_decreasing: bool,
    /// `s_n^η p_n` increasing.
    pub s_eta_p_increasing: bool,
    /// `s_n^{1−α} p_n` increasing.
    pub s_one_minus_alpha_p_increasing: bool,
    /// `s_n p_n` decreasing.
    pub s_hit_product_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSchedule {
    pub params: ScheduleParams,
    pub entries: Vec<ScheduleEntry>,
    pub flags: ScheduleFlags,
}

fn increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn build_schedule(
    chain: &MarkovChainModel,
    family: &WordFamily,
    ns: &[usize],
    params: &ScheduleParams,
) -> Result<ScalingSchedule> {
    params.validate()?;
    let words = family.words(ns)?;
    let mut entries = Vec::with_capacity(ns.len());
    for (i, (&n, word)) in ns.iter().zip(words).enumerate() {
        let measure = word_measure(chain, &word);
        if !(measure > 0.0) {
            return Err(Error::NullWord);
        }
        if let Some(prev) = entries.last().map(|e: &ScheduleEntry| e.measure) {
            if measure >= prev {
                return Err(Error::NotNested { index: i });
            }
        }
        let s = params.s_rule.block_length(measure, i)?;
        let p = count_distributions(chain, &word, &[s], 0)?[0].hit_probability();
        entries.push(ScheduleEntry::new(n, word, measure, s, p, params.t, params.alpha_exp)?);
    }
    let col = |f: &dyn Fn(&ScheduleEntry) -> f64| entries.iter().map(f).collect::<Vec<f64>>();
    let flags = ScheduleFlags {
        s_increasing: increasing(&col(&|e| e.s as f64)),
        p_decreasing: decreasing(&col(&|e| e.p)),
        s_eta_p_increasing: increasing(&col(&|e| (e.s as f64).powf(params.eta) * e.p)),
        s_one_minus_alpha_p_increasing: increasing(&col(&|e| {
            (e.s as f64).powf(1.0 - params.alpha_exp) * e.p
        })),
        s_hit_product_decreasing: decreasing(&col(&|e| e.s_hit_product)),
    };
    Ok(ScalingSchedule {
        params: params.clone(),
        entries,
        flags,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: usize,
    pub window: usize,
    pub k: usize,
    pub lambda: f64,
    /// `λ_k(s_n, U_n)`.
    pub lambda_hat: f64,
    pub s: usize,
    pub unreliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    /// `max_k |λ_k(L_max, U_{n_max}) − λ̂_k(n_max)|`; zero for an empty table.
    pub diagnostic: f64,
    /// `max_k |λ̂_k(n_{i+1}) − λ̂_k(n_i)|` along the grid.
    pub successive_differences: Vec<f64>,
}

/// `λ_k(L, U_n)` over the grids together with `λ̂_k(n) = λ_k(s_n, U_n)`.
///
/// Rows are ordered by `(n, L, k)`.
pub fn limit_scan(
    chain: &MarkovChainModel,
    family: &WordFamily,
    windows: &[usize],
    ns: &[usize],
    k: usize,
    s_rule: &SRule,
) -> Result<ScanTable> {
    if windows.is_empty() || ns.is_empty() {
        return Err(invalid("grid", "window and n grids must be nonempty"));
    }
    if windows.contains(&0) {
        return Err(invalid("window", "must be at least 1"));
    }
    let mut l_grid = windows.to_vec();
    l_grid.sort_unstable();
    l_grid.dedup();
    let words = family.words(ns)?;
    let mut rows = Vec::new();
    let mut hats: Vec<Vec<f64>> = Vec::with_capacity(ns.len());
    let mut last_lambdas = Vec::new();
    for (i, (&n, word)) in ns.iter().zip(&words).enumerate() {
        let s = s_rule.block_length(word_measure(chain, word), i)?;
        let mut all = l_grid.clone();
        all.push(s);
        let dists = count_distributions(chain, word, &all, k)?;
        let law_of = |d: &CountDistribution| -> Result<Vec<f64>> {
            let law = cluster_law_from_counts(d)?;
            Ok((1..=k).map(|j| law.get(j)).collect())
        };
        let hat = law_of(&dists[l_grid.len()])?;
        for (li, &window) in l_grid.iter().enumerate() {
            let lam = law_of(&dists[li])?;
            for j in 0..k {
                rows.push(ScanRow {
                    n,
                    window,
                    k: j + 1,
                    lambda: lam[j],
                    lambda_hat: hat[j],
                    s,
                    unreliable: hat[j] < UNRELIABLE_LAMBDA,
                });
            }
            last_lambdas = lam;
        }
        hats.push(hat);
    }
    let diagnostic = match hats.last() {
        Some(hat) => hat
            .iter()
            .zip(&last_lambdas)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
        None => 0.0,
    };
    let successive_differences = hats
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    Ok(ScanTable {
        rows,
        diagnostic,
        successive_differences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin() -> MarkovChainModel {
        MarkovChainModel::doubling()
    }

    fn word(s: &str) -> CylinderWord {
        CylinderWord::parse_digits(s).unwrap()
    }

    fn dist(probs: Vec<f64>) -> CountDistribution {
        CountDistribution {
            window: probs.len() - 1,
            probs,
            tail_mass: 0.0,
        }
    }

    #[test]
    fn cluster_law_examples() {
        let law = cluster_law_from_counts(&dist(vec![0.25, 0.5, 0.25])).unwrap();
        assert!((law.get(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((law.get(2) - 1.0 / 3.0).abs() < 1e-15);
        let law = cluster_law_from_counts(&dist(vec![0.3, 0.7])).unwrap();
        assert_eq!(law.get(1), 1.0);
        assert!(cluster_law_from_counts(&dist(vec![1.0, 0.0])).is_err());
    }

    #[test]
    fn fixed_point_clusters_are_geometric() {
        let d = count_distributions(&coin(), &CylinderWord::zeros(10).unwrap(), &[200], 8).unwrap();
        let law = cluster_law_from_counts(&d[0]).unwrap();
        for k in 1..=5 {
            assert!((law.get(k) - 0.5f64.powi(k as i32)).abs() < 0.03, "k={k}: {}", law.get(k));
        }
        // The two estimators differ by the chance of a second cluster in the
        // window, which needs L μ(U) small.
        for (n, l, tol) in [(10, 200, 0.03), (12, 256, 0.01), (14, 256, 0.005)] {
            let w = CylinderWord::zeros(n).unwrap();
            let counts = cluster_law_from_counts(&count_distributions(&coin(), &w, &[l], 8).unwrap()[0]).unwrap();
            let from_alpha = lambda_from_alpha(&alpha_spectrum(&coin(), &w, l, 9).unwrap()).unwrap();
            for k in 1..=5 {
                assert!((counts.get(k) - from_alpha.get(k)).abs() < tol, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn alpha_examples() {
        let spec = alpha_spectrum(&coin(), &word("00"), 2, 3).unwrap();
        assert_eq!(spec.extremal_index(), 0.5);
        for w in ["0", "0110", "111"] {
            assert_eq!(alpha_spectrum(&coin(), &word(w), 1, 4).unwrap().extremal_index(), 1.0);
        }
        // A lone symbol returns almost surely; long runs of it keep α_1 near 1/2.
        let short = alpha_spectrum(&coin(), &word("0"), 40, 2).unwrap();
        assert!(short.extremal_index() < 1e-10);
        let long = alpha_spectrum(&coin(), &CylinderWord::zeros(14).unwrap(), 64, 2).unwrap();
        assert!((long.extremal_index() - 0.5).abs() < 0.01);
        let total: f64 = long.alpha.iter().sum::<f64>() + long.remainder;
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_from_alpha_examples() {
        let none = AlphaSpectrum {
            window: 5,
            alpha: vec![1.0, 0.0, 0.0],
            remainder: 0.0,
        };
        let law = lambda_from_alpha(&none).unwrap();
        assert_eq!((law.get(1), law.get(2)), (1.0, 0.0));
        let theta: f64 = 0.4;
        let geo = AlphaSpectrum {
            window: 5,
            alpha: (0..12).map(|k| theta.powi(k)).collect(),
            remainder: 0.0,
        };
        let law = lambda_from_alpha(&geo).unwrap();
        for k in 1..11 {
            let expect = (1.0 - theta) * theta.powi(k as i32 - 1);
            assert!((law.get(k) - expect).abs() < 1e-12);
        }
        let zero = AlphaSpectrum {
            window: 5,
            alpha: vec![0.0, 0.5],
            remainder: 0.5,
        };
        assert!(lambda_from_alpha(&zero).is_err());
        let bumpy = AlphaSpectrum {
            window: 5,
            alpha: vec![0.2, 0.5],
            remainder: 0.3,
        };
        assert_eq!(lambda_from_alpha(&bumpy), Err(Error::NonMonotoneSpectrum { k: 1 }));
    }

    #[test]
    fn kac_examples() {
        let c = kac_identity_check(&coin(), &word("0"), 2).unwrap();
        assert!((c.lhs - 0.75).abs() < 1e-15 && (c.rhs - 0.75).abs() < 1e-15);
        let c = kac_identity_check(&coin(), &word("00"), 2).unwrap();
        assert!((c.lhs - 0.375).abs() < 1e-15 && (c.rhs - 0.375).abs() < 1e-15);
        let chain = MarkovChainModel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None).unwrap();
        let w = word("0110");
        let c = kac_identity_check(&chain, &w, 1).unwrap();
        assert!((c.lhs - word_measure(&chain, &w)).abs() < 1e-15);
        for l in [3, 17, 90] {
            assert!(kac_identity_check(&chain, &w, l).unwrap().diff < 1e-12);
        }
    }

    #[test]
    fn schedule_entry_formula() {
        let e = ScheduleEntry::new(5, word("00000"), 1.0 / 32.0, 100, 0.01, 1.0, 0.5).unwrap();
        assert!((e.r - 100.0).abs() < 1e-9);
        assert!((e.big_n - 1e4).abs() < 1e-6);
        assert!((e.r * e.p - 1.0).abs() < 1e-15);
        assert_eq!(e.delta, 10);
    }

    #[test]
    fn kac_power_lengths_on_the_doubling_family() {
        let s = build_schedule(&coin(), &WordFamily::zeros(), &[4, 6, 8, 10], &ScheduleParams::default()).unwrap();
        let lens: Vec<usize> = s.entries.iter().map(|e| e.s).collect();
        assert_eq!(lens, vec![4, 8, 16, 32]);
        assert!(s.flags.s_increasing && s.flags.p_decreasing);
        assert!(s.entries.iter().all(|e| (e.r * e.p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn hypothesis_flags_with_a_steeper_exponent() {
        let params = ScheduleParams {
            t: 1.0,
            s_rule: SRule::KacPower { omega: 0.75 },
            alpha_exp: 0.5,
            eta: 0.875,
        };
        let ns: Vec<usize> = (8..=20).collect();
        let s = build_schedule(&coin(), &WordFamily::zeros(), &ns, &params).unwrap();
        assert!(s.flags.p_decreasing);
        assert!(s.flags.s_eta_p_increasing);
        assert!(s.flags.s_one_minus_alpha_p_increasing);
    }

    #[test]
    fn families_must_nest() {
        let fam = WordFamily::Explicit {
            words: vec![vec![0], vec![0, 1], vec![1, 1, 1]],
        };
        assert_eq!(fam.words(&[1, 2, 3]), Err(Error::NotNested { index: 2 }));
        assert!(fam.words(&[1, 2]).is_ok());
        let per = WordFamily::Periodic { period: vec![0, 1] };
        assert_eq!(per.word(5).unwrap().symbols(), &[0, 1, 0, 1, 0]);
    }

    #[test]
    fn scan_diagnostic_on_the_fixed_point_family() {
        let t = limit_scan(
            &coin(),
            &WordFamily::zeros(),
            &[64, 256],
            &[10, 12, 14],
            DEFAULT_MAX_CLUSTER,
            &SRule::KacPower { omega: 0.5 },
        )
        .unwrap();
        assert_eq!(t.rows.len(), 3 * 2 * DEFAULT_MAX_CLUSTER);
        assert!(t.diagnostic < 0.02, "{}", t.diagnostic);
        for row in &t.rows {
            assert!((0.0..=1.0).contains(&row.lambda));
        }
        assert!(limit_scan(&coin(), &WordFamily::zeros(), &[], &[3], 4, &SRule::KacPower { omega: 0.5 }).is_err());
        let empty = limit_scan(&coin(), &WordFamily::zeros(), &[8], &[3], 0, &SRule::KacPower { omega: 0.5 }).unwrap();
        assert!(empty.rows.is_empty());
    }
}
