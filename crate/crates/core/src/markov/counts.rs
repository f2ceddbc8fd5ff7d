//! Exact laws of the counting function `Z^L = Σ_{j<L} 1_U ∘ T^j` for
//! cylinder targets, by dynamic programming over
//! (automaton state, hit count).

use serde::{Deserialize, Serialize};

use super::automaton::ChainAutomaton;
use super::{CylinderWord, MarkovChainModel};
use crate::distributions::DiscreteLaw;
use crate::error::{invalid, Error, Result};

/// Default count truncation for a window.
pub fn default_kmax(window: usize) -> usize {
    window.min(64)
}

/// Law of `Z^L` truncated at `kmax`; mass of `{Z > kmax}` sits in `tail_mass`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    pub window: usize,
    pub probs: Vec<f64>,
    pub tail_mass: f64,
}

impl CountDistribution {
    pub fn prob(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    /// `P(Z ≥ 1)`.
    pub fn hit_probability(&self) -> f64 {
        1.0 - self.probs[0]
    }

    /// `P(Z ≤ k)`.
    pub fn cdf(&self, k: usize) -> f64 {
        self.probs.iter().take(k + 1).sum()
    }

    pub fn kmax(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn to_law(&self) -> Result<DiscreteLaw> {
        DiscreteLaw::with_remainder(self.probs.clone())
    }
}

/// Forward DP over `states × (kmax + 1)` count layers. Layer `c` only reads
/// layers `c` and `c − 1`, so lower layers are bitwise independent of `kmax`.
struct CountDp<'a> {
    auto: &'a ChainAutomaton,
    width: usize,
    mass: Vec<f64>,
    next: Vec<f64>,
    overflow: f64,
}

impl<'a> CountDp<'a> {
    fn new(auto: &'a ChainAutomaton, kmax: usize, origin: usize) -> Self {
        let width = kmax + 1;
        let mut mass = vec![0.0; auto.num_states() * width];
        mass[origin * width] = 1.0;
        Self {
            auto,
            width,
            next: vec![0.0; mass.len()],
            mass,
            overflow: 0.0,
        }
    }

    fn step(&mut self) {
        let w = self.width;
        self.next.iter_mut().for_each(|x| *x = 0.0);
        for (s, edges) in self.auto.edges.iter().enumerate() {
            let src = &self.mass[s * w..(s + 1) * w];
            for e in edges {
                let base = e.target * w;
                if e.hit {
                    let dst = &mut self.next[base + 1..base + w];
                    for (d, m) in dst.iter_mut().zip(src) {
                        *d += m * e.prob;
                    }
                    self.overflow += src[w - 1] * e.prob;
                } else {
                    let dst = &mut self.next[base..base + w];
                    for (d, m) in dst.iter_mut().zip(src) {
                        *d += m * e.prob;
                    }
                }
            }
        }
        std::mem::swap(&mut self.mass, &mut self.next);
    }

    fn snapshot(&self, window: usize) -> CountDistribution {
        let w = self.width;
        let mut probs = vec![0.0; w];
        for s in 0..self.auto.num_states() {
            for (c, p) in probs.iter_mut().enumerate() {
                *p += self.mass[s * w + c];
            }
        }
        CountDistribution {
            window,
            probs,
            tail_mass: self.overflow,
        }
    }
}

fn prepare(chain: &MarkovChainModel, word: &CylinderWord) -> Result<ChainAutomaton> {
    word.validate_for(chain)?;
    Ok(ChainAutomaton::build(chain, word))
}

/// Laws of `Z^L` for several windows from one forward pass. Windows may be
/// zero (`Z^0 ≡ 0`) and need not be sorted; output follows input order.
pub fn count_distributions(
    chain: &MarkovChainModel,
    word: &CylinderWord,
    windows: &[usize],
    kmax: usize,
) -> Result<Vec<CountDistribution>> {
    let auto = prepare(chain, word)?;
    Ok(unconditional_pass(&auto, word.len(), windows, kmax))
}

fn unconditional_pass(
    auto: &ChainAutomaton,
    n: usize,
    windows: &[usize],
    kmax: usize,
) -> Vec<CountDistribution> {
    let mut order: Vec<usize> = (0..windows.len()).collect();
    order.sort_by_key(|&i| windows[i]);
    let mut out: Vec<Option<CountDistribution>> = vec![None; windows.len()];
    let mut dp = CountDp::new(auto, kmax, auto.start);
    let mut read = 0;
    for i in order {
        let window = windows[i];
        if window == 0 {
            let mut probs = vec![0.0; kmax + 1];
            probs[0] = 1.0;
            out[i] = Some(CountDistribution {
                window,
                probs,
                tail_mass: 0.0,
            });
            continue;
        }
        let symbols = window + n - 1;
        while read < symbols {
            dp.step();
            read += 1;
        }
        out[i] = Some(dp.snapshot(window));
    }
    out.into_iter().map(|d| d.expect("every window visited")).collect()
}

/// Exact law of `Z^L_U` for the cylinder of `word`, truncated at `kmax`.
pub fn count_distribution_exact(
    chain: &MarkovChainModel,
    word: &CylinderWord,
    window: usize,
    kmax: usize,
) -> Result<CountDistribution> {
    if window == 0 {
        return Err(invalid("window", "must be at least 1"));
    }
    if kmax > window {
        return Err(Error::TruncationExceedsWindow { kmax, window });
    }
    Ok(count_distributions(chain, word, &[window], kmax)?.remove(0))
}

/// `P(τ̂ ≥ ℓ)` for `ℓ = 0..=lmax`, where `τ̂` is the first `j ≥ 0` with
/// `T^j x ∈ U`. Entry `ℓ` equals `P(Z^ℓ = 0)`.
pub fn entry_time_tail(chain: &MarkovChainModel, word: &CylinderWord, lmax: usize) -> Result<Vec<f64>> {
    if lmax == 0 {
        return Err(invalid("lmax", "must be at least 1"));
    }
    let auto = prepare(chain, word)?;
    let n = word.len();
    let mut dp = CountDp::new(&auto, 0, auto.start);
    for _ in 0..n - 1 {
        dp.step();
    }
    let mut tail = Vec::with_capacity(lmax + 1);
    tail.push(1.0);
    for l in 1..=lmax {
        dp.step();
        tail.push(dp.snapshot(l).probs[0]);
    }
    Ok(tail)
}

/// Conditional on `x ∈ U`, laws of the number of returns at times
/// `j = 1, ..., L − 1` for each requested `L ≥ 1`.
pub fn conditional_return_counts(
    chain: &MarkovChainModel,
    word: &CylinderWord,
    windows: &[usize],
    kmax: usize,
) -> Result<Vec<CountDistribution>> {
    if windows.contains(&0) {
        return Err(invalid("window", "conditional windows start at 1"));
    }
    let auto = prepare(chain, word)?;
    let mut order: Vec<usize> = (0..windows.len()).collect();
    order.sort_by_key(|&i| windows[i]);
    let mut out: Vec<Option<CountDistribution>> = vec![None; windows.len()];
    let mut dp = CountDp::new(&auto, kmax, auto.after_word);
    let mut read = 0;
    for i in order {
        let steps = windows[i] - 1;
        while read < steps {
            dp.step();
            read += 1;
        }
        out[i] = Some(dp.snapshot(windows[i]));
    }
    Ok(out.into_iter().map(|d| d.expect("every window visited")).collect())
}

/// `P(τ^k ≥ ℓ | U)` for `ℓ = 1..=lmax` (index `ℓ − 1`), with `τ^k` the k-th
/// return time (`j ≥ 1`).
pub fn conditional_return_tail(
    chain: &MarkovChainModel,
    word: &CylinderWord,
    lmax: usize,
    k: usize,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(invalid("k", "return index starts at 1"));
    }
    if lmax == 0 {
        return Err(invalid("lmax", "must be at least 1"));
    }
    let auto = prepare(chain, word)?;
    let mut dp = CountDp::new(&auto, k - 1, auto.after_word);
    let mut tail = Vec::with_capacity(lmax);
    for l in 1..=lmax {
        if l > 1 {
            dp.step();
        }
        tail.push(dp.snapshot(l).probs.iter().sum());
    }
    Ok(tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::word_measure;
    use proptest::prelude::*;

    /// Weighted enumeration of every sequence of length `L + n − 1`.
    fn brute_counts(chain: &MarkovChainModel, word: &[usize], window: usize) -> Vec<f64> {
        let m = chain.alphabet_size();
        let len = window + word.len() - 1;
        let mut law = vec![0.0; window + 1];
        let mut seq = vec![0usize; len];
        let total = m.pow(len as u32);
        for code in 0..total {
            let mut c = code;
            for slot in seq.iter_mut() {
                *slot = c % m;
                c /= m;
            }
            let weight = seq
                .windows(2)
                .fold(chain.stationary()[seq[0]], |acc, w| acc * chain.p(w[0], w[1]));
            let hits = (0..window).filter(|&j| seq[j..j + word.len()] == *word).count();
            law[hits] += weight;
        }
        law
    }

    fn coin() -> MarkovChainModel {
        MarkovChainModel::doubling()
    }

    fn word(s: &str) -> CylinderWord {
        CylinderWord::parse_digits(s).unwrap()
    }

    #[test]
    fn single_symbol_is_binomial() {
        let d = count_distribution_exact(&coin(), &word("0"), 2, 2).unwrap();
        assert_eq!(d.probs, vec![0.25, 0.5, 0.25]);
        assert_eq!(d.tail_mass, 0.0);
    }

    #[test]
    fn double_zero_window_two() {
        let d = count_distribution_exact(&coin(), &word("00"), 2, 2).unwrap();
        assert_eq!(d.probs, vec![5.0 / 8.0, 0.25, 0.125]);
        assert_eq!(brute_counts(&coin(), &[0, 0], 2), vec![5.0 / 8.0, 0.25, 0.125]);
    }

    #[test]
    fn one_trial_window() {
        let chain = MarkovChainModel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None).unwrap();
        for s in ["0", "01", "110", "0100"] {
            let w = word(s);
            let mu = word_measure(&chain, &w);
            let d = count_distribution_exact(&chain, &w, 1, 1).unwrap();
            assert!((d.probs[0] - (1.0 - mu)).abs() < 1e-15);
            assert!((d.probs[1] - mu).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_enumeration_on_markov_chain() {
        let chain = MarkovChainModel::new(
            vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.3, 0.3, 0.4]],
            None,
        )
        .unwrap();
        for s in ["1", "02", "121", "0000"] {
            let w = word(s);
            for window in 1..=6 {
                let d = count_distribution_exact(&chain, &w, window, window).unwrap();
                let brute = brute_counts(&chain, w.symbols(), window);
                for k in 0..=window {
                    assert!((d.probs[k] - brute[k]).abs() < 1e-12, "{s} L={window} k={k}: {} vs {}", d.probs[k], brute[k]);
                }
            }
        }
    }

    #[test]
    fn truncation_moves_mass_to_tail() {
        let d = count_distribution_exact(&coin(), &word("0"), 6, 2).unwrap();
        let full = count_distribution_exact(&coin(), &word("0"), 6, 6).unwrap();
        assert_eq!(&d.probs[..], &full.probs[..3]);
        assert!((d.tail_mass - full.probs[3..].iter().sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(matches!(
            count_distribution_exact(&coin(), &word("0"), 3, 4),
            Err(Error::TruncationExceedsWindow { kmax: 4, window: 3 })
        ));
        assert!(count_distribution_exact(&coin(), &word("2"), 3, 1).is_err());
        assert!(count_distribution_exact(&coin(), &word("0"), 0, 0).is_err());
    }

    #[test]
    fn entry_tail_examples() {
        let tail = entry_time_tail(&coin(), &word("0"), 10).unwrap();
        for (l, t) in tail.iter().enumerate() {
            assert_eq!(*t, 0.5f64.powi(l as i32));
        }
        let tail = entry_time_tail(&coin(), &word("00"), 4).unwrap();
        assert_eq!(tail[0], 1.0);
        assert_eq!(tail[2], 5.0 / 8.0);
    }

    #[test]
    fn entry_tail_agrees_with_count_law_bitwise() {
        let chain = MarkovChainModel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None).unwrap();
        let w = word("0110");
        let tail = entry_time_tail(&chain, &w, 40).unwrap();
        for l in [1, 5, 17, 40] {
            let d = count_distribution_exact(&chain, &w, l, default_kmax(l)).unwrap();
            assert_eq!(tail[l], d.probs[0]);
        }
    }

    #[test]
    fn conditional_tail_examples() {
        let t = conditional_return_tail(&coin(), &word("00"), 2, 1).unwrap();
        assert_eq!(t, vec![1.0, 0.5]);
        let t = conditional_return_tail(&coin(), &word("0"), 12, 1).unwrap();
        for (i, v) in t.iter().enumerate() {
            assert_eq!(*v, 0.5f64.powi(i as i32));
        }
    }

    #[test]
    fn conditional_tail_by_enumeration() {
        // P(τ^k ≥ ℓ | U) = P(U, fewer than k hits in 1..ℓ−1) / μ(U), brute-forced.
        let chain = MarkovChainModel::new(vec![vec![0.7, 0.3], vec![0.4, 0.6]], None).unwrap();
        let w = [0usize, 1, 0];
        let cw = CylinderWord::new(w.to_vec()).unwrap();
        let mu = word_measure(&chain, &cw);
        for k in 1..=3 {
            let tail = conditional_return_tail(&chain, &cw, 7, k).unwrap();
            for l in 1..=7usize {
                let len = l - 1 + w.len();
                let mut acc = 0.0;
                for code in 0..(1usize << len) {
                    let seq: Vec<usize> = (0..len).map(|i| (code >> i) & 1).collect();
                    if seq[..3] != w {
                        continue;
                    }
                    let hits = (1..l).filter(|&j| seq[j..j + 3] == w).count();
                    if hits < k {
                        acc += seq.windows(2).fold(chain.stationary()[seq[0]], |a, p| a * chain.p(p[0], p[1]));
                    }
                }
                assert!((tail[l - 1] - acc / mu).abs() < 1e-14, "k={k} l={l}");
            }
        }
    }

    #[test]
    fn multi_window_pass_matches_single() {
        let chain = MarkovChainModel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None).unwrap();
        let w = word("010");
        let all = count_distributions(&chain, &w, &[30, 0, 7, 12], 5).unwrap();
        assert_eq!(all[1].probs[0], 1.0);
        for d in [&all[0], &all[2], &all[3]] {
            assert_eq!(*d, count_distribution_exact(&chain, &w, d.window, 5).unwrap());
        }
    }

    #[test]
    fn window_additivity_for_single_symbols() {
        let chain = MarkovChainModel::iid(vec![0.3, 0.7]).unwrap();
        let w = word("1");
        let (t, s) = (9, 6);
        let laws = count_distributions(&chain, &w, &[t, s, t + s], t + s).unwrap();
        for k in 0..=t + s {
            let conv: f64 = (0..=k).map(|j| laws[0].prob(j) * laws[1].prob(k - j)).sum();
            assert!((conv - laws[2].prob(k)).abs() < 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn hitting_tail_is_monotone(
            a in 0.05f64..0.95, b in 0.05f64..0.95,
            symbols in prop::collection::vec(0usize..2, 1..6),
        ) {
            let chain = MarkovChainModel::new(vec![vec![a, 1.0 - a], vec![b, 1.0 - b]], None).unwrap();
            let w = CylinderWord::new(symbols).unwrap();
            let tail = entry_time_tail(&chain, &w, 30).unwrap();
            prop_assert!(tail.windows(2).all(|p| p[1] <= p[0]));
            let cond = conditional_return_tail(&chain, &w, 30, 2).unwrap();
            prop_assert!(cond.windows(2).all(|p| p[1] <= p[0] + 1e-15));
            let cond1 = conditional_return_tail(&chain, &w, 30, 1).unwrap();
            prop_assert!(cond1.iter().zip(&cond).all(|(x, y)| x <= &(y + 1e-15)));
        }

        #[test]
        fn nested_words_are_hit_less_often(
            a in 0.05f64..0.95, b in 0.05f64..0.95,
            symbols in prop::collection::vec(0usize..2, 2..7),
            window in 1usize..25,
        ) {
            let chain = MarkovChainModel::new(vec![vec![a, 1.0 - a], vec![b, 1.0 - b]], None).unwrap();
            let long = CylinderWord::new(symbols.clone()).unwrap();
            let short = CylinderWord::new(symbols[..symbols.len() - 1].to_vec()).unwrap();
            let pl = count_distribution_exact(&chain, &long, window, 1).unwrap().hit_probability();
            let ps = count_distribution_exact(&chain, &short, window, 1).unwrap().hit_probability();
            prop_assert!(pl <= ps + 1e-15);
        }

        #[test]
        fn mass_is_conserved(
            a in 0.05f64..0.95, b in 0.05f64..0.95,
            symbols in prop::collection::vec(0usize..2, 1..6),
            window in 1usize..40, kmax in 0usize..6,
        ) {
            let chain = MarkovChainModel::new(vec![vec![a, 1.0 - a], vec![b, 1.0 - b]], None).unwrap();
            let w = CylinderWord::new(symbols).unwrap();
            let d = count_distribution_exact(&chain, &w, window, kmax.min(window)).unwrap();
            let total: f64 = d.probs.iter().sum::<f64>() + d.tail_mass;
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }
}
