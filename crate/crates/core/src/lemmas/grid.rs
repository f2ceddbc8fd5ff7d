//! Grids of lemma cells and their runners. Words are processed in
//! parallel, each with its own count cache; output order is fixed by the
//! grid, not by scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    cauchy_error_check, convolution_defect, dyadic_lower_bound_check, eta, gf_identity_residual,
    k_ratio_check, ratio_bound_check, BoundVariant, ConvolutionCell, CountCache, GeneratingPoly,
    LemmaReport, Outcome,
};
use crate::error::{invalid, Result};
use crate::markov::{CylinderWord, MarkovChainModel, MixingBound};

fn zeros(ns: impl IntoIterator<Item = usize>) -> Vec<Vec<usize>> {
    ns.into_iter().map(|n| vec![0; n]).collect()
}

fn to_words(raw: &[Vec<usize>]) -> Result<Vec<CylinderWord>> {
    if raw.is_empty() {
        return Err(invalid("words", "grid has no words"));
    }
    raw.iter().map(|w| CylinderWord::new(w.clone())).collect()
}

fn nonempty<T>(name: &'static str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(invalid(name, "grid axis is empty"));
    }
    Ok(())
}

fn per_word<F>(chain: &MarkovChainModel, words: &[CylinderWord], kmax: usize, f: F) -> Result<Vec<LemmaReport>>
where
    F: Fn(&mut CountCache, &CylinderWord) -> Result<Vec<LemmaReport>> + Sync,
{
    for w in words {
        w.validate_for(chain)?;
    }
    let parts: Vec<Result<Vec<LemmaReport>>> = words
        .par_iter()
        .map(|w| {
            let mut cache = CountCache::new(chain, kmax);
            f(&mut cache, w)
        })
        .collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvolutionGrid {
    pub words: Vec<Vec<usize>>,
    /// Values used for both `t` and `s`.
    pub windows: Vec<usize>,
    pub ks: Vec<usize>,
    /// Smallest gap tried; defaults to `n + 1`.
    pub delta_min: Option<usize>,
    pub variant: BoundVariant,
}

impl Default for ConvolutionGrid {
    /// Words of depth 1..=12 on two symbols: runs of zeros, the alternating
    /// word, and one pseudo-random word per depth.
    fn default() -> Self {
        let mut words = zeros(1..=12);
        words.push(vec![1]);
        for n in 2..=12 {
            words.push((0..n).map(|i| i % 2).collect());
            let w = CylinderWord::pseudo_random(2, n, n as u64).expect("valid word");
            words.push(w.symbols().to_vec());
        }
        Self {
            words,
            windows: vec![8, 16, 32, 64],
            ks: (0..=4).collect(),
            delta_min: None,
            variant: BoundVariant::Hitting,
        }
    }
}

pub fn run_convolution_grid(
    chain: &MarkovChainModel,
    mixing: &MixingBound,
    grid: &ConvolutionGrid,
) -> Result<Vec<LemmaReport>> {
    let words = to_words(&grid.words)?;
    nonempty("windows", &grid.windows)?;
    nonempty("ks", &grid.ks)?;
    let kmax = *grid.ks.iter().max().expect("nonempty");
    per_word(chain, &words, kmax, |cache, w| {
        let mut out = Vec::new();
        let lo = grid.delta_min.unwrap_or(w.len() + 1).max(1);
        for &s in &grid.windows {
            for delta in lo..s.div_ceil(2) {
                for &k in &grid.ks {
                    let cell = ConvolutionCell {
                        t: s,
                        s,
                        delta,
                        k,
                        variant: grid.variant,
                    };
                    out.push(convolution_defect(cache, w, cell, mixing)?);
                }
            }
        }
        Ok(out)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DyadicGrid {
    pub words: Vec<Vec<usize>>,
    pub deltas: Vec<usize>,
    pub rs: Vec<usize>,
    pub gamma: f64,
}

impl Default for DyadicGrid {
    fn default() -> Self {
        Self {
            words: zeros([8, 10, 12, 14]),
            deltas: vec![16, 32, 64],
            rs: vec![1, 2, 4, 8],
            gamma: 0.1,
        }
    }
}

pub fn run_dyadic_grid(chain: &MarkovChainModel, mixing: &MixingBound, grid: &DyadicGrid) -> Result<Vec<LemmaReport>> {
    let words = to_words(&grid.words)?;
    nonempty("deltas", &grid.deltas)?;
    nonempty("rs", &grid.rs)?;
    per_word(chain, &words, 1, |cache, w| {
        let mut out = Vec::new();
        for &delta in &grid.deltas {
            for &r in &grid.rs {
                out.push(dyadic_lower_bound_check(cache, w, delta, r, grid.gamma, mixing)?);
            }
        }
        Ok(out)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatioGrid {
    pub words: Vec<Vec<usize>>,
    pub windows: Vec<usize>,
    pub rs: Vec<usize>,
    pub deltas: Vec<usize>,
    pub gamma: f64,
}

impl Default for RatioGrid {
    fn default() -> Self {
        Self {
            words: zeros([10, 12, 14]),
            windows: vec![128, 256, 512],
            rs: vec![1, 2, 4, 8],
            deltas: vec![16, 32, 64],
            gamma: 0.1,
        }
    }
}

pub fn run_ratio_grid(chain: &MarkovChainModel, mixing: &MixingBound, grid: &RatioGrid) -> Result<Vec<LemmaReport>> {
    let words = to_words(&grid.words)?;
    nonempty("windows", &grid.windows)?;
    nonempty("rs", &grid.rs)?;
    nonempty("deltas", &grid.deltas)?;
    per_word(chain, &words, 1, |cache, w| {
        let mut out = Vec::new();
        for &l in &grid.windows {
            for &r in &grid.rs {
                for &delta in &grid.deltas {
                    out.push(ratio_bound_check(cache, w, l, r, delta, grid.gamma, mixing)?);
                }
            }
        }
        Ok(out)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KRatioGrid {
    pub words: Vec<Vec<usize>>,
    pub windows: Vec<usize>,
    pub rs: Vec<usize>,
    pub ks: Vec<usize>,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for KRatioGrid {
    fn default() -> Self {
        Self {
            words: zeros([14, 16]),
            windows: vec![128],
            rs: vec![4, 8],
            ks: vec![1, 2, 3],
            beta: 0.5,
            gamma: 0.1,
        }
    }
}

pub fn run_k_ratio_grid(chain: &MarkovChainModel, mixing: &MixingBound, grid: &KRatioGrid) -> Result<Vec<LemmaReport>> {
    let words = to_words(&grid.words)?;
    nonempty("windows", &grid.windows)?;
    nonempty("rs", &grid.rs)?;
    nonempty("ks", &grid.ks)?;
    let kmax = *grid.ks.iter().max().expect("nonempty");
    per_word(chain, &words, kmax, |cache, w| {
        let mut out = Vec::new();
        for &l in &grid.windows {
            for &r in &grid.rs {
                for &k in &grid.ks {
                    out.push(k_ratio_check(cache, w, l, r, k, grid.beta, grid.gamma, mixing)?);
                }
            }
        }
        Ok(out)
    })
}

/// `max / min` of the implied constants over non-vacuous cells with a
/// nonzero deviation; `None` when fewer than one such cell exists.
pub fn implied_constant_band(reports: &[LemmaReport]) -> Option<f64> {
    let vals: Vec<f64> = reports
        .iter()
        .filter(|r| r.outcome != Outcome::Vacuous && r.lhs > 0.0)
        .filter_map(|r| r.get_extra("implied_constant"))
        .collect();
    if vals.is_empty() {
        return None;
    }
    let max = vals.iter().copied().fold(f64::MIN, f64::max);
    let min = vals.iter().copied().fold(f64::MAX, f64::min);
    Some(max / min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GfInstance {
    pub word: Vec<usize>,
    pub s: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratingGrid {
    pub instances: Vec<GfInstance>,
    pub max_r: usize,
    pub kmax: usize,
    pub alpha_exp: f64,
}

impl Default for GeneratingGrid {
    fn default() -> Self {
        let inst = |word: Vec<usize>, s| GfInstance { word, s };
        Self {
            instances: vec![
                inst(vec![0], 8),
                inst(vec![0, 0], 8),
                inst(vec![0, 1], 16),
                inst(vec![0; 6], 32),
                inst(vec![0, 1, 1, 0], 32),
            ],
            max_r: 6,
            kmax: 12,
            alpha_exp: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GfResidual {
    pub word: String,
    pub s: usize,
    pub r: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratingOutcome {
    pub residuals: Vec<GfResidual>,
    pub cauchy: Vec<LemmaReport>,
}

/// Identity residuals for `r = 2..=max_r` and the coefficient bounds on
/// `F_s^r − F_{rs}` with `η̃(s) = η(⌊s^{alpha_exp}⌋)`.
pub fn run_generating_grid(
    chain: &MarkovChainModel,
    mixing: &MixingBound,
    grid: &GeneratingGrid,
) -> Result<GeneratingOutcome> {
    nonempty("instances", &grid.instances)?;
    if grid.max_r < 2 {
        return Err(invalid("max_r", "must be at least 2"));
    }
    let mut residuals = Vec::new();
    let mut cauchy = Vec::new();
    for inst in &grid.instances {
        let word = CylinderWord::new(inst.word.clone())?;
        word.validate_for(chain)?;
        if inst.s == 0 {
            return Err(invalid("s", "must be positive"));
        }
        let mut cache = CountCache::new(chain, grid.kmax);
        let family = GeneratingPoly::family(&mut cache, &word, inst.s, grid.max_r)?;
        let delta = (inst.s as f64).powf(grid.alpha_exp).floor() as usize;
        let eta_tilde = eta(&mut cache, &word, delta, mixing, BoundVariant::Hitting)?;
        for r in 2..=grid.max_r {
            residuals.push(GfResidual {
                word: word.to_string(),
                s: inst.s,
                r,
                residual: gf_identity_residual(&family[..=r])?,
            });
            cauchy.extend(cauchy_error_check(&family[..=r], &word, eta_tilde)?);
        }
    }
    Ok(GeneratingOutcome { residuals, cauchy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lemmas::Tally;
    use crate::markov::phi_bound;

    #[test]
    fn default_convolution_grid_has_no_failures() {
        let chain = MarkovChainModel::doubling();
        let phi = phi_bound(&chain).unwrap();
        let reports = run_convolution_grid(&chain, &phi, &ConvolutionGrid::default()).unwrap();
        let tally = Tally::of(&reports);
        assert_eq!(tally.fail, 0);
        assert!(tally.non_vacuous() >= 500, "{tally:?}");
    }

    #[test]
    fn empty_axes_are_rejected() {
        let chain = MarkovChainModel::doubling();
        let phi = phi_bound(&chain).unwrap();
        let grid = ConvolutionGrid {
            ks: vec![],
            ..Default::default()
        };
        assert!(run_convolution_grid(&chain, &phi, &grid).is_err());
        let grid = RatioGrid {
            words: vec![],
            ..Default::default()
        };
        assert!(run_ratio_grid(&chain, &phi, &grid).is_err());
    }

    #[test]
    fn ratio_family_grids() {
        let chain = MarkovChainModel::doubling();
        let phi = phi_bound(&chain).unwrap();
        let d = Tally::of(&run_dyadic_grid(&chain, &phi, &DyadicGrid::default()).unwrap());
        assert_eq!(d.fail, 0);
        assert!(d.pass > 0);
        let r = Tally::of(&run_ratio_grid(&chain, &phi, &RatioGrid::default()).unwrap());
        assert_eq!(r.fail, 0);
        assert!(r.pass > 0);
        let k = run_k_ratio_grid(&chain, &phi, &KRatioGrid::default()).unwrap();
        let worst = k.iter().filter_map(|r| r.get_extra("implied_constant")).fold(0.0, f64::max);
        assert!(worst < 1.0, "{worst}");
        // Three-hit deviations nearly cancel on runs of zeros, so the band is
        // only tight over single and double clusters.
        let small: Vec<LemmaReport> = k.into_iter().filter(|r| r.get_param("k").unwrap() <= 2.0).collect();
        let band = implied_constant_band(&small).unwrap();
        assert!(band < 50.0, "{band}");
    }

    #[test]
    fn generating_defaults() {
        let chain = MarkovChainModel::doubling();
        let phi = phi_bound(&chain).unwrap();
        let out = run_generating_grid(&chain, &phi, &GeneratingGrid::default()).unwrap();
        assert!(out.residuals.iter().all(|r| r.residual < 1e-12));
        assert_eq!(Tally::of(&out.cauchy).fail, 0);
    }
}
