//! Numerical checks of the quantitative estimates behind the compound
//! Poisson limit, evaluated on exactly computed Markov-shift instances.
//!
//! Every check returns a [`LemmaReport`]. A report whose hypotheses fail is
//! [`Outcome::Vacuous`] and never counts as a pass.

mod convolution;
mod generating;
pub mod grid;
mod main_gap;
mod ratios;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::markov::{count_distributions, CountDistribution, CylinderWord, MarkovChainModel, MixingKind};

pub use convolution::{convolution_defect, BoundVariant, ConvolutionCell};
pub use generating::{
    cauchy_error_check, eta, gf_identity_residual, xi_bound_reports, xi_coefficients, GeneratingPoly,
};
pub use main_gap::{main_theorem_gap, GapRow, GapSummary, MainGapTable};
pub use ratios::{dyadic_lower_bound_check, k_ratio_check, ratio_bound_check};

/// `γ_0 = ln(2 − γ) / ln(2 + γ)`.
pub fn gamma0(gamma: f64) -> f64 {
    (2.0 - gamma).ln() / (2.0 + gamma).ln()
}

/// Shared knobs of the ratio-type checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub gamma: f64,
    pub beta: f64,
    pub alpha_exp: f64,
    pub mode: MixingKind,
}

impl Default for LemmaParams {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            beta: 0.5,
            alpha_exp: 0.5,
            mode: MixingKind::Phi,
        }
    }
}

impl LemmaParams {
    pub fn gamma0(&self) -> f64 {
        gamma0(self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return Err(invalid("gamma", format!("{} is outside (0, 1/2)", self.gamma)));
        }
        for (name, v) in [("beta", self.beta), ("alpha_exp", self.alpha_exp)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(name, format!("{v} is outside (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub word: String,
    pub params: Vec<(String, f64)>,
    pub lhs: f64,
    pub bound: f64,
    pub hypotheses: Vec<Hypothesis>,
    pub outcome: Outcome,
    /// Auxiliary values: alternative bounds, implied constants.
    pub extras: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl LemmaReport {
    fn new(lemma: &str, word: &CylinderWord) -> Self {
        Self {
            lemma: lemma.into(),
            word: word.to_string(),
            params: Vec::new(),
            lhs: 0.0,
            bound: 0.0,
            hypotheses: Vec::new(),
            outcome: Outcome::Vacuous,
            extras: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn param(mut self, name: &str, value: f64) -> Self {
        self.params.push((name.into(), value));
        self
    }

    fn require(&mut self, name: impl Into<String>, holds: bool) {
        self.hypotheses.push(Hypothesis {
            name: name.into(),
            holds,
        });
    }

    fn extra(&mut self, name: &str, value: f64) {
        self.extras.push((name.into(), value));
    }

    /// Sets the outcome: vacuous unless every hypothesis holds.
    fn decide(mut self, holds: bool) -> Self {
        self.outcome = if !self.hypotheses_satisfied() {
            Outcome::Vacuous
        } else if holds {
            Outcome::Pass
        } else {
            Outcome::Fail
        };
        self
    }

    fn decide_le(self) -> Self {
        let holds = self.lhs <= self.bound;
        self.decide(holds)
    }

    pub fn hypotheses_satisfied(&self) -> bool {
        self.hypotheses.iter().all(|h| h.holds)
    }

    /// `bound − lhs`.
    pub fn margin(&self) -> f64 {
        self.bound - self.lhs
    }

    pub fn get_extra(&self, name: &str) -> Option<f64> {
        self.extras.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn get_param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Pass/fail/vacuous counts over a set of reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub pass: usize,
    pub fail: usize,
    pub vacuous: usize,
}

impl Tally {
    pub fn of(reports: &[LemmaReport]) -> Self {
        let mut t = Self::default();
        for r in reports {
            match r.outcome {
                Outcome::Pass => t.pass += 1,
                Outcome::Fail => t.fail += 1,
                Outcome::Vacuous => t.vacuous += 1,
            }
        }
        t
    }

    pub fn total(&self) -> usize {
        self.pass + self.fail + self.vacuous
    }

    pub fn non_vacuous(&self) -> usize {
        self.pass + self.fail
    }

    pub fn vacuous_fraction(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.vacuous as f64 / self.total() as f64
        }
    }
}

/// Memoised exact count laws for one chain at a fixed truncation.
///
/// Lower count layers do not depend on the truncation level, so values
/// are identical to those of a direct call with a smaller `kmax`.
#[derive(Debug)]
pub struct CountCache<'a> {
    chain: &'a MarkovChainModel,
    kmax: usize,
    laws: HashMap<(Vec<usize>, usize), CountDistribution>,
}

impl<'a> CountCache<'a> {
    pub fn new(chain: &'a MarkovChainModel, kmax: usize) -> Self {
        Self {
            chain,
            kmax,
            laws: HashMap::new(),
        }
    }

    pub fn chain(&self) -> &'a MarkovChainModel {
        self.chain
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    /// Computes every missing window for `word` in one pass.
    pub fn prefetch(&mut self, word: &CylinderWord, windows: &[usize]) -> Result<()> {
        let mut missing: Vec<usize> = windows
            .iter()
            .copied()
            .filter(|w| !self.laws.contains_key(&(word.symbols().to_vec(), *w)))
            .collect();
        missing.sort_unstable();
        missing.dedup();
        if missing.is_empty() {
            return Ok(());
        }
        let laws = count_distributions(self.chain, word, &missing, self.kmax)?;
        for (w, d) in missing.into_iter().zip(laws) {
            self.laws.insert((word.symbols().to_vec(), w), d);
        }
        Ok(())
    }

    pub fn law(&mut self, word: &CylinderWord, window: usize) -> Result<&CountDistribution> {
        self.prefetch(word, &[window])?;
        Ok(&self.laws[&(word.symbols().to_vec(), window)])
    }

    /// `P(Z^L ≥ 1)`.
    pub fn hit(&mut self, word: &CylinderWord, window: usize) -> Result<f64> {
        let d = self.law(word, window)?;
        Ok(d.probs.iter().skip(1).sum::<f64>() + d.tail_mass)
    }

    /// `P(Z^L = k)`; `k` must be within the truncation.
    pub fn prob(&mut self, word: &CylinderWord, window: usize, k: usize) -> Result<f64> {
        if k > self.kmax {
            return Err(invalid("k", format!("{k} exceeds the cache truncation {}", self.kmax)));
        }
        Ok(self.law(word, window)?.prob(k))
    }

    /// `P(Z^L ≤ k)`.
    pub fn cdf(&mut self, word: &CylinderWord, window: usize, k: usize) -> Result<f64> {
        if k > self.kmax {
            return Err(invalid("k", format!("{k} exceeds the cache truncation {}", self.kmax)));
        }
        Ok(self.law(word, window)?.cdf(k))
    }
}
