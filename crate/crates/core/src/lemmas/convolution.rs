use serde::{Deserialize, Serialize};

use super::{CountCache, LemmaReport};
use crate::error::Result;
use crate::markov::{word_measure, CylinderWord, MixingBound, MixingKind};

/// Which estimate of the short-return probability enters the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundVariant {
    /// `μ(τ̂ ≤ Δ) = P(Z^{Δ+1} ≥ 1)`, computed exactly.
    #[default]
    Hitting,
    /// The looser `Δ μ(U)`.
    Kac,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionCell {
    pub t: usize,
    pub s: usize,
    pub delta: usize,
    pub k: usize,
    #[serde(default)]
    pub variant: BoundVariant,
}

/// `|P(Z^{t+s} = k) − Σ_j P(Z^t = j) P(Z^s = k − j)|` against
/// `P(Z^{t−Δ} ≤ k) (4 μ(τ̂ ≤ Δ) + 3 φ(Δ − n))`.
///
/// With an α-mixing bound the mixing terms cannot be weighted by the
/// probability of the past event, and the bound becomes
/// `4 μ(τ̂ ≤ Δ) P(Z^{t−Δ} ≤ k) + (k + 3) α(Δ − n)`; the implied constant
/// against the shape `μ(τ̂ ≤ Δ) + α(Δ)` is reported as well.
pub fn convolution_defect(
    cache: &mut CountCache,
    word: &CylinderWord,
    cell: ConvolutionCell,
    mixing: &MixingBound,
) -> Result<LemmaReport> {
    let ConvolutionCell { t, s, delta, k, variant } = cell;
    let n = word.len();
    let mut report = LemmaReport::new("convolution", word)
        .param("t", t as f64)
        .param("s", s as f64)
        .param("delta", delta as f64)
        .param("k", k as f64);
    report.require("0 < delta < s/2", delta > 0 && 2 * delta < s);
    report.require("s <= t", s <= t);
    if mixing.kind == MixingKind::Phi {
        report.require("delta > n", delta > n);
    }
    if !report.hypotheses_satisfied() {
        return Ok(report.decide(true));
    }

    cache.prefetch(word, &[t + s, t, s, t - delta, delta + 1])?;
    let joint = cache.prob(word, t + s, k)?;
    let mut conv = 0.0;
    for j in 0..=k {
        conv += cache.prob(word, t, j)? * cache.prob(word, s, k - j)?;
    }
    report.lhs = (joint - conv).abs();

    let short = match variant {
        BoundVariant::Hitting => cache.hit(word, delta + 1)?,
        BoundVariant::Kac => (delta as f64 * word_measure(cache.chain(), word)).min(1.0),
    };
    let gap = delta as i64 - n as i64;
    let few = cache.cdf(word, t - delta, k)?;
    report.bound = match mixing.kind {
        MixingKind::Phi => few * (4.0 * short + 3.0 * mixing.eval(gap)),
        MixingKind::Alpha => 4.0 * short * few + (k as f64 + 3.0) * mixing.eval(gap),
    };
    report.extra("short_return", short);
    report.extra("mixing", mixing.eval(gap));
    if mixing.kind == MixingKind::Alpha {
        let shape = short + mixing.eval(delta as i64);
        report.extra("implied_constant", if shape > 0.0 { report.lhs / shape } else { 0.0 });
    }
    if k == 0 {
        // Entry-time special case with Δμ(U) and 2φ.
        let gs = few * (4.0 * delta as f64 * word_measure(cache.chain(), word) + 2.0 * mixing.eval(gap));
        report.extra("entry_time_bound", gs);
        if report.lhs > gs {
            report.notes.push("entry-time special case bound exceeded".into());
        }
    }
    Ok(report.decide_le())
}
