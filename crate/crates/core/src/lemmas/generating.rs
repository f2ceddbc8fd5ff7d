use serde::{Deserialize, Serialize};

use super::{BoundVariant, CountCache, LemmaReport};
use crate::error::{invalid, Error, Result};
use crate::markov::{word_measure, CountDistribution, CylinderWord, MixingBound};

/// `F_s(z) = Σ_{k ≤ K} P(Z^s = k) z^k`, truncated at `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratingPoly {
    pub window: usize,
    pub coeffs: Vec<f64>,
}

impl GeneratingPoly {
    pub fn from_counts(dist: &CountDistribution) -> Self {
        Self {
            window: dist.window,
            coeffs: dist.probs.clone(),
        }
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation of the truncated series.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    /// `F_s, F_{2s}, ..., F_{rs}` (and `F_0 = 1` first).
    pub fn family(cache: &mut CountCache, word: &CylinderWord, s: usize, r: usize) -> Result<Vec<Self>> {
        let windows: Vec<usize> = (0..=r).map(|a| a * s).collect();
        cache.prefetch(word, &windows)?;
        windows
            .iter()
            .map(|&w| Ok(Self::from_counts(cache.law(word, w)?)))
            .collect()
    }
}

fn same_truncation(a: &GeneratingPoly, b: &GeneratingPoly) -> Result<usize> {
    if a.truncation() != b.truncation() {
        return Err(Error::TruncationMismatch {
            left: a.truncation(),
            right: b.truncation(),
        });
    }
    Ok(a.truncation())
}

/// Product truncated at degree `kmax`; exact for every kept coefficient.
fn mul(a: &[f64], b: &[f64], kmax: usize) -> Vec<f64> {
    (0..=kmax)
        .map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum())
        .collect()
}

/// `ξ_k = Σ_j μ_j^{(a−1)s} μ_{k−j}^s − μ_k^{as}` for `k ≤ K`.
pub fn xi_coefficients(prev: &GeneratingPoly, unit: &GeneratingPoly, next: &GeneratingPoly) -> Result<Vec<f64>> {
    let kmax = same_truncation(prev, unit)?;
    same_truncation(unit, next)?;
    if prev.window + unit.window != next.window {
        return Err(invalid(
            "windows",
            format!("{} + {} != {}", prev.window, unit.window, next.window),
        ));
    }
    let conv = mul(&prev.coeffs, &unit.coeffs, kmax);
    Ok(conv.iter().zip(&next.coeffs).map(|(c, m)| c - m).collect())
}

/// Largest coefficient gap between `F_s^r` and `F_{rs} + Σ_{k=2}^{r} G_k F_s^{r−k}`
/// with `G_k = Σ_j ξ_j^{ks} z^j`. `family` holds `F_0, F_s, ..., F_{rs}`.
pub fn gf_identity_residual(family: &[GeneratingPoly]) -> Result<f64> {
    if family.len() < 3 {
        return Err(invalid("family", "needs F_0, F_s and F_2s at least"));
    }
    let r = family.len() - 1;
    let unit = &family[1];
    let kmax = unit.truncation();
    for f in family {
        same_truncation(f, unit)?;
    }
    let g: Vec<Vec<f64>> = (2..=r)
        .map(|a| xi_coefficients(&family[a - 1], unit, &family[a]))
        .collect::<Result<_>>()?;
    // Powers F_s^0 .. F_s^r.
    let mut pow = vec![family[0].coeffs.iter().map(|_| 0.0).collect::<Vec<f64>>()];
    pow[0][0] = 1.0;
    for i in 1..=r {
        let next = mul(&pow[i - 1], &unit.coeffs, kmax);
        pow.push(next);
    }
    let mut rhs = family[r].coeffs.clone();
    for a in 2..=r {
        let term = mul(&g[a - 2], &pow[r - a], kmax);
        for (x, y) in rhs.iter_mut().zip(term) {
            *x += y;
        }
    }
    Ok(pow[r]
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// `η(Δ) = 4 μ(τ̂ ≤ Δ) + 3 φ(Δ − n)`, or `4Δμ(U) + 3φ(Δ − n)` for the looser variant.
pub fn eta(
    cache: &mut CountCache,
    word: &CylinderWord,
    delta: usize,
    mixing: &MixingBound,
    variant: BoundVariant,
) -> Result<f64> {
    let short = match variant {
        BoundVariant::Hitting => cache.hit(word, delta + 1)?,
        BoundVariant::Kac => delta as f64 * word_measure(cache.chain(), word),
    };
    Ok(4.0 * short + 3.0 * mixing.eval(delta as i64 - word.len() as i64))
}

/// `|[z^k](F_s^r − F_{rs})| ≤ e · r · η̃(s) · (k + 1)` for each `k ≤ K`.
pub fn cauchy_error_check(
    family: &[GeneratingPoly],
    word: &CylinderWord,
    eta_tilde: f64,
) -> Result<Vec<LemmaReport>> {
    if family.len() < 2 {
        return Err(invalid("family", "needs F_0 and F_s"));
    }
    let r = family.len() - 1;
    let unit = &family[1];
    let kmax = unit.truncation();
    let mut power = unit.coeffs.clone();
    for _ in 1..r {
        power = mul(&power, &unit.coeffs, kmax);
    }
    let error: Vec<f64> = power.iter().zip(&family[r].coeffs).map(|(a, b)| a - b).collect();
    Ok(error
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let mut rep = LemmaReport::new("cauchy", word)
                .param("s", unit.window as f64)
                .param("r", r as f64)
                .param("k", k as f64);
            rep.lhs = e.abs();
            rep.bound = std::f64::consts::E * r as f64 * eta_tilde * (k as f64 + 1.0);
            rep.extra("eta_tilde", eta_tilde);
            rep.decide_le()
        })
        .collect())
}

/// Each `ξ_k^{as}`, `a = 2..=r`, against the rigorous bound
/// `η(Δ) P(Z^{(a−1)s−Δ} ≤ k)`. The tighter displayed form
/// `η(Δ) Σ_{j ≤ k} μ_j^{as}` is reported as `displayed_bound`.
pub fn xi_bound_reports(
    cache: &mut CountCache,
    word: &CylinderWord,
    s: usize,
    r: usize,
    delta: usize,
    mixing: &MixingBound,
) -> Result<Vec<LemmaReport>> {
    let family = GeneratingPoly::family(cache, word, s, r)?;
    let eta_d = eta(cache, word, delta, mixing, BoundVariant::Hitting)?;
    let mut out = Vec::new();
    for a in 2..=r {
        let xi = xi_coefficients(&family[a - 1], &family[1], &family[a])?;
        for (k, x) in xi.iter().enumerate() {
            let mut rep = LemmaReport::new("xi", word)
                .param("s", s as f64)
                .param("a", a as f64)
                .param("k", k as f64)
                .param("delta", delta as f64);
            rep.require("0 < delta < s/2", delta > 0 && 2 * delta < s);
            if rep.hypotheses_satisfied() {
                rep.lhs = x.abs();
                rep.bound = eta_d * cache.cdf(word, (a - 1) * s - delta, k)?;
                let displayed: f64 = eta_d * family[a].coeffs[..=k].iter().sum::<f64>();
                rep.extra("displayed_bound", displayed);
                if rep.lhs > displayed {
                    rep.notes.push("displayed bound exceeded".into());
                }
            }
            out.push(rep.decide_le());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lemmas::Outcome;
    use crate::markov::{phi_bound, MarkovChainModel};

    fn coin() -> MarkovChainModel {
        MarkovChainModel::doubling()
    }

    #[test]
    fn xi_vanishes_for_a_equal_one_and_single_symbols() {
        let chain = coin();
        let mut cache = CountCache::new(&chain, 8);
        let w = CylinderWord::zeros(2).unwrap();
        let fam = GeneratingPoly::family(&mut cache, &w, 8, 3).unwrap();
        let xi1 = xi_coefficients(&fam[0], &fam[1], &fam[1]).unwrap();
        assert!(xi1.iter().all(|x| *x == 0.0));
        let xi2 = xi_coefficients(&fam[1], &fam[1], &fam[2]).unwrap();
        assert!(xi2[1] != 0.0 && xi2[1].abs() < 0.1);

        let one = CylinderWord::zeros(1).unwrap();
        let fam = GeneratingPoly::family(&mut cache, &one, 8, 5).unwrap();
        for a in 2..=5 {
            let xi = xi_coefficients(&fam[a - 1], &fam[1], &fam[a]).unwrap();
            assert!(xi.iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn identity_residuals() {
        let chain = coin();
        let mut cache = CountCache::new(&chain, 8);
        let one = CylinderWord::zeros(1).unwrap();
        let fam = GeneratingPoly::family(&mut cache, &one, 8, 5).unwrap();
        assert!(gf_identity_residual(&fam).unwrap() < 1e-14);
        let two = CylinderWord::zeros(2).unwrap();
        let fam = GeneratingPoly::family(&mut cache, &two, 8, 4).unwrap();
        assert!(gf_identity_residual(&fam).unwrap() < 1e-12);
        assert!(gf_identity_residual(&fam[..3]).unwrap() < 1e-16);
    }

    #[test]
    fn truncations_must_match() {
        let a = GeneratingPoly {
            window: 1,
            coeffs: vec![0.5, 0.5],
        };
        let b = GeneratingPoly {
            window: 1,
            coeffs: vec![0.5, 0.5, 0.0],
        };
        assert_eq!(
            xi_coefficients(&a, &b, &b),
            Err(Error::TruncationMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn cauchy_bounds_hold() {
        let chain = coin();
        let phi = phi_bound(&chain).unwrap();
        let mut cache = CountCache::new(&chain, 8);
        let one = CylinderWord::zeros(1).unwrap();
        let fam = GeneratingPoly::family(&mut cache, &one, 8, 4).unwrap();
        let eta1 = eta(&mut cache, &one, 2, &phi, BoundVariant::Hitting).unwrap();
        for rep in cauchy_error_check(&fam, &one, eta1).unwrap() {
            assert_eq!(rep.lhs, 0.0);
            assert_eq!(rep.outcome, Outcome::Pass);
        }
        for (w, s) in [(CylinderWord::zeros(2).unwrap(), 8), (CylinderWord::zeros(6).unwrap(), 32)] {
            let fam = GeneratingPoly::family(&mut cache, &w, s, 4).unwrap();
            let delta = (s as f64).sqrt().floor() as usize;
            let e = eta(&mut cache, &w, delta, &phi, BoundVariant::Hitting).unwrap();
            let reps = cauchy_error_check(&fam, &w, e).unwrap();
            assert_eq!(reps.len(), 9);
            assert!(reps.iter().all(|r| r.outcome == Outcome::Pass));
        }
    }

    #[test]
    fn xi_within_rigorous_bound() {
        let chain = coin();
        let phi = phi_bound(&chain).unwrap();
        let mut cache = CountCache::new(&chain, 8);
        let w = CylinderWord::zeros(2).unwrap();
        let reps = xi_bound_reports(&mut cache, &w, 8, 3, 3, &phi).unwrap();
        assert!(reps.iter().all(|r| r.outcome == Outcome::Pass));
    }
}
