use super::{gamma0, CountCache, LemmaReport};
use crate::error::{invalid, Error, Result};
use crate::markov::{CylinderWord, MixingBound};

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(invalid("gamma", format!("{gamma} is outside (0, 1/2)")));
    }
    Ok(())
}

/// `P(Z^{rΔ} ≥ 1) ≥ ½ r^{γ_0} P(Z^Δ ≥ 1)` under `φ(γΔ) < γ/2` and
/// `P(Z^{rΔ} ≥ 1) < γ/2`. The report's `lhs` is the right-hand side of the
/// inequality and `bound` is `P(Z^{rΔ} ≥ 1)`.
pub fn dyadic_lower_bound_check(
    cache: &mut CountCache,
    word: &CylinderWord,
    delta: usize,
    r: usize,
    gamma: f64,
    mixing: &MixingBound,
) -> Result<LemmaReport> {
    check_gamma(gamma)?;
    if delta == 0 || r == 0 {
        return Err(invalid("delta, r", "must be positive"));
    }
    let g0 = gamma0(gamma);
    let mut report = LemmaReport::new("lower_bound", word)
        .param("delta", delta as f64)
        .param("r", r as f64)
        .param("gamma", gamma);
    let big = cache.hit(word, r * delta)?;
    let small = cache.hit(word, delta)?;
    let phi = mixing.eval((gamma * delta as f64).floor() as i64);
    report.require("phi(gamma delta) < gamma/2", phi < gamma / 2.0);
    report.require("P(Z^{r delta} >= 1) < gamma/2", big < gamma / 2.0);
    report.lhs = 0.5 * (r as f64).powf(g0) * small;
    report.bound = big;
    report.extra("gamma0", g0);
    report.extra("phi", phi);
    Ok(report.decide_le())
}

/// `1 ≥ P(Z^{rL} ≥ 1) / (r P(Z^L ≥ 1)) ≥ 1 − P(Z^{rL} ≥ 1) − φ(Δ) − 2(Δ/L)^{γ_0}`.
///
/// `lhs` is the lower bound and `bound` the ratio; the upper bound 1 is
/// part of the verdict. The form with `(L/Δ)^{γ_0}` is reported as
/// `displayed_lower`.
pub fn ratio_bound_check(
    cache: &mut CountCache,
    word: &CylinderWord,
    window: usize,
    r: usize,
    delta: usize,
    gamma: f64,
    mixing: &MixingBound,
) -> Result<LemmaReport> {
    check_gamma(gamma)?;
    if window == 0 || r == 0 {
        return Err(invalid("window, r", "must be positive"));
    }
    let g0 = gamma0(gamma);
    let mut report = LemmaReport::new("ratio_bound", word)
        .param("L", window as f64)
        .param("r", r as f64)
        .param("delta", delta as f64)
        .param("gamma", gamma);
    let big = cache.hit(word, r * window)?;
    let small = cache.hit(word, window)?;
    if !(small > 0.0) {
        return Err(Error::Degenerate(format!("P(Z^{window} >= 1) = 0")));
    }
    let phi = mixing.eval(delta as i64);
    report.require("delta < L", delta < window);
    report.require("phi(delta) < gamma/2", phi < gamma / 2.0);
    report.require("P(Z^{rL} >= 1) < gamma/2", big < gamma / 2.0);
    let ratio = big / (r as f64 * small);
    let dl = delta as f64 / window as f64;
    report.lhs = 1.0 - big - phi - 2.0 * dl.powf(g0);
    report.bound = ratio;
    report.extra("displayed_lower", 1.0 - big - phi - 2.0 * dl.powf(-g0));
    report.extra("phi", phi);
    let holds = report.lhs <= ratio && ratio <= 1.0 + 1e-12;
    Ok(report.decide(holds))
}

/// Deviation of `P(Z^{rL} = k) / (r P(Z^L = k))` from 1 against
/// `P(Z^{rL} ≥ 1) + φ(L^β) + L^{−(1−β)} / λ_k(rL, U)`.
///
/// The constant in front of the bound is not known, so the verdict is
/// diagnostic: the report passes whenever the hypotheses hold and carries
/// the implied constant `deviation / bound`.
#[allow(clippy::too_many_arguments)]
pub fn k_ratio_check(
    cache: &mut CountCache,
    word: &CylinderWord,
    window: usize,
    r: usize,
    k: usize,
    beta: f64,
    gamma: f64,
    mixing: &MixingBound,
) -> Result<LemmaReport> {
    check_gamma(gamma)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid("beta", format!("{beta} is outside (0, 1)")));
    }
    if window == 0 || r == 0 || k == 0 {
        return Err(invalid("window, r, k", "must be positive"));
    }
    let mut report = LemmaReport::new("k_ratio", word)
        .param("L", window as f64)
        .param("r", r as f64)
        .param("k", k as f64)
        .param("beta", beta)
        .param("gamma", gamma);
    let big_k = cache.prob(word, r * window, k)?;
    let small_k = cache.prob(word, window, k)?;
    let big = cache.hit(word, r * window)?;
    if !(big_k > 0.0 && small_k > 0.0) {
        return Err(Error::Degenerate(format!("P(Z = {k}) vanishes; lambda_k(rL, U) = 0")));
    }
    let lambda = big_k / big;
    let rf = r as f64;
    let deviation = (big_k / (rf * small_k) - 1.0)
        .abs()
        .max((rf * small_k / big_k - 1.0).abs());
    let lb = (window as f64).powf(beta);
    let phi_hyp = mixing.eval((gamma * lb).floor() as i64);
    let phi_bound = mixing.eval(lb.floor() as i64);
    report.require("phi(gamma L^beta) < gamma/2", phi_hyp < gamma / 2.0);
    report.require("P(Z^{rL} >= 1) < gamma/2", big < gamma / 2.0);
    report.lhs = deviation;
    report.bound = big + phi_bound + (window as f64).powf(beta - 1.0) / lambda;
    report.extra("implied_constant", deviation / report.bound);
    report.extra("lambda_k", lambda);
    report.extra("phi_gamma_l_beta", phi_hyp);
    report.extra("phi_l_beta", phi_bound);
    report.notes.push("diagnostic: unspecified constant".into());
    Ok(report.decide(true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lemmas::Outcome;
    use crate::markov::{phi_bound, MarkovChainModel};

    fn setup() -> (MarkovChainModel, MixingBound) {
        let chain = MarkovChainModel::doubling();
        let phi = phi_bound(&chain).unwrap();
        (chain, phi)
    }

    #[test]
    fn dyadic_examples() {
        let (chain, phi) = setup();
        let mut cache = CountCache::new(&chain, 4);
        let w = CylinderWord::zeros(12).unwrap();
        let r = dyadic_lower_bound_check(&mut cache, &w, 64, 4, 0.1, &phi).unwrap();
        assert_eq!(r.outcome, Outcome::Pass);
        assert!(r.margin() > 0.0);
        let one = dyadic_lower_bound_check(&mut cache, &w, 64, 1, 0.1, &phi).unwrap();
        assert!((one.lhs - 0.5 * one.bound).abs() < 1e-15);
    }

    #[test]
    fn ratio_examples() {
        let (chain, phi) = setup();
        let mut cache = CountCache::new(&chain, 4);
        let w = CylinderWord::zeros(12).unwrap();
        let one = ratio_bound_check(&mut cache, &w, 512, 1, 64, 0.1, &phi).unwrap();
        assert_eq!(one.bound, 1.0);
        let w1 = CylinderWord::zeros(1).unwrap();
        let r = ratio_bound_check(&mut cache, &w1, 4, 2, 2, 0.1, &phi).unwrap();
        let expect = (1.0 - 0.5f64.powi(8)) / (2.0 * (1.0 - 0.5f64.powi(4)));
        assert!((r.bound - expect).abs() < 1e-15);
        assert_eq!(r.outcome, Outcome::Vacuous);
        // The wider cell is vacuous too: a window of 4096 hits 0^12 too often.
        let big = ratio_bound_check(&mut cache, &w, 512, 8, 64, 0.1, &phi).unwrap();
        assert_eq!(big.outcome, Outcome::Vacuous);
        assert!(big.bound <= 1.0);
        let w14 = CylinderWord::zeros(14).unwrap();
        let ok = ratio_bound_check(&mut cache, &w14, 256, 4, 32, 0.1, &phi).unwrap();
        assert_eq!(ok.outcome, Outcome::Pass);
    }

    #[test]
    fn k_ratio_examples() {
        let (chain, phi) = setup();
        let mut cache = CountCache::new(&chain, 4);
        let w = CylinderWord::zeros(10).unwrap();
        let r = k_ratio_check(&mut cache, &w, 128, 1, 1, 0.5, 0.1, &phi).unwrap();
        assert_eq!(r.lhs, 0.0);
        let r = k_ratio_check(&mut cache, &w, 128, 8, 2, 0.5, 0.1, &phi).unwrap();
        assert!(r.get_extra("implied_constant").unwrap().is_finite());
        let w01 = CylinderWord::parse_digits("01").unwrap();
        assert!(k_ratio_check(&mut cache, &w01, 4, 1, 4, 0.5, 0.1, &phi).is_err());
    }
}
