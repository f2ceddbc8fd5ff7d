//! Compound Poisson family on the nonnegative integers.
//!
//! A compound Poisson variable `W = X_1 + ... + X_P` sums a Poisson(`t`)
//! number of i.i.d. cluster sizes `X_i ≥ 1`. Its mass function is the
//! composition sum
//!
//! ```text
//! P(W = k) = e^{-t} Σ_{i=1}^{k} t^i / i! · P(S_i = k),    S_i = X_1 + ... + X_i,
//! ```
//!
//! with `P(W = 0) = e^{-t}`. Cluster laws are carried as a finite table
//! `λ_1, ..., λ_K` together with an explicit `tail_mass` for sizes above `K`,
//! so truncation is never silently renormalised away.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{invalid, Error, Result};

/// Tolerance for `Σ p + tail = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Tail mass below which a truncated law is treated as fully resolved.
pub const TAIL_TOL: f64 = 1e-12;

fn check_mass(probs: &[f64], tail_mass: f64) -> Result<()> {
    if let Some(k) = probs.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(invalid("probs", format!("entry {k} is negative or not finite")));
    }
    if !(tail_mass.is_finite() && tail_mass >= 0.0) {
        return Err(invalid("tail_mass", "must be finite and nonnegative"));
    }
    let total: f64 = probs.iter().sum::<f64>() + tail_mass;
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized {
            total,
            tolerance: NORMALIZATION_TOL,
        });
    }
    Ok(())
}

/// A law on `{0, 1, 2, ...}` given by `p_0..p_K` and the mass above `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl DiscreteLaw {
    pub fn new(probs: Vec<f64>, tail_mass: f64) -> Result<Self> {
        check_mass(&probs, tail_mass)?;
        Ok(Self { probs, tail_mass })
    }

    /// Builds a law whose tail is whatever mass `probs` leaves unaccounted.
    pub fn with_remainder(probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if sum > 1.0 + NORMALIZATION_TOL {
            return Err(Error::NotNormalized {
                total: sum,
                tolerance: NORMALIZATION_TOL,
            });
        }
        Self::new(probs, (1.0 - sum).max(0.0))
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `P(X = k)`, zero beyond the table.
    pub fn prob(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }
}

/// Cluster-size law `λ_k = P(X = k)` for `k ≥ 1`.
///
/// `probs[0]` holds `λ_1`; clusters are never empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLaw {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl ClusterLaw {
    pub fn new(probs: Vec<f64>, tail_mass: f64) -> Result<Self> {
        check_mass(&probs, tail_mass)?;
        Ok(Self { probs, tail_mass })
    }

    /// Every cluster has size one. The compound Poisson law is then Poisson.
    pub fn singleton() -> Self {
        Self {
            probs: vec![1.0],
            tail_mass: 0.0,
        }
    }

    /// Geometric sizes `λ_j = (1 − θ) θ^{j−1}` truncated at `max_size`,
    /// with tail `θ^{max_size}`.
    pub fn geometric(theta: f64, max_size: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&theta) {
            return Err(invalid("theta", format!("{theta} is outside [0, 1)")));
        }
        let probs: Vec<f64> = (0..max_size)
            .map(|j| (1.0 - theta) * theta.powi(j as i32))
            .collect();
        let tail = theta.powi(max_size as i32);
        Self::new(probs, tail)
    }

    /// `λ_k` for `k ≥ 1`; zero for `k = 0` and beyond the table.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.probs.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Largest size carried explicitly.
    pub fn support(&self) -> usize {
        self.probs.len()
    }

    /// Mean cluster size over the explicit table.
    pub fn truncated_mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    fn require_support(&self, k: usize) -> Result<()> {
        if k > self.support() && self.tail_mass > TAIL_TOL {
            return Err(Error::UnderResolvedLaw {
                k,
                support: self.support(),
                tail: self.tail_mass,
            });
        }
        Ok(())
    }

    /// Table of `P(S_i = k)` for `0 ≤ i, k ≤ kmax`, built by repeated
    /// discrete convolution. Row `i` vanishes below column `i`.
    pub fn convolution_powers(&self, kmax: usize) -> Vec<Vec<f64>> {
        let lam: Vec<f64> = (0..=kmax).map(|k| self.get(k)).collect();
        let mut powers = Vec::with_capacity(kmax + 1);
        let mut delta = vec![0.0; kmax + 1];
        delta[0] = 1.0;
        powers.push(delta);
        for i in 1..=kmax {
            let prev: &Vec<f64> = &powers[i - 1];
            let mut next = vec![0.0; kmax + 1];
            for k in i..=kmax {
                let mut acc = 0.0;
                for j in 1..=(k - (i - 1)) {
                    acc += lam[j] * prev[k - j];
                }
                next[k] = acc;
            }
            powers.push(next);
        }
        powers
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoissonParams {
    t: f64,
    law: ClusterLaw,
}

impl CompoundPoissonParams {
    pub fn new(t: f64, law: ClusterLaw) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(invalid("t", format!("{t} must be positive and finite")));
        }
        Ok(Self { t, law })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn law(&self) -> &ClusterLaw {
        &self.law
    }

    /// `P(W = k)` for `k = 0..=kmax`.
    pub fn pmf_table(&self, kmax: usize) -> Result<Vec<f64>> {
        self.law.require_support(kmax)?;
        let powers = self.law.convolution_powers(kmax);
        let ln_t = self.t.ln();
        let weight = |i: usize| (-self.t + i as f64 * ln_t - ln_factorial(i as u64)).exp();
        let mut table = vec![0.0; kmax + 1];
        table[0] = (-self.t).exp();
        for (k, slot) in table.iter_mut().enumerate().skip(1) {
            *slot = (1..=k).map(|i| weight(i) * powers[i][k]).sum();
        }
        Ok(table)
    }

    /// The law as a [`DiscreteLaw`] on `0..=kmax`, remainder lumped in the tail.
    pub fn to_discrete(&self, kmax: usize) -> Result<DiscreteLaw> {
        DiscreteLaw::with_remainder(self.pmf_table(kmax)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyaAeppliParams {
    lambda: f64,
    theta: f64,
}

impl PolyaAeppliParams {
    /// `θ = 1` is rejected: the mass function then vanishes for every `k ≥ 1`.
    pub fn new(lambda: f64, theta: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", format!("{lambda} must be positive")));
        }
        if theta == 1.0 {
            return Err(invalid(
                "theta",
                "theta = 1 is degenerate under the convention λ_j = (1 − θ)θ^(j−1) (all mass escapes to infinity)",
            ));
        }
        if !(0.0..1.0).contains(&theta) {
            return Err(invalid("theta", format!("{theta} is outside [0, 1)")));
        }
        Ok(Self { lambda, theta })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Equivalent compound Poisson parameters with the geometric cluster law
    /// truncated at `max_size`.
    pub fn as_compound_poisson(&self, max_size: usize) -> Result<CompoundPoissonParams> {
        CompoundPoissonParams::new(self.lambda, ClusterLaw::geometric(self.theta, max_size)?)
    }
}

/// `P(W = k)` for a compound Poisson variable.
pub fn compound_poisson_pmf(params: &CompoundPoissonParams, k: usize) -> Result<f64> {
    Ok(params.pmf_table(k)?[k])
}

/// Pólya-Aeppli mass function,
/// `e^{-λ} Σ_{j=1}^{k} θ^{k−j} (1−θ)^j λ^j / j! · C(k−1, j−1)`.
pub fn polya_aeppli_pmf(params: &PolyaAeppliParams, k: usize) -> f64 {
    let PolyaAeppliParams { lambda, theta } = *params;
    if k == 0 {
        return (-lambda).exp();
    }
    if theta == 0.0 {
        return (-lambda + k as f64 * lambda.ln() - ln_factorial(k as u64)).exp();
    }
    let (ln_theta, ln_q, ln_lambda) = (theta.ln(), (-theta).ln_1p(), lambda.ln());
    let ln_fact_km1 = ln_factorial(k as u64 - 1);
    (1..=k)
        .map(|j| {
            let ln_binom =
                ln_fact_km1 - ln_factorial(j as u64 - 1) - ln_factorial((k - j) as u64);
            let ln_term = (k - j) as f64 * ln_theta + j as f64 * (ln_q + ln_lambda)
                - ln_factorial(j as u64)
                + ln_binom
                - lambda;
            ln_term.exp()
        })
        .sum()
}

fn binomial_weights(p: f64, n: u64, imax: usize) -> Vec<f64> {
    let top = imax.min(n as usize);
    let mut w = Vec::with_capacity(top + 1);
    let mut b = (n as f64 * (-p).ln_1p()).exp();
    let odds = p / (1.0 - p);
    for i in 0..=top {
        w.push(b);
        b *= (n - i as u64) as f64 / (i + 1) as f64 * odds;
    }
    w
}

/// `P(W = k)` for `k = 0..=kmax` where `W` sums a Binomial(`n`, `p`) number
/// of clusters.
pub fn compound_binomial_table(p: f64, n: u64, law: &ClusterLaw, kmax: usize) -> Result<Vec<f64>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("p", format!("{p} is outside (0, 1)")));
    }
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    law.require_support(kmax)?;
    let powers = law.convolution_powers(kmax);
    let weights = binomial_weights(p, n, kmax);
    Ok((0..=kmax)
        .map(|k| {
            weights
                .iter()
                .enumerate()
                .take(k + 1)
                .map(|(i, w)| w * powers[i][k])
                .sum()
        })
        .collect())
}

/// `P(W = k)` for the compound binomial law.
pub fn compound_binomial_pmf(p: f64, n: u64, law: &ClusterLaw, k: usize) -> Result<f64> {
    Ok(compound_binomial_table(p, n, law, k)?[k])
}

/// `Σ p_k z^k`; `z` is expected in `[0, 1]`.
pub fn pgf_eval(law: &DiscreteLaw, z: f64) -> f64 {
    law.probs.iter().rev().fold(0.0, |acc, p| acc * z + p)
}

/// `½ Σ |a_k − b_k| + ½ |tail_a − tail_b|`.
pub fn total_variation(a: &DiscreteLaw, b: &DiscreteLaw) -> f64 {
    let n = a.probs.len().max(b.probs.len());
    let body: f64 = (0..n).map(|k| (a.prob(k) - b.prob(k)).abs()).sum();
    0.5 * body + 0.5 * (a.tail_mass - b.tail_mass).abs()
}
