use serde::{Deserialize, Serialize};

use super::MarkovChainModel;
use crate::error::{Error, Result};

/// Which mixing coefficient a bound certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MixingKind {
    #[default]
    Phi,
    Alpha,
}

/// Certified envelope `φ(k) ≤ C · ρ^{⌊k/h⌋}`, capped at 1.
///
/// `h` is the matrix power whose Dobrushin coefficient gave `ρ`; it is 1
/// whenever the one-step matrix already contracts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingBound {
    pub kind: MixingKind,
    pub c: f64,
    pub rho: f64,
    pub step: usize,
    /// Optional tabulated values overriding the envelope where present.
    pub table: Option<Vec<f64>>,
}

impl MixingBound {
    pub fn exponential(c: f64, rho: f64, step: usize) -> Result<Self> {
        if !(c > 0.0 && (0.0..1.0).contains(&rho) && step >= 1) {
            return Err(Error::InvalidParameter {
                name: "mixing bound",
                reason: format!("need C > 0, 0 ≤ ρ < 1, h ≥ 1 (got {c}, {rho}, {step})"),
            });
        }
        Ok(Self {
            kind: MixingKind::Phi,
            c,
            rho,
            step,
            table: None,
        })
    }

    /// Attach a nonincreasing table of values `φ(0), φ(1), ...`.
    pub fn with_table(mut self, table: Vec<f64>) -> Result<Self> {
        if table.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter {
                name: "table",
                reason: "mixing coefficients must be nonincreasing".into(),
            });
        }
        self.table = Some(table);
        Ok(self)
    }

    pub fn as_alpha(mut self) -> Self {
        self.kind = MixingKind::Alpha;
        self
    }

    /// Bound at gap `k`. Negative gaps carry no information and give 1.
    pub fn eval(&self, k: i64) -> f64 {
        if k < 0 {
            return 1.0;
        }
        if let Some(v) = self.table.as_ref().and_then(|t| t.get(k as usize)) {
            return v.min(1.0);
        }
        let exponent = (k as usize / self.step) as i32;
        (self.c * self.rho.powi(exponent)).min(1.0)
    }
}

/// Dobrushin contraction coefficient: the largest total-variation distance
/// between two rows.
pub fn dobrushin_coefficient(matrix: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in matrix.iter().enumerate() {
        for b in &matrix[i + 1..] {
            let tv: f64 = 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
            worst = worst.max(tv);
        }
    }
    worst
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.len();
    (0..m)
        .map(|i| (0..m).map(|j| (0..m).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

/// Exponential φ-mixing envelope from the Dobrushin coefficient of the
/// first scrambling power of the transition matrix.
pub fn phi_bound(chain: &MarkovChainModel) -> Result<MixingBound> {
    let p = chain.transition();
    let m = chain.alphabet_size();
    let max_power = (m * m).max(1);
    let mut power = p.to_vec();
    for h in 1..=max_power {
        let rho = dobrushin_coefficient(&power);
        if rho < 1.0 {
            return MixingBound::exponential(1.0, rho, h);
        }
        power = mat_mul(&power, p);
    }
    Err(Error::NotScrambling { max_power })
}
