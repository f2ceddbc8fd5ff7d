use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

/// Stationary Markov measure on sequences over `{0, ..., m−1}`.
///
/// The transition matrix is row-stochastic and primitive (irreducible and
/// aperiodic); both are checked on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovChainModel {
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl MarkovChainModel {
    /// Validates `transition` and computes the stationary vector unless one
    /// is supplied, in which case it is checked for invariance.
    pub fn new(transition: Vec<Vec<f64>>, stationary: Option<Vec<f64>>) -> Result<Self> {
        let m = transition.len();
        if m == 0 {
            return Err(Error::Degenerate("empty transition matrix".into()));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != m {
                return Err(Error::NotSquare {
                    row: i,
                    len: row.len(),
                    expected: m,
                });
            }
            if let Some(j) = row.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::NegativeEntry { row: i, col: j });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::RowNotStochastic { row: i, sum });
            }
        }
        if !is_primitive(&transition) {
            return Err(Error::NotPrimitive);
        }
        let stationary = match stationary {
            Some(pi) => {
                if pi.len() != m {
                    return Err(Error::Degenerate(format!(
                        "stationary vector has length {}, expected {m}",
                        pi.len()
                    )));
                }
                pi
            }
            None => solve_stationary(&transition)?,
        };
        let defect = stationarity_defect(&transition, &stationary);
        let mass: f64 = stationary.iter().sum();
        if defect > STATIONARY_TOL
            || (mass - 1.0).abs() > STATIONARY_TOL
            || stationary.iter().any(|p| *p < 0.0)
        {
            return Err(Error::NotStationary {
                defect: defect.max((mass - 1.0).abs()),
            });
        }
        Ok(Self {
            transition,
            stationary,
        })
    }

    /// Product measure with one-symbol marginal `probs`.
    pub fn iid(probs: Vec<f64>) -> Result<Self> {
        let rows = vec![probs.clone(); probs.len()];
        Self::new(rows, Some(probs))
    }

    /// Binary digits of the doubling map under Lebesgue measure.
    pub fn doubling() -> Self {
        Self::iid(vec![0.5, 0.5]).expect("fair coin is a valid chain")
    }

    pub fn alphabet_size(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn p(&self, from: usize, to: usize) -> f64 {
        self.transition[from][to]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// True when every row equals every other row (a product measure).
    pub fn is_iid(&self) -> bool {
        self.transition.windows(2).all(|w| w[0] == w[1])
    }

    /// `Σ_j π_i P_ij` defect, exposed for diagnostics.
    pub fn stationarity_defect(&self) -> f64 {
        stationarity_defect(&self.transition, &self.stationary)
    }
}

fn stationarity_defect(transition: &[Vec<f64>], pi: &[f64]) -> f64 {
    let m = transition.len();
    (0..m)
        .map(|j| {
            let v: f64 = (0..m).map(|i| pi[i] * transition[i][j]).sum();
            (v - pi[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// Wielandt: a primitive m×m matrix has a strictly positive power at
/// exponent `(m−1)² + 1`.
fn is_primitive(transition: &[Vec<f64>]) -> bool {
    let m = transition.len();
    let adj: Vec<Vec<bool>> = transition
        .iter()
        .map(|row| row.iter().map(|p| *p > 0.0).collect())
        .collect();
    let mut power = adj.clone();
    let bound = (m - 1) * (m - 1) + 1;
    for _ in 1..bound {
        power = bool_product(&power, &adj);
    }
    power.iter().all(|row| row.iter().all(|b| *b))
}

fn bool_product(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let m = a.len();
    (0..m)
        .map(|i| (0..m).map(|j| (0..m).any(|k| a[i][k] && b[k][j])).collect())
        .collect()
}

fn solve_stationary(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = transition.len();
    // (Pᵀ − I) π = 0 with the last equation replaced by Σ π = 1.
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] = transition[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(m);
    b[m - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Degenerate("singular stationary system".into()))?;
    Ok(pi.iter().map(|p| p.max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_stationary() {
        let chain = MarkovChainModel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None).unwrap();
        assert!((chain.stationary()[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!(chain.stationarity_defect() < 1e-15);
        assert!(!chain.is_iid());
        assert!(MarkovChainModel::doubling().is_iid());
    }

    #[test]
    fn rejects_bad_rows() {
        let err = MarkovChainModel::new(vec![vec![0.5, 0.4], vec![0.5, 0.5]], None).unwrap_err();
        assert!(matches!(err, Error::RowNotStochastic { row: 0, .. }));
        let err = MarkovChainModel::new(vec![vec![1.5, -0.5], vec![0.5, 0.5]], None).unwrap_err();
        assert!(matches!(err, Error::NegativeEntry { row: 0, col: 1 }));
        let err = MarkovChainModel::new(vec![vec![1.0], vec![0.5, 0.5]], None).unwrap_err();
        assert!(matches!(err, Error::NotSquare { row: 0, .. }));
    }

    #[test]
    fn rejects_periodic_and_reducible() {
        let cycle = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(MarkovChainModel::new(cycle, None).unwrap_err(), Error::NotPrimitive);
        let reducible = vec![vec![1.0, 0.0], vec![0.5, 0.5]];
        assert_eq!(MarkovChainModel::new(reducible, None).unwrap_err(), Error::NotPrimitive);
    }

    #[test]
    fn checks_supplied_stationary_vector() {
        let rows = vec![vec![0.9, 0.1], vec![0.2, 0.8]];
        assert!(MarkovChainModel::new(rows.clone(), Some(vec![2.0 / 3.0, 1.0 / 3.0])).is_ok());
        assert!(matches!(
            MarkovChainModel::new(rows, Some(vec![0.5, 0.5])),
            Err(Error::NotStationary { .. })
        ));
    }

    #[test]
    fn three_state_primitive_with_zero_entries() {
        let rows = vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.5, 0.0],
        ];
        let chain = MarkovChainModel::new(rows, None).unwrap();
        let total: f64 = chain.stationary().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!(chain.stationarity_defect() < 1e-14);
    }
}
