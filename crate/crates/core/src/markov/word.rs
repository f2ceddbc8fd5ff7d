use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MarkovChainModel;
use crate::error::{Error, Result};

/// A finite word naming a cylinder set `[w_0 ... w_{n−1}]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CylinderWord {
    symbols: Vec<usize>,
}

impl CylinderWord {
    pub fn new(symbols: Vec<usize>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyWord);
        }
        Ok(Self { symbols })
    }

    /// `symbol` repeated `n` times.
    pub fn constant(symbol: usize, n: usize) -> Result<Self> {
        Self::new(vec![symbol; n])
    }

    /// The depth-`n` all-zero word; its cylinders shrink to the fixed point.
    pub fn zeros(n: usize) -> Result<Self> {
        Self::constant(0, n)
    }

    /// First `n` symbols of the periodic sequence `period period period ...`.
    pub fn periodic(period: &[usize], n: usize) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::EmptyWord);
        }
        Self::new(period.iter().copied().cycle().take(n).collect())
    }

    /// Uniformly random word, reproducible from `seed`. No claim of
    /// genericity is made beyond being drawn at random.
    pub fn pseudo_random(alphabet: usize, n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new((0..n).map(|_| rng.random_range(0..alphabet)).collect())
    }

    /// Parses decimal digits, e.g. `"0110"`.
    pub fn parse_digits(text: &str) -> Result<Self> {
        let symbols = text
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as usize)
                    .ok_or_else(|| Error::Config(format!("`{c}` is not a digit in word `{text}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(symbols)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// True if `self` extends `shorter`, i.e. `[self] ⊂ [shorter]`.
    pub fn extends(&self, shorter: &CylinderWord) -> bool {
        self.symbols.starts_with(&shorter.symbols)
    }

    /// Checks the symbols against the chain's alphabet and that the
    /// cylinder has positive measure.
    pub fn validate_for(&self, chain: &MarkovChainModel) -> Result<()> {
        let m = chain.alphabet_size();
        if let Some((position, &symbol)) = self.symbols.iter().enumerate().find(|(_, s)| **s >= m) {
            return Err(Error::SymbolOutOfRange {
                symbol,
                position,
                alphabet: m,
            });
        }
        if word_measure(chain, self) <= 0.0 {
            return Err(Error::NullWord);
        }
        Ok(())
    }
}

impl fmt::Display for CylinderWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbols.iter().all(|s| *s < 10) {
            for s in &self.symbols {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.symbols.iter().map(|s| s.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

/// `μ([w]) = π(w_0) Π P(w_i, w_{i+1})`. Symbols outside the alphabet give zero.
pub fn word_measure(chain: &MarkovChainModel, word: &CylinderWord) -> f64 {
    let m = chain.alphabet_size();
    let s = word.symbols();
    if s.iter().any(|x| *x >= m) {
        return 0.0;
    }
    s.windows(2)
        .fold(chain.stationary()[s[0]], |acc, w| acc * chain.p(w[0], w[1]))
}
