//! Text description of a chain, as found in experiment configs:
//!
//! ```toml
//! [chain]
//! transition = [[0.9, 0.1], [0.2, 0.8]]
//! stationary = [0.6666666666666666, 0.3333333333333333]   # optional
//! ```
//!
//! or `iid = [0.5, 0.5]`, or `preset = "doubling"`.

use serde::{Deserialize, Serialize};

use super::MarkovChainModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iid: Option<Vec<f64>>,
}

impl ChainSpec {
    pub fn doubling() -> Self {
        Self {
            preset: Some("doubling".into()),
            ..Self::default()
        }
    }

    /// Parses a standalone `[chain]` table (or a bare table with the same keys).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Wrapper {
            chain: ChainSpec,
        }
        match toml::from_str::<Wrapper>(text) {
            Ok(w) => Ok(w.chain),
            Err(_) => toml::from_str::<ChainSpec>(text).map_err(|e| Error::Config(e.to_string())),
        }
    }

    pub fn build(&self) -> Result<MarkovChainModel> {
        let chain = match (&self.preset, &self.transition, &self.iid) {
            (Some(p), None, None) => match p.as_str() {
                "doubling" | "fair-coin" => MarkovChainModel::doubling(),
                other => return Err(Error::Config(format!("chain.preset: unknown preset `{other}`"))),
            },
            (None, Some(rows), None) => MarkovChainModel::new(rows.clone(), self.stationary.clone())
                .map_err(|e| Error::Config(format!("chain.transition: {e}")))?,
            (None, None, Some(probs)) => MarkovChainModel::iid(probs.clone())
                .map_err(|e| Error::Config(format!("chain.iid: {e}")))?,
            _ => {
                return Err(Error::Config(
                    "chain: give exactly one of `preset`, `transition`, `iid`".into(),
                ))
            }
        };
        if let Some(m) = self.alphabet {
            if m != chain.alphabet_size() {
                return Err(Error::Config(format!(
                    "chain.alphabet = {m} but the matrix has {} rows",
                    chain.alphabet_size()
                )));
            }
        }
        Ok(chain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_matrix_and_names_bad_row() {
        let ok = ChainSpec::from_toml_str("[chain]\ntransition = [[0.9, 0.1], [0.2, 0.8]]\n")
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(ok.alphabet_size(), 2);

        let bad = ChainSpec::from_toml_str("[chain]\ntransition = [[0.5, 0.5], [0.5, 0.4]]\n")
            .unwrap()
            .build()
            .unwrap_err();
        assert!(bad.to_string().contains("row 1"), "{bad}");
    }

    #[test]
    fn presets_and_exclusivity() {
        let spec = ChainSpec::from_toml_str("preset = \"doubling\"").unwrap();
        assert!(spec.build().unwrap().is_iid());
        let both = ChainSpec {
            preset: Some("doubling".into()),
            iid: Some(vec![0.5, 0.5]),
            ..Default::default()
        };
        assert!(both.build().is_err());
        let mismatch = ChainSpec {
            alphabet: Some(3),
            iid: Some(vec![0.5, 0.5]),
            ..Default::default()
        };
        assert!(mismatch.build().is_err());
    }
}
