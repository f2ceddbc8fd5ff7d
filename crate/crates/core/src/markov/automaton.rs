//! Pattern-matching automaton driven by a Markov chain.
//!
//! The Knuth-Morris-Pratt failure function turns the word into a
//! deterministic automaton over the alphabet whose state is the length of
//! the longest suffix of the text read so far that is a prefix of the
//! word. A state of length `q ≥ 1` pins down the last symbol read; the
//! empty-match state does not, so DP states carry the last symbol
//! explicitly and only the reachable pairs are kept.

use std::collections::{HashMap, VecDeque};

use super::{CylinderWord, MarkovChainModel};

/// `lps[i]`: length of the longest proper border of `word[..=i]`.
pub fn failure_function(word: &[usize]) -> Vec<usize> {
    let n = word.len();
    let mut lps = vec![0; n];
    let mut k = 0;
    for i in 1..n {
        while k > 0 && word[k] != word[i] {
            k = lps[k - 1];
        }
        if word[k] == word[i] {
            k += 1;
        }
        lps[i] = k;
    }
    lps
}

/// Full transition table `delta[q][a]` for `q = 0..=n`.
pub fn transition_table(word: &[usize], alphabet: usize) -> Vec<Vec<usize>> {
    let n = word.len();
    let lps = failure_function(word);
    let mut delta = vec![vec![0; alphabet]; n + 1];
    for q in 0..=n {
        for a in 0..alphabet {
            delta[q][a] = if q < n && word[q] == a {
                q + 1
            } else if q == 0 {
                0
            } else {
                delta[lps[q - 1]][a]
            };
        }
    }
    delta
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Edge {
    pub target: usize,
    pub prob: f64,
    pub hit: bool,
}

/// Product of the pattern automaton with the chain's last symbol.
#[derive(Debug, Clone)]
pub(crate) struct ChainAutomaton {
    pub edges: Vec<Vec<Edge>>,
    pub start: usize,
    pub after_word: usize,
}

impl ChainAutomaton {
    /// Assumes `word` has been validated against `chain`.
    pub fn build(chain: &MarkovChainModel, word: &CylinderWord) -> Self {
        let m = chain.alphabet_size();
        let w = word.symbols();
        let n = w.len();
        let delta = transition_table(w, m);

        type Label = (usize, Option<usize>);
        let mut index: HashMap<Label, usize> = HashMap::new();
        let mut labels: Vec<Label> = Vec::new();
        let mut queue = VecDeque::new();
        let start: Label = (0, None);
        index.insert(start, 0);
        labels.push(start);
        queue.push_back(start);

        let mut edges: Vec<Vec<Edge>> = vec![Vec::new()];
        while let Some(label @ (q, last)) = queue.pop_front() {
            let from = index[&label];
            let mut out = Vec::with_capacity(m);
            for a in 0..m {
                let prob = match last {
                    None => chain.stationary()[a],
                    Some(b) => chain.p(b, a),
                };
                if prob == 0.0 {
                    continue;
                }
                let next: Label = (delta[q][a], Some(a));
                let target = *index.entry(next).or_insert_with(|| {
                    labels.push(next);
                    edges.push(Vec::new());
                    queue.push_back(next);
                    labels.len() - 1
                });
                out.push(Edge {
                    target,
                    prob,
                    hit: next.0 == n,
                });
            }
            edges[from] = out;
        }
        let after_word = index
            .get(&(n, Some(w[n - 1])))
            .copied()
            .expect("a positive-measure word is reachable");
        Self {
            edges,
            start: 0,
            after_word,
        }
    }

    pub fn num_states(&self) -> usize {
        self.edges.len()
    }
}
