//! Independent reference computations for the integration tests. Nothing
//! here calls the counting code under test.

#![allow(dead_code)]

/// Stationary vector by power iteration on the transition rows.
pub fn stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let m = p.len();
    let mut pi = vec![1.0 / m as f64; m];
    for _ in 0..10_000 {
        let mut next = vec![0.0; m];
        for (i, row) in p.iter().enumerate() {
            for (j, q) in row.iter().enumerate() {
                next[j] += pi[i] * q;
            }
        }
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if delta < 1e-17 {
            break;
        }
    }
    pi
}

/// Exact laws of the overlapping occurrence count of each word in the first
/// `L` starting positions, for every `L ≤ lmax`, by enumerating all
/// `m^{lmax + n − 1}` sequences with their path weights.
///
/// Result: `laws[word][L][k]` for `L = 0..=lmax`, `k = 0..=lmax`.
pub fn brute_force_counts(p: &[Vec<f64>], words: &[Vec<usize>], lmax: usize) -> Vec<Vec<Vec<f64>>> {
    let pi = stationary(p);
    let nmax = words.iter().map(Vec::len).max().unwrap_or(1);
    let depth = lmax + nmax - 1;
    // Millions of tiny path weights per bin: compensated summation keeps the
    // oracle itself at the 1e-16 level.
    let mut laws = vec![vec![vec![Sum::default(); lmax + 1]; lmax + 1]; words.len()];
    let mut seq = Vec::with_capacity(depth);
    let mut counts = vec![0usize; words.len()];
    for (s0, w0) in pi.iter().enumerate() {
        seq.push(s0);
        visit(p, words, lmax, depth, &mut seq, *w0, &mut counts, &mut laws);
        seq.pop();
    }
    laws.into_iter()
        .map(|law| {
            let mut law: Vec<Vec<f64>> = law.into_iter().map(|row| row.into_iter().map(Sum::value).collect()).collect();
            law[0][0] = 1.0;
            law
        })
        .collect()
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Default)]
struct Sum {
    total: f64,
    carry: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.total + x;
        if self.total.abs() >= x.abs() {
            self.carry += (self.total - t) + x;
        } else {
            self.carry += (x - t) + self.total;
        }
        self.total = t;
    }

    fn value(self) -> f64 {
        self.total + self.carry
    }
}

#[allow(clippy::too_many_arguments)]
fn visit(
    p: &[Vec<f64>],
    words: &[Vec<usize>],
    lmax: usize,
    depth: usize,
    seq: &mut Vec<usize>,
    weight: f64,
    counts: &mut [usize],
    laws: &mut [Vec<Vec<Sum>>],
) {
    let len = seq.len();
    let saved = counts.to_vec();
    for (i, w) in words.iter().enumerate() {
        let n = w.len();
        if len >= n && seq[len - n..] == w[..] && len - n < lmax {
            counts[i] += 1;
        }
        // Window L is complete once position L − 1 has all n symbols.
        if len >= n {
            let l = len - n + 1;
            if l <= lmax {
                laws[i][l][counts[i]].add(weight);
            }
        }
    }
    if len < depth {
        let last = seq[len - 1];
        for (next, q) in p[last].iter().enumerate() {
            if *q == 0.0 {
                continue;
            }
            seq.push(next);
            visit(p, words, lmax, depth, seq, weight * q, counts, laws);
            seq.pop();
        }
    }
    counts.copy_from_slice(&saved);
}

/// `C(L, k) 2^{−L}` via Pascal's triangle.
pub fn binomial_half(l: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..l {
        let mut next = vec![1.0; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    let scale = 0.5f64.powi(l as i32);
    row.iter().map(|c| c * scale).collect()
}

/// Convolution of two laws on `0..`, truncated at `kmax`.
pub fn convolve(a: &[f64], b: &[f64], kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    for (i, x) in a.iter().enumerate().take(kmax + 1) {
        for (j, y) in b.iter().enumerate().take(kmax + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Compound binomial pmf by conditioning on the number of clusters.
pub fn compound_binomial_by_mixture(p: f64, n: u64, sizes: &[f64], kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    let mut power = vec![0.0; kmax + 1];
    power[0] = 1.0;
    let mut size_law = vec![0.0; kmax + 1];
    for (j, s) in sizes.iter().enumerate().take(kmax) {
        size_law[j + 1] = *s;
    }
    // P(B = b) computed in log space.
    let ln_choose = |b: u64| -> f64 {
        (1..=b).map(|i| ((n - b + i) as f64).ln() - (i as f64).ln()).sum()
    };
    for b in 0..=n.min(kmax as u64) {
        let pb = (ln_choose(b) + b as f64 * p.ln() + (n - b) as f64 * (1.0 - p).ln()).exp();
        for (k, v) in power.iter().enumerate() {
            out[k] += pb * v;
        }
        power = convolve(&power, &size_law, kmax);
    }
    out
}
