//! Monte Carlo counting for two Gibbs-Markov interval maps.
//!
//! * Gauss map `T(x) = 1/x mod 1` on `(0, 1]` with invariant density
//!   `1 / ((1 + x) ln 2)`; its partition `(1/(j+1), 1/j]` gives the
//!   continued-fraction digits.
//! * Doubling map `T(x) = 2x mod 1` with Lebesgue measure; binary digits.
//!
//! Starting points are drawn exactly from the invariant measure. Floating
//! point orbits only shadow true orbits for a few dozen steps, so longer
//! itineraries are drawn from the stationary digit process directly
//! ([`DigitSource::Symbolic`]). For the Gauss map this uses the conditional
//! law of `T^j x` given the first `j` digits: with convergents `p/q`,
//! its density is proportional to `1 / ((1 + x(t)) (q_j + q_{j−1} t)²)`
//! where `x(t) = (p_j + p_{j−1} t) / (q_j + q_{j−1} t)`, sampled by rejection
//! from the `1 / (1 + αt)²` envelope, `α = q_{j−1}/q_j`.

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::markov::{automaton::transition_table, CylinderWord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalSystem {
    Gauss,
    Doubling,
}

impl IntervalSystem {
    pub fn density(self, x: f64) -> f64 {
        match self {
            Self::Gauss => 1.0 / ((1.0 + x) * std::f64::consts::LN_2),
            Self::Doubling => 1.0,
        }
    }

    pub fn map(self, x: f64) -> f64 {
        match self {
            Self::Gauss => {
                let y = 1.0 / x;
                y - y.floor()
            }
            Self::Doubling => {
                let y = 2.0 * x;
                y - y.floor()
            }
        }
    }

    /// Partition element containing `x`; `None` at 0 where the orbit dies.
    pub fn digit(self, x: f64) -> Option<usize> {
        if !(x > 0.0 && x <= 1.0) {
            return None;
        }
        match self {
            Self::Gauss => Some((1.0 / x).floor() as usize),
            Self::Doubling => (x < 1.0).then_some((2.0 * x >= 1.0) as usize),
        }
    }

    /// Inverse CDF of the invariant measure.
    pub fn from_uniform(self, u: f64) -> f64 {
        match self {
            Self::Gauss => u.exp2() - 1.0,
            Self::Doubling => u,
        }
    }

    /// `∫ x dμ`.
    pub fn mean(self) -> f64 {
        match self {
            Self::Gauss => 1.0 / std::f64::consts::LN_2 - 1.0,
            Self::Doubling => 0.5,
        }
    }

    /// `∫ x² dμ − mean²`.
    pub fn variance(self) -> f64 {
        match self {
            Self::Gauss => {
                let ln2 = std::f64::consts::LN_2;
                (ln2 - 0.5) / ln2 - self.mean().powi(2)
            }
            Self::Doubling => 1.0 / 12.0,
        }
    }

    /// Longest orbit trusted in floating point.
    pub fn fidelity_horizon(self) -> usize {
        match self {
            Self::Gauss => 32,
            Self::Doubling => 40,
        }
    }

    /// Measure of the cylinder of `word`.
    pub fn cylinder_measure(self, word: &CylinderWord) -> f64 {
        match self {
            Self::Doubling => {
                if word.symbols().iter().all(|s| *s < 2) {
                    0.5f64.powi(word.len() as i32)
                } else {
                    0.0
                }
            }
            Self::Gauss => {
                if word.symbols().contains(&0) {
                    return 0.0;
                }
                let (a, b) = gauss_cylinder(word.symbols());
                ((1.0 + b) / (1.0 + a)).log2().abs()
            }
        }
    }
}

/// Endpoints of the Gauss cylinder `[a_1 ... a_n]`:
/// `p_n/q_n` and `(p_n + p_{n−1}) / (q_n + q_{n−1})`.
pub fn gauss_cylinder(digits: &[usize]) -> (f64, f64) {
    let (mut p_prev, mut p) = (1.0, 0.0);
    let (mut q_prev, mut q) = (0.0, 1.0);
    for &d in digits {
        let d = d as f64;
        (p_prev, p) = (p, d * p + p_prev);
        (q_prev, q) = (q, d * q + q_prev);
    }
    (p / q, (p + p_prev) / (q + q_prev))
}

/// Digits of `x, T x, ..., T^{n−1} x`.
pub fn itinerary(system: IntervalSystem, x: f64, depth: usize) -> Result<CylinderWord> {
    let mut digits = Vec::with_capacity(depth);
    let mut y = x;
    for step in 0..depth {
        let d = system.digit(y).ok_or(Error::Boundary { step })?;
        digits.push(d);
        if step + 1 < depth {
            y = system.map(y);
        }
    }
    CylinderWord::new(digits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DigitSource {
    /// Iterate the map in floating point; refused beyond the fidelity horizon.
    Orbit,
    /// Draw digits from the exact stationary digit process.
    Symbolic,
    /// `Orbit` within the horizon, `Symbolic` beyond it (with a warning).
    #[default]
    Auto,
}

/// Reproducible random source for one stream of samples.
#[derive(Debug, Clone)]
pub struct OrbitSampler {
    system: IntervalSystem,
    seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl OrbitSampler {
    pub fn new(system: IntervalSystem, seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_index);
        Self {
            system,
            seed,
            stream_index,
            rng,
        }
    }

    pub fn system(&self) -> IntervalSystem {
        self.system
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    fn open_unit(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// One point from the invariant measure.
    pub fn sample_stationary(&mut self) -> f64 {
        let u = self.open_unit();
        self.system.from_uniform(u)
    }

    /// `len` digits along the orbit of a fresh stationary point.
    pub fn digits(&mut self, len: usize, source: DigitSource) -> Result<Vec<usize>> {
        match resolve_source(self.system, len, source)? {
            DigitSource::Orbit => {
                let x = self.sample_stationary();
                Ok(itinerary(self.system, x, len)?.symbols().to_vec())
            }
            _ => Ok(match self.system {
                IntervalSystem::Doubling => (0..len).map(|_| self.rng.random::<bool>() as usize).collect(),
                IntervalSystem::Gauss => self.gauss_digits(len),
            }),
        }
    }

    fn gauss_digits(&mut self, len: usize) -> Vec<usize> {
        // Convergent ratios scaled by q_j: α = q_{j−1}/q_j, β = p_j/q_j, γ = p_{j−1}/q_j.
        let (mut alpha, mut beta, mut gamma) = (0.0f64, 0.0f64, 1.0f64);
        let mut out = Vec::with_capacity(len);
        while out.len() < len {
            let x_floor = beta.min((beta + gamma) / (1.0 + alpha));
            let t = loop {
                let u = self.open_unit();
                let t = u / (1.0 + alpha - alpha * u);
                let x = (beta + gamma * t) / (1.0 + alpha * t);
                if self.rng.random::<f64>() * (1.0 + x) < 1.0 + x_floor {
                    break t;
                }
            };
            let e = (1.0 / t).floor();
            let d = e + alpha;
            (alpha, beta, gamma) = (1.0 / d, (e * beta + gamma) / d, beta / d);
            out.push(e as usize);
        }
        out
    }
}

/// Free-function form of [`OrbitSampler::sample_stationary`].
pub fn sample_stationary(sampler: &mut OrbitSampler) -> f64 {
    sampler.sample_stationary()
}

fn resolve_source(system: IntervalSystem, len: usize, source: DigitSource) -> Result<DigitSource> {
    let horizon = system.fidelity_horizon();
    match source {
        DigitSource::Orbit if len > horizon => Err(Error::FidelityHorizonExceeded {
            needed: len,
            horizon,
        }),
        DigitSource::Auto if len > horizon => Ok(DigitSource::Symbolic),
        DigitSource::Auto => Ok(DigitSource::Orbit),
        other => Ok(other),
    }
}

/// Empirical law of a nonnegative count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub counts: Vec<u64>,
    pub n_samples: u64,
    pub discarded: u64,
}

impl EmpiricalDistribution {
    pub fn probs(&self) -> Vec<f64> {
        let n = self.n_samples.max(1) as f64;
        self.counts.iter().map(|c| *c as f64 / n).collect()
    }

    /// `√(p (1 − p) / n)` per bin.
    pub fn std_errors(&self) -> Vec<f64> {
        let n = self.n_samples.max(1) as f64;
        self.probs().iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect()
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.counts.get(k).map_or(0.0, |c| *c as f64 / self.n_samples.max(1) as f64)
    }

    pub fn discard_rate(&self) -> f64 {
        let total = self.n_samples + self.discarded;
        if total == 0 {
            0.0
        } else {
            self.discarded as f64 / total as f64
        }
    }

    fn merge(&mut self, other: &EmpiricalDistribution) {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n_samples += other.n_samples;
        self.discarded += other.discarded;
    }
}

/// A Monte Carlo counting experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McPlan {
    pub system: IntervalSystem,
    pub target: CylinderWord,
    pub window: usize,
    pub samples: u64,
    pub seed: u64,
    /// Number of independent substreams; fixes the work partition.
    pub streams: u64,
    pub source: DigitSource,
}

/// Counts occurrences of a (possibly unbounded-alphabet) word.
struct OccurrenceCounter {
    delta: Vec<Vec<usize>>,
    letters: Vec<usize>,
    n: usize,
}

impl OccurrenceCounter {
    fn new(word: &CylinderWord) -> Self {
        let mut letters: Vec<usize> = word.symbols().to_vec();
        letters.sort_unstable();
        letters.dedup();
        let coded: Vec<usize> = word
            .symbols()
            .iter()
            .map(|s| letters.binary_search(s).expect("own letter"))
            .collect();
        Self {
            delta: transition_table(&coded, letters.len() + 1),
            n: coded.len(),
            letters,
        }
    }

    fn count(&self, digits: &[usize]) -> usize {
        let other = self.letters.len();
        let mut q = 0;
        let mut hits = 0;
        for d in digits {
            let a = self.letters.binary_search(d).unwrap_or(other);
            q = self.delta[q][a];
            if q == self.n {
                hits += 1;
            }
        }
        hits
    }
}

fn run_stream(plan: &McPlan, counter: &OccurrenceCounter, stream: u64, samples: u64) -> Result<EmpiricalDistribution> {
    let mut sampler = OrbitSampler::new(plan.system, plan.seed, stream);
    let len = plan.window + plan.target.len() - 1;
    let mut dist = EmpiricalDistribution {
        counts: Vec::new(),
        n_samples: 0,
        discarded: 0,
    };
    for _ in 0..samples {
        match sampler.digits(len, plan.source) {
            Ok(digits) => {
                let k = counter.count(&digits);
                if k >= dist.counts.len() {
                    dist.counts.resize(k + 1, 0);
                }
                dist.counts[k] += 1;
                dist.n_samples += 1;
            }
            Err(Error::Boundary { step }) => {
                debug!("stream {stream}: discarded sample, boundary at step {step}");
                dist.discarded += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(dist)
}

/// Empirical law of `Z^N` for `plan.target` under the invariant measure.
///
/// Work is split into `plan.streams` fixed substreams and evaluated on the
/// current rayon pool; the result does not depend on the thread count.
pub fn mc_count_distribution(plan: &McPlan) -> Result<EmpiricalDistribution> {
    if plan.window == 0 {
        return Err(invalid("window", "must be at least 1"));
    }
    if plan.samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    if plan.streams == 0 {
        return Err(invalid("streams", "must be at least 1"));
    }
    if plan.system.cylinder_measure(&plan.target) <= 0.0 {
        return Err(Error::NullWord);
    }
    let len = plan.window + plan.target.len() - 1;
    if plan.source == DigitSource::Auto && len > plan.system.fidelity_horizon() {
        warn!(
            "orbit length {len} exceeds the {:?} fidelity horizon {}; drawing symbolic digits",
            plan.system,
            plan.system.fidelity_horizon()
        );
    }
    resolve_source(plan.system, len, plan.source)?;

    let counter = OccurrenceCounter::new(&plan.target);
    let base = plan.samples / plan.streams;
    let extra = plan.samples % plan.streams;
    let parts: Vec<Result<EmpiricalDistribution>> = (0..plan.streams)
        .into_par_iter()
        .map(|j| run_stream(plan, &counter, j, base + u64::from(j < extra)))
        .collect();
    let mut total = EmpiricalDistribution {
        counts: Vec::new(),
        n_samples: 0,
        discarded: 0,
    };
    for part in parts {
        total.merge(&part?);
    }
    Ok(total)
}
