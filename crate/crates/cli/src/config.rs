//! Experiment configuration: one TOML file with a section per subcommand.
//! Every section has defaults, so an empty file is a valid config.

use serde::{Deserialize, Serialize};

use returnlab::interval_mc::{DigitSource, IntervalSystem};
use returnlab::lemmas::grid::{ConvolutionGrid, DyadicGrid, GeneratingGrid, KRatioGrid, RatioGrid};
use returnlab::limits::{ScheduleParams, WordFamily};
use returnlab::markov::{ChainSpec, CylinderWord, MarkovChainModel};
use returnlab::markov::MixingKind;

/// A word written either as a digit string (`"0110"`) or a symbol list
/// (`[1, 12, 3]`, needed for Gauss digits above 9).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WordSpec {
    Digits(String),
    Symbols(Vec<usize>),
}

impl WordSpec {
    pub fn build(&self) -> returnlab::Result<CylinderWord> {
        match self {
            WordSpec::Digits(s) => CylinderWord::parse_digits(s),
            WordSpec::Symbols(v) => CylinderWord::new(v.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Random seed; only Monte Carlo runs consume it.
    pub seed: u64,
    /// Count truncation `K` for exact laws.
    pub kmax: usize,
    pub format: Format,
    pub chain: ChainSpec,
    pub exact: ExactSection,
    pub scan: ScanSection,
    pub mc: McSection,
    pub lemmas: LemmaSection,
    pub dist: DistSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            kmax: 8,
            format: Format::Both,
            chain: ChainSpec::doubling(),
            exact: ExactSection::default(),
            scan: ScanSection::default(),
            mc: McSection::default(),
            lemmas: LemmaSection::default(),
            dist: DistSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactSection {
    pub word: WordSpec,
    pub windows: Vec<usize>,
    /// Also emit the conditional return spectrum, cluster laws and the
    /// Kac identity check.
    pub clusters: bool,
}

impl Default for ExactSection {
    fn default() -> Self {
        Self {
            word: WordSpec::Digits("0".into()),
            windows: vec![2],
            clusters: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub family: WordFamily,
    pub ns: Vec<usize>,
    pub windows: Vec<usize>,
    /// Largest cluster size reported.
    pub k: usize,
    pub schedule: ScheduleParams,
    /// Also tabulate the exact count law against the block approximation.
    pub gap: bool,
    pub gap_kmax: usize,
    /// Longest observation window evaluated by the gap table.
    pub gap_budget: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            family: WordFamily::zeros(),
            ns: vec![6, 8, 10, 12, 14],
            windows: vec![64, 128, 256],
            k: 5,
            schedule: ScheduleParams::default(),
            gap: true,
            gap_kmax: 6,
            gap_budget: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub system: IntervalSystem,
    pub word: WordSpec,
    /// Observation window.
    pub window: usize,
    /// Kac-scaled window `⌈t / μ(U)⌉`; overrides `window` when set.
    pub kac_t: Option<f64>,
    pub samples: u64,
    pub streams: u64,
    pub source: DigitSource,
    /// Runs whose boundary-discard rate exceeds this abort.
    pub max_discard_rate: f64,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            system: IntervalSystem::Doubling,
            word: WordSpec::Digits("0".into()),
            window: 2,
            kac_t: None,
            samples: 100_000,
            streams: 64,
            source: DigitSource::Auto,
            max_discard_rate: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaCheck {
    Convolution,
    Dyadic,
    Ratio,
    KRatio,
    Generating,
    Xi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaSection {
    pub mode: MixingKind,
    pub checks: Vec<LemmaCheck>,
    pub convolution: ConvolutionGrid,
    pub dyadic: DyadicGrid,
    pub ratio: RatioGrid,
    pub k_ratio: KRatioGrid,
    /// Shared by the `generating` and `xi` checks.
    pub generating: GeneratingGrid,
}

impl Default for LemmaSection {
    fn default() -> Self {
        use LemmaCheck::*;
        Self {
            mode: MixingKind::Phi,
            checks: vec![Convolution, Dyadic, Ratio, KRatio, Generating, Xi],
            convolution: ConvolutionGrid::default(),
            dyadic: DyadicGrid::default(),
            ratio: RatioGrid::default(),
            k_ratio: KRatioGrid::default(),
            generating: GeneratingGrid::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaSpec {
    pub lambda: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricCpSpec {
    pub t: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinomialSpec {
    pub p: f64,
    pub n: u64,
    /// Geometric cluster sizes; `0` gives plain binomial counts.
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistSection {
    pub kmax: usize,
    /// Poisson intensities (singleton clusters).
    pub poisson: Vec<f64>,
    pub polya_aeppli: Vec<PaSpec>,
    /// Compound Poisson with geometric cluster law.
    pub compound_poisson: Vec<GeometricCpSpec>,
    pub compound_binomial: Vec<BinomialSpec>,
}

impl Default for DistSection {
    fn default() -> Self {
        Self {
            kmax: 10,
            poisson: vec![1.0],
            polya_aeppli: vec![PaSpec { lambda: 1.0, theta: 0.5 }],
            compound_poisson: vec![GeometricCpSpec { t: 1.0, theta: 0.5 }],
            compound_binomial: vec![BinomialSpec {
                p: 1e-4,
                n: 10_000,
                theta: 0.5,
            }],
        }
    }
}

/// Parses a config; TOML errors carry line and column.
pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

pub fn to_toml(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("config is serializable")
}

fn field<T>(name: &str, r: returnlab::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("{name}: {e}"))
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<(), String> {
    if v.is_empty() {
        return Err(format!("{name}: must not be empty"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn build_chain(&self) -> Result<MarkovChainModel, String> {
        self.chain.build().map_err(|e| match e {
            returnlab::Error::Config(m) => m,
            other => format!("chain: {other}"),
        })
    }

    pub fn validate_exact(&self) -> Result<(), String> {
        let chain = self.build_chain()?;
        let word = field("exact.word", self.exact.word.build())?;
        field("exact.word", word.validate_for(&chain))?;
        nonempty("exact.windows", &self.exact.windows)?;
        if self.exact.windows.contains(&0) {
            return Err("exact.windows: windows must be at least 1".into());
        }
        Ok(())
    }

    pub fn validate_scan(&self) -> Result<(), String> {
        let chain = self.build_chain()?;
        let s = &self.scan;
        nonempty("scan.ns", &s.ns)?;
        nonempty("scan.windows", &s.windows)?;
        if s.windows.contains(&0) {
            return Err("scan.windows: windows must be at least 1".into());
        }
        if s.k == 0 {
            return Err("scan.k: must be at least 1".into());
        }
        for w in field("scan.family", s.family.words(&s.ns))? {
            field("scan.family", w.validate_for(&chain))?;
        }
        Ok(())
    }

    pub fn validate_mc(&self) -> Result<(), String> {
        let m = &self.mc;
        let word = field("mc.word", m.word.build())?;
        if m.system == IntervalSystem::Doubling && word.symbols().iter().any(|s| *s > 1) {
            return Err("mc.word: doubling-map digits are 0 and 1".into());
        }
        if m.system == IntervalSystem::Gauss && word.symbols().contains(&0) {
            return Err("mc.word: Gauss digits start at 1".into());
        }
        match m.kac_t {
            Some(t) if !(t.is_finite() && t > 0.0) => return Err(format!("mc.kac_t: {t} must be positive")),
            None if m.window == 0 => return Err("mc.window: must be at least 1".into()),
            _ => {}
        }
        if m.samples == 0 {
            return Err("mc.samples: must be at least 1".into());
        }
        if m.streams == 0 {
            return Err("mc.streams: must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&m.max_discard_rate) {
            return Err("mc.max_discard_rate: must lie in [0, 1]".into());
        }
        Ok(())
    }

    pub fn validate_lemmas(&self) -> Result<(), String> {
        self.build_chain()?;
        let l = &self.lemmas;
        nonempty("lemmas.checks", &l.checks)?;
        for check in &l.checks {
            match check {
                LemmaCheck::Convolution => {
                    nonempty("lemmas.convolution.words", &l.convolution.words)?;
                    nonempty("lemmas.convolution.windows", &l.convolution.windows)?;
                    nonempty("lemmas.convolution.ks", &l.convolution.ks)?;
                }
                LemmaCheck::Dyadic => {
                    nonempty("lemmas.dyadic.words", &l.dyadic.words)?;
                    nonempty("lemmas.dyadic.deltas", &l.dyadic.deltas)?;
                    nonempty("lemmas.dyadic.rs", &l.dyadic.rs)?;
                }
                LemmaCheck::Ratio => {
                    nonempty("lemmas.ratio.words", &l.ratio.words)?;
                    nonempty("lemmas.ratio.windows", &l.ratio.windows)?;
                    nonempty("lemmas.ratio.rs", &l.ratio.rs)?;
                    nonempty("lemmas.ratio.deltas", &l.ratio.deltas)?;
                }
                LemmaCheck::KRatio => {
                    nonempty("lemmas.k_ratio.words", &l.k_ratio.words)?;
                    nonempty("lemmas.k_ratio.windows", &l.k_ratio.windows)?;
                    nonempty("lemmas.k_ratio.rs", &l.k_ratio.rs)?;
                    nonempty("lemmas.k_ratio.ks", &l.k_ratio.ks)?;
                }
                LemmaCheck::Generating | LemmaCheck::Xi => {
                    nonempty("lemmas.generating.instances", &l.generating.instances)?;
                }
            }
        }
        Ok(())
    }

    pub fn validate_dist(&self) -> Result<(), String> {
        let d = &self.dist;
        if d.poisson.is_empty()
            && d.polya_aeppli.is_empty()
            && d.compound_poisson.is_empty()
            && d.compound_binomial.is_empty()
        {
            return Err("dist: no distributions requested".into());
        }
        for (i, t) in d.poisson.iter().enumerate() {
            if !(t.is_finite() && *t > 0.0) {
                return Err(format!("dist.poisson[{i}]: t = {t} must be positive"));
            }
        }
        for (i, pa) in d.polya_aeppli.iter().enumerate() {
            field(
                &format!("dist.polya_aeppli[{i}]"),
                returnlab::distributions::PolyaAeppliParams::new(pa.lambda, pa.theta),
            )?;
        }
        for (i, cp) in d.compound_poisson.iter().enumerate() {
            let law = field(
                &format!("dist.compound_poisson[{i}]"),
                returnlab::distributions::ClusterLaw::geometric(cp.theta, d.kmax.max(1)),
            )?;
            field(
                &format!("dist.compound_poisson[{i}]"),
                returnlab::distributions::CompoundPoissonParams::new(cp.t, law),
            )?;
        }
        for (i, b) in d.compound_binomial.iter().enumerate() {
            if !(b.p > 0.0 && b.p < 1.0) {
                return Err(format!("dist.compound_binomial[{i}]: p = {} is outside (0, 1)", b.p));
            }
            if b.n == 0 {
                return Err(format!("dist.compound_binomial[{i}]: n must be at least 1"));
            }
            field(
                &format!("dist.compound_binomial[{i}]"),
                returnlab::distributions::ClusterLaw::geometric(b.theta, d.kmax.max(1)),
            )?;
        }
        Ok(())
    }
}
