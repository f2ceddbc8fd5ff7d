//! Long-format tables for offline plotting.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! values always serialize to equal bytes. Column sets are fixed per table
//! kind; see the README for the list.

use serde_json::{json, Value};

use crate::distributions::ClusterLaw;
use crate::interval_mc::EmpiricalDistribution;
use crate::lemmas::grid::GfResidual;
use crate::lemmas::{LemmaReport, MainGapTable, Outcome};
use crate::limits::{AlphaSpectrum, KacCheck, ScalingSchedule, ScanTable};
use crate::markov::CountDistribution;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_nan() => "nan".into(),
            Cell::Float(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(_) => Value::Null,
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

/// A named table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row; panics if its width differs from the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch in table {}", self.name);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    /// `{"name": …, "columns": […], "rows": [[…], …]}`; non-finite floats become `null`.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::to_json).collect()))
            .collect();
        json!({ "name": self.name, "columns": self.columns, "rows": rows })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
        s.push('\n');
        s
    }
}

macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$(Cell::from($v)),*] };
}

/// `L, k, prob` for every window; the truncation tail is in [`count_tail_table`].
pub fn count_table(dists: &[CountDistribution]) -> Table {
    let mut t = Table::new("counts", &["L", "k", "prob"]);
    for d in dists {
        for (k, p) in d.probs.iter().enumerate() {
            t.push(row![d.window, k, *p]);
        }
    }
    t
}

pub fn count_tail_table(dists: &[CountDistribution]) -> Table {
    let mut t = Table::new("count_tails", &["L", "kmax", "tail_mass"]);
    for d in dists {
        t.push(row![d.window, d.kmax(), d.tail_mass]);
    }
    t
}

/// `L, k, count, prob, stderr`.
pub fn empirical_table(window: usize, dist: &EmpiricalDistribution) -> Table {
    let mut t = Table::new("empirical", &["L", "k", "count", "prob", "stderr"]);
    let probs = dist.probs();
    let se = dist.std_errors();
    for (k, c) in dist.counts.iter().enumerate() {
        t.push(row![window, k, *c, probs[k], se[k]]);
    }
    t
}

/// `L, k, lambda` for cluster laws keyed by window.
pub fn cluster_table(laws: &[(usize, ClusterLaw)]) -> Table {
    let mut t = Table::new("clusters", &["L", "k", "lambda"]);
    for (window, law) in laws {
        for k in 1..=law.support() {
            t.push(row![*window, k, law.get(k)]);
        }
    }
    t
}

/// `L, k, alpha` for `k = 1..=K`.
pub fn alpha_table(spectra: &[AlphaSpectrum]) -> Table {
    let mut t = Table::new("alpha", &["L", "k", "alpha"]);
    for s in spectra {
        for (i, a) in s.alpha.iter().enumerate() {
            t.push(row![s.window, i + 1, *a]);
        }
    }
    t
}

pub fn kac_table(word: &str, checks: &[(usize, KacCheck)]) -> Table {
    let mut t = Table::new("kac", &["word", "L", "lhs", "rhs", "diff"]);
    for (window, c) in checks {
        t.push(row![word, *window, c.lhs, c.rhs, c.diff]);
    }
    t
}

pub fn scan_table(scan: &ScanTable) -> Table {
    let mut t = Table::new("scan", &["n", "L", "k", "lambda", "lambda_hat", "s", "unreliable"]);
    for r in &scan.rows {
        t.push(row![r.n, r.window, r.k, r.lambda, r.lambda_hat, r.s, r.unreliable]);
    }
    t
}

pub fn schedule_table(schedule: &ScalingSchedule) -> Table {
    let mut t = Table::new(
        "schedule",
        &["n", "word", "measure", "s", "p", "r", "trials", "N", "window", "delta"],
    );
    for e in &schedule.entries {
        t.push(row![
            e.n,
            e.word.to_string(),
            e.measure,
            e.s,
            e.p,
            e.r,
            e.trials,
            e.big_n,
            e.window,
            e.delta,
        ]);
    }
    t
}

pub fn gap_table(gap: &MainGapTable) -> Table {
    let mut t = Table::new("gap", &["n", "k", "exact", "binomial", "poisson", "gap"]);
    for r in &gap.rows {
        t.push(row![r.n, r.k, r.exact, r.binomial, r.poisson, r.gap]);
    }
    t
}

pub fn gap_summary_table(gap: &MainGapTable) -> Table {
    let mut t = Table::new(
        "gap_summary",
        &[
            "n",
            "s",
            "trials",
            "window",
            "skipped",
            "max_gap",
            "zero_gap",
            "zero_vs_limit",
            "binomial_poisson_tv",
        ],
    );
    for s in &gap.summaries {
        t.push(row![
            s.n,
            s.s,
            s.trials,
            s.window,
            s.skipped,
            s.max_gap,
            s.zero_gap,
            s.zero_vs_limit,
            s.binomial_poisson_tv,
        ]);
    }
    t
}

fn pairs(items: &[(String, f64)]) -> String {
    items
        .iter()
        .map(|(k, v)| format!("{k}={v:?}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::Pass => "pass",
        Outcome::Fail => "fail",
        Outcome::Vacuous => "vacuous",
    }
}

/// `lemma, word, params, lhs, bound, margin, outcome, extras`; parameter and
/// extra lists are `name=value` pairs joined by `;`.
pub fn lemma_table(reports: &[LemmaReport]) -> Table {
    let mut t = Table::new(
        "lemmas",
        &["lemma", "word", "params", "lhs", "bound", "margin", "outcome", "extras"],
    );
    for r in reports {
        t.push(row![
            r.lemma.as_str(),
            r.word.as_str(),
            pairs(&r.params),
            r.lhs,
            r.bound,
            r.margin(),
            outcome_name(r.outcome),
            pairs(&r.extras),
        ]);
    }
    t
}

pub fn residual_table(residuals: &[GfResidual]) -> Table {
    let mut t = Table::new("gf_residuals", &["word", "s", "r", "residual"]);
    for r in residuals {
        t.push(row![r.word.as_str(), r.s, r.r, r.residual]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{count_distribution_exact, CylinderWord, MarkovChainModel};

    #[test]
    fn count_rows_for_a_single_symbol() {
        let chain = MarkovChainModel::doubling();
        let w = CylinderWord::parse_digits("0").unwrap();
        let d = count_distribution_exact(&chain, &w, 2, 2).unwrap();
        let csv = count_table(&[d]).to_csv();
        assert_eq!(csv, "L,k,prob\n2,0,0.25\n2,1,0.5\n2,2,0.25\n");
    }

    #[test]
    fn floats_round_trip_and_nan_is_null() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(row![0.1 + 0.2, f64::NAN]);
        let csv = t.to_csv();
        let cell = csv.lines().nth(1).unwrap().split(',').next().unwrap();
        assert_eq!(cell.parse::<f64>().unwrap(), 0.1 + 0.2);
        assert!(csv.ends_with("nan\n"));
        assert_eq!(t.to_json()["rows"][0][1], Value::Null);
    }

    #[test]
    fn text_cells_are_quoted() {
        let mut t = Table::new("x", &["params"]);
        t.push(row!["a=1,b=2"]);
        assert_eq!(t.to_csv(), "params\n\"a=1,b=2\"\n");
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn width_is_enforced() {
        Table::new("x", &["a"]).push(row![1usize, 2usize]);
    }
}
