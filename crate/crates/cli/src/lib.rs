//! Config-driven batch runs of the returnlab pipelines. Each run writes
//! long-format CSV and/or JSON tables plus a `manifest.json`.

pub mod config;
pub mod manifest;
pub mod run;

use std::fs;
use std::path::Path;

use anyhow::Context;
use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use config::{ExperimentConfig, Format};
use manifest::{OutputFile, RunManifest};
use run::{RunOutput, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Exact,
    Mc,
    Lemmas,
    Scan,
    Dist,
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const RUNTIME: i32 = 1;
    pub const CONFIG: i32 = 2;
    /// Every lemma cell had a failing hypothesis.
    pub const VACUOUS_ONLY: i32 = 3;
    /// Some lemma cell with satisfied hypotheses violated its bound.
    pub const FAILURES: i32 = 4;
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Runtime(anyhow::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => exit::CONFIG,
            RunError::Runtime(_) => exit::RUNTIME,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::Runtime(e)
    }
}

pub fn validate(command: Command, cfg: &ExperimentConfig) -> Result<(), String> {
    match command {
        Command::Exact => cfg.validate_exact(),
        Command::Scan => cfg.validate_scan(),
        Command::Mc => cfg.validate_mc(),
        Command::Lemmas => cfg.validate_lemmas(),
        Command::Dist => cfg.validate_dist(),
    }
}

fn dispatch(command: Command, cfg: &ExperimentConfig) -> anyhow::Result<RunOutput> {
    match command {
        Command::Exact => run::run_exact(cfg),
        Command::Scan => run::run_scan(cfg),
        Command::Mc => run::run_mc(cfg),
        Command::Lemmas => run::run_lemmas(cfg),
        Command::Dist => run::run_dist(cfg),
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Validates, runs and writes one experiment. Files are written serially
/// in table order; the manifest goes last.
pub fn execute(command: Command, cfg: &ExperimentConfig, out: &Path, threads: usize) -> Result<RunManifest, RunError> {
    validate(command, cfg).map_err(RunError::Config)?;
    let started = now();
    let output = dispatch(command, cfg)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut outputs = Vec::new();
    for table in &output.tables {
        let mut files = Vec::new();
        if matches!(cfg.format, Format::Csv | Format::Both) {
            files.push((format!("{}.csv", table.name), table.to_csv()));
        }
        if matches!(cfg.format, Format::Json | Format::Both) {
            files.push((format!("{}.json", table.name), table.to_json_string()));
        }
        for (name, text) in files {
            let path = out.join(&name);
            fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            outputs.push(OutputFile::of(&name, text.as_bytes()));
        }
    }
    let status = match output.verdict {
        Verdict::Ok => "ok",
        Verdict::VacuousOnly => "vacuous_only",
        Verdict::Failures => "failures",
    };
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        config: config::to_toml(cfg),
        seed: cfg.seed,
        threads,
        started,
        finished: now(),
        discarded: output.discarded,
        status: status.into(),
        summary: output.summary,
        outputs,
    };
    manifest.save(out)?;
    Ok(manifest)
}

/// Exit code for a finished run.
pub fn status_code(manifest: &RunManifest) -> i32 {
    match manifest.status.as_str() {
        "vacuous_only" => exit::VACUOUS_ONLY,
        "failures" => exit::FAILURES,
        _ => exit::OK,
    }
}

/// Repeats the run recorded in `manifest` into `out` and lists every output
/// whose checksum changed.
pub fn replay(manifest: &RunManifest, out: &Path, threads: usize) -> Result<(RunManifest, Vec<String>), RunError> {
    let cfg = config::parse(&manifest.config).map_err(RunError::Config)?;
    let fresh = execute(manifest.command, &cfg, out, threads)?;
    let diff = manifest.mismatches(&fresh);
    Ok((fresh, diff))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(status: &str) -> RunManifest {
        RunManifest {
            tool: "t".into(),
            version: "0".into(),
            command: Command::Lemmas,
            config: String::new(),
            seed: 0,
            threads: 1,
            started: String::new(),
            finished: String::new(),
            discarded: 0,
            status: status.into(),
            summary: serde_json::Value::Null,
            outputs: Vec::new(),
        }
    }

    #[test]
    fn exit_codes_are_distinct() {
        assert_eq!(status_code(&manifest("ok")), exit::OK);
        assert_eq!(status_code(&manifest("vacuous_only")), exit::VACUOUS_ONLY);
        assert_eq!(status_code(&manifest("failures")), exit::FAILURES);
        assert_eq!(RunError::Config(String::new()).exit_code(), exit::CONFIG);
        let codes = [exit::OK, exit::RUNTIME, exit::CONFIG, exit::VACUOUS_ONLY, exit::FAILURES];
        for (i, a) in codes.iter().enumerate() {
            assert!(codes[i + 1..].iter().all(|b| a != b));
        }
    }
}
