//! Subcommand pipelines. Each returns its tables and a JSON summary; writing
//! files is left to the caller so that output order stays fixed.

use anyhow::{bail, Context, Result};
use log::info;
use serde_json::{json, Map, Value};

use returnlab::distributions::{
    compound_binomial_table, total_variation, ClusterLaw, CompoundPoissonParams, DiscreteLaw, PolyaAeppliParams,
};
use returnlab::export::{self, Cell, Table};
use returnlab::interval_mc::{mc_count_distribution, IntervalSystem, McPlan};
use returnlab::lemmas::grid::{
    implied_constant_band, run_convolution_grid, run_dyadic_grid, run_generating_grid, run_k_ratio_grid,
    run_ratio_grid,
};
use returnlab::lemmas::{main_theorem_gap, xi_bound_reports, CountCache, LemmaReport, Tally};
use returnlab::limits::{
    alpha_spectrum, build_schedule, cluster_law_from_counts, kac_identity_check, lambda_from_alpha, limit_scan,
};
use returnlab::markov::{count_distributions, phi_bound, CylinderWord, MarkovChainModel, MixingBound, MixingKind};

use crate::config::{ExperimentConfig, LemmaCheck};

/// Lemma-run verdict, mapped to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    VacuousOnly,
    Failures,
}

pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: Value,
    pub discarded: u64,
    pub verdict: Verdict,
}

impl RunOutput {
    fn ok(tables: Vec<Table>, summary: Value) -> Self {
        Self {
            tables,
            summary,
            discarded: 0,
            verdict: Verdict::Ok,
        }
    }
}

pub fn run_exact(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let chain = cfg.build_chain().map_err(anyhow::Error::msg)?;
    let word = cfg.exact.word.build()?;
    let windows = &cfg.exact.windows;
    let mut dists = count_distributions(&chain, &word, windows, cfg.kmax)?;
    // Z^L ≤ L, so entries past the window are exact zeros.
    for d in &mut dists {
        d.probs.truncate(d.window.min(cfg.kmax) + 1);
    }
    let mut tables = vec![export::count_table(&dists), export::count_tail_table(&dists)];
    let mut summary = json!({
        "word": word.to_string(),
        "windows": windows,
        "kmax": cfg.kmax,
    });
    if cfg.exact.clusters {
        let mut laws = Vec::new();
        let mut spectra = Vec::new();
        let mut kac = Vec::new();
        let mut alpha_laws = Vec::new();
        for d in &dists {
            laws.push((d.window, cluster_law_from_counts(d)?));
            let spec = alpha_spectrum(&chain, &word, d.window, cfg.kmax.max(1))?;
            match lambda_from_alpha(&spec) {
                Ok(law) => alpha_laws.push((d.window, law)),
                Err(e) => info!("lambda from alpha at L = {}: {e}", d.window),
            }
            spectra.push(spec);
            kac.push((d.window, kac_identity_check(&chain, &word, d.window)?));
        }
        let max_kac = kac.iter().map(|(_, c)| c.diff.abs()).fold(0.0, f64::max);
        tables.push(export::cluster_table(&laws));
        let mut from_alpha = export::cluster_table(&alpha_laws);
        from_alpha.name = "clusters_from_alpha".into();
        tables.push(from_alpha);
        tables.push(export::alpha_table(&spectra));
        tables.push(export::kac_table(&word.to_string(), &kac));
        summary["max_kac_diff"] = json!(max_kac);
    }
    Ok(RunOutput::ok(tables, summary))
}

pub fn run_scan(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let chain = cfg.build_chain().map_err(anyhow::Error::msg)?;
    let s = &cfg.scan;
    let scan = limit_scan(&chain, &s.family, &s.windows, &s.ns, s.k, &s.schedule.s_rule)?;
    let schedule = build_schedule(&chain, &s.family, &s.ns, &s.schedule)?;
    let mut tables = vec![export::scan_table(&scan), export::schedule_table(&schedule)];
    let mut summary = json!({
        "diagnostic": scan.diagnostic,
        "successive_differences": scan.successive_differences,
        "flags": schedule.flags,
    });
    if s.gap {
        let gap = main_theorem_gap(&chain, &schedule, s.gap_kmax, s.gap_budget)?;
        let evaluated: Vec<_> = gap.evaluated().collect();
        let zero: Vec<f64> = evaluated.iter().map(|e| e.zero_gap).collect();
        summary["gap"] = json!({
            "evaluated": evaluated.len(),
            "skipped": gap.summaries.len() - evaluated.len(),
            "zero_gap_decreasing": zero.windows(2).all(|w| w[1] < w[0]),
            "last_zero_vs_limit": evaluated.last().map(|e| e.zero_vs_limit),
        });
        tables.push(export::gap_table(&gap));
        tables.push(export::gap_summary_table(&gap));
    }
    Ok(RunOutput::ok(tables, summary))
}

pub fn run_mc(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let m = &cfg.mc;
    let target = m.word.build()?;
    let window = match m.kac_t {
        Some(t) => (t / m.system.cylinder_measure(&target)).ceil() as usize,
        None => m.window,
    };
    let plan = McPlan {
        system: m.system,
        target: target.clone(),
        window,
        samples: m.samples,
        seed: cfg.seed,
        streams: m.streams,
        source: m.source,
    };
    let emp = mc_count_distribution(&plan)?;
    let rate = emp.discard_rate();
    if rate > m.max_discard_rate {
        bail!(
            "boundary discards {} of {} draws ({:.3}%) exceed the limit of {:.3}%",
            emp.discarded,
            emp.n_samples + emp.discarded,
            100.0 * rate,
            100.0 * m.max_discard_rate
        );
    }
    let mut tables = vec![export::empirical_table(window, &emp)];
    let mut summary = json!({
        "system": m.system,
        "word": target.to_string(),
        "window": window,
        "samples": emp.n_samples,
        "discarded": emp.discarded,
        "discard_rate": rate,
    });
    if m.system == IntervalSystem::Doubling {
        // The doubling map's digit process is the fair coin: compare with the exact law.
        let chain = MarkovChainModel::doubling();
        let kmax = emp.counts.len().saturating_sub(1).max(1);
        let exact = count_distributions(&chain, &target, &[window], kmax)?.remove(0);
        let mut t = Table::new("mc_vs_exact", &["k", "empirical", "stderr", "exact", "z"]);
        let probs = emp.probs();
        let se = emp.std_errors();
        let mut worst = 0.0f64;
        for k in 0..=kmax {
            let p = probs.get(k).copied().unwrap_or(0.0);
            let e = exact.prob(k);
            let sigma = (e * (1.0 - e) / emp.n_samples as f64).sqrt();
            let z = if sigma > 0.0 { (p - e) / sigma } else { 0.0 };
            worst = worst.max(z.abs());
            t.push(vec![
                Cell::from(k),
                Cell::from(p),
                Cell::from(se.get(k).copied().unwrap_or(0.0)),
                Cell::from(e),
                Cell::from(z),
            ]);
        }
        summary["max_abs_z"] = json!(worst);
        tables.push(t);
    }
    Ok(RunOutput {
        tables,
        summary,
        discarded: emp.discarded,
        verdict: Verdict::Ok,
    })
}

fn mixing_for(chain: &MarkovChainModel, mode: MixingKind) -> Result<MixingBound> {
    let phi = phi_bound(chain).context("certifying a mixing rate for the chain")?;
    Ok(match mode {
        MixingKind::Phi => phi,
        MixingKind::Alpha => phi.as_alpha(),
    })
}

fn tally_json(reports: &[LemmaReport]) -> Value {
    let t = Tally::of(reports);
    json!({ "pass": t.pass, "fail": t.fail, "vacuous": t.vacuous })
}

pub fn run_lemmas(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let chain = cfg.build_chain().map_err(anyhow::Error::msg)?;
    let l = &cfg.lemmas;
    let mixing = mixing_for(&chain, l.mode)?;
    let mut reports: Vec<LemmaReport> = Vec::new();
    let mut summary = Map::new();
    let mut tables = Vec::new();
    for check in &l.checks {
        let batch = match check {
            LemmaCheck::Convolution => run_convolution_grid(&chain, &mixing, &l.convolution)?,
            LemmaCheck::Dyadic => run_dyadic_grid(&chain, &mixing, &l.dyadic)?,
            LemmaCheck::Ratio => run_ratio_grid(&chain, &mixing, &l.ratio)?,
            LemmaCheck::KRatio => {
                let batch = run_k_ratio_grid(&chain, &mixing, &l.k_ratio)?;
                summary.insert("k_ratio_band".into(), json!(implied_constant_band(&batch)));
                batch
            }
            LemmaCheck::Generating => {
                let out = run_generating_grid(&chain, &mixing, &l.generating)?;
                let worst = out.residuals.iter().map(|r| r.residual).fold(0.0, f64::max);
                summary.insert("max_gf_residual".into(), json!(worst));
                tables.push(export::residual_table(&out.residuals));
                out.cauchy
            }
            LemmaCheck::Xi => {
                let g = &l.generating;
                let mut batch = Vec::new();
                for inst in &g.instances {
                    let word = CylinderWord::new(inst.word.clone())?;
                    let mut cache = CountCache::new(&chain, g.kmax);
                    let delta = (inst.s as f64).powf(g.alpha_exp).floor() as usize;
                    batch.extend(xi_bound_reports(&mut cache, &word, inst.s, g.max_r, delta, &mixing)?);
                }
                batch
            }
        };
        let key = serde_json::to_value(check)?.as_str().unwrap_or_default().to_string();
        info!("{key}: {} cells", batch.len());
        summary.insert(key, tally_json(&batch));
        reports.extend(batch);
    }
    let total = Tally::of(&reports);
    let verdict = if total.fail > 0 {
        Verdict::Failures
    } else if total.non_vacuous() == 0 {
        Verdict::VacuousOnly
    } else {
        Verdict::Ok
    };
    summary.insert("total".into(), tally_json(&reports));
    tables.insert(0, export::lemma_table(&reports));
    Ok(RunOutput {
        tables,
        summary: Value::Object(summary),
        discarded: 0,
        verdict,
    })
}

pub fn run_dist(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let d = &cfg.dist;
    let kmax = d.kmax;
    let mut named: Vec<(String, Vec<f64>)> = Vec::new();
    for t in &d.poisson {
        let cp = CompoundPoissonParams::new(*t, ClusterLaw::singleton())?;
        named.push((format!("poisson(t={t})"), cp.pmf_table(kmax)?));
    }
    for pa in &d.polya_aeppli {
        let params = PolyaAeppliParams::new(pa.lambda, pa.theta)?;
        let table = (0..=kmax).map(|k| returnlab::distributions::polya_aeppli_pmf(&params, k)).collect();
        named.push((format!("polya_aeppli(lambda={},theta={})", pa.lambda, pa.theta), table));
    }
    for cp in &d.compound_poisson {
        let law = ClusterLaw::geometric(cp.theta, kmax.max(1))?;
        let params = CompoundPoissonParams::new(cp.t, law)?;
        named.push((format!("compound_poisson(t={},theta={})", cp.t, cp.theta), params.pmf_table(kmax)?));
    }
    for b in &d.compound_binomial {
        let law = ClusterLaw::geometric(b.theta, kmax.max(1))?;
        let table = compound_binomial_table(b.p, b.n, &law, kmax)?;
        named.push((format!("compound_binomial(p={},n={},theta={})", b.p, b.n, b.theta), table));
    }
    let mut pmf = Table::new("pmf", &["law", "k", "prob"]);
    for (name, table) in &named {
        for (k, p) in table.iter().enumerate() {
            pmf.push(vec![Cell::from(name.as_str()), Cell::from(k), Cell::from(*p)]);
        }
    }
    let laws: Vec<DiscreteLaw> = named
        .iter()
        .map(|(_, t)| DiscreteLaw::with_remainder(t.clone()))
        .collect::<returnlab::Result<_>>()?;
    let mut tv = Table::new("tv", &["a", "b", "tv"]);
    for i in 0..named.len() {
        for j in i + 1..named.len() {
            tv.push(vec![
                Cell::from(named[i].0.as_str()),
                Cell::from(named[j].0.as_str()),
                Cell::from(total_variation(&laws[i], &laws[j])),
            ]);
        }
    }
    let summary = json!({ "laws": named.len(), "kmax": kmax });
    Ok(RunOutput::ok(vec![pmf, tv], summary))
}
