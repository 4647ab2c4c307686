//! Scenario dispatch and report emission.

use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::{Context, Result};
use gmclt_core::clt::PassCriteria;
use gmclt_core::report::{self, JsonlWriter};
use gmclt_core::scenarios::{self, Example5Params, Outcome, SweepParams, VarianceParams, WilcoxonParams};
use gmclt_core::systems::GibbsMarkovSystem;
use gmclt_core::transfer::{self, VarianceOptions};
use gmclt_core::wilcoxon::Score;

use crate::config::{RunConfig, ScenarioId};

fn default_resolution(sys: &GibbsMarkovSystem) -> usize {
    sys.chain().map_or(512, |c| c.states())
}

/// Executes a validated configuration; `Ok(false)` means a check failed.
pub fn run(config: &RunConfig) -> Result<bool> {
    let sys = config.validate()?;
    let threads = config.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().context("cannot start the worker pool")?;
    log::info!("{:?} on {} worker threads", config.scenario, threads);
    let outcome = pool.install(|| execute(config, sys.as_ref()))?;

    let echo = serde_json::to_value(config)?;
    let mut writer = JsonlWriter::create(&config.out, &echo)?;
    for r in &outcome.records {
        writer.write(r)?;
    }
    writer.finish()?;
    if let Some(csv) = &config.csv {
        write_csv(config, sys.as_ref(), &outcome, csv)?;
    }
    for (name, ok) in &outcome.checks {
        if !ok {
            log::warn!("check failed: {name}");
        }
    }
    eprintln!("{}: {}", outcome.scenario, if outcome.pass { "pass" } else { "FAIL" });
    Ok(outcome.pass)
}

fn execute(c: &RunConfig, sys: Option<&GibbsMarkovSystem>) -> Result<Outcome> {
    let s = &c.schedule;
    let threshold = |default: f64| s.ks_threshold.unwrap_or(default);
    let sweep = |sys: &GibbsMarkovSystem, samples: usize, ks: f64| SweepParams {
        samples: c.samples.unwrap_or(samples),
        seed: c.seed,
        resolution: c.resolution.unwrap_or_else(|| default_resolution(sys)),
        criteria: PassCriteria { ks_threshold: threshold(ks), var_tolerance: s.var_tolerance },
    };
    let obs = |sys: &GibbsMarkovSystem| c.obs.clone().unwrap_or_else(|| scenarios::default_observable(sys).into());
    let outcome = match (c.scenario, sys) {
        (ScenarioId::Wilcoxon, sys) => {
            let model =
                scenarios::wilcoxon_model(sys, s.phi.parse::<Score>()?, s.psi.parse::<Score>()?, s.coupling.into())?;
            let p = WilcoxonParams {
                ms: s.ms.clone(),
                lambda: s.lambda,
                reps: c.samples.unwrap_or(20_000),
                seed: c.seed,
                criteria: PassCriteria { ks_threshold: threshold(0.03), var_tolerance: s.var_tolerance },
            };
            scenarios::run_wilcoxon(&model, &p)?
        }
        (_, None) => unreachable!("validated"),
        (ScenarioId::Spectrum, Some(sys)) => {
            scenarios::run_spectrum(sys, c.resolution.unwrap_or_else(|| default_resolution(sys)))?
        }
        (ScenarioId::Variance, Some(sys)) => {
            let options =
                VarianceOptions { mc_n: s.mc_n, mc_samples: c.samples.unwrap_or(10_000), seed: c.seed, ..Default::default() };
            let p = VarianceParams { resolution: c.resolution.unwrap_or_else(|| default_resolution(sys)), options };
            scenarios::run_variance(sys, &obs(sys), p)?
        }
        (ScenarioId::Thm41, Some(sys)) => {
            let ks = s.ks.clone().unwrap_or_else(|| vec![100, 1000, 10_000]);
            scenarios::run_thm41(sys, &obs(sys), &ks, sweep(sys, 50_000, 0.03))?
        }
        (ScenarioId::Thm54 | ScenarioId::Lindeberg, Some(sys)) => {
            let ns = s.ns.clone().unwrap_or_else(|| vec![256, 1024, 4096]);
            scenarios::run_thm54(sys, &obs(sys), &ns, sweep(sys, 50_000, 0.03))?
        }
        (ScenarioId::Cor57, Some(sys)) => {
            let ns = s.ns.clone().unwrap_or_else(|| vec![256, 1024, 4096]);
            scenarios::run_cor57(sys, &obs(sys), &ns, sweep(sys, 50_000, 0.03))?
        }
        (ScenarioId::Example5, Some(sys)) => {
            let mut p = Example5Params { eta: s.eta, n_trunc: s.trunc, ..Example5Params::default() };
            if let Some(ks) = &s.ks {
                p.ks = ks.clone();
            }
            p.sweep = sweep(sys, p.sweep.samples, 0.05);
            scenarios::run_example5(&p)?
        }
    };
    Ok(outcome)
}

/// Plot data: the Ulam matrix for `spectrum`, the Hölder table for
/// `example5`, empirical CDFs otherwise.
fn write_csv(c: &RunConfig, sys: Option<&GibbsMarkovSystem>, outcome: &Outcome, path: &std::path::Path) -> Result<()> {
    match (c.scenario, sys) {
        (ScenarioId::Spectrum, Some(sys)) => {
            let res = c.resolution.unwrap_or_else(|| default_resolution(sys));
            let (op, _) = transfer::build_ulam(sys, res)?;
            op.write_csv(path)?;
        }
        (ScenarioId::Example5, _) => {
            let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut out = BufWriter::new(file);
            writeln!(out, "n,depth,estimate")?;
            for r in outcome.records.iter().filter(|r| r["record"] == "holder") {
                writeln!(out, "{},{},{}", r["n"], r["depth"], r["estimate"])?;
            }
            out.flush()?;
        }
        _ => report::write_ecdf_csv(path, &outcome.reports)?,
    }
    Ok(())
}
