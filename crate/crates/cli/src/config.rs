//! Run configuration shared by the subcommands and `run --config`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gmclt_core::scenarios;
use gmclt_core::systems::{GibbsMarkovSystem, SystemConfig};
use gmclt_core::wilcoxon::{Coupling, Score};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioId {
    Spectrum,
    Variance,
    Thm41,
    Thm54,
    Cor57,
    Lindeberg,
    Example5,
    Wilcoxon,
}

/// A preset name (`gauss`, `bernoulli`, `markov2`, `iid`), a path to a
/// system JSON file, or the system object itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Named(String),
    Inline(SystemConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingArg {
    Independent,
    SameOrbit,
}

impl From<CouplingArg> for Coupling {
    fn from(c: CouplingArg) -> Self {
        match c {
            CouplingArg::Independent => Coupling::Independent,
            CouplingArg::SameOrbit => Coupling::SameOrbit,
        }
    }
}

/// Schedule and model parameters; each scenario reads the ones it needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Schedule {
    /// Birkhoff lengths for `thm41` and `example5`.
    pub ks: Option<Vec<usize>>,
    /// Row indices for `thm54`, `cor57` and `lindeberg`.
    pub ns: Option<Vec<usize>>,
    pub eta: f64,
    pub trunc: usize,
    pub ms: Vec<usize>,
    pub lambda: f64,
    pub phi: String,
    pub psi: String,
    pub coupling: CouplingArg,
    /// Orbit length of the Monte Carlo variance estimator.
    pub mc_n: usize,
    pub ks_threshold: Option<f64>,
    pub var_tolerance: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            ks: None,
            ns: None,
            eta: 0.25,
            trunc: 64,
            ms: vec![64, 128, 256, 512],
            lambda: 1.0,
            phi: "identity".into(),
            psi: "identity".into(),
            coupling: CouplingArg::Independent,
            mc_n: 1000,
            ks_threshold: None,
            var_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub scenario: ScenarioId,
    #[serde(default)]
    pub obs: Option<String>,
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub out: PathBuf,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub schedule: Schedule,
}

/// The system a run uses; `None` for the i.i.d. Wilcoxon model.
pub fn resolve_system(spec: &SystemSpec) -> Result<Option<GibbsMarkovSystem>> {
    match spec {
        SystemSpec::Inline(c) => Ok(Some(GibbsMarkovSystem::from_config(c)?)),
        SystemSpec::Named(name) if name == "iid" => Ok(None),
        SystemSpec::Named(name) => {
            if let Some(sys) = scenarios::preset_system(name) {
                return Ok(Some(sys));
            }
            let text = std::fs::read_to_string(name).with_context(|| format!("cannot read system file {name}"))?;
            let sys = GibbsMarkovSystem::from_json(&text).with_context(|| format!("invalid system file {name}"))?;
            Ok(Some(sys))
        }
    }
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
    let config: RunConfig =
        serde_json::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))?;
    Ok(config)
}

impl RunConfig {
    /// Checks everything that can be checked before any computation.
    pub fn validate(&self) -> Result<Option<GibbsMarkovSystem>> {
        let sys = resolve_system(&self.system)?;
        let s = &self.schedule;
        if self.samples == Some(0) {
            bail!("samples must be positive");
        }
        if self.workers == Some(0) {
            bail!("workers must be positive");
        }
        if let Some(t) = s.ks_threshold {
            if !(t > 0.0 && t <= 1.0) {
                bail!("ks_threshold {t} is not in (0, 1]");
            }
        }
        match (self.scenario, &sys) {
            (ScenarioId::Wilcoxon, _) => {
                s.phi.parse::<Score>()?;
                s.psi.parse::<Score>()?;
                if !(s.lambda > 0.0 && s.lambda <= 1.0) {
                    bail!("lambda {} is not in (0, 1]", s.lambda);
                }
                if s.ms.is_empty() || s.ms.contains(&0) {
                    bail!("ms must be a nonempty list of positive sizes");
                }
            }
            (_, None) => bail!("the i.i.d. model only applies to the wilcoxon scenario"),
            (ScenarioId::Example5, Some(sys)) if !sys.is_gauss() => bail!("example5 needs the Gauss map"),
            (ScenarioId::Example5, _) => {
                gmclt_core::observables::Example5Spec::new(s.eta, s.trunc)?;
            }
            (_, Some(sys)) => {
                if let Some(obs) = &self.obs {
                    scenarios::named_observable(sys, obs)?;
                }
            }
        }
        for list in [&s.ks, &s.ns].into_iter().flatten() {
            if list.is_empty() || list.contains(&0) {
                bail!("schedules must be nonempty lists of positive lengths");
            }
        }
        Ok(sys)
    }
}
