//! `gmclt`: spectra, variances and CLT checks for Gibbs-Markov systems.
//!
//! Exit status: 0 when every check of the run passes, 2 when a check fails,
//! 1 on errors.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{CouplingArg, RunConfig, ScenarioId, Schedule, SystemSpec};

#[derive(Parser)]
#[command(name = "gmclt", version, about = "Transfer operators and central limit checks for Gibbs-Markov maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Preset (gauss, bernoulli, markov2) or path to a system JSON file.
    #[arg(long, default_value = "gauss")]
    system: String,
    /// Cells of the Ulam grid.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Overridden by GMCLT_SEED.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV with plot data.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Leading spectrum of the Ulam operator.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Green-Kubo, spectral and Monte Carlo asymptotic variances.
    Variance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        obs: Option<String>,
        /// Orbit length of the Monte Carlo estimator.
        #[arg(long, default_value_t = 1000)]
        mc_n: usize,
    },
    /// Normalized sums against the standard normal.
    Clt {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        scenario: ScenarioId,
        #[arg(long)]
        obs: Option<String>,
        /// Birkhoff lengths (thm41, example5).
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        /// Row indices (thm54, cor57).
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0.25)]
        eta: f64,
        #[arg(long, default_value_t = 64)]
        trunc: usize,
        #[arg(long)]
        ks_threshold: Option<f64>,
    },
    /// Hypothesis ledger and Lindeberg functional along the block schedule.
    Lindeberg {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        obs: Option<String>,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
    },
    /// Closed forms, tail bound, Hölder growth and CLT of the
    /// lesser-regularity continued-fraction observable.
    Example5 {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        eta: f64,
        #[arg(long, default_value_t = 64)]
        trunc: usize,
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
    },
    /// Two-sample Wilcoxon rank sums on dynamical series (`--system iid`
    /// for i.i.d. uniform samples).
    Wilcoxon {
        #[command(flatten)]
        common: Common,
        /// identity, indicator:k or shift:c
        #[arg(long, default_value = "identity")]
        phi: String,
        #[arg(long, default_value = "identity")]
        psi: String,
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
        m: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Replications per size.
        #[arg(long, default_value_t = 20_000)]
        reps: usize,
        #[arg(long, value_enum, default_value = "independent")]
        coupling: CouplingArg,
    },
    /// Runs a JSON configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn base(common: Common, scenario: ScenarioId) -> RunConfig {
    RunConfig {
        system: SystemSpec::Named(common.system),
        scenario,
        obs: None,
        resolution: common.resolution,
        samples: common.samples,
        seed: common.seed,
        out: common.out,
        csv: common.csv,
        workers: common.workers,
        schedule: Schedule::default(),
    }
}

fn to_config(cmd: Command) -> anyhow::Result<RunConfig> {
    Ok(match cmd {
        Command::Spectrum { common } => base(common, ScenarioId::Spectrum),
        Command::Variance { common, obs, mc_n } => {
            let mut c = base(common, ScenarioId::Variance);
            c.obs = obs;
            c.schedule.mc_n = mc_n;
            c
        }
        Command::Clt { common, scenario, obs, k, n, eta, trunc, ks_threshold } => {
            let mut c = base(common, scenario);
            c.obs = obs;
            c.schedule.ks = k;
            c.schedule.ns = n;
            c.schedule.eta = eta;
            c.schedule.trunc = trunc;
            c.schedule.ks_threshold = ks_threshold;
            c
        }
        Command::Lindeberg { common, obs, n } => {
            let mut c = base(common, ScenarioId::Lindeberg);
            c.obs = obs;
            c.schedule.ns = n;
            c
        }
        Command::Example5 { common, eta, trunc, k } => {
            let mut c = base(common, ScenarioId::Example5);
            c.schedule.eta = eta;
            c.schedule.trunc = trunc;
            c.schedule.ks = k;
            c
        }
        Command::Wilcoxon { common, phi, psi, m, lambda, reps, coupling } => {
            let mut c = base(common, ScenarioId::Wilcoxon);
            c.samples = Some(reps);
            c.schedule.phi = phi;
            c.schedule.psi = psi;
            c.schedule.ms = m;
            c.schedule.lambda = lambda;
            c.schedule.coupling = coupling;
            c
        }
        Command::Run { config } => config::load(&config)?,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = to_config(cli.command).and_then(|mut c| {
        if let Ok(s) = std::env::var("GMCLT_SEED") {
            c.seed = s.trim().parse().map_err(|_| anyhow::anyhow!("GMCLT_SEED '{s}' is not an unsigned integer"))?;
        }
        run::run(&c)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
