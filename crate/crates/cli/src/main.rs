use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use pada::config::ScoreSolver;
use pada::sim::{Method, SimCase};
use pada_cli::commands;
use pada_cli::config::RunConfig;

#[derive(Parser)]
#[command(name = "pada", version, about = "Optimal functional filters and Whittle-prior scores for sparse functional time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to curves in long CSV format and write a bundle.
    Fit {
        /// CSV with columns curve_id,time,value.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct the fitted curves on the grid, with credible bands.
    Reconstruct {
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Forecast the next curves from a fitted bundle.
    Forecast {
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Draw a simulated data set.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run the simulation benchmark.
    Bench {
        /// Comma-separated: pada, static, nonopt, oracle, zero.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    grid_size: Option<usize>,
    /// Frequency resolution s; the grid is i*pi/s for |i| <= s.
    #[arg(long)]
    freq_size: Option<usize>,
    #[arg(long)]
    bandwidth_mu: Option<f64>,
    #[arg(long)]
    bandwidth_f: Option<f64>,
    #[arg(long)]
    lag_window: Option<usize>,
    #[arg(long)]
    fve: Option<f64>,
    #[arg(long)]
    epsilon_l: Option<f64>,
    #[arg(long)]
    components: Option<usize>,
    #[arg(long)]
    max_components: Option<usize>,
    #[arg(long)]
    ar_max_order: Option<usize>,
    #[arg(long)]
    noise_variance: Option<f64>,
    #[arg(long, value_parser = parse_solver)]
    score_solver: Option<ScoreSolver>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    /// case1 or case2.
    #[arg(long, value_parser = parse_case)]
    case: Option<SimCase>,
    #[arg(long)]
    curves: Option<usize>,
    #[arg(long)]
    test_curves: Option<usize>,
    #[arg(long)]
    obs_min: Option<usize>,
    #[arg(long)]
    obs_max: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_json_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase())).map_err(|e| e.to_string())
}

fn parse_case(s: &str) -> Result<SimCase, String> {
    match s {
        "1" => Ok(SimCase::Case1),
        "2" => Ok(SimCase::Case2),
        _ => parse_json_enum(s),
    }
}

fn parse_solver(s: &str) -> Result<ScoreSolver, String> {
    parse_json_enum(s)
}

impl Common {
    fn into_config(self, input: Option<PathBuf>, bundle: Option<PathBuf>, methods: Option<Vec<Method>>) -> Result<RunConfig> {
        let flags = RunConfig {
            input,
            bundle,
            methods,
            out: self.out,
            seed: self.seed,
            grid_size: self.grid_size,
            freq_size: self.freq_size,
            bandwidth_mu: self.bandwidth_mu,
            bandwidth_f: self.bandwidth_f,
            lag_window: self.lag_window,
            fve: self.fve,
            epsilon_l: self.epsilon_l,
            components: self.components,
            max_components: self.max_components,
            ar_max_order: self.ar_max_order,
            noise_variance: self.noise_variance,
            score_solver: self.score_solver,
            horizon: self.horizon,
            level: self.level,
            draws: self.draws,
            reps: self.reps,
            case: self.case,
            curves: self.curves,
            test_curves: self.test_curves,
            obs_min: self.obs_min,
            obs_max: self.obs_max,
            threads: self.threads,
        };
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(flags))
    }
}

fn set_threads(n: Option<usize>) -> Result<()> {
    let Some(n) = n else { return Ok(()) };
    anyhow::ensure!(n > 0, "--threads must be at least 1");
    #[cfg(feature = "parallel")]
    anyhow::Context::context(rayon::ThreadPoolBuilder::new().num_threads(n).build_global(), "configuring the thread pool")?;
    #[cfg(not(feature = "parallel"))]
    log::warn!("built without the parallel feature; --threads {n} ignored");
    Ok(())
}

type Action = fn(&RunConfig) -> Result<()>;

fn run(cli: Cli) -> Result<()> {
    let (cfg, action): (RunConfig, Action) = match cli.command {
        Command::Fit { input, common } => (common.into_config(input, None, None)?, |c| commands::cmd_fit(c).map(drop)),
        Command::Reconstruct { bundle, common } => (common.into_config(None, bundle, None)?, commands::cmd_reconstruct),
        Command::Forecast { bundle, common } => (common.into_config(None, bundle, None)?, commands::cmd_forecast),
        Command::Simulate { common } => (common.into_config(None, None, None)?, commands::cmd_simulate),
        Command::Bench { methods, common } => (common.into_config(None, None, methods)?, |c| commands::cmd_bench(c).map(drop)),
    };
    set_threads(cfg.threads)?;
    action(&cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
