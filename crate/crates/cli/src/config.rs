//! Run configuration: a flat JSON object, every key optional. Command-line
//! flags override values from the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pada::config::ScoreSolver;
use pada::sim::{Method, SimCase, SimSpec};
use pada::ModelConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub bundle: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid_size: Option<usize>,
    /// `s`; frequencies are `i * pi / s` for `i = -s..=s`.
    pub freq_size: Option<usize>,
    pub bandwidth_mu: Option<f64>,
    pub bandwidth_f: Option<f64>,
    pub lag_window: Option<usize>,
    pub fve: Option<f64>,
    pub epsilon_l: Option<f64>,
    pub components: Option<usize>,
    pub max_components: Option<usize>,
    pub ar_max_order: Option<usize>,
    pub noise_variance: Option<f64>,
    pub score_solver: Option<ScoreSolver>,
    pub horizon: Option<usize>,
    pub level: Option<f64>,
    pub draws: Option<usize>,
    pub reps: Option<usize>,
    pub case: Option<SimCase>,
    pub curves: Option<usize>,
    pub test_curves: Option<usize>,
    pub obs_min: Option<usize>,
    pub obs_max: Option<usize>,
    pub methods: Option<Vec<Method>>,
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `top` win.
    pub fn overlay(mut self, top: RunConfig) -> Self {
        overlay!(self, top;
            input, bundle, out, seed, grid_size, freq_size, bandwidth_mu, bandwidth_f, lag_window, fve,
            epsilon_l, components, max_components, ar_max_order, noise_variance, score_solver, horizon,
            level, draws, reps, case, curves, test_curves, obs_min, obs_max, methods, threads);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> Result<&Path> {
        match &self.out {
            Some(p) => Ok(p),
            None => bail!("an output directory is required (--out)"),
        }
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let d = ModelConfig::default();
        let cfg = ModelConfig {
            grid_size: self.grid_size.unwrap_or(d.grid_size),
            freq_half: self.freq_size.unwrap_or(d.freq_half),
            lag_window: self.lag_window.or(d.lag_window),
            bandwidth_mu: self.bandwidth_mu.or(d.bandwidth_mu),
            bandwidth_f: self.bandwidth_f.or(d.bandwidth_f),
            components: self.components.or(d.components),
            fve: self.fve.unwrap_or(d.fve),
            max_components: self.max_components.unwrap_or(d.max_components),
            epsilon_l: self.epsilon_l.unwrap_or(d.epsilon_l),
            ar_max_order: self.ar_max_order.unwrap_or(d.ar_max_order),
            noise_variance: self.noise_variance.or(d.noise_variance),
            score_solver: self.score_solver.unwrap_or(d.score_solver),
            seed: self.seed(),
            ..d
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sim_spec(&self) -> Result<SimSpec> {
        let d = SimSpec::default();
        let spec = SimSpec {
            case: self.case.unwrap_or(d.case),
            curves: self.curves.unwrap_or(d.curves),
            test_curves: self.test_curves.unwrap_or(d.test_curves),
            obs_min: self.obs_min.unwrap_or(d.obs_min),
            obs_max: self.obs_max.unwrap_or(d.obs_max),
            grid_size: self.grid_size.unwrap_or(d.grid_size),
            seed: self.seed(),
            ..d
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn level(&self) -> Result<f64> {
        let l = self.level.unwrap_or(0.95);
        if !(l > 0.0 && l < 1.0) {
            bail!("level must lie in (0, 1), got {l}");
        }
        Ok(l)
    }

    pub fn horizon(&self) -> Result<usize> {
        match self.horizon.unwrap_or(1) {
            0 => bail!("horizon must be at least 1"),
            h => Ok(h),
        }
    }
}

/// Parses a file path that must exist.
pub fn existing_file(p: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    let Some(p) = p else { bail!("missing {what}") };
    if !p.is_file() {
        bail!("{what} {} does not exist or is not a file", p.display());
    }
    Ok(p.clone())
}
