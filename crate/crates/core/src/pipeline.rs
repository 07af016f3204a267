//! End-to-end estimation: smoothing, spectral filters and score posterior.

use serde::{Deserialize, Serialize};

use crate::config::{ModelConfig, ScoreSolver};
use crate::data::FtsDataset;
use crate::error::{PadaError, Result};
use crate::filters::{
    align_phases, build_filters, build_psi_kernel, eigendecompose_with, optimize_phase_seeded, EigenDiagnostics,
    EigenSystem, FilterBank, PhaseVector,
};
use crate::forecast::{fit_ar, ArModel};
use crate::grid::{FrequencyGrid, TimeGrid};
use crate::par;
use crate::scores::{exact_posterior, map_estimate, DesignStack, ScoreSet, WhittleSpectrum};
use crate::smoothing::{
    collect_cov_products, estimate_mean_with, estimate_noise_variance, estimate_spectral_density_with,
    select_bandwidths, KernelSpec, SpectralDensity, SpectralDiagnostics,
};

/// Surface bandwidth relative to the mean bandwidth when only one is given.
pub const SURFACE_FACTOR: f64 = 1.5;
/// Fallback noise variance as a share of the pooled variance.
const NOISE_FALLBACK_SHARE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseSource {
    Known,
    Estimated,
    /// No curve had two observations; a small share of the pooled variance.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseInfo {
    pub sigma2: f64,
    pub source: NoiseSource,
    pub clamped: bool,
}

impl NoiseInfo {
    pub fn unreliable(&self) -> bool {
        self.source == NoiseSource::Fallback || self.clamped
    }
}

/// Everything up to and including the spectral density estimate.
#[derive(Debug, Clone)]
pub struct Preliminary {
    pub grid: TimeGrid,
    pub freqs: FrequencyGrid,
    pub bandwidth_mu: f64,
    pub bandwidth_f: f64,
    pub lag_window: usize,
    pub mean: Vec<f64>,
    pub mean_widened: usize,
    pub noise: NoiseInfo,
    pub density: SpectralDensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub bandwidth_mu: f64,
    pub bandwidth_f: f64,
    pub lag_window: usize,
    pub mean_widened: usize,
    pub noise: NoiseInfo,
    pub spectral: SpectralDiagnostics,
    pub eigen: EigenDiagnostics,
    pub fve_profile: Vec<f64>,
    /// `None` when the phase was not optimised.
    pub phase_objectives: Vec<Option<f64>>,
    pub phase_traces: Vec<Vec<f64>>,
    pub phase_converged: Vec<bool>,
    pub sup_norms: Vec<f64>,
    pub raw_sup_norms: Vec<f64>,
    pub truncation_lags: Vec<usize>,
    pub score_solver: ScoreSolver,
    pub map_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub config: ModelConfig,
    pub grid: TimeGrid,
    pub mean: Vec<f64>,
    pub sigma2: f64,
    pub bank: FilterBank,
    pub spectra: Vec<WhittleSpectrum>,
    pub scores: ScoreSet,
    pub diagnostics: FitDiagnostics,
}

impl FittedModel {
    pub fn components(&self) -> usize {
        self.bank.len()
    }

    /// AR predictors for each score series.
    pub fn ar_models(&self) -> Result<Vec<ArModel>> {
        self.scores.components.iter().map(|c| fit_ar(&c.mean, self.config.ar_max_order)).collect()
    }
}

fn pooled_variance(data: &FtsDataset, grid: &TimeGrid, mean: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut n = 0usize;
    for c in data.curves() {
        for (&t, y) in c.times().iter().zip(c.values()) {
            acc += (y - grid.interpolate(mean, t)).powi(2);
            n += 1;
        }
    }
    acc / n.max(1) as f64
}

pub fn estimate_preliminary(data: &FtsDataset, cfg: &ModelConfig) -> Result<Preliminary> {
    cfg.validate()?;
    let par = cfg.parallelism;
    let grid = TimeGrid::uniform(cfg.grid_size)?;
    let freqs = FrequencyGrid::new(cfg.freq_half)?;
    let (bandwidth_mu, bandwidth_f) = match (cfg.bandwidth_mu, cfg.bandwidth_f) {
        (Some(m), Some(f)) => (m, f),
        (Some(m), None) => (m, SURFACE_FACTOR * m),
        (None, f) => {
            let choice = select_bandwidths(data, &grid, par)?;
            (choice.mean, f.unwrap_or(choice.surface))
        }
    };
    let mean = estimate_mean_with(data, &KernelSpec::epanechnikov(bandwidth_mu)?, &grid, par)?;
    let lag_window = cfg.lag_window_for(data.len());
    let spec_f = KernelSpec::epanechnikov(bandwidth_f)?;
    let products = collect_cov_products(data, &mean.values, &grid, lag_window)?;
    let density = estimate_spectral_density_with(&products, &spec_f, &grid, &freqs, lag_window, par)?;
    let noise = match cfg.noise_variance.or(data.noise_variance()) {
        Some(s) => NoiseInfo { sigma2: s, source: NoiseSource::Known, clamped: false },
        None => match estimate_noise_variance(data, &mean.values, &spec_f, &grid) {
            Ok(e) => NoiseInfo { sigma2: e.sigma2, source: NoiseSource::Estimated, clamped: e.clamped },
            Err(PadaError::Data(msg)) => {
                log::warn!("noise variance unreliable: {msg}");
                let v = (NOISE_FALLBACK_SHARE * pooled_variance(data, &grid, &mean.values)).max(1e-8);
                NoiseInfo { sigma2: v, source: NoiseSource::Fallback, clamped: false }
            }
            Err(e) => return Err(e),
        },
    };
    Ok(Preliminary {
        grid,
        freqs,
        bandwidth_mu,
        bandwidth_f,
        lag_window,
        mean_widened: mean.widened.len(),
        mean: mean.values,
        noise,
        density,
    })
}

/// Eigensystem truncated to the selected number of components and aligned.
pub fn select_components(pre: &Preliminary, cfg: &ModelConfig) -> Result<(EigenSystem, Vec<f64>)> {
    let kmax = cfg.components.unwrap_or(cfg.max_components).max(1).min(pre.grid.len());
    let es = eigendecompose_with(&pre.density, kmax, cfg.parallelism)?;
    let profile = es.fve_profile();
    let k = cfg.components.unwrap_or_else(|| es.select_by_fve(cfg.fve)).min(es.components());
    Ok((align_phases(&es.truncate(k)), profile))
}

pub struct PhaseFits {
    pub phases: Vec<PhaseVector>,
    pub objectives: Vec<Option<f64>>,
    pub traces: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
}

/// Optimised phases, or `nu = 1` when `cfg.optimize_phase` is off.
pub fn fit_phases(es: &EigenSystem, cfg: &ModelConfig) -> Result<PhaseFits> {
    let k = es.components();
    let n = es.freqs().len();
    if !cfg.optimize_phase {
        return Ok(PhaseFits {
            phases: vec![PhaseVector::ones(n); k],
            objectives: vec![None; k],
            traces: vec![Vec::new(); k],
            converged: vec![true; k],
        });
    }
    let results = par::try_map_indexed(cfg.parallelism, k, |c| {
        let psi = build_psi_kernel(es, c)?;
        optimize_phase_seeded(&psi, es.freqs(), cfg, cfg.seed.wrapping_add(c as u64))
    })?;
    Ok(PhaseFits {
        objectives: results.iter().map(|r| Some(r.objective)).collect(),
        traces: results.iter().map(|r| r.trace.clone()).collect(),
        converged: results.iter().map(|r| r.converged).collect(),
        phases: results.into_iter().map(|r| r.phase).collect(),
    })
}

pub fn whittle_spectra(bank: &FilterBank, curves: usize) -> Result<Vec<WhittleSpectrum>> {
    bank.components()
        .iter()
        .map(|c| WhittleSpectrum::from_eigenvalues(bank.freqs(), &c.eigenvalues, curves, c.lag))
        .collect()
}

/// Score posterior for `data` with everything else held fixed. Returns the
/// scores and, for the MAP path, the iteration count.
pub fn fit_scores(
    data: &FtsDataset,
    mean: &[f64],
    bank: &FilterBank,
    sigma2: f64,
    cfg: &ModelConfig,
) -> Result<(Vec<WhittleSpectrum>, ScoreSet, Option<usize>)> {
    let spectra = whittle_spectra(bank, data.len())?;
    let stack = DesignStack::new(data, mean, bank.grid(), bank)?;
    let map = |stack: &DesignStack| -> Result<(ScoreSet, Option<usize>)> {
        let m = map_estimate(stack, sigma2, &spectra, cfg)?;
        if !m.converged {
            log::warn!("MAP ascent stopped after {} iterations without converging", m.iterations);
        }
        Ok((m.scores, Some(m.iterations)))
    };
    let (scores, iters) = match cfg.score_solver {
        ScoreSolver::Exact => match exact_posterior(&stack, sigma2, &spectra, cfg.parallelism) {
            Ok(s) => (s, None),
            Err(PadaError::DimensionGuard { dim, guard }) => {
                log::warn!("score dimension {dim} exceeds {guard}; using the MAP estimate without covariance");
                map(&stack)?
            }
            Err(e) => return Err(e),
        },
        ScoreSolver::Map => map(&stack)?,
    };
    Ok((spectra, scores, iters))
}

/// Filters and scores from a preliminary estimate.
pub fn fit_from(pre: &Preliminary, data: &FtsDataset, cfg: &ModelConfig) -> Result<FittedModel> {
    let (es, fve_profile) = select_components(pre, cfg)?;
    let ph = fit_phases(&es, cfg)?;
    let bank = build_filters(&es, &ph.phases, cfg)?;
    let sigma2 = pre.noise.sigma2;
    let (spectra, scores, map_iterations) = fit_scores(data, &pre.mean, &bank, sigma2, cfg)?;
    let diagnostics = FitDiagnostics {
        bandwidth_mu: pre.bandwidth_mu,
        bandwidth_f: pre.bandwidth_f,
        lag_window: pre.lag_window,
        mean_widened: pre.mean_widened,
        noise: pre.noise.clone(),
        spectral: pre.density.diagnostics.clone(),
        eigen: es.diagnostics.clone(),
        fve_profile,
        phase_objectives: ph.objectives,
        phase_traces: ph.traces,
        phase_converged: ph.converged,
        sup_norms: bank.components().iter().map(|c| c.sup_norm).collect(),
        raw_sup_norms: bank.components().iter().map(|c| c.raw_sup_norm).collect(),
        truncation_lags: bank.lags(),
        score_solver: cfg.score_solver,
        map_iterations,
    };
    Ok(FittedModel {
        config: cfg.clone(),
        grid: pre.grid.clone(),
        mean: pre.mean.clone(),
        sigma2,
        bank,
        spectra,
        scores,
        diagnostics,
    })
}

pub fn fit(data: &FtsDataset, cfg: &ModelConfig) -> Result<FittedModel> {
    let pre = estimate_preliminary(data, cfg)?;
    fit_from(&pre, data, cfg)
}

/// The same pipeline with `nu = 1` after continuity alignment.
pub fn fit_nonoptimal(data: &FtsDataset, cfg: &ModelConfig) -> Result<FittedModel> {
    fit(data, &ModelConfig { optimize_phase: false, ..cfg.clone() })
}
