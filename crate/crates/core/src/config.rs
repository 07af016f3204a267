use serde::{Deserialize, Serialize};

use crate::error::{PadaError, Result};
use crate::par::Parallelism;

/// How the dynamic scores are computed from the Gaussian posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSolver {
    /// Dense Cholesky solve of the posterior precision.
    #[default]
    Exact,
    /// Gradient ascent on the log-posterior.
    Map,
}

/// Tuning knobs for the full estimation pipeline. `None` fields are chosen
/// from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub grid_size: usize,
    /// `s`; the frequency grid has `2s + 1` points.
    pub freq_half: usize,
    /// Bartlett lag-window span `L`.
    pub lag_window: Option<usize>,
    pub bandwidth_mu: Option<f64>,
    pub bandwidth_f: Option<f64>,
    /// Fixed number of components; overrides `fve`.
    pub components: Option<usize>,
    pub fve: f64,
    pub max_components: usize,
    /// Energy tolerance `epsilon_L` for filter truncation.
    pub epsilon_l: f64,
    /// Hard cap on the truncation lag; defaults to `s / 2`.
    pub truncation_cap: Option<usize>,
    pub ar_max_order: usize,
    pub seed: u64,
    pub phase_max_iter: usize,
    pub phase_tol: f64,
    pub phase_restarts: usize,
    /// `false` keeps the continuity-aligned phase (non-optimal filters).
    pub optimize_phase: bool,
    pub map_max_iter: usize,
    pub map_tol: f64,
    pub score_solver: ScoreSolver,
    /// Known noise variance; estimated when absent.
    pub noise_variance: Option<f64>,
    pub parallelism: Parallelism,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            grid_size: 51,
            freq_half: 64,
            lag_window: None,
            bandwidth_mu: None,
            bandwidth_f: None,
            components: None,
            fve: 0.85,
            max_components: 8,
            epsilon_l: 0.2,
            truncation_cap: None,
            ar_max_order: 5,
            seed: 0,
            phase_max_iter: 2000,
            phase_tol: 1e-9,
            phase_restarts: 4,
            optimize_phase: true,
            map_max_iter: 5000,
            map_tol: 1e-8,
            score_solver: ScoreSolver::Exact,
            noise_variance: None,
            parallelism: Parallelism::Parallel,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PadaError::Parameter(m.to_string()));
        if self.grid_size < 2 {
            return bad("grid_size must be at least 2");
        }
        if self.freq_half < 2 {
            return bad("freq_half must be at least 2");
        }
        if let Some(l) = self.lag_window {
            if l < 1 {
                return bad("lag_window must be at least 1");
            }
        }
        for b in [self.bandwidth_mu, self.bandwidth_f].into_iter().flatten() {
            if !(b > 0.0) || !b.is_finite() {
                return bad("bandwidths must be positive");
            }
        }
        if !(self.epsilon_l > 0.0 && self.epsilon_l < 1.0) {
            return bad("epsilon_l must lie in (0, 1)");
        }
        if !(self.fve > 0.0 && self.fve <= 1.0) {
            return bad("fve must lie in (0, 1]");
        }
        if self.max_components < 1 {
            return bad("max_components must be at least 1");
        }
        if self.components == Some(0) {
            return bad("components must be at least 1");
        }
        if let Some(s) = self.noise_variance {
            if !(s > 0.0) {
                return bad("noise_variance must be positive");
            }
        }
        if !(self.phase_tol > 0.0) || !(self.map_tol > 0.0) {
            return bad("optimizer tolerances must be positive");
        }
        Ok(())
    }

    pub fn truncation_cap(&self) -> usize {
        self.truncation_cap.unwrap_or(self.freq_half / 2)
    }

    /// `ceil(J^(1/3))` capped at 20 and kept below `J`.
    pub fn lag_window_for(&self, curves: usize) -> usize {
        self.lag_window
            .unwrap_or_else(|| ((curves as f64).cbrt().ceil() as usize).clamp(1, 20))
            .min(curves.saturating_sub(1))
            .max(1)
    }
}
