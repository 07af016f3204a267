//! Whittle prior on a score series.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{PadaError, Result};
use crate::grid::FrequencyGrid;

/// Relative floor applied to the spectrum.
pub const SPECTRUM_FLOOR: f64 = 1e-6;

/// `eta_k` at the Fourier frequencies `2 pi j / J`, `j = 1..=J`, for a series
/// of length `J + 2L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhittleSpectrum {
    values: Vec<f64>,
    lag: usize,
}

impl WhittleSpectrum {
    /// Floors `values` at `SPECTRUM_FLOOR * max`.
    pub fn new(values: Vec<f64>, lag: usize) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(PadaError::Parameter("spectrum must be non-empty and finite".into()));
        }
        let max = values.iter().copied().fold(0.0, f64::max);
        if !(max > 0.0) {
            return Err(PadaError::Parameter("spectrum must have a positive value".into()));
        }
        let floor = SPECTRUM_FLOOR * max;
        Ok(Self { values: values.into_iter().map(|v| v.max(floor)).collect(), lag })
    }

    /// Interpolates eigenvalues given on `freqs` (even in frequency).
    pub fn from_eigenvalues(freqs: &FrequencyGrid, eta: &[f64], curves: usize, lag: usize) -> Result<Self> {
        if eta.len() != freqs.len() {
            return Err(PadaError::Dimension(format!("{} eigenvalues vs {} frequencies", eta.len(), freqs.len())));
        }
        let values = fourier_frequencies(curves).iter().map(|&w| freqs.interpolate_even(eta, w)).collect();
        Self::new(values, lag)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn curves(&self) -> usize {
        self.values.len()
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    /// Score vector length `J + 2L`.
    pub fn dim(&self) -> usize {
        self.values.len() + 2 * self.lag
    }

    /// `P[a][b] = (1 / 2 pi n) sum_j cos((a - b) w_j) / eta_j`, so that the
    /// quadratic part of the prior is `-xi' P xi / 2`.
    pub fn precision(&self) -> DMatrix<f64> {
        let n = self.dim();
        let freqs = fourier_frequencies(self.curves());
        let c = 1.0 / (2.0 * PI * n as f64);
        // Toeplitz: one value per difference
        let diag: Vec<f64> = (0..n)
            .map(|d| c * freqs.iter().zip(&self.values).map(|(w, e)| (d as f64 * w).cos() / e).sum::<f64>())
            .collect();
        DMatrix::from_fn(n, n, |a, b| diag[a.abs_diff(b)])
    }

    pub fn log_det_term(&self) -> f64 {
        self.values.iter().map(|v| v.ln()).sum()
    }
}

pub fn fourier_frequencies(curves: usize) -> Vec<f64> {
    (1..=curves).map(|j| 2.0 * PI * j as f64 / curves as f64).collect()
}

/// `-1/2 sum_j [ |xi~(w_j)|^2 / eta_j + log eta_j ]`.
pub fn whittle_log_prior(xi: &[f64], spec: &WhittleSpectrum) -> Result<f64> {
    if xi.len() != spec.dim() {
        return Err(PadaError::Dimension(format!("score length {} vs {}", xi.len(), spec.dim())));
    }
    let n = xi.len() as f64;
    let c = (2.0 * PI * n).powf(-0.5);
    let mut quad = 0.0;
    for (w, eta) in fourier_frequencies(spec.curves()).iter().zip(spec.values()) {
        let (mut re, mut im) = (0.0, 0.0);
        for (a, x) in xi.iter().enumerate() {
            let arg = (a + 1) as f64 * w;
            re += x * arg.cos();
            im += x * arg.sin();
        }
        quad += c * c * (re * re + im * im) / eta;
    }
    Ok(-0.5 * (quad + spec.log_det_term()))
}

/// `-P xi`, the prior part of the gradient.
pub fn prior_gradient(xi: &[f64], precision: &DMatrix<f64>) -> Vec<f64> {
    let v = precision * DVector::from_column_slice(xi);
    v.iter().map(|x| -x).collect()
}
