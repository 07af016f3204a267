//! Irregularly sampled noisy curve observations.

use serde::{Deserialize, Serialize};

use crate::error::{PadaError, Result};

/// Discrete noisy observations of one curve, sorted by time on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    id: usize,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SampledCurve {
    pub fn new(id: usize, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(PadaError::Dimension(format!(
                "curve {id}: {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(PadaError::Data(format!("curve {id} has no observations")));
        }
        if times.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(PadaError::Data(format!("curve {id}: observation time outside [0, 1]")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PadaError::Data(format!("curve {id}: non-finite value")));
        }
        let mut idx: Vec<usize> = (0..times.len()).collect();
        idx.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let times = idx.iter().map(|&i| times[i]).collect();
        let values = idx.iter().map(|&i| values[i]).collect();
        Ok(Self { id, times, values })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// A functional time series of `J >= 2` sampled curves, indexed `1..=J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtsDataset {
    curves: Vec<SampledCurve>,
    noise_variance: Option<f64>,
}

impl FtsDataset {
    /// Curves are re-indexed `1..=J` in the given order.
    pub fn new(curves: Vec<SampledCurve>) -> Result<Self> {
        if curves.len() < 2 {
            return Err(PadaError::Data("a functional time series needs at least 2 curves".into()));
        }
        let curves = curves
            .into_iter()
            .enumerate()
            .map(|(j, c)| SampledCurve { id: j + 1, ..c })
            .collect();
        Ok(Self { curves, noise_variance: None })
    }

    pub fn with_noise_variance(mut self, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(PadaError::Parameter("noise variance must be positive".into()));
        }
        self.noise_variance = Some(sigma2);
        Ok(self)
    }

    pub fn noise_variance(&self) -> Option<f64> {
        self.noise_variance
    }

    pub fn curves(&self) -> &[SampledCurve] {
        &self.curves
    }

    /// `J`.
    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Curve `j` in 1-based indexing.
    pub fn curve(&self, j: usize) -> &SampledCurve {
        &self.curves[j - 1]
    }

    pub fn total_observations(&self) -> usize {
        self.curves.iter().map(|c| c.len()).sum()
    }

    pub fn mean_observations(&self) -> f64 {
        self.total_observations() as f64 / self.len() as f64
    }

    /// The first `n` curves; `None` if `n < 2` or `n > J`.
    pub fn prefix(&self, n: usize) -> Option<FtsDataset> {
        if n < 2 || n > self.len() {
            return None;
        }
        Some(FtsDataset { curves: self.curves[..n].to_vec(), noise_variance: self.noise_variance })
    }

    /// Number of distinct observation times across all curves.
    pub fn distinct_times(&self) -> usize {
        let mut t: Vec<f64> = self.curves.iter().flat_map(|c| c.times.iter().copied()).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t.len()
    }
}
