//! Pooled local-linear smoothing of the mean function.

use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use crate::data::FtsDataset;
use crate::error::{PadaError, Result};
use crate::grid::TimeGrid;
use crate::par::{self, Parallelism};

/// Maximum number of bandwidth doublings before giving up at a point.
pub(crate) const MAX_WIDENING: usize = 40;

/// Observations pooled across curves, sorted by time, each carrying the
/// per-curve weight `1 / (J N_j)`.
#[derive(Debug, Clone)]
pub struct PooledObservations {
    times: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl PooledObservations {
    pub fn from_dataset(data: &FtsDataset) -> Self {
        Self::from_curves(data, |_| true, |_, y| y)
    }

    /// Pools the selected curves, transforming each value with `f(t, y)`.
    pub fn from_curves(
        data: &FtsDataset,
        keep: impl Fn(usize) -> bool,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let curves: Vec<_> = data.curves().iter().filter(|c| keep(c.id())).collect();
        let j = curves.len() as f64;
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for c in curves {
            let w = 1.0 / (j * c.len() as f64);
            for (&t, &y) in c.times().iter().zip(c.values()) {
                rows.push((t, f(t, y), w));
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            times: rows.iter().map(|r| r.0).collect(),
            values: rows.iter().map(|r| r.1).collect(),
            weights: rows.iter().map(|r| r.2).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Local-linear intercept at `t`, or `None` if the 2x2 normal equations
    /// are singular at this bandwidth.
    pub fn local_linear(&self, kernel: &KernelSpec, t: f64) -> Option<f64> {
        let lo = self.times.partition_point(|&x| x <= t - kernel.support());
        let hi = self.times.partition_point(|&x| x < t + kernel.support());
        let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in lo..hi {
            let d = self.times[i] - t;
            let w = self.weights[i] * kernel.eval(d);
            if w == 0.0 {
                continue;
            }
            s0 += w;
            s1 += w * d;
            s2 += w * d * d;
            t0 += w * self.values[i];
            t1 += w * d * self.values[i];
        }
        let det = s0 * s2 - s1 * s1;
        if !(s0 > 0.0) || !(det > 1e-10 * s0 * s2) {
            return None;
        }
        Some((s2 * t0 - s1 * t1) / det)
    }

    /// Local-linear fit with the bandwidth doubled until the normal equations
    /// are nonsingular. Returns the value and the bandwidth actually used.
    pub fn local_linear_widening(&self, kernel: &KernelSpec, t: f64) -> Result<(f64, f64)> {
        let mut k = *kernel;
        for _ in 0..MAX_WIDENING {
            if let Some(v) = self.local_linear(&k, t) {
                return Ok((v, k.bandwidth));
            }
            k = k.with_bandwidth(k.bandwidth * 2.0);
        }
        Err(PadaError::Numerical(format!(
            "local linear smoother singular at t = {t} for every bandwidth"
        )))
    }
}

/// Smoothed mean on the grid plus the points where the bandwidth had to be
/// widened, as `(grid index, bandwidth used)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub values: Vec<f64>,
    pub widened: Vec<(usize, f64)>,
}

pub fn estimate_mean(data: &FtsDataset, spec: &KernelSpec, grid: &TimeGrid) -> Result<MeanEstimate> {
    estimate_mean_with(data, spec, grid, Parallelism::default())
}

pub fn estimate_mean_with(
    data: &FtsDataset,
    spec: &KernelSpec,
    grid: &TimeGrid,
    par: Parallelism,
) -> Result<MeanEstimate> {
    if data.distinct_times() < 2 {
        return Err(PadaError::Data("mean smoothing needs at least 2 distinct observation times".into()));
    }
    let pooled = PooledObservations::from_dataset(data);
    smooth_on_grid(&pooled, spec, grid, par)
}

pub(crate) fn smooth_on_grid(
    pooled: &PooledObservations,
    spec: &KernelSpec,
    grid: &TimeGrid,
    par: Parallelism,
) -> Result<MeanEstimate> {
    let fits = par::try_map_indexed(par, grid.len(), |i| pooled.local_linear_widening(spec, grid.points()[i]))?;
    let widened = fits
        .iter()
        .enumerate()
        .filter(|(_, (_, b))| *b != spec.bandwidth)
        .map(|(i, (_, b))| (i, *b))
        .collect();
    Ok(MeanEstimate { values: fits.into_iter().map(|(v, _)| v).collect(), widened })
}
