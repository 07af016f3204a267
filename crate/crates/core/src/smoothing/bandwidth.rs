//! Curve-wise cross-validated bandwidth for the mean smoother.

use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::mean::PooledObservations;
use crate::data::FtsDataset;
use crate::error::{PadaError, Result};
use crate::grid::TimeGrid;
use crate::par::{self, Parallelism};

pub const CV_FOLDS: usize = 5;
pub const CV_CANDIDATES: usize = 8;
/// Ratio of the surface bandwidth to the mean bandwidth.
pub const SURFACE_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthChoice {
    pub mean: f64,
    pub surface: f64,
    /// `(candidate, cv score)` in candidate order.
    pub scores: Vec<(f64, f64)>,
}

/// Geometric candidates over `[lo, hi]` times `spacing * <N>^(-1/5)`.
pub fn candidate_bandwidths(data: &FtsDataset, grid: &TimeGrid, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let base = grid.spacing() * data.mean_observations().powf(-0.2);
    if n == 1 {
        return vec![base * (lo * hi).sqrt()];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| base * lo * (r * i as f64).exp()).collect()
}

/// Mean squared held-out prediction error of the mean smoother, curves
/// assigned to folds by `id % folds`, each curve weighted by `1 / N_j`.
pub fn cv_score(data: &FtsDataset, bandwidth: f64, folds: usize) -> Result<f64> {
    let k = KernelSpec::epanechnikov(bandwidth)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for f in 0..folds {
        let train = PooledObservations::from_curves(data, |id| id % folds != f, |_, y| y);
        if train.is_empty() {
            continue;
        }
        for c in data.curves().iter().filter(|c| c.id() % folds == f) {
            let mut s = 0.0;
            for (&t, &y) in c.times().iter().zip(c.values()) {
                let (m, _) = train.local_linear_widening(&k, t)?;
                s += (y - m).powi(2);
            }
            total += s / c.len() as f64;
            count += 1;
        }
    }
    if count == 0 {
        return Err(PadaError::Data("cross-validation found no held-out curves".into()));
    }
    Ok(total / count as f64)
}

pub fn select_bandwidths(data: &FtsDataset, grid: &TimeGrid, par: Parallelism) -> Result<BandwidthChoice> {
    select_bandwidths_in(data, grid, 0.5, 4.0, par)
}

pub fn select_bandwidths_in(
    data: &FtsDataset,
    grid: &TimeGrid,
    lo: f64,
    hi: f64,
    par: Parallelism,
) -> Result<BandwidthChoice> {
    if !(lo > 0.0 && hi >= lo) {
        return Err(PadaError::Parameter(format!("invalid bandwidth range [{lo}, {hi}]")));
    }
    let cands = candidate_bandwidths(data, grid, lo, hi, CV_CANDIDATES);
    let folds = CV_FOLDS.min(data.len());
    let errs = par::try_map_indexed(par, cands.len(), |i| cv_score(data, cands[i], folds))?;
    let scores: Vec<(f64, f64)> = cands.into_iter().zip(errs).collect();
    // first minimum wins ties
    let best = scores
        .iter()
        .fold(scores[0], |acc, &c| if c.1 < acc.1 { c } else { acc })
        .0;
    Ok(BandwidthChoice { mean: best, surface: SURFACE_FACTOR * best, scores })
}
