//! Evaluation grids on the time domain `[0, 1]` and the frequency domain
//! `[-pi, pi]`, with trapezoid quadrature.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{dim_check, PadaError, Result};

pub type C64 = Complex<f64>;

/// Strictly increasing points in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(PadaError::Parameter("time grid needs at least 2 points".into()));
        }
        if points.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(PadaError::Parameter("time grid points must lie in [0, 1]".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PadaError::Parameter("time grid must be strictly increasing".into()));
        }
        let weights = trapezoid_weights(&points);
        Ok(Self { points, weights })
    }

    /// `size` equally spaced points covering `[0, 1]`.
    pub fn uniform(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(PadaError::Parameter("time grid needs at least 2 points".into()));
        }
        let h = 1.0 / (size - 1) as f64;
        Self::new((0..size).map(|i| (i as f64 * h).min(1.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mean spacing between neighbouring points.
    pub fn spacing(&self) -> f64 {
        (self.points[self.len() - 1] - self.points[0]) / (self.len() - 1) as f64
    }

    /// Linear interpolation of grid values at an arbitrary time; constant
    /// extrapolation outside the grid.
    pub fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        let p = &self.points;
        if t <= p[0] {
            return values[0];
        }
        let last = p.len() - 1;
        if t >= p[last] {
            return values[last];
        }
        let i = p.partition_point(|&x| x <= t) - 1;
        let u = (t - p[i]) / (p[i + 1] - p[i]);
        values[i] * (1.0 - u) + values[i + 1] * u
    }
}

fn trapezoid_weights(points: &[f64]) -> Vec<f64> {
    let n = points.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = points[i + 1] - points[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// Frequencies `omega_i = i * pi / s` for `i = -s..=s`.
///
/// Stored index `i + s`; index `s` is frequency zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    half: usize,
}

impl FrequencyGrid {
    pub fn new(half: usize) -> Result<Self> {
        if half < 1 {
            return Err(PadaError::Parameter("frequency grid needs s >= 1".into()));
        }
        Ok(Self { half })
    }

    /// `s`, the number of positive frequencies.
    pub fn half(&self) -> usize {
        self.half
    }

    /// `2s + 1`.
    pub fn len(&self) -> usize {
        2 * self.half + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        PI / self.half as f64
    }

    /// Frequency at stored index `idx`; exactly antisymmetric about the centre.
    pub fn omega(&self, idx: usize) -> f64 {
        let i = idx as i64 - self.half as i64;
        let mag = (i.unsigned_abs() as f64) * PI / self.half as f64;
        if i < 0 {
            -mag
        } else {
            mag
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.omega(i)).collect()
    }

    /// Index of `-omega` for the frequency at `idx`.
    pub fn mirror(&self, idx: usize) -> usize {
        2 * self.half - idx
    }

    pub fn zero_index(&self) -> usize {
        self.half
    }

    /// Trapezoid weights over `[-pi, pi]`; they sum to `2 pi`.
    pub fn weights(&self) -> Vec<f64> {
        let d = self.spacing();
        let mut w = vec![d; self.len()];
        w[0] = 0.5 * d;
        w[self.len() - 1] = 0.5 * d;
        w
    }

    /// Linear interpolation of an even function of frequency given on the
    /// non-negative half of the grid. `omega` is first wrapped to `[-pi, pi]`.
    pub fn interpolate_even(&self, values: &[f64], omega: f64) -> f64 {
        let mut w = omega.rem_euclid(2.0 * PI);
        if w > PI {
            w = 2.0 * PI - w;
        }
        let pos = w / self.spacing();
        let i = (pos.floor() as usize).min(self.half - 1);
        let u = pos - i as f64;
        let a = values[self.half + i];
        let b = values[self.half + i + 1];
        a * (1.0 - u) + b * u
    }
}

/// Trapezoid approximation of `integral conj(f) g dt`.
pub fn l2_inner(grid: &TimeGrid, f: &[C64], g: &[C64]) -> Result<C64> {
    dim_check(f.len(), grid.len(), "l2_inner lhs")?;
    dim_check(g.len(), grid.len(), "l2_inner rhs")?;
    Ok(inner_unchecked(grid.weights(), f, g))
}

pub(crate) fn inner_unchecked(w: &[f64], f: &[C64], g: &[C64]) -> C64 {
    f.iter()
        .zip(g)
        .zip(w)
        .fold(C64::new(0.0, 0.0), |acc, ((a, b), &w)| acc + a.conj() * b * w)
}

/// L2 norm of a real function on the grid.
pub fn l2_norm_real(grid: &TimeGrid, f: &[f64]) -> f64 {
    f.iter()
        .zip(grid.weights())
        .map(|(v, w)| v * v * w)
        .sum::<f64>()
        .sqrt()
}

/// L2 inner product of real functions.
pub fn l2_inner_real(grid: &TimeGrid, f: &[f64], g: &[f64]) -> f64 {
    f.iter()
        .zip(g)
        .zip(grid.weights())
        .map(|((a, b), w)| a * b * w)
        .sum()
}
