//! Zero-mean autoregressions fitted by Yule-Walker with AIC order selection.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{PadaError, Result};

pub const MIN_LENGTH: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    /// `a_1 .. a_p`; empty for the white-noise predictor.
    pub coefs: Vec<f64>,
    pub innovation_variance: f64,
    pub aic: f64,
}

impl ArModel {
    pub fn white_noise(variance: f64) -> Self {
        Self { coefs: Vec::new(), innovation_variance: variance, aic: f64::NAN }
    }

    pub fn order(&self) -> usize {
        self.coefs.len()
    }

    /// One-step prediction from a history ending at the most recent value.
    pub fn predict_next(&self, history: &[f64]) -> f64 {
        self.coefs
            .iter()
            .enumerate()
            .map(|(i, a)| history.len().checked_sub(i + 1).map_or(0.0, |idx| a * history[idx]))
            .sum()
    }

    /// Iterated point forecasts for `steps` periods.
    pub fn forecast(&self, history: &[f64], steps: usize) -> Vec<f64> {
        let mut h = history.to_vec();
        for _ in 0..steps {
            let v = self.predict_next(&h);
            h.push(v);
        }
        h.split_off(history.len())
    }

    /// One sample path of the predictive distribution.
    pub fn simulate<R: Rng + ?Sized>(&self, history: &[f64], steps: usize, rng: &mut R) -> Vec<f64> {
        let sd = self.innovation_variance.max(0.0).sqrt();
        let mut h = history.to_vec();
        for _ in 0..steps {
            let e: f64 = StandardNormal.sample(rng);
            let v = self.predict_next(&h) + sd * e;
            h.push(v);
        }
        h.split_off(history.len())
    }

    /// Largest modulus among the companion-matrix eigenvalues.
    pub fn spectral_radius(&self) -> f64 {
        companion_radius(&self.coefs)
    }
}

pub fn companion_radius(coefs: &[f64]) -> f64 {
    let p = coefs.len();
    if p == 0 {
        return 0.0;
    }
    let m = DMatrix::from_fn(p, p, |r, c| if r == 0 { coefs[c] } else if r == c + 1 { 1.0 } else { 0.0 });
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `gamma(h) = (1/n) sum_t x_(t+h) x_t` for `h = 0..=max_lag`.
pub fn autocovariances(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    (0..=max_lag)
        .map(|h| if h >= n { 0.0 } else { (0..n - h).map(|t| x[t + h] * x[t]).sum::<f64>() / n as f64 })
        .collect()
}

/// Levinson-Durbin: coefficients and innovation variance for every order up
/// to `max_order`, stopping early if the variance collapses.
fn levinson(gamma: &[f64], max_order: usize) -> Vec<(Vec<f64>, f64)> {
    let mut out = Vec::with_capacity(max_order);
    let mut a: Vec<f64> = Vec::new();
    let mut v = gamma[0];
    for p in 1..=max_order {
        if !(v > 0.0) {
            break;
        }
        let acc: f64 = gamma[p] - a.iter().enumerate().map(|(i, ai)| ai * gamma[p - 1 - i]).sum::<f64>();
        let k = acc / v;
        let mut next = vec![0.0; p];
        for i in 0..p - 1 {
            next[i] = a[i] - k * a[p - 2 - i];
        }
        next[p - 1] = k;
        a = next;
        v *= 1.0 - k * k;
        out.push((a.clone(), v));
    }
    out
}

pub fn fit_ar(xi: &[f64], max_order: usize) -> Result<ArModel> {
    let n = xi.len();
    if n < MIN_LENGTH {
        return Err(PadaError::Parameter(format!("AR fit needs at least {MIN_LENGTH} values, got {n}")));
    }
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(PadaError::Data("score series contains non-finite values".into()));
    }
    let max_order = max_order.min(n - 1);
    let gamma = autocovariances(xi, max_order);
    if !(gamma[0] > 0.0) {
        return Ok(ArModel { coefs: Vec::new(), innovation_variance: 0.0, aic: f64::NEG_INFINITY });
    }
    let nf = n as f64;
    let mut best = ArModel { coefs: Vec::new(), innovation_variance: gamma[0], aic: nf * gamma[0].ln() };
    for (coefs, v) in levinson(&gamma, max_order) {
        if !(v > 0.0) || companion_radius(&coefs) >= 1.0 {
            continue;
        }
        let aic = nf * v.ln() + 2.0 * coefs.len() as f64;
        if aic < best.aic {
            best = ArModel { coefs, innovation_variance: v, aic };
        }
    }
    Ok(best)
}
