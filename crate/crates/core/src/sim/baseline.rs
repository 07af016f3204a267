//! Static FPCA with conditional-expectation scores, the classical
//! comparison for the dynamic expansion.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::data::{FtsDataset, SampledCurve};
use crate::error::{PadaError, Result};
use crate::forecast::{fit_var, reconstruct, VarModel};
use crate::grid::TimeGrid;
use crate::linalg::{robust_cholesky, symmetric_eigen};
use crate::par;
use crate::pipeline::{estimate_preliminary, fit_nonoptimal, FittedModel, Preliminary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticFpca {
    pub grid: TimeGrid,
    pub mean: Vec<f64>,
    pub sigma2: f64,
    pub eigenvalues: Vec<f64>,
    /// Eigenfunctions on the grid with unit L2 norm.
    pub functions: Vec<Vec<f64>>,
}

impl StaticFpca {
    /// Eigenfunctions of the lag-0 covariance recovered from the estimated
    /// spectral density. Uses `cfg.components` when set, otherwise FVE.
    pub fn from_preliminary(pre: &Preliminary, cfg: &ModelConfig) -> Result<Self> {
        let c = pre.density.lag0_covariance();
        let g = pre.grid.len();
        let sw: Vec<f64> = pre.grid.weights().iter().map(|w| w.sqrt()).collect();
        let m = DMatrix::from_fn(g, g, |a, b| 0.5 * (c[(a, b)] + c[(b, a)]) * sw[a] * sw[b]);
        let (values, vectors) = symmetric_eigen(&m);
        let kmax = cfg.components.unwrap_or(cfg.max_components).max(1).min(g);
        let positive = values.iter().take(kmax).take_while(|v| **v > 0.0).count();
        if positive == 0 {
            return Err(PadaError::Numerical("lag-0 covariance has no positive eigenvalue".into()));
        }
        let k = match cfg.components {
            Some(k) => k.min(positive),
            None => {
                let total: f64 = values[..positive].iter().sum();
                let mut acc = 0.0;
                values[..positive]
                    .iter()
                    .position(|v| {
                        acc += v;
                        acc / total >= cfg.fve - 1e-12
                    })
                    .map_or(positive, |i| i + 1)
            }
        };
        let functions = (0..k).map(|i| (0..g).map(|a| vectors[(a, i)] / sw[a]).collect()).collect();
        Ok(Self {
            grid: pre.grid.clone(),
            mean: pre.mean.clone(),
            sigma2: pre.noise.sigma2,
            eigenvalues: values[..k].to_vec(),
            functions,
        })
    }

    pub fn components(&self) -> usize {
        self.functions.len()
    }

    /// `E[xi | Y_j]` under the working Gaussian model.
    pub fn curve_scores(&self, curve: &SampledCurve) -> Result<Vec<f64>> {
        let k = self.components();
        let n = curve.len();
        let phi = DMatrix::from_fn(n, k, |z, i| self.grid.interpolate(&self.functions[i], curve.times()[z]));
        let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        let mut sigma = &phi * &lambda * phi.transpose();
        for z in 0..n {
            sigma[(z, z)] += self.sigma2;
        }
        let resid = DVector::from_iterator(
            n,
            curve.times().iter().zip(curve.values()).map(|(&t, y)| y - self.grid.interpolate(&self.mean, t)),
        );
        let solved = robust_cholesky(sigma)?.solve(&resid);
        Ok((lambda * phi.transpose() * solved).iter().copied().collect())
    }

    /// Scores for every curve, `[j][k]`.
    pub fn scores(&self, data: &FtsDataset, cfg: &ModelConfig) -> Result<Vec<Vec<f64>>> {
        par::try_map_indexed(cfg.parallelism, data.len(), |j| self.curve_scores(&data.curves()[j]))
    }

    /// `sum_k phi_k xi_k`, without the mean.
    pub fn signal(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (f, x) in self.functions.iter().zip(scores) {
            for (o, v) in out.iter_mut().zip(f) {
                *o += v * x;
            }
        }
        out
    }

    pub fn curve(&self, scores: &[f64]) -> Vec<f64> {
        self.signal(scores).iter().zip(&self.mean).map(|(s, m)| s + m).collect()
    }

    /// VAR on the score panel `[j][k]`, then the next score vector.
    pub fn forecast_scores(&self, panel: &[Vec<f64>], cfg: &ModelConfig) -> Result<(VarModel, Vec<f64>)> {
        let k = self.components();
        let series: Vec<Vec<f64>> = (0..k).map(|i| panel.iter().map(|s| s[i]).collect()).collect();
        let var = fit_var(&series, cfg.ar_max_order)?;
        let next = var.forecast(panel, 1).pop().expect("one step");
        Ok((var, next))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticFit {
    pub model: StaticFpca,
    pub scores: Vec<Vec<f64>>,
    pub reconstructions: Vec<Vec<f64>>,
}

pub fn static_fpca_baseline(data: &FtsDataset, cfg: &ModelConfig) -> Result<StaticFit> {
    let pre = estimate_preliminary(data, cfg)?;
    static_fpca_from(&pre, data, cfg)
}

pub fn static_fpca_from(pre: &Preliminary, data: &FtsDataset, cfg: &ModelConfig) -> Result<StaticFit> {
    let model = StaticFpca::from_preliminary(pre, cfg)?;
    let scores = model.scores(data, cfg)?;
    let reconstructions = scores.iter().map(|s| model.curve(s)).collect();
    Ok(StaticFit { model, scores, reconstructions })
}

/// The full pipeline with the phase step skipped (`nu = 1` after alignment),
/// scored with the same Bayesian machinery.
#[derive(Debug, Clone, PartialEq)]
pub struct NonoptimalFit {
    pub model: FittedModel,
    pub reconstructions: Vec<Vec<f64>>,
}

pub fn nonoptimal_dfpca_baseline(data: &FtsDataset, cfg: &ModelConfig) -> Result<NonoptimalFit> {
    let model = fit_nonoptimal(data, cfg)?;
    let reconstructions = reconstruct(&model.mean, &model.bank, &model.scores)?;
    Ok(NonoptimalFit { model, reconstructions })
}
