//! Gaussian log-posterior of the stacked dynamic scores, its gradient, the
//! MAP by conjugate-direction ascent and the exact posterior.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::DesignStack;
use super::whittle::{whittle_log_prior, WhittleSpectrum};
use crate::config::ModelConfig;
use crate::error::{PadaError, Result};
use crate::linalg::robust_cholesky;
use crate::par::{self, Parallelism};

/// Largest stacked dimension handled by the dense exact solve.
pub const DIMENSION_GUARD: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub lag: usize,
    /// `xi_(1-L) ... xi_(J+L)`.
    pub mean: Vec<f64>,
}

impl ComponentScores {
    /// `xi_i` for the 1-based time index `i`, which may be as low as `1 - L`.
    pub fn at(&self, i: i64) -> f64 {
        self.mean[(i + self.lag as i64 - 1) as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub components: Vec<ComponentScores>,
    /// Joint covariance of the stacked scores, when known.
    pub covariance: Option<DMatrix<f64>>,
}

impl ScoreSet {
    pub fn zeros(curves: usize, lags: &[usize]) -> Self {
        let components = lags.iter().map(|&lag| ComponentScores { lag, mean: vec![0.0; curves + 2 * lag] }).collect();
        Self { components, covariance: None }
    }

    pub fn from_stacked(stack: &DesignStack, xi: &[f64], covariance: Option<DMatrix<f64>>) -> Self {
        let components = stack
            .split(xi)
            .into_iter()
            .zip(stack.lags())
            .map(|(mean, &lag)| ComponentScores { lag, mean })
            .collect();
        Self { components, covariance }
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.components.iter().flat_map(|c| c.mean.iter().copied()).collect()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn lags(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.lag).collect()
    }

    /// Number of curves the scores cover.
    pub fn curves(&self) -> usize {
        self.components.first().map_or(0, |c| c.mean.len() - 2 * c.lag)
    }
}

/// The objective with the Whittle precisions assembled once.
pub struct PosteriorObjective<'a> {
    stack: &'a DesignStack,
    sigma2: f64,
    spectra: &'a [WhittleSpectrum],
    precisions: Vec<DMatrix<f64>>,
    par: Parallelism,
}

impl<'a> PosteriorObjective<'a> {
    pub fn new(stack: &'a DesignStack, sigma2: f64, spectra: &'a [WhittleSpectrum], par: Parallelism) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(PadaError::Parameter(format!("noise variance must be positive, got {sigma2}")));
        }
        if spectra.len() != stack.components() {
            return Err(PadaError::Dimension(format!(
                "{} spectra vs {} components",
                spectra.len(),
                stack.components()
            )));
        }
        for (k, s) in spectra.iter().enumerate() {
            if s.dim() != stack.component_dim(k) {
                return Err(PadaError::Dimension(format!(
                    "component {k}: spectrum implies length {} vs design {}",
                    s.dim(),
                    stack.component_dim(k)
                )));
            }
        }
        let precisions = spectra.iter().map(WhittleSpectrum::precision).collect();
        Ok(Self { stack, sigma2, spectra, precisions, par })
    }

    fn check(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.stack.dim() {
            return Err(PadaError::Dimension(format!("stacked scores {} vs {}", xi.len(), self.stack.dim())));
        }
        Ok(())
    }

    /// `-sum (Y~ - Phi xi)^2 / (2 sigma^2)`.
    pub fn log_likelihood(&self, xi: &[f64]) -> Result<f64> {
        self.check(xi)?;
        let st = self.stack;
        let per_curve = par::map_indexed(self.par, st.curves(), |j| {
            st.residuals(j).iter().enumerate().map(|(z, y)| (y - st.predict(j, z, xi)).powi(2)).sum::<f64>()
        });
        Ok(-per_curve.iter().sum::<f64>() / (2.0 * self.sigma2))
    }

    pub fn value(&self, xi: &[f64]) -> Result<f64> {
        let mut v = self.log_likelihood(xi)?;
        for (k, part) in self.stack.split(xi).iter().enumerate() {
            v += whittle_log_prior(part, &self.spectra[k])?;
        }
        Ok(v)
    }

    pub fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check(xi)?;
        let st = self.stack;
        let contributions = par::map_indexed(self.par, st.curves(), |j| {
            let mut out = Vec::new();
            for (z, y) in st.residuals(j).iter().enumerate() {
                let r = (y - st.predict(j, z, xi)) / self.sigma2;
                out.extend(st.row(j, z).map(|(c, v)| (c, v * r)));
            }
            out
        });
        let mut g = vec![0.0; st.dim()];
        for list in contributions {
            for (c, v) in list {
                g[c] += v;
            }
        }
        for (k, p) in self.precisions.iter().enumerate() {
            let off = st.offset(k);
            let n = st.component_dim(k);
            let x = DVector::from_column_slice(&xi[off..off + n]);
            let px = p * x;
            for i in 0..n {
                g[off + i] -= px[i];
            }
        }
        Ok(g)
    }

    /// Posterior precision `Phi'Phi / sigma^2 + blockdiag(P_k)` and the
    /// right-hand side `Phi'Y~ / sigma^2`.
    pub fn precision_system(&self) -> (DMatrix<f64>, DVector<f64>) {
        let (mut h, mut b) = self.stack.normal_equations();
        h /= self.sigma2;
        b /= self.sigma2;
        for (k, p) in self.precisions.iter().enumerate() {
            let off = self.stack.offset(k);
            let n = p.nrows();
            let mut view = h.view_mut((off, off), (n, n));
            view += p;
        }
        (h, b)
    }
}

pub fn log_posterior(
    xis: &[Vec<f64>],
    stack: &DesignStack,
    sigma2: f64,
    spectra: &[WhittleSpectrum],
) -> Result<f64> {
    let obj = PosteriorObjective::new(stack, sigma2, spectra, Parallelism::default())?;
    obj.value(&stack.stack(xis)?)
}

pub fn posterior_gradient(
    xis: &[Vec<f64>],
    stack: &DesignStack,
    sigma2: f64,
    spectra: &[WhittleSpectrum],
) -> Result<Vec<Vec<f64>>> {
    let obj = PosteriorObjective::new(stack, sigma2, spectra, Parallelism::default())?;
    Ok(stack.split(&obj.gradient(&stack.stack(xis)?)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub scores: ScoreSet,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Ascent from `xi = 0` along conjugate directions with backtracking.
///
/// The objective is a concave quadratic, so the step along `d` starts at the
/// exact maximiser `g.d / d'Hd`, with `Hd` recovered from two gradients.
/// Stops once `||g|| <= map_tol * ||g(0)||`.
pub fn map_estimate(
    stack: &DesignStack,
    sigma2: f64,
    spectra: &[WhittleSpectrum],
    cfg: &ModelConfig,
) -> Result<MapResult> {
    let obj = PosteriorObjective::new(stack, sigma2, spectra, cfg.parallelism)?;
    let n = stack.dim();
    let mut x = vec![0.0; n];
    let b = obj.gradient(&x)?;
    let b_norm = norm(&b);
    let mut q = obj.value(&x)?;
    let mut trace = vec![q];
    let mut g = b.clone();
    let mut d = g.clone();
    let mut converged = b_norm == 0.0;
    let mut iterations = 0;
    while !converged && iterations < cfg.map_max_iter {
        iterations += 1;
        let gd = obj.gradient(&d)?;
        let hd: Vec<f64> = b.iter().zip(&gd).map(|(a, c)| a - c).collect();
        let curv = dot(&d, &hd);
        let slope = dot(&g, &d);
        if !(curv > 0.0) || !(slope > 0.0) {
            // lost conjugacy; restart along the gradient
            if d == g {
                break;
            }
            d = g.clone();
            continue;
        }
        let mut alpha = slope / curv;
        let mut next = None;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&d).map(|(a, c)| a + alpha * c).collect();
            let qc = obj.value(&cand)?;
            if !qc.is_finite() {
                return Err(PadaError::Numerical("log-posterior is not finite".into()));
            }
            if qc >= q {
                next = Some((cand, qc));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, qn)) = next else { break };
        let gn = obj.gradient(&xn)?;
        let beta = (dot(&gn, &gn) - dot(&gn, &g)) / dot(&g, &g).max(f64::MIN_POSITIVE);
        let beta = if iterations % n.max(1) == 0 { 0.0 } else { beta.max(0.0) };
        d = gn.iter().zip(&d).map(|(a, c)| a + beta * c).collect();
        x = xn;
        q = qn;
        g = gn;
        trace.push(q);
        converged = norm(&g) <= cfg.map_tol * b_norm;
    }
    Ok(MapResult { scores: ScoreSet::from_stacked(stack, &x, None), trace, iterations, converged })
}

/// Exact Gaussian posterior: mean and joint covariance of the stacked scores.
pub fn exact_posterior(
    stack: &DesignStack,
    sigma2: f64,
    spectra: &[WhittleSpectrum],
    par: Parallelism,
) -> Result<ScoreSet> {
    let dim = stack.dim();
    if dim > DIMENSION_GUARD {
        return Err(PadaError::DimensionGuard { dim, guard: DIMENSION_GUARD });
    }
    let obj = PosteriorObjective::new(stack, sigma2, spectra, par)?;
    let (h, b) = obj.precision_system();
    let chol = robust_cholesky(h)?;
    let mean = chol.solve(&b);
    let cov = chol.inverse();
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(ScoreSet::from_stacked(stack, mean.as_slice(), Some(cov)))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
