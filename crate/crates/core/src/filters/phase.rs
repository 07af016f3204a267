//! Projected-gradient ascent of the phase objective over conjugate-symmetric
//! unit-modulus vectors.
//!
//! The objective is the trapezoid discretisation of
//! `(1 / 4 pi^2) int int Psi(w1, w2) conj(nu(w1)) nu(w2)`, i.e.
//! `nu^H D Psi D nu / (4 pi^2)` with `D` the frequency quadrature weights.
//! It equals the squared norm of the lag-0 filter built from `nu`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::psi::PsiKernel;
use crate::config::ModelConfig;
use crate::error::{PadaError, Result};
use crate::grid::{FrequencyGrid, C64};
use crate::linalg::CMatrix;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// `nu(omega_-s) ... nu(omega_s)`, unit modulus and conjugate symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector {
    values: Vec<C64>,
}

impl PhaseVector {
    pub fn ones(len: usize) -> Self {
        Self { values: vec![C64::new(1.0, 0.0); len] }
    }

    /// Keeps stored values verbatim after checking feasibility.
    pub fn from_values(values: Vec<C64>) -> Result<Self> {
        let v = Self { values };
        let (modulus, sym) = v.feasibility();
        if v.is_empty() || modulus > 1e-9 || sym > 1e-9 {
            return Err(PadaError::Parameter(format!(
                "phase vector infeasible: modulus error {modulus:.2e}, symmetry error {sym:.2e}"
            )));
        }
        Ok(v)
    }

    /// Projects arbitrary values onto the feasible set.
    pub fn project(raw: &[C64]) -> Self {
        let n = raw.len();
        let unit = |v: C64| if v.norm() > 0.0 { v / v.norm() } else { C64::new(1.0, 0.0) };
        let u: Vec<C64> = raw.iter().map(|&v| unit(v)).collect();
        let values = (0..n).map(|i| unit((u[i] + u[n - 1 - i].conj()) * 0.5)).collect();
        Self { values }
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max_i ||nu_i| - 1|` and `max_i |nu_-i - conj(nu_i)|`.
    pub fn feasibility(&self) -> (f64, f64) {
        let n = self.values.len();
        let modulus = self.values.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max);
        let sym = (0..n).map(|i| (self.values[n - 1 - i] - self.values[i].conj()).norm()).fold(0.0, f64::max);
        (modulus, sym)
    }

    /// `nu(omega) e^{-i h omega}`, the phase of the filters shifted by `h`.
    pub fn shifted(&self, freqs: &FrequencyGrid, h: i64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v * C64::from_polar(1.0, -(h as f64) * freqs.omega(i)))
            .collect();
        Self { values }
    }

    fn random(len: usize, rng: &mut ChaCha8Rng) -> Self {
        let raw: Vec<C64> = (0..len).map(|_| C64::from_polar(1.0, rng.random_range(-PI..PI))).collect();
        Self::project(&raw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    pub phase: PhaseVector,
    /// Normalised objective, an estimate of the squared sup-norm.
    pub objective: f64,
    /// Objective after every accepted step of the winning start.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `D Psi D / (4 pi^2)`.
pub fn weighted_objective_matrix(psi: &PsiKernel, freqs: &FrequencyGrid) -> Result<CMatrix> {
    if psi.len() != freqs.len() {
        return Err(PadaError::Dimension(format!("psi kernel {} vs frequency grid {}", psi.len(), freqs.len())));
    }
    let w = freqs.weights();
    let c = 1.0 / (4.0 * PI * PI);
    let m = psi.matrix();
    Ok(CMatrix::from_fn(m.nrows(), m.ncols(), |l, k| m[(l, k)] * (w[l] * w[k] * c)))
}

pub fn objective(a: &CMatrix, nu: &[C64]) -> f64 {
    let n = nu.len();
    let mut acc = 0.0;
    for (l, vl) in nu.iter().enumerate() {
        let mut row = C64::new(0.0, 0.0);
        for m in 0..n {
            row += a[(l, m)] * nu[m];
        }
        acc += (vl.conj() * row).re;
    }
    acc
}

fn mat_vec(a: &CMatrix, v: &[C64]) -> Vec<C64> {
    let n = v.len();
    (0..n)
        .map(|l| (0..n).fold(C64::new(0.0, 0.0), |acc, m| acc + a[(l, m)] * v[m]))
        .collect()
}

pub fn optimize_phase(psi: &PsiKernel, freqs: &FrequencyGrid, cfg: &ModelConfig) -> Result<PhaseResult> {
    optimize_phase_seeded(psi, freqs, cfg, cfg.seed)
}

/// Runs from `nu = 1` and `cfg.phase_restarts` random feasible starts drawn
/// from `seed`; keeps the best final objective (earliest start on ties).
pub fn optimize_phase_seeded(
    psi: &PsiKernel,
    freqs: &FrequencyGrid,
    cfg: &ModelConfig,
    seed: u64,
) -> Result<PhaseResult> {
    let a = weighted_objective_matrix(psi, freqs)?;
    let n = freqs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = ascend(&a, PhaseVector::ones(n), cfg)?;
    for _ in 0..cfg.phase_restarts {
        let start = PhaseVector::random(n, &mut rng);
        let r = ascend(&a, start, cfg)?;
        if r.objective > best.objective * (1.0 + 1e-12) {
            best = r;
        }
    }
    Ok(best)
}

/// Projected gradient ascent with backtracking from `start`.
pub fn ascend(a: &CMatrix, start: PhaseVector, cfg: &ModelConfig) -> Result<PhaseResult> {
    let mut nu = start;
    let mut q = objective(a, nu.values());
    if !q.is_finite() {
        return Err(PadaError::Numerical("phase objective is not finite".into()));
    }
    let mut trace = vec![q];
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let mut alpha = 1.0 / scale;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.phase_max_iter {
        iterations += 1;
        let grad: Vec<C64> = mat_vec(a, nu.values()).into_iter().map(|v| v * 2.0).collect();
        let mut step = alpha * 4.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let raw: Vec<C64> = nu.values().iter().zip(&grad).map(|(v, g)| v + g * step).collect();
            let cand = PhaseVector::project(&raw);
            let qc = objective(a, cand.values());
            let lin: f64 = grad.iter().zip(cand.values().iter().zip(nu.values())).map(|(g, (c, v))| (g.conj() * (c - v)).re).sum();
            if qc.is_finite() && qc >= q + ARMIJO * lin.max(0.0) && qc >= q {
                accepted = Some((cand, qc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, qc)) = accepted else {
            converged = true;
            break;
        };
        alpha = step;
        let rel = (qc - q).abs() / q.abs().max(1e-300);
        nu = cand;
        q = qc;
        trace.push(q);
        if rel < cfg.phase_tol {
            converged = true;
            break;
        }
    }
    Ok(PhaseResult { phase: nu, objective: q, trace, iterations, converged })
}
