//! Per-frequency eigensystems of the spectral density kernel and their
//! phase alignment across frequency.
//!
//! With the kernel written as `sum_k eta_k conj(psi_k(t)) psi_k(s)`, the
//! operator eigenvector is `conj(psi_k)`. Eigenvectors of the quadrature
//! weighted matrix `W^(1/2) F W^(1/2)` are therefore mapped back by
//! `psi = conj(u) / sqrt(w)`, which also gives unit L2 norm.

use serde::{Deserialize, Serialize};

use crate::error::{dim_check, PadaError, Result};
use crate::grid::{inner_unchecked, FrequencyGrid, TimeGrid, C64};
use crate::linalg::{hermitian_eigen, hermitize, CMatrix};
use crate::par::{self, Parallelism};
use crate::smoothing::SpectralDensity;

/// Eigenvalue gaps below this are reported as unstable.
pub const GAP_TOL: f64 = 1e-10;
/// Consecutive inner products below this keep the previous phase.
pub const ALIGN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EigenDiagnostics {
    /// `(component, frequency index)` with an eigenvalue gap below `GAP_TOL`.
    pub small_gaps: Vec<(usize, usize)>,
    /// `(component, frequency index)` where alignment kept the previous phase.
    pub alignment_flags: Vec<(usize, usize)>,
}

/// Top eigenpairs per frequency. `values[k][w]` and `functions[k][w][t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem {
    grid: TimeGrid,
    freqs: FrequencyGrid,
    values: Vec<Vec<f64>>,
    functions: Vec<Vec<Vec<C64>>>,
    pub diagnostics: EigenDiagnostics,
}

impl EigenSystem {
    /// Builds from the non-negative half `z..` of the frequency grid for
    /// every component; the negative half is filled by conjugation.
    pub fn from_parts(
        grid: TimeGrid,
        freqs: FrequencyGrid,
        values: Vec<Vec<f64>>,
        functions: Vec<Vec<Vec<C64>>>,
    ) -> Result<Self> {
        dim_check(values.len(), functions.len(), "eigenvalues vs eigenfunctions")?;
        for (v, f) in values.iter().zip(&functions) {
            dim_check(v.len(), freqs.len(), "eigenvalues vs frequency grid")?;
            dim_check(f.len(), freqs.len(), "eigenfunctions vs frequency grid")?;
            for psi in f {
                dim_check(psi.len(), grid.len(), "eigenfunction vs time grid")?;
            }
        }
        let mut es = Self { grid, freqs, values, functions, diagnostics: EigenDiagnostics::default() };
        es.reflect();
        Ok(es)
    }

    fn reflect(&mut self) {
        let z = self.freqs.zero_index();
        for k in 0..self.values.len() {
            for i in z + 1..self.freqs.len() {
                let m = self.freqs.mirror(i);
                self.values[k][m] = self.values[k][i];
                self.functions[k][m] = self.functions[k][i].iter().map(|v| v.conj()).collect();
            }
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn freqs(&self) -> &FrequencyGrid {
        &self.freqs
    }

    pub fn components(&self) -> usize {
        self.values.len()
    }

    /// `eta_k` over the frequency grid (0-based `k`).
    pub fn eigenvalues(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn eigenfunction(&self, k: usize, idx: usize) -> &[C64] {
        &self.functions[k][idx]
    }

    pub fn eigenfunctions(&self, k: usize) -> &[Vec<C64>] {
        &self.functions[k]
    }

    /// `integral eta_k(omega) d omega` by the trapezoid rule.
    pub fn integrated_eigenvalue(&self, k: usize) -> f64 {
        self.values[k].iter().zip(self.freqs.weights()).map(|(v, w)| v * w).sum()
    }

    /// Cumulative share of the integrated eigenvalues of all stored components.
    pub fn fve_profile(&self) -> Vec<f64> {
        let parts: Vec<f64> = (0..self.components()).map(|k| self.integrated_eigenvalue(k)).collect();
        let total: f64 = parts.iter().sum();
        let mut acc = 0.0;
        parts
            .iter()
            .map(|p| {
                acc += p;
                if total > 0.0 {
                    acc / total
                } else {
                    1.0
                }
            })
            .collect()
    }

    /// Smallest `K` whose cumulative share reaches `target`.
    pub fn select_by_fve(&self, target: f64) -> usize {
        self.fve_profile().iter().position(|&v| v >= target - 1e-12).map_or(self.components(), |i| i + 1)
    }

    pub fn truncate(mut self, k: usize) -> Self {
        self.values.truncate(k);
        self.functions.truncate(k);
        self.diagnostics.small_gaps.retain(|g| g.0 < k);
        self.diagnostics.alignment_flags.retain(|g| g.0 < k);
        self
    }

    /// Multiplies `psi_k(. | omega)` by `phase[omega]` for every component.
    pub fn rotated(&self, k: usize, phase: &[C64]) -> Vec<Vec<C64>> {
        self.functions[k]
            .iter()
            .zip(phase)
            .map(|(psi, p)| psi.iter().map(|v| v * p).collect())
            .collect()
    }
}

pub fn eigendecompose(sd: &SpectralDensity, k: usize) -> Result<EigenSystem> {
    eigendecompose_with(sd, k, Parallelism::default())
}

pub fn eigendecompose_with(sd: &SpectralDensity, k: usize, par: Parallelism) -> Result<EigenSystem> {
    let grid = sd.grid().clone();
    let freqs = sd.freqs().clone();
    let g = grid.len();
    if k < 1 || k > g {
        return Err(PadaError::Parameter(format!("component count {k} must lie in 1..={g}")));
    }
    let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let z = freqs.zero_index();
    let n = freqs.len();
    let per_freq = par::map_indexed(par, n - z, |i| {
        let m = sd.slice(z + i);
        let b = hermitize(&CMatrix::from_fn(g, g, |r, c| m[(r, c)] * (sw[r] * sw[c])));
        let e = hermitian_eigen(&b);
        let vals: Vec<f64> = e.values.iter().take(k + 1).map(|v| v.max(0.0)).collect();
        let vecs: Vec<Vec<C64>> = (0..k)
            .map(|c| (0..g).map(|r| e.vectors[(r, c)].conj() / sw[r]).collect())
            .collect();
        (vals, vecs)
    });
    let mut values = vec![vec![0.0; n]; k];
    let mut functions = vec![vec![vec![C64::new(0.0, 0.0); g]; n]; k];
    let mut small_gaps = Vec::new();
    for (i, (vals, vecs)) in per_freq.into_iter().enumerate() {
        for c in 0..k {
            values[c][z + i] = vals[c];
            if c + 1 < vals.len() && (vals[c] - vals[c + 1]).abs() < GAP_TOL {
                small_gaps.push((c, z + i));
            }
        }
        for (c, v) in vecs.into_iter().enumerate() {
            functions[c][z + i] = v;
        }
    }
    let mut es = EigenSystem::from_parts(grid, freqs, values, functions)?;
    // flags on the mirrored half
    let mirrored: Vec<(usize, usize)> =
        small_gaps.iter().filter(|g| g.1 > z).map(|&(c, i)| (c, es.freqs.mirror(i))).collect();
    small_gaps.extend(mirrored);
    small_gaps.sort_unstable();
    if !small_gaps.is_empty() {
        log::warn!("{} eigenvalue gaps below {GAP_TOL:e}; alignment may be unstable", small_gaps.len());
    }
    es.diagnostics.small_gaps = small_gaps;
    Ok(es)
}

/// Continuity alignment: the zero-frequency eigenfunction is rotated so its
/// largest-magnitude entry is real positive, then each next frequency is
/// rotated so its inner product with the previous one is real positive.
pub fn align_phases(es: &EigenSystem) -> EigenSystem {
    let mut out = es.clone();
    let w = es.grid.weights().to_vec();
    let z = es.freqs.zero_index();
    let n = es.freqs.len();
    let mut flags = Vec::new();
    for k in 0..es.components() {
        let f = &mut out.functions[k];
        let lead = f[z]
            .iter()
            .copied()
            .fold(C64::new(0.0, 0.0), |best, v| if v.norm() > best.norm() { v } else { best });
        if lead.norm() > 0.0 {
            let rot = lead.conj() / lead.norm();
            f[z].iter_mut().for_each(|v| *v *= rot);
        }
        // the zero-frequency function of a real kernel is real up to rounding
        f[z].iter_mut().for_each(|v| v.im = 0.0);
        for i in z + 1..n {
            let ip = inner_unchecked(&w, &f[i - 1], &f[i]);
            if ip.norm() < ALIGN_TOL {
                flags.push((k, i));
                continue;
            }
            let rot = ip.conj() / ip.norm();
            f[i].iter_mut().for_each(|v| *v *= rot);
        }
    }
    out.reflect();
    if !flags.is_empty() {
        log::warn!("phase alignment kept the previous phase at {} frequencies", flags.len());
    }
    out.diagnostics.alignment_flags = flags;
    out
}
