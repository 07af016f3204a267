//! Functional filters from phased eigenfunctions, with truncation and the
//! shift convention that places the largest filter at lag zero.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::eigen::EigenSystem;
use super::phase::PhaseVector;
use crate::config::ModelConfig;
use crate::error::{dim_check, PadaError, Result};
use crate::grid::{l2_norm_real, FrequencyGrid, TimeGrid, C64};

pub const IMAG_TOL: f64 = 1e-6;

/// Filters `phi_l` for `|l| <= lag` of one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentFilters {
    pub lag: usize,
    /// `filters[l + lag]` on the time grid.
    pub filters: Vec<Vec<f64>>,
    pub phase: PhaseVector,
    /// `eta_k` on the frequency grid.
    pub eigenvalues: Vec<f64>,
    /// `max_l ||phi_l||` after renormalisation.
    pub sup_norm: f64,
    /// `max_l ||phi_l||` before renormalisation.
    pub raw_sup_norm: f64,
    /// Energy of the retained window before renormalisation.
    pub retained_energy: f64,
    /// Largest imaginary part seen before it was discarded.
    pub imag_residue: f64,
}

impl ComponentFilters {
    pub fn filter(&self, l: i64) -> Option<&[f64]> {
        let i = l + self.lag as i64;
        if i < 0 || i as usize >= self.filters.len() {
            None
        } else {
            Some(&self.filters[i as usize])
        }
    }

    pub fn norms(&self, grid: &TimeGrid) -> Vec<f64> {
        self.filters.iter().map(|f| l2_norm_real(grid, f)).collect()
    }

    /// `sqrt(sum_l ||phi_l||^2)`.
    pub fn l2_norm(&self, grid: &TimeGrid) -> f64 {
        self.norms(grid).iter().map(|n| n * n).sum::<f64>().sqrt()
    }

    pub fn max_norm(&self, grid: &TimeGrid) -> f64 {
        self.norms(grid).into_iter().fold(0.0, f64::max)
    }

    /// `phi_l(t)` for `|l| <= lag` at an arbitrary time, by linear
    /// interpolation on the grid.
    pub fn eval(&self, grid: &TimeGrid, l: i64, t: f64) -> f64 {
        self.filter(l).map_or(0.0, |f| grid.interpolate(f, t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    grid: TimeGrid,
    freqs: FrequencyGrid,
    components: Vec<ComponentFilters>,
}

impl FilterBank {
    pub fn new(grid: TimeGrid, freqs: FrequencyGrid, components: Vec<ComponentFilters>) -> Result<Self> {
        for c in &components {
            dim_check(c.filters.len(), 2 * c.lag + 1, "filter window")?;
            dim_check(c.phase.len(), freqs.len(), "phase vs frequency grid")?;
            dim_check(c.eigenvalues.len(), freqs.len(), "eigenvalues vs frequency grid")?;
            for f in &c.filters {
                dim_check(f.len(), grid.len(), "filter vs time grid")?;
            }
        }
        Ok(Self { grid, freqs, components })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn freqs(&self) -> &FrequencyGrid {
        &self.freqs
    }

    pub fn components(&self) -> &[ComponentFilters] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &ComponentFilters {
        &self.components[k]
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
}

/// Re-indexes component `k` by `l -> l - h`, i.e. `phi'_m = phi_(m + h)`,
/// zero-padding to a symmetric window and trimming all-zero end pairs.
/// The phase becomes `nu(omega) e^{-i h omega}`.
pub fn shift_filter(bank: &FilterBank, k: usize, h: i64) -> Result<FilterBank> {
    if k >= bank.len() {
        return Err(PadaError::Parameter(format!("component {k} out of range")));
    }
    if h == 0 {
        return Ok(bank.clone());
    }
    let c = &bank.components[k];
    let g = bank.grid.len();
    let wide = c.lag + h.unsigned_abs() as usize;
    let mut filters: Vec<Vec<f64>> = (-(wide as i64)..=wide as i64)
        .map(|m| c.filter(m + h).map_or_else(|| vec![0.0; g], |f| f.to_vec()))
        .collect();
    let mut lag = wide;
    while lag > 0 && is_zero(&filters[0]) && is_zero(&filters[filters.len() - 1]) {
        filters.remove(0);
        filters.pop();
        lag -= 1;
    }
    let mut out = bank.clone();
    out.components[k] = ComponentFilters { lag, filters, phase: c.phase.shifted(&bank.freqs, h), ..c.clone() };
    Ok(out)
}

fn is_zero(f: &[f64]) -> bool {
    f.iter().all(|&v| v == 0.0)
}

/// Complex `phi_l` for `l` in `(-s, s]` (index `l + s - 1`), the full period
/// of the trapezoid transform.
pub fn raw_filters(es: &EigenSystem, k: usize, phase: &PhaseVector) -> Result<Vec<Vec<C64>>> {
    let freqs = es.freqs();
    dim_check(phase.len(), freqs.len(), "phase vs frequency grid")?;
    let w = freqs.weights();
    let g = es.grid().len();
    let n = freqs.len();
    let weighted: Vec<Vec<C64>> = (0..n)
        .map(|m| {
            let c = phase.values()[m] * (w[m] / (2.0 * PI));
            es.eigenfunction(k, m).iter().map(|v| v * c).collect()
        })
        .collect();
    let s = freqs.half() as i64;
    Ok((-s + 1..=s)
        .map(|l| {
            let mut out = vec![C64::new(0.0, 0.0); g];
            for (m, row) in weighted.iter().enumerate() {
                let e = C64::from_polar(1.0, -(l as f64) * freqs.omega(m));
                for (o, v) in out.iter_mut().zip(row) {
                    *o += v * e;
                }
            }
            out
        })
        .collect())
}

/// One component: transform, shift the largest lag to zero (smallest `l` on
/// ties), grow the window until the energy threshold is met, renormalise.
pub fn build_component(
    es: &EigenSystem,
    k: usize,
    phase: &PhaseVector,
    epsilon: f64,
    cap: usize,
) -> Result<ComponentFilters> {
    let raw = raw_filters(es, k, phase)?;
    let grid = es.grid();
    let imag_residue = raw.iter().flat_map(|f| f.iter().map(|v| v.im.abs())).fold(0.0, f64::max);
    if imag_residue >= IMAG_TOL {
        return Err(PadaError::ImaginaryResidue { component: k, residue: imag_residue });
    }
    let real: Vec<Vec<f64>> = raw.iter().map(|f| f.iter().map(|v| v.re).collect()).collect();
    let norms2: Vec<f64> = real.iter().map(|f| l2_norm_real(grid, f).powi(2)).collect();
    let period = real.len() as i64;
    let s = es.freqs().half() as i64;
    let mut best = 0usize;
    for (i, &v) in norms2.iter().enumerate() {
        if v > norms2[best] {
            best = i;
        }
    }
    let h = best as i64 - (s - 1);
    let idx = |m: i64| ((m + h + s - 1).rem_euclid(period)) as usize;
    let mut lag = 0usize;
    let mut energy = norms2[idx(0)];
    while energy < 1.0 - epsilon {
        lag += 1;
        if lag > cap || lag as i64 >= s {
            return Err(PadaError::TruncationCap { component: k, cap });
        }
        energy += norms2[idx(lag as i64)] + norms2[idx(-(lag as i64))];
    }
    let scale = 1.0 / energy.sqrt();
    let filters: Vec<Vec<f64>> = (-(lag as i64)..=lag as i64)
        .map(|m| real[idx(m)].iter().map(|v| v * scale).collect())
        .collect();
    let raw_sup = norms2[idx(0)].sqrt();
    Ok(ComponentFilters {
        lag,
        filters,
        phase: phase.shifted(es.freqs(), h),
        eigenvalues: es.eigenvalues(k).to_vec(),
        sup_norm: raw_sup * scale,
        raw_sup_norm: raw_sup,
        retained_energy: energy,
        imag_residue,
    })
}

pub fn build_filters(es: &EigenSystem, phases: &[PhaseVector], cfg: &ModelConfig) -> Result<FilterBank> {
    dim_check(phases.len(), es.components(), "phases vs components")?;
    let cap = cfg.truncation_cap();
    let components = phases
        .iter()
        .enumerate()
        .map(|(k, p)| build_component(es, k, p, cfg.epsilon_l, cap))
        .collect::<Result<Vec<_>>>()?;
    FilterBank::new(es.grid().clone(), es.freqs().clone(), components)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fourier(t: f64, k: usize) -> f64 {
        match k {
            0 => 1.0,
            k if k % 2 == 1 => 2f64.sqrt() * (2.0 * PI * k.div_ceil(2) as f64 * t).cos(),
            k => 2f64.sqrt() * (2.0 * PI * (k / 2) as f64 * t).sin(),
        }
    }

    fn separable() -> EigenSystem {
        let grid = TimeGrid::uniform(51).unwrap();
        let freqs = FrequencyGrid::new(16).unwrap();
        let p = grid.points().to_vec();
        let n = freqs.len();
        let f = (0..2)
            .map(|k| (0..n).map(|_| p.iter().map(|&t| C64::new(fourier(t, k + 1), 0.0)).collect()).collect())
            .collect();
        EigenSystem::from_parts(grid, freqs, vec![vec![2.0; n], vec![1.0; n]], f).unwrap()
    }

    /// `psi(t | w) = sum_l w_l b_l(t) e^{i l w}` with `l in {-1, 0, 1}`.
    fn dynamic(weights: [f64; 3]) -> EigenSystem {
        let grid = TimeGrid::uniform(51).unwrap();
        let freqs = FrequencyGrid::new(16).unwrap();
        let p = grid.points().to_vec();
        let n = freqs.len();
        let f = (0..n)
            .map(|i| {
                let w = freqs.omega(i);
                p.iter()
                    .map(|&t| {
                        (0..3).fold(C64::new(0.0, 0.0), |acc, j| {
                            acc + C64::from_polar(weights[j] * fourier(t, j), (j as f64 - 1.0) * w)
                        })
                    })
                    .collect()
            })
            .collect();
        EigenSystem::from_parts(grid, freqs, vec![vec![1.0; n]], vec![f]).unwrap()
    }

    #[test]
    fn separable_gives_static_components() {
        let es = separable();
        let ones = vec![PhaseVector::ones(es.freqs().len()); 2];
        let bank = build_filters(&es, &ones, &ModelConfig::default()).unwrap();
        for (k, c) in bank.components().iter().enumerate() {
            assert_eq!(c.lag, 0);
            let grid = bank.grid();
            let d: f64 = c.filters[0].iter().zip(grid.points()).map(|(v, &t)| (v - fourier(t, k + 1)).abs()).fold(0.0, f64::max);
            assert!(d < 1e-4);
            assert!((c.sup_norm - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn dynamic_filters_recovered_with_unit_phase() {
        let w = [0.5240, 0.6723, 0.5240];
        let es = dynamic(w);
        let ph = PhaseVector::ones(es.freqs().len());
        let c = build_component(&es, 0, &ph, 0.2, 8).unwrap();
        assert_eq!(c.lag, 1);
        let n = c.norms(es.grid());
        for (a, b) in n.iter().zip(w) {
            assert!((a - b / (w.iter().map(|x| x * x).sum::<f64>()).sqrt()).abs() < 1e-6);
        }
        assert!((c.l2_norm(es.grid()) - 1.0).abs() < 1e-12);
        assert!(c.imag_residue < 1e-12);
    }

    #[test]
    fn max_lag_is_shifted_to_zero() {
        // largest weight on l = +1
        let es = dynamic([0.2, 0.3, 0.9]);
        let ph = PhaseVector::ones(es.freqs().len());
        let c = build_component(&es, 0, &ph, 0.15, 8).unwrap();
        let n = c.norms(es.grid());
        let mid = n[c.lag];
        assert!(n.iter().all(|&v| v <= mid + 1e-15));
        assert!((c.sup_norm - c.max_norm(es.grid())).abs() < 1e-12);
        // the shifted phase reproduces the shifted filters
        let again = build_component(&es, 0, &c.phase, 0.15, 8).unwrap();
        assert_eq!(again.lag, c.lag);
        for (a, b) in again.filters.iter().zip(&c.filters) {
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn loose_threshold_keeps_single_lag() {
        let es = dynamic([0.5240, 0.6723, 0.5240]);
        let ph = PhaseVector::ones(es.freqs().len());
        assert_eq!(build_component(&es, 0, &ph, 0.999, 8).unwrap().lag, 0);
    }

    #[test]
    fn truncation_cap_reported() {
        let es = dynamic([0.5240, 0.6723, 0.5240]);
        let ph = PhaseVector::ones(es.freqs().len());
        assert!(matches!(build_component(&es, 0, &ph, 0.01, 0), Err(PadaError::TruncationCap { .. })));
    }

    fn bank() -> FilterBank {
        let es = dynamic([0.5240, 0.6723, 0.5240]);
        let ph = vec![PhaseVector::ones(es.freqs().len())];
        build_filters(&es, &ph, &ModelConfig::default()).unwrap()
    }

    #[test]
    fn shift_identity_and_inverse() {
        let b = bank();
        assert_eq!(shift_filter(&b, 0, 0).unwrap(), b);
        let back = shift_filter(&shift_filter(&b, 0, 1).unwrap(), 0, -1).unwrap();
        let (c0, c1) = (b.component(0), back.component(0));
        assert_eq!(c0.filters, c1.filters);
        assert_eq!(c0.lag, c1.lag);
        for (a, b) in c0.phase.values().iter().zip(c1.phase.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn shift_preserves_norms() {
        let b = bank();
        let s = shift_filter(&b, 0, 3).unwrap();
        let g = b.grid();
        assert!((b.component(0).l2_norm(g) - s.component(0).l2_norm(g)).abs() < 1e-12);
        assert!((b.component(0).max_norm(g) - s.component(0).max_norm(g)).abs() < 1e-12);
        assert_eq!(s.component(0).lag, 4);
        assert_eq!(s.component(0).filter(-3).unwrap(), b.component(0).filter(0).unwrap());
    }
}
