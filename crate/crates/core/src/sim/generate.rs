//! Synthetic functional time series built from a finite dynamic expansion
//! with Fourier filters and AR(1) scores.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::data::{FtsDataset, SampledCurve};
use crate::error::{PadaError, Result};
use crate::filters::{ComponentFilters, FilterBank, PhaseVector};
use crate::grid::{FrequencyGrid, TimeGrid, C64};
use crate::linalg::CMatrix;
use crate::smoothing::SpectralDensity;

pub const BURN_IN: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimCase {
    /// One component with filters at lags -1, 0, 1.
    Case1,
    /// Three components, each a single static filter.
    Case2,
}

impl SimCase {
    /// `(L_k1, L_k2)` per component.
    pub fn lags(self) -> Vec<(usize, usize)> {
        match self {
            SimCase::Case1 => vec![(1, 1)],
            SimCase::Case2 => vec![(0, 0); 3],
        }
    }

    pub fn components(self) -> usize {
        self.lags().len()
    }
}

impl std::str::FromStr for SimCase {
    type Err = PadaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "case1" => Ok(SimCase::Case1),
            "2" | "case2" => Ok(SimCase::Case2),
            _ => Err(PadaError::Parameter(format!("unknown simulation case {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSpec {
    pub case: SimCase,
    /// Training curves `J`.
    pub curves: usize,
    /// Extra test curves `P` generated after the training span.
    pub test_curves: usize,
    /// Inclusive range of observations per curve.
    pub obs_min: usize,
    pub obs_max: usize,
    pub rho: f64,
    pub grid_size: usize,
    /// Noise variance is `E||eps||^2 / noise_ratio`.
    pub noise_ratio: f64,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            case: SimCase::Case1,
            curves: 300,
            test_curves: 10,
            obs_min: 5,
            obs_max: 10,
            rho: 0.2,
            grid_size: 51,
            noise_ratio: 10.0,
            seed: 0,
        }
    }
}

/// The standard orthonormal Fourier system on `[0, 1]`:
/// `1, sqrt2 cos(2 pi t), sqrt2 sin(2 pi t), sqrt2 cos(4 pi t), ...`.
pub fn fourier_basis(index: usize, t: f64) -> f64 {
    if index == 0 {
        return 1.0;
    }
    let freq = index.div_ceil(2) as f64;
    if index % 2 == 1 {
        2f64.sqrt() * (2.0 * PI * freq * t).cos()
    } else {
        2f64.sqrt() * (2.0 * PI * freq * t).sin()
    }
}

/// Weights `w_l = sqrt(w'_l / sum w')` with `w'_l = exp(-|l| / 2)`, for
/// `l = -l1..=l2`.
pub fn filter_weights(l1: usize, l2: usize) -> Vec<f64> {
    let raw: Vec<f64> = (-(l1 as i64)..=l2 as i64).map(|l| (-(l.abs() as f64) / 2.0).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| (w / total).sqrt()).collect()
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.curves < 2 {
            return Err(PadaError::Parameter("simulation needs at least 2 curves".into()));
        }
        if self.obs_min < 1 || self.obs_max < self.obs_min || self.obs_max > self.grid_size {
            return Err(PadaError::Parameter(format!(
                "observation range {}..={} must lie in 1..={}",
                self.obs_min, self.obs_max, self.grid_size
            )));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(PadaError::Parameter("AR coefficient must satisfy |rho| < 1".into()));
        }
        if self.grid_size < 2 || !(self.noise_ratio > 0.0) {
            return Err(PadaError::Parameter("grid_size >= 2 and noise_ratio > 0 required".into()));
        }
        Ok(())
    }

    /// Innovation variance `1 / k` for 1-based `k`.
    pub fn innovation_variance(&self, k: usize) -> f64 {
        1.0 / (k + 1) as f64
    }

    /// Stationary score variance `(1/k) / (1 - rho^2)`.
    pub fn score_variance(&self, k: usize) -> f64 {
        self.innovation_variance(k) / (1.0 - self.rho * self.rho)
    }

    /// `E||eps_j||^2`; the filter weights have unit square sum.
    pub fn signal_energy(&self) -> f64 {
        (0..self.case.components()).map(|k| self.score_variance(k)).sum()
    }

    pub fn noise_variance(&self) -> f64 {
        self.signal_energy() / self.noise_ratio
    }

    /// Basis index assigned to each `(k, l)`, enumerated in order.
    pub fn basis_indices(&self) -> Vec<Vec<usize>> {
        let mut next = 0;
        self.case
            .lags()
            .iter()
            .map(|&(l1, l2)| {
                (0..=l1 + l2)
                    .map(|_| {
                        next += 1;
                        next - 1
                    })
                    .collect()
            })
            .collect()
    }

    /// Score spectral density `(1/k) / (2 pi |1 - rho e^{i w}|^2)`.
    pub fn score_spectrum(&self, k: usize, omega: f64) -> f64 {
        let d = C64::new(1.0, 0.0) - C64::from_polar(self.rho, omega);
        self.innovation_variance(k) / (2.0 * PI * d.norm_sqr())
    }

    /// `A_k(t, w) = sum_l w_l phi_kl(t) e^{-i l w}`.
    fn transfer(&self, k: usize, t: f64, omega: f64) -> C64 {
        let (l1, l2) = self.case.lags()[k];
        let w = filter_weights(l1, l2);
        let idx = &self.basis_indices()[k];
        (0..w.len()).fold(C64::new(0.0, 0.0), |acc, i| {
            let l = i as f64 - l1 as f64;
            acc + C64::from_polar(w[i] * fourier_basis(idx[i], t), -l * omega)
        })
    }

    /// The population spectral density `sum_k eta_k A_k(t) conj(A_k(s))`.
    pub fn population_spectral_density(&self, grid: &TimeGrid, freqs: &FrequencyGrid) -> Result<SpectralDensity> {
        let g = grid.len();
        let p = grid.points();
        let slices = (0..freqs.len())
            .map(|i| {
                let w = freqs.omega(i);
                let mut m = CMatrix::zeros(g, g);
                for k in 0..self.case.components() {
                    let a: Vec<C64> = p.iter().map(|&t| self.transfer(k, t, w)).collect();
                    let eta = self.score_spectrum(k, w);
                    for r in 0..g {
                        for c in 0..g {
                            m[(r, c)] += a[r] * a[c].conj() * eta;
                        }
                    }
                }
                m
            })
            .collect();
        SpectralDensity::from_slices(grid.clone(), freqs.clone(), slices)
    }

    /// True filters with the largest weight at lag zero, on a symmetric window.
    pub fn true_filters(&self, grid: &TimeGrid, freqs: &FrequencyGrid) -> Result<FilterBank> {
        let components = self
            .case
            .lags()
            .iter()
            .zip(self.basis_indices())
            .enumerate()
            .map(|(k, (&(l1, l2), idx))| {
                let w = filter_weights(l1, l2);
                let lag = l1.max(l2);
                let filters = (-(lag as i64)..=lag as i64)
                    .map(|l| {
                        let i = l + l1 as i64;
                        if i < 0 || i as usize >= w.len() {
                            vec![0.0; grid.len()]
                        } else {
                            grid.points().iter().map(|&t| w[i as usize] * fourier_basis(idx[i as usize], t)).collect()
                        }
                    })
                    .collect();
                let w0 = w[l1];
                ComponentFilters {
                    lag,
                    filters,
                    phase: PhaseVector::ones(freqs.len()),
                    eigenvalues: freqs.points().iter().map(|&o| self.score_spectrum(k, o)).collect(),
                    sup_norm: w0,
                    raw_sup_norm: w0,
                    retained_energy: 1.0,
                    imag_residue: 0.0,
                }
            })
            .collect();
        FilterBank::new(grid.clone(), freqs.clone(), components)
    }
}

/// Generated curves and everything needed to score estimators against truth.
#[derive(Debug, Clone)]
pub struct SimData {
    pub spec: SimSpec,
    pub grid: TimeGrid,
    /// All `J + P` observed curves.
    pub data: FtsDataset,
    /// `eps_j` on the grid for `j = 1..=J+P`.
    pub truth: Vec<Vec<f64>>,
    /// Scores per component; entry `i` is `xi_(i + 1 - L_k1)`.
    pub scores: Vec<Vec<f64>>,
    pub sigma2: f64,
}

impl SimData {
    pub fn training(&self) -> FtsDataset {
        self.data.prefix(self.spec.curves).expect("training span has at least two curves")
    }

    /// Scores of component `k` covering `xi_(1 - L)..xi_(J + L)` for a
    /// symmetric window `L`.
    pub fn training_scores(&self, k: usize) -> Vec<f64> {
        let (l1, l2) = self.spec.case.lags()[k];
        let lag = l1.max(l2);
        let start = l1 - lag.min(l1);
        self.scores[k][start..start + self.spec.curves + 2 * lag].to_vec()
    }
}

pub fn generate(spec: &SimSpec) -> Result<SimData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let grid = TimeGrid::uniform(spec.grid_size)?;
    let total = spec.curves + spec.test_curves;
    let lags = spec.case.lags();
    let basis = spec.basis_indices();
    let mut scores = Vec::with_capacity(lags.len());
    for (k, &(l1, l2)) in lags.iter().enumerate() {
        let normal = Normal::new(0.0, spec.innovation_variance(k).sqrt()).expect("positive variance");
        let len = total + l1 + l2;
        let mut x = 0.0;
        for _ in 0..BURN_IN {
            x = spec.rho * x + normal.sample(&mut rng);
        }
        let mut series = Vec::with_capacity(len);
        for _ in 0..len {
            x = spec.rho * x + normal.sample(&mut rng);
            series.push(x);
        }
        scores.push(series);
    }
    let pts = grid.points();
    let truth: Vec<Vec<f64>> = (0..total)
        .map(|j| {
            pts.iter()
                .map(|&t| {
                    let mut v = 0.0;
                    for (k, &(l1, l2)) in lags.iter().enumerate() {
                        let w = filter_weights(l1, l2);
                        for (i, wi) in w.iter().enumerate() {
                            // xi_(j + l) with l = i - l1 sits at index j + i
                            v += wi * fourier_basis(basis[k][i], t) * scores[k][j + i];
                        }
                    }
                    v
                })
                .collect()
        })
        .collect();
    let sigma2 = spec.noise_variance();
    let noise = Normal::new(0.0, sigma2.sqrt()).expect("positive variance");
    let curves = (0..total)
        .map(|j| {
            let n = rng.random_range(spec.obs_min..=spec.obs_max);
            let idx = sample(&mut rng, spec.grid_size, n).into_vec();
            let times: Vec<f64> = idx.iter().map(|&i| pts[i]).collect();
            let values = idx.iter().map(|&i| truth[j][i] + noise.sample(&mut rng)).collect();
            SampledCurve::new(j + 1, times, values)
        })
        .collect::<Result<Vec<_>>>()?;
    let data = FtsDataset::new(curves)?;
    Ok(SimData { spec: spec.clone(), grid, data, truth, scores, sigma2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::l2_norm_real;

    #[test]
    fn fourier_basis_order() {
        let t = 0.1;
        let r2 = 2f64.sqrt();
        let want = [1.0, r2 * (2.0 * PI * t).cos(), r2 * (2.0 * PI * t).sin(), r2 * (4.0 * PI * t).cos(), r2 * (4.0 * PI * t).sin()];
        for (i, w) in want.iter().enumerate() {
            assert!((fourier_basis(i, t) - w).abs() < 1e-14, "index {i}");
        }
    }

    #[test]
    fn noise_estimate_tracks_generator_on_average() {
        use crate::smoothing::{estimate_mean, estimate_noise_variance, KernelSpec};
        let g = TimeGrid::uniform(51).unwrap();
        let k = KernelSpec::epanechnikov(0.08).unwrap();
        let mut ratio = 0.0;
        for seed in 0..20 {
            let d = generate(&SimSpec { seed, ..SimSpec::default() }).unwrap();
            let t = d.training();
            let m = estimate_mean(&t, &k, &g).unwrap();
            ratio += estimate_noise_variance(&t, &m.values, &k, &g).unwrap().sigma2 / d.sigma2 / 20.0;
        }
        assert!((ratio - 1.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    #[allow(clippy::approx_constant)] // the Case-1 side weight, not pi/6
    fn case1_weights() {
        let w = filter_weights(1, 1);
        let side = ((-0.5f64).exp() / (1.0 + 2.0 * (-0.5f64).exp())).sqrt();
        assert!((w[0] - side).abs() < 1e-15 && (w[2] - side).abs() < 1e-15);
        assert!((w[0] - 0.5235).abs() < 1e-4);
        assert!((w[1] - 0.6723).abs() < 1e-4);
        assert!((w[1] - (1.0 + 2.0 * (-0.5f64).exp()).powf(-0.5)).abs() < 1e-15);
        assert!((w.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn case2_single_unit_filters() {
        let s = SimSpec { case: SimCase::Case2, ..SimSpec::default() };
        let g = TimeGrid::uniform(51).unwrap();
        let f = FrequencyGrid::new(8).unwrap();
        let bank = s.true_filters(&g, &f).unwrap();
        assert_eq!(bank.len(), 3);
        for c in bank.components() {
            assert_eq!(c.lag, 0);
            assert!((l2_norm_real(&g, &c.filters[0]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn true_filters_have_unit_l2_norm() {
        let s = SimSpec::default();
        let g = TimeGrid::uniform(51).unwrap();
        let bank = s.true_filters(&g, &FrequencyGrid::new(8).unwrap()).unwrap();
        assert!((bank.component(0).l2_norm(&g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn score_variance_matches_stationary_formula() {
        let s = SimSpec { case: SimCase::Case2, curves: 10_000, seed: 4, ..SimSpec::default() };
        let d = generate(&s).unwrap();
        for k in 0..3 {
            let x = &d.scores[k];
            let v = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
            let expect = (1.0 / (k + 1) as f64) / (1.0 - 0.04);
            assert!((v / expect - 1.0).abs() < 0.05, "k={k}: {v} vs {expect}");
        }
        assert!((s.score_variance(0) - 1.0417).abs() < 1e-4);
    }

    #[test]
    fn deterministic_and_well_formed() {
        let s = SimSpec { curves: 50, seed: 9, ..SimSpec::default() };
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.data.len(), 60);
        for c in a.data.curves() {
            assert!((5..=10).contains(&c.len()));
            let mut t = c.times().to_vec();
            t.dedup();
            assert_eq!(t.len(), c.len());
        }
        assert!((a.sigma2 - s.signal_energy() / 10.0).abs() < 1e-15);
    }

    #[test]
    fn population_density_eigenvalue_is_score_spectrum() {
        let s = SimSpec::default();
        let g = TimeGrid::uniform(51).unwrap();
        let f = FrequencyGrid::new(8).unwrap();
        let sd = s.population_spectral_density(&g, &f).unwrap();
        let es = crate::filters::eigendecompose(&sd, 1).unwrap();
        for i in 0..f.len() {
            let eta = s.score_spectrum(0, f.omega(i));
            assert!((es.eigenvalues(0)[i] / eta - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn oracle_chain_recovers_true_sup_norm() {
        use crate::filters::{align_phases, build_filters, build_psi_kernel, optimize_phase};
        let s = SimSpec::default();
        let g = TimeGrid::uniform(51).unwrap();
        let f = FrequencyGrid::new(64).unwrap();
        let sd = s.population_spectral_density(&g, &f).unwrap();
        let es = align_phases(&crate::filters::eigendecompose(&sd, 1).unwrap());
        let cfg = crate::ModelConfig::default();
        let psi = build_psi_kernel(&es, 0).unwrap();
        let ph = optimize_phase(&psi, &f, &cfg).unwrap();
        let bank = build_filters(&es, std::slice::from_ref(&ph.phase), &cfg).unwrap();
        let c = bank.component(0);
        let w0 = (1.0 + 2.0 * (-0.5f64).exp()).powf(-0.5);
        assert!((c.raw_sup_norm - w0).abs() < 1e-2, "{} vs {w0}", c.raw_sup_norm);
        assert!((ph.objective.sqrt() - w0).abs() < 1e-2);
        assert_eq!(c.lag, 1);
    }
}
