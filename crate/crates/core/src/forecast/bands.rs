//! Pointwise credible bands from draws of the exact score posterior.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ar::ArModel;
use super::reconstruct::{assemble, forecast, reconstruct};
use crate::error::{PadaError, Result};
use crate::filters::FilterBank;
use crate::linalg::psd_sqrt;
use crate::par::{self, Parallelism};
use crate::scores::ScoreSet;

pub const DEFAULT_DRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBand {
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub enum Horizon<'a> {
    Reconstruction,
    Forecast { steps: usize, ars: &'a [ArModel] },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub level: f64,
    pub draws: usize,
    pub seed: u64,
    pub parallelism: Parallelism,
}

impl BandSpec {
    pub fn new(level: f64, seed: u64) -> Self {
        Self { level, draws: DEFAULT_DRAWS, seed, parallelism: Parallelism::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub level: f64,
    /// Bands for the latent curves.
    pub curves: Vec<CurveBand>,
    /// Bands for new noisy observations; forecasts only.
    pub observations: Option<Vec<CurveBand>>,
}

/// Type-7 empirical quantile of sorted values.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn band(center: Vec<f64>, samples: &[Vec<f64>], alpha: f64) -> CurveBand {
    let g = center.len();
    let mut lower = Vec::with_capacity(g);
    let mut upper = Vec::with_capacity(g);
    let mut col = Vec::with_capacity(samples.len());
    for t in 0..g {
        col.clear();
        col.extend(samples.iter().map(|s| s[t]));
        col.sort_by(f64::total_cmp);
        lower.push(quantile(&col, alpha / 2.0).min(center[t]));
        upper.push(quantile(&col, 1.0 - alpha / 2.0).max(center[t]));
    }
    CurveBand { center, lower, upper }
}

/// Draw `d` gets its own ChaCha stream, so results do not depend on
/// scheduling.
fn draw_rng(seed: u64, d: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(d as u64);
    rng
}

pub fn credible_bands(
    posterior: &ScoreSet,
    bank: &FilterBank,
    mean: &[f64],
    sigma2: f64,
    spec: &BandSpec,
    horizon: Horizon<'_>,
) -> Result<Bands> {
    if !(spec.level > 0.0 && spec.level < 1.0) {
        return Err(PadaError::Parameter(format!("level must lie in (0, 1), got {}", spec.level)));
    }
    if spec.draws < 1 {
        return Err(PadaError::Parameter("need at least one posterior draw".into()));
    }
    if !(sigma2 >= 0.0) {
        return Err(PadaError::Parameter("noise variance must be non-negative".into()));
    }
    let cov = posterior
        .covariance
        .as_ref()
        .ok_or_else(|| PadaError::Parameter("credible bands need the posterior covariance".into()))?;
    let m = DVector::from_vec(posterior.stacked());
    if cov.nrows() != m.len() || cov.ncols() != m.len() {
        return Err(PadaError::Dimension(format!("covariance {}x{} vs {} scores", cov.nrows(), cov.ncols(), m.len())));
    }
    let root = psd_sqrt(cov);
    let dims: Vec<usize> = posterior.components.iter().map(|c| c.mean.len()).collect();
    let alpha = 1.0 - spec.level;
    let split = |v: &DVector<f64>| -> Vec<Vec<f64>> {
        let mut off = 0;
        dims.iter()
            .map(|&n| {
                let s = v.as_slice()[off..off + n].to_vec();
                off += n;
                s
            })
            .collect()
    };
    let sample = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        let z = DVector::from_iterator(m.len(), (0..m.len()).map(|_| StandardNormal.sample(&mut *rng)));
        split(&(&m + &root * z))
    };
    match horizon {
        Horizon::Reconstruction => {
            let centers = reconstruct(mean, bank, posterior)?;
            let draws: Vec<Vec<Vec<f64>>> =
                par::map_indexed(spec.parallelism, spec.draws, |d| sample(&mut draw_rng(spec.seed, d)));
            let curves = par::map_indexed(spec.parallelism, centers.len(), |j| {
                let samples: Vec<Vec<f64>> = draws
                    .iter()
                    .map(|dr| {
                        let s: Vec<&[f64]> = dr.iter().map(Vec::as_slice).collect();
                        assemble(mean, bank, &s, j as i64 + 1)
                    })
                    .collect();
                band(centers[j].clone(), &samples, alpha)
            });
            Ok(Bands { level: spec.level, curves, observations: None })
        }
        Horizon::Forecast { steps, ars } => {
            let centers = forecast(bank, posterior, ars, steps, mean)?;
            let noise = Normal::new(0.0, sigma2.sqrt()).expect("finite sd");
            let j = posterior.curves() as i64;
            // per draw: latent curves and noisy observations for each step
            let draws: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = par::map_indexed(spec.parallelism, spec.draws, |d| {
                let mut rng = draw_rng(spec.seed, d);
                let mut series = sample(&mut rng);
                for (s, ar) in series.iter_mut().zip(ars) {
                    let ext = ar.simulate(s, steps, &mut rng);
                    s.extend(ext);
                }
                let sl: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
                let xs: Vec<Vec<f64>> = (1..=steps as i64).map(|p| assemble(mean, bank, &sl, j + p)).collect();
                let ys = xs.iter().map(|x| x.iter().map(|v| v + noise.sample(&mut rng)).collect()).collect();
                (xs, ys)
            });
            let mut curves = Vec::with_capacity(steps);
            let mut obs = Vec::with_capacity(steps);
            for (p, c) in centers.into_iter().enumerate() {
                let xs: Vec<Vec<f64>> = draws.iter().map(|(x, _)| x[p].clone()).collect();
                let ys: Vec<Vec<f64>> = draws.iter().map(|(_, y)| y[p].clone()).collect();
                obs.push(band(c.clone(), &ys, alpha));
                curves.push(band(c, &xs, alpha));
            }
            Ok(Bands { level: spec.level, curves, observations: Some(obs) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{ComponentFilters, PhaseVector};
    use crate::grid::{FrequencyGrid, TimeGrid};
    use crate::scores::ComponentScores;
    use nalgebra::DMatrix;

    fn bank() -> FilterBank {
        let g = TimeGrid::uniform(6).unwrap();
        let f = FrequencyGrid::new(4).unwrap();
        let c = ComponentFilters {
            lag: 0,
            filters: vec![vec![1.0; 6]],
            phase: PhaseVector::ones(f.len()),
            eigenvalues: vec![1.0; f.len()],
            sup_norm: 1.0,
            raw_sup_norm: 1.0,
            retained_energy: 1.0,
            imag_residue: 0.0,
        };
        FilterBank::new(g, f, vec![c]).unwrap()
    }

    fn post(cov: DMatrix<f64>) -> ScoreSet {
        ScoreSet { components: vec![ComponentScores { lag: 0, mean: vec![1.0, -1.0, 0.5, 2.0] }], covariance: Some(cov) }
    }

    #[test]
    fn zero_covariance_collapses() {
        let p = post(DMatrix::zeros(4, 4));
        let ar = [ArModel { coefs: vec![0.5], innovation_variance: 0.0, aic: 0.0 }];
        let spec = BandSpec { draws: 50, ..BandSpec::new(0.9, 1) };
        for h in [Horizon::Reconstruction, Horizon::Forecast { steps: 2, ars: &ar }] {
            let b = credible_bands(&p, &bank(), &[0.0; 6], 0.0, &spec, h).unwrap();
            for c in b.curves {
                assert_eq!(c.lower, c.center);
                assert_eq!(c.upper, c.center);
            }
        }
    }

    #[test]
    fn observation_bands_are_wider() {
        let p = post(DMatrix::identity(4, 4) * 0.2);
        let ar = [ArModel { coefs: vec![0.3], innovation_variance: 0.5, aic: 0.0 }];
        let spec = BandSpec { draws: 2000, ..BandSpec::new(0.95, 3) };
        let b = credible_bands(&p, &bank(), &[0.0; 6], 1.0, &spec, Horizon::Forecast { steps: 3, ars: &ar }).unwrap();
        let obs = b.observations.unwrap();
        for (x, y) in b.curves.iter().zip(&obs) {
            for t in 0..6 {
                assert!(y.upper[t] - y.lower[t] > x.upper[t] - x.lower[t]);
                assert!(x.lower[t] <= x.center[t] && x.center[t] <= x.upper[t]);
            }
        }
    }

    #[test]
    fn deterministic_across_parallelism() {
        let p = post(DMatrix::identity(4, 4) * 0.3);
        let a = BandSpec { draws: 200, parallelism: Parallelism::Parallel, ..BandSpec::new(0.8, 11) };
        let s = BandSpec { parallelism: Parallelism::Sequential, ..a };
        let x = credible_bands(&p, &bank(), &[0.0; 6], 0.1, &a, Horizon::Reconstruction).unwrap();
        let y = credible_bands(&p, &bank(), &[0.0; 6], 0.1, &s, Horizon::Reconstruction).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn gaussian_quantiles_match() {
        let p = post(DMatrix::identity(4, 4));
        let spec = BandSpec { draws: 4000, ..BandSpec::new(0.95, 5) };
        let b = credible_bands(&p, &bank(), &[0.0; 6], 0.0, &spec, Horizon::Reconstruction).unwrap();
        for c in &b.curves {
            assert!((c.upper[0] - c.center[0] - 1.96).abs() < 0.12);
        }
    }

    #[test]
    fn bad_level_rejected() {
        let p = post(DMatrix::zeros(4, 4));
        let spec = BandSpec::new(1.0, 0);
        assert!(credible_bands(&p, &bank(), &[0.0; 6], 0.0, &spec, Horizon::Reconstruction).is_err());
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile(&v, 0.5), 1.5);
        assert_eq!(quantile(&v, 1.0), 3.0);
    }
}
