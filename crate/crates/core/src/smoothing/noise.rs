//! Measurement-noise variance from the gap between the smoothed variance
//! (diagonal pairs included) and the lag-0 covariance surface on the
//! diagonal (diagonal pairs excluded).

use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::mean::PooledObservations;
use super::products::collect_cov_products;
use crate::data::FtsDataset;
use crate::error::{dim_check, PadaError, Result};
use crate::grid::TimeGrid;

pub const NOISE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub sigma2: f64,
    /// The raw estimate was non-positive and has been clamped.
    pub clamped: bool,
}

pub fn estimate_noise_variance(
    data: &FtsDataset,
    mean: &[f64],
    spec: &KernelSpec,
    grid: &TimeGrid,
) -> Result<NoiseEstimate> {
    dim_check(mean.len(), grid.len(), "mean vs grid")?;
    if data.curves().iter().all(|c| c.len() < 2) {
        return Err(PadaError::Data("noise variance needs a curve with at least 2 observations".into()));
    }
    let squared = PooledObservations::from_curves(data, |_| true, |t, y| {
        let r = y - grid.interpolate(mean, t);
        r * r
    });
    let lag0 = collect_cov_products(data, mean, grid, 0)?;
    let pts = grid.points();
    let mut acc = 0.0;
    for &t in pts {
        let (v, _) = squared.local_linear_widening(spec, t)?;
        let c = diagonal_fit(&lag0, spec, t)
            .ok_or_else(|| PadaError::Numerical(format!("diagonal covariance fit failed at t = {t}")))?;
        acc += v - c;
    }
    let raw = acc / pts.len() as f64;
    if raw > NOISE_FLOOR {
        Ok(NoiseEstimate { sigma2: raw, clamped: false })
    } else {
        log::warn!("noise variance estimate {raw:.3e} clamped to {NOISE_FLOOR:e}");
        Ok(NoiseEstimate { sigma2: NOISE_FLOOR, clamped: true })
    }
}

/// Rotated local fit of the lag-0 products at `(t, t)`: linear along the
/// diagonal and quadratic across it, so the ridge is not flattened.
fn diagonal_fit(lag0: &super::products::RawCovProducts, spec: &KernelSpec, t: f64) -> Option<f64> {
    let p = &lag0.lags()[0].products;
    let mut k = *spec;
    for _ in 0..super::mean::MAX_WIDENING {
        let b = k.support();
        let lo = p.partition_point(|q| q.t <= t - b);
        let hi = p.partition_point(|q| q.t < t + b);
        let mut m = [[0.0; 3]; 3];
        let mut r = [0.0; 3];
        for q in &p[lo..hi] {
            let w = q.weight * k.eval(q.t - t) * k.eval(q.s - t);
            if w == 0.0 {
                continue;
            }
            let x = [1.0, 0.5 * (q.t + q.s) - t, (q.t - q.s).powi(2)];
            for i in 0..3 {
                r[i] += w * x[i] * q.value;
                for j in 0..3 {
                    m[i][j] += w * x[i] * x[j];
                }
            }
        }
        if let Some(sol) = crate::linalg::solve3(&m, &[r]) {
            return Some(sol[0][0]);
        }
        k = k.with_bandwidth(k.bandwidth * 2.0);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SampledCurve;
    use crate::smoothing::mean::estimate_mean;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn grid_times(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..51).collect();
        for i in 0..n {
            let k = rng.random_range(i..51);
            idx.swap(i, k);
        }
        idx[..n].iter().map(|&i| i as f64 / 50.0).collect()
    }

    fn simulate(noise_sd: f64, wave: f64, j: usize, seed: u64) -> FtsDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let curves = (0..j)
            .map(|id| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                let times = grid_times(&mut rng, 12);
                let values = times
                    .iter()
                    .map(|&t| {
                        let e: f64 = rng.sample(StandardNormal);
                        a + wave * b * (2.0 * std::f64::consts::PI * t).cos() + noise_sd * e
                    })
                    .collect();
                SampledCurve::new(id, times, values).unwrap()
            })
            .collect();
        FtsDataset::new(curves).unwrap()
    }

    #[test]
    fn noiseless_is_near_zero() {
        // common dense design, random intercepts: the diagonal and off-diagonal
        // smoothers see identical per-curve weights
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let times: Vec<f64> = (0..51).map(|i| i as f64 / 50.0).collect();
        let curves = (0..300)
            .map(|id| {
                let a: f64 = rng.sample(StandardNormal);
                SampledCurve::new(id, times.clone(), vec![a; 51]).unwrap()
            })
            .collect();
        let d = FtsDataset::new(curves).unwrap();
        let g = TimeGrid::uniform(51).unwrap();
        let k = KernelSpec::epanechnikov(0.1).unwrap();
        let m = estimate_mean(&d, &k, &g).unwrap();
        let var_y: f64 = d.curves().iter().map(|c| c.values()[0].powi(2)).sum::<f64>() / 300.0;
        let est = estimate_noise_variance(&d, &m.values, &k, &g).unwrap();
        assert!(est.sigma2 <= 1e-3 * var_y, "{}", est.sigma2);
    }

    #[test]
    fn noiseless_sparse_is_small() {
        let d = simulate(0.0, 0.0, 300, 3);
        let g = TimeGrid::uniform(51).unwrap();
        let k = KernelSpec::epanechnikov(0.1).unwrap();
        let m = estimate_mean(&d, &k, &g).unwrap();
        let est = estimate_noise_variance(&d, &m.values, &k, &g).unwrap();
        assert!(est.sigma2 <= 0.03, "{}", est.sigma2);
    }

    #[test]
    fn curvature_bias_is_small() {
        let d = simulate(0.0, 1.0, 300, 3);
        let g = TimeGrid::uniform(51).unwrap();
        let k = KernelSpec::epanechnikov(0.05).unwrap();
        let m = estimate_mean(&d, &k, &g).unwrap();
        let est = estimate_noise_variance(&d, &m.values, &k, &g).unwrap();
        assert!(est.sigma2 <= 0.05 * 1.5, "{}", est.sigma2);
    }

    #[test]
    fn white_noise_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let curves = (0..500)
            .map(|id| {
                let times = grid_times(&mut rng, 20);
                let values = times.iter().map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
                SampledCurve::new(id, times, values).unwrap()
            })
            .collect();
        let d = FtsDataset::new(curves).unwrap();
        let g = TimeGrid::uniform(51).unwrap();
        let k = KernelSpec::epanechnikov(0.1).unwrap();
        let m = estimate_mean(&d, &k, &g).unwrap();
        let est = estimate_noise_variance(&d, &m.values, &k, &g).unwrap();
        assert!((3.0..=5.0).contains(&est.sigma2), "{}", est.sigma2);
    }

    #[test]
    fn needs_repeated_observations() {
        let curves = (0..4).map(|j| SampledCurve::new(j, vec![0.1 * j as f64], vec![1.0]).unwrap()).collect();
        let d = FtsDataset::new(curves).unwrap();
        let g = TimeGrid::uniform(11).unwrap();
        let k = KernelSpec::epanechnikov(0.2).unwrap();
        assert!(estimate_noise_variance(&d, &[0.0; 11], &k, &g).is_err());
    }
}
