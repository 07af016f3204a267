//! Raw lagged covariance products from pooled sparse observations.

use serde::{Deserialize, Serialize};

use crate::data::FtsDataset;
use crate::error::{dim_check, PadaError, Result};
use crate::grid::TimeGrid;

/// One product `(Y_(j+h)z1 - mu)(Y_jz2 - mu)` located at `(t, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovProduct {
    /// Time on curve `j + h`.
    pub t: f64,
    /// Time on curve `j`.
    pub s: f64,
    pub value: f64,
    /// `1 / ((J - |h|) M_jh)`.
    pub weight: f64,
}

/// `M_jh` for one admissible `(j, h)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCount {
    pub curve: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagProducts {
    pub lag: i64,
    /// Sorted by `t`.
    pub products: Vec<CovProduct>,
    pub counts: Vec<PairCount>,
}

impl LagProducts {
    pub fn new(lag: i64, mut products: Vec<CovProduct>, counts: Vec<PairCount>) -> Self {
        products.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.s.total_cmp(&b.s)));
        Self { lag, products, counts }
    }
}

/// Products for every lag `-L..=L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCovProducts {
    max_lag: usize,
    lags: Vec<LagProducts>,
}

impl RawCovProducts {
    /// `lags` must hold exactly the lags `-L..=L` in order.
    pub fn from_lags(lags: Vec<LagProducts>) -> Result<Self> {
        if lags.len() % 2 != 1 {
            return Err(PadaError::Dimension("lag lists must cover -L..=L".into()));
        }
        let max_lag = lags.len() / 2;
        for (i, l) in lags.iter().enumerate() {
            if l.lag != i as i64 - max_lag as i64 {
                return Err(PadaError::Dimension(format!("lag list {i} holds lag {}", l.lag)));
            }
        }
        Ok(Self { max_lag, lags })
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn lags(&self) -> &[LagProducts] {
        &self.lags
    }

    pub fn lag(&self, h: i64) -> &LagProducts {
        &self.lags[(h + self.max_lag as i64) as usize]
    }

    pub fn total(&self) -> usize {
        self.lags.iter().map(|l| l.products.len()).sum()
    }
}

/// `M_jh`: `N_(j+h) N_j` off lag zero, `N_j (N_j - 1)` at lag zero.
pub fn pair_count(n_lead: usize, n_base: usize, h: i64) -> usize {
    if h == 0 {
        n_base * n_base.saturating_sub(1)
    } else {
        n_lead * n_base
    }
}

pub fn collect_cov_products(
    data: &FtsDataset,
    mean: &[f64],
    grid: &TimeGrid,
    max_lag: usize,
) -> Result<RawCovProducts> {
    dim_check(mean.len(), grid.len(), "mean vs grid")?;
    let nj = data.len();
    if max_lag >= nj {
        return Err(PadaError::Parameter(format!("lag window {max_lag} must be below J = {nj}")));
    }
    let resid: Vec<Vec<f64>> = data
        .curves()
        .iter()
        .map(|c| c.times().iter().zip(c.values()).map(|(&t, &y)| y - grid.interpolate(mean, t)).collect())
        .collect();
    let l = max_lag as i64;
    let lags = (-l..=l)
        .map(|h| {
            let mut products = Vec::new();
            let mut counts = Vec::new();
            let lo = 1.max(1 - h) as usize;
            let hi = (nj as i64).min(nj as i64 - h) as usize;
            let denom = (nj - h.unsigned_abs() as usize) as f64;
            for j in lo..=hi {
                let lead = data.curve((j as i64 + h) as usize);
                let base = data.curve(j);
                let m = pair_count(lead.len(), base.len(), h);
                counts.push(PairCount { curve: j, count: m });
                if m == 0 {
                    continue;
                }
                let w = 1.0 / (denom * m as f64);
                let rl = &resid[lead.id() - 1];
                let rb = &resid[j - 1];
                for (z1, (&t, &a)) in lead.times().iter().zip(rl).enumerate() {
                    for (z2, (&s, &b)) in base.times().iter().zip(rb).enumerate() {
                        if h == 0 && z1 == z2 {
                            continue;
                        }
                        products.push(CovProduct { t, s, value: a * b, weight: w });
                    }
                }
            }
            LagProducts::new(h, products, counts)
        })
        .collect();
    RawCovProducts::from_lags(lags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SampledCurve;

    fn curves(spec: &[&[f64]]) -> FtsDataset {
        let cs = spec
            .iter()
            .enumerate()
            .map(|(j, ts)| SampledCurve::new(j, ts.to_vec(), ts.iter().map(|t| 1.0 + t).collect()).unwrap())
            .collect();
        FtsDataset::new(cs).unwrap()
    }

    #[test]
    fn two_single_point_curves() {
        let d = curves(&[&[0.2], &[0.7]]);
        let g = TimeGrid::uniform(11).unwrap();
        let p = collect_cov_products(&d, &[0.0; 11], &g, 1).unwrap();
        assert_eq!(p.lags().len(), 3);
        let sizes: Vec<usize> = p.lags().iter().map(|l| l.products.len()).collect();
        assert_eq!(sizes, vec![1, 0, 1]);
        // lag +1 pairs curve 2 (lead) with curve 1 (base)
        let q = p.lag(1).products[0];
        assert_eq!((q.t, q.s), (0.7, 0.2));
    }

    #[test]
    fn zero_residuals_give_zero_products() {
        let d = curves(&[&[0.1, 0.4], &[0.3], &[0.5, 0.6]]);
        let g = TimeGrid::uniform(11).unwrap();
        let mean: Vec<f64> = g.points().iter().map(|t| 1.0 + t).collect();
        let p = collect_cov_products(&d, &mean, &g, 1).unwrap();
        assert!(p.lags().iter().flat_map(|l| &l.products).all(|q| q.value.abs() < 1e-14));
    }

    #[test]
    fn counts_follow_pair_formula() {
        // N = (2, 1, 2)
        let d = curves(&[&[0.1, 0.4], &[0.3], &[0.5, 0.6]]);
        let g = TimeGrid::uniform(11).unwrap();
        let p = collect_cov_products(&d, &[0.0; 11], &g, 1).unwrap();
        // enumerated by hand
        let c = |h: i64| p.lag(h).counts.iter().map(|c| (c.curve, c.count)).collect::<Vec<_>>();
        assert_eq!(c(0), vec![(1, 2), (2, 0), (3, 2)]);
        assert_eq!(c(1), vec![(1, 2), (2, 2)]);
        assert_eq!(c(-1), vec![(2, 2), (3, 2)]);
        let sizes: Vec<usize> = p.lags().iter().map(|l| l.products.len()).collect();
        assert_eq!(sizes, vec![4, 4, 4]);
        // weight = 1 / ((J - |h|) M_jh)
        assert!(p.lag(0).products.iter().all(|q| (q.weight - 1.0 / 6.0).abs() < 1e-15));
        assert!(p.lag(1).products.iter().all(|q| (q.weight - 0.25).abs() < 1e-15));
    }

    #[test]
    fn lag_must_be_below_curve_count() {
        let d = curves(&[&[0.2], &[0.7]]);
        let g = TimeGrid::uniform(11).unwrap();
        assert!(collect_cov_products(&d, &[0.0; 11], &g, 2).is_err());
    }
}
