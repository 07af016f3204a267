//! Curves from filters and scores, and iterated score forecasts.

use super::ar::ArModel;
use crate::error::{PadaError, Result};
use crate::filters::FilterBank;
use crate::scores::ScoreSet;

fn check(mean: &[f64], bank: &FilterBank, lags: &[usize]) -> Result<()> {
    if mean.len() != bank.grid().len() {
        return Err(PadaError::Dimension(format!("mean length {} vs grid {}", mean.len(), bank.grid().len())));
    }
    if lags != bank.lags().as_slice() {
        return Err(PadaError::Dimension(format!("score lags {lags:?} vs filter lags {:?}", bank.lags())));
    }
    Ok(())
}

/// `mu + sum_k sum_l phi_kl xi_(j+l)k` where `series[k][i]` holds
/// `xi_(i + 1 - L_k)`.
pub fn assemble(mean: &[f64], bank: &FilterBank, series: &[&[f64]], j: i64) -> Vec<f64> {
    let mut out = mean.to_vec();
    for (comp, xi) in bank.components().iter().zip(series) {
        let lag = comp.lag as i64;
        for l in -lag..=lag {
            let x = xi[(j + l + lag - 1) as usize];
            if x == 0.0 {
                continue;
            }
            for (o, f) in out.iter_mut().zip(&comp.filters[(l + lag) as usize]) {
                *o += f * x;
            }
        }
    }
    out
}

/// `X_1 .. X_J` on the grid.
pub fn reconstruct(mean: &[f64], bank: &FilterBank, scores: &ScoreSet) -> Result<Vec<Vec<f64>>> {
    check(mean, bank, &scores.lags())?;
    let series: Vec<&[f64]> = scores.components.iter().map(|c| c.mean.as_slice()).collect();
    Ok((1..=scores.curves() as i64).map(|j| assemble(mean, bank, &series, j)).collect())
}

/// Score series extended by `steps` iterated AR predictions.
pub fn extend_scores(scores: &ScoreSet, ars: &[ArModel], steps: usize) -> Result<Vec<Vec<f64>>> {
    if ars.len() != scores.len() {
        return Err(PadaError::Dimension(format!("{} AR models vs {} components", ars.len(), scores.len())));
    }
    Ok(scores
        .components
        .iter()
        .zip(ars)
        .map(|(c, ar)| {
            let mut s = c.mean.clone();
            s.extend(ar.forecast(&c.mean, steps));
            s
        })
        .collect())
}

/// `X_(J+1) .. X_(J+P)`; every score index reached, up to `J + P + L_k`, is
/// an iterated AR prediction beyond the estimated span.
pub fn forecast(
    bank: &FilterBank,
    scores: &ScoreSet,
    ars: &[ArModel],
    steps: usize,
    mean: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if steps < 1 {
        return Err(PadaError::Parameter("forecast horizon must be at least 1".into()));
    }
    check(mean, bank, &scores.lags())?;
    let ext = extend_scores(scores, ars, steps)?;
    let series: Vec<&[f64]> = ext.iter().map(Vec::as_slice).collect();
    let j = scores.curves() as i64;
    Ok((1..=steps as i64).map(|p| assemble(mean, bank, &series, j + p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{ComponentFilters, PhaseVector};
    use crate::grid::{FrequencyGrid, TimeGrid};
    use crate::scores::ComponentScores;

    fn constant_bank(lag: usize) -> FilterBank {
        let g = TimeGrid::uniform(11).unwrap();
        let f = FrequencyGrid::new(4).unwrap();
        let mut filters = vec![vec![0.0; 11]; 2 * lag + 1];
        filters[lag] = vec![1.0; 11];
        let c = ComponentFilters {
            lag,
            filters,
            phase: PhaseVector::ones(f.len()),
            eigenvalues: vec![1.0; f.len()],
            sup_norm: 1.0,
            raw_sup_norm: 1.0,
            retained_energy: 1.0,
            imag_residue: 0.0,
        };
        FilterBank::new(g, f, vec![c]).unwrap()
    }

    fn scores(v: Vec<f64>, lag: usize) -> ScoreSet {
        ScoreSet { components: vec![ComponentScores { lag, mean: v }], covariance: None }
    }

    #[test]
    fn zero_scores_give_mean() {
        let b = constant_bank(1);
        let mu: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let x = reconstruct(&mu, &b, &scores(vec![0.0; 7], 1)).unwrap();
        assert_eq!(x.len(), 5);
        assert!(x.iter().all(|c| c == &mu));
    }

    #[test]
    fn constant_filter_adds_score() {
        let b = constant_bank(0);
        let mu = vec![0.5; 11];
        let x = reconstruct(&mu, &b, &scores(vec![1.0, -2.0, 3.0], 0)).unwrap();
        assert_eq!(x[1], vec![-1.5; 11]);
    }

    #[test]
    fn one_step_ar_identity() {
        let b = constant_bank(0);
        let mu = vec![1.0; 11];
        let ar = ArModel { coefs: vec![0.2], innovation_variance: 1.0, aic: 0.0 };
        let f = forecast(&b, &scores(vec![0.0; 9].into_iter().chain([5.0]).collect(), 0), &[ar], 2, &mu).unwrap();
        assert!(f[0].iter().all(|v| (v - 2.0).abs() < 1e-15));
        assert!(f[1].iter().all(|v| (v - 1.2).abs() < 1e-12));
    }

    #[test]
    fn zero_ar_forecast_is_mean() {
        let b = constant_bank(1);
        let mu = vec![0.3; 11];
        let ar = ArModel::white_noise(1.0);
        // xi_J is nonzero but only reaches the forecasts through the zero filter at l = -1
        let mut v = vec![0.0; 12];
        v[10] = 4.0;
        let f = forecast(&b, &scores(v, 1), &[ar], 3, &mu).unwrap();
        assert!(f.iter().all(|c| c == &mu));
        assert!(forecast(&b, &scores(vec![0.0; 12], 1), &[ArModel::white_noise(1.0)], 0, &mu).is_err());
    }

    #[test]
    fn lag_mismatch_rejected() {
        let b = constant_bank(1);
        assert!(reconstruct(&[0.0; 11], &b, &scores(vec![0.0; 5], 0)).is_err());
    }
}
