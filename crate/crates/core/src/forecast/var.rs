//! Zero-mean vector autoregressions by multivariate Yule-Walker.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{PadaError, Result};

pub const VAR_MAX_ORDER: usize = 3;
const RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    /// `A_1 .. A_p`, each `K x K`.
    pub coefs: Vec<DMatrix<f64>>,
    pub noise_covariance: DMatrix<f64>,
    pub aic: f64,
}

impl VarModel {
    pub fn order(&self) -> usize {
        self.coefs.len()
    }

    pub fn dim(&self) -> usize {
        self.noise_covariance.nrows()
    }

    /// Iterated point forecasts; `history[t]` is the K-vector at time `t`.
    pub fn forecast(&self, history: &[Vec<f64>], steps: usize) -> Vec<Vec<f64>> {
        let k = self.dim();
        let mut h = history.to_vec();
        for _ in 0..steps {
            let n = h.len();
            let mut next = vec![0.0; k];
            for (i, a) in self.coefs.iter().enumerate() {
                let Some(idx) = n.checked_sub(i + 1) else { break };
                for r in 0..k {
                    for c in 0..k {
                        next[r] += a[(r, c)] * h[idx][c];
                    }
                }
            }
            h.push(next);
        }
        h.split_off(history.len())
    }
}

/// `Gamma(h) = (1/n) sum_t x_(t+h) x_t'`.
fn cross_cov(series: &[Vec<f64>], h: usize) -> DMatrix<f64> {
    let k = series.len();
    let n = series[0].len();
    DMatrix::from_fn(k, k, |a, b| {
        if h >= n {
            0.0
        } else {
            (0..n - h).map(|t| series[a][t + h] * series[b][t]).sum::<f64>() / n as f64
        }
    })
}

/// `series[k]` is the k-th component; all must share one length.
pub fn fit_var(series: &[Vec<f64>], max_order: usize) -> Result<VarModel> {
    let k = series.len();
    if k == 0 {
        return Err(PadaError::Parameter("VAR fit needs at least one series".into()));
    }
    let n = series[0].len();
    if series.iter().any(|s| s.len() != n) {
        return Err(PadaError::Dimension("VAR series lengths differ".into()));
    }
    if n < super::ar::MIN_LENGTH {
        return Err(PadaError::Parameter(format!("VAR fit needs at least {} values", super::ar::MIN_LENGTH)));
    }
    let max_order = max_order.min(VAR_MAX_ORDER).min(n - 1);
    let gammas: Vec<DMatrix<f64>> = (0..=max_order).map(|h| cross_cov(series, h)).collect();
    let nf = n as f64;
    let logdet = |m: &DMatrix<f64>| -> f64 {
        match m.clone().cholesky() {
            Some(c) => 2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>(),
            None => f64::NEG_INFINITY,
        }
    };
    let mut best = VarModel { coefs: Vec::new(), noise_covariance: gammas[0].clone(), aic: nf * logdet(&gammas[0]) };
    if !best.aic.is_finite() {
        return Ok(best);
    }
    for p in 1..=max_order {
        // G[(i, h)] = Gamma(h - i); Gamma(-m) = Gamma(m)'
        let g = DMatrix::from_fn(k * p, k * p, |r, c| {
            let (i, h) = (r / k, c / k);
            let (a, b) = (r % k, c % k);
            if h >= i {
                gammas[h - i][(a, b)]
            } else {
                gammas[i - h][(b, a)]
            }
        });
        let rhs = DMatrix::from_fn(k * p, k, |r, c| gammas[r / k + 1][(c, r % k)]);
        let chol = match g.clone().cholesky() {
            Some(ch) => ch,
            None => {
                let scale = (0..k * p).map(|i| g[(i, i)]).fold(0.0, f64::max).max(1e-300);
                let mut gj = g.clone();
                for i in 0..k * p {
                    gj[(i, i)] += RIDGE * scale;
                }
                match gj.cholesky() {
                    Some(ch) => ch,
                    None => continue,
                }
            }
        };
        let bt = chol.solve(&rhs);
        let coefs: Vec<DMatrix<f64>> =
            (0..p).map(|i| DMatrix::from_fn(k, k, |r, c| bt[(i * k + c, r)])).collect();
        let mut sigma = gammas[0].clone();
        for (i, a) in coefs.iter().enumerate() {
            sigma -= a * gammas[i + 1].transpose();
        }
        let sigma = (&sigma + sigma.transpose()) * 0.5;
        let ld = logdet(&sigma);
        if !ld.is_finite() || companion_radius(&coefs) >= 1.0 {
            continue;
        }
        let aic = nf * ld + 2.0 * (p * k * k) as f64;
        if aic < best.aic {
            best = VarModel { coefs, noise_covariance: sigma, aic };
        }
    }
    Ok(best)
}

fn companion_radius(coefs: &[DMatrix<f64>]) -> f64 {
    let p = coefs.len();
    let k = coefs[0].nrows();
    let m = DMatrix::from_fn(k * p, k * p, |r, c| {
        if r < k {
            coefs[c / k][(r, c % k)]
        } else if r == c + k {
            1.0
        } else {
            0.0
        }
    });
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::ar::fit_ar;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn diagonal_var(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = [0.6, -0.3];
        let mut x = [0.0; 2];
        let mut out = vec![Vec::with_capacity(n), Vec::with_capacity(n)];
        for i in 0..n + 100 {
            for c in 0..2 {
                let e: f64 = StandardNormal.sample(&mut rng);
                x[c] = rho[c] * x[c] + e;
                if i >= 100 {
                    out[c].push(x[c]);
                }
            }
        }
        out
    }

    #[test]
    fn diagonal_transition_recovered() {
        let m = fit_var(&diagonal_var(5000, 1), 3).unwrap();
        assert!(m.order() >= 1);
        let a = &m.coefs[0];
        assert!(a[(0, 1)].abs() < 0.1 && a[(1, 0)].abs() < 0.1);
        assert!((a[(0, 0)] - 0.6).abs() < 0.1);
    }

    #[test]
    fn white_noise_coefficients_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s: Vec<Vec<f64>> =
            (0..2).map(|_| (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let m = fit_var(&s, 3).unwrap();
        assert!(m.coefs.iter().all(|a| a.iter().all(|v| v.abs() < 0.05)));
    }

    #[test]
    fn univariate_matches_ar() {
        let s = diagonal_var(800, 7).swap_remove(0);
        let v = fit_var(std::slice::from_ref(&s), 3).unwrap();
        let a = fit_ar(&s, 3).unwrap();
        assert_eq!(v.order(), a.order());
        for (i, c) in a.coefs.iter().enumerate() {
            assert!((v.coefs[i][(0, 0)] - c).abs() < 1e-8);
        }
        assert!((v.noise_covariance[(0, 0)] - a.innovation_variance).abs() < 1e-8);
    }

    #[test]
    fn collinear_panel_still_fits() {
        let s = diagonal_var(300, 2).swap_remove(0);
        let m = fit_var(&[s.clone(), s], 2).unwrap();
        assert!(m.coefs.iter().all(|a| a.iter().all(|v| v.is_finite())));
    }
}
