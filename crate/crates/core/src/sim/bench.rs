//! Monte Carlo harness: reconstruction MSE and rolling one-step MSPE.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::baseline::static_fpca_from;
use super::generate::{generate, SimData, SimSpec};
use crate::config::ModelConfig;
use crate::error::{PadaError, Result};
use crate::forecast::{fit_ar, forecast, quantile, reconstruct};
use crate::grid::l2_norm_real;
use crate::par;
use crate::pipeline::{estimate_preliminary, fit_from, fit_scores, FittedModel, Preliminary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Optimal filters, Whittle-prior scores, scalar AR forecasts.
    Pada,
    /// Static FPCA with conditional-expectation scores and a VAR.
    Static,
    /// PADA without phase optimisation.
    Nonopt,
    /// Returns the true curves; a harness check.
    Oracle,
    /// Predicts zero everywhere; a harness check.
    Zero,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Pada, Method::Static, Method::Nonopt, Method::Oracle, Method::Zero];
    pub const DEFAULT: [Method; 3] = [Method::Pada, Method::Static, Method::Nonopt];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pada => "pada",
            Method::Static => "static",
            Method::Nonopt => "nonopt",
            Method::Oracle => "oracle",
            Method::Zero => "zero",
        }
    }

    fn dynamic(self) -> bool {
        matches!(self, Method::Pada | Method::Nonopt)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = PadaError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| PadaError::Parameter(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub seed: u64,
    pub mse: f64,
    pub mspe: f64,
    pub components: usize,
    /// Per-component `max_l ||phi_kl||`; dynamic methods only.
    pub sup_norms: Option<Vec<f64>>,
    pub truncation_lags: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepFailure {
    pub rep: usize,
    pub seed: u64,
    pub message: String,
}

/// Monte Carlo mean with the 2.5% and 97.5% simulation quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self { mean: v.iter().sum::<f64>() / v.len() as f64, lower: quantile(&v, 0.025), upper: quantile(&v, 0.975) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub outcomes: Vec<RepOutcome>,
    pub failures: Vec<RepFailure>,
    pub mse: Option<Summary>,
    pub mspe: Option<Summary>,
    /// First component only.
    pub sup_norm: Option<Summary>,
    pub truncation: Option<Summary>,
}

impl MethodReport {
    fn new(method: Method, outcomes: Vec<RepOutcome>, failures: Vec<RepFailure>) -> Self {
        let col = |f: &dyn Fn(&RepOutcome) -> Option<f64>| -> Option<Summary> {
            let v: Vec<f64> = outcomes.iter().filter_map(f).collect();
            Summary::of(&v)
        };
        let mse = col(&|o| Some(o.mse));
        let mspe = col(&|o| Some(o.mspe));
        let sup_norm = col(&|o| o.sup_norms.as_ref().and_then(|v| v.first().copied()));
        let truncation = col(&|o| o.truncation_lags.as_ref().and_then(|v| v.first().map(|&l| l as f64)));
        Self { method, outcomes, failures, mse, mspe, sup_norm, truncation }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub spec: SimSpec,
    pub reps: usize,
    pub methods: Vec<MethodReport>,
}

impl BenchReport {
    pub fn method(&self, m: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == m)
    }
}

fn squared_distance(sim: &SimData, truth: &[f64], est: &[f64]) -> f64 {
    let d: Vec<f64> = truth.iter().zip(est).map(|(a, b)| a - b).collect();
    l2_norm_real(&sim.grid, &d).powi(2)
}

fn centered(curve: &[f64], mean: &[f64]) -> Vec<f64> {
    curve.iter().zip(mean).map(|(x, m)| x - m).collect()
}

/// `(1/J) sum_j ||eps_j - eps_hat_j||^2` with `eps_hat = X_hat - mu_hat`.
fn mse(sim: &SimData, signals: &[Vec<f64>]) -> f64 {
    let j = sim.spec.curves;
    signals.iter().zip(&sim.truth[..j]).map(|(s, t)| squared_distance(sim, t, s)).sum::<f64>() / j as f64
}

/// `(1/P) sum_p ||eps_(J+p) - eps_hat_(J+p | 1..J+p-1)||^2`.
fn mspe(sim: &SimData, predict: impl Fn(usize) -> Result<Vec<f64>>) -> Result<f64> {
    let (j, p) = (sim.spec.curves, sim.spec.test_curves);
    let mut acc = 0.0;
    for step in 1..=p {
        let pred = predict(j + step - 1)?;
        acc += squared_distance(sim, &sim.truth[j + step - 1], &pred);
    }
    Ok(acc / p as f64)
}

/// Rolling one-step forecasts with the filters, mean and noise level held
/// at their training values; scores and AR models are refitted on each
/// prefix.
fn dynamic_mspe(sim: &SimData, model: &FittedModel, cfg: &ModelConfig) -> Result<f64> {
    mspe(sim, |prefix| {
        let data = sim.data.prefix(prefix).ok_or_else(|| PadaError::Data("prefix too short".into()))?;
        let (_, scores, _) = fit_scores(&data, &model.mean, &model.bank, model.sigma2, cfg)?;
        let ars = scores.components.iter().map(|c| fit_ar(&c.mean, cfg.ar_max_order)).collect::<Result<Vec<_>>>()?;
        let next = forecast(&model.bank, &scores, &ars, 1, &model.mean)?.pop().expect("one step");
        Ok(centered(&next, &model.mean))
    })
}

fn run_method(method: Method, sim: &SimData, pre: Option<&Preliminary>, cfg: &ModelConfig) -> Result<RepOutcome> {
    let (j, p) = (sim.spec.curves, sim.spec.test_curves);
    let g = sim.grid.len();
    let base = |mse, mspe, components| RepOutcome {
        rep: 0,
        seed: sim.spec.seed,
        mse,
        mspe,
        components,
        sup_norms: None,
        truncation_lags: None,
    };
    let pre = || pre.ok_or_else(|| PadaError::Numerical("preliminary estimate unavailable".into()));
    match method {
        Method::Oracle => {
            let m = mse(sim, &sim.truth[..j]);
            let f = mspe(sim, |prefix| Ok(sim.truth[prefix].clone()))?;
            Ok(base(m, f, 0))
        }
        Method::Zero => {
            let m = mse(sim, &vec![vec![0.0; g]; j]);
            let f = mspe(sim, |_| Ok(vec![0.0; g]))?;
            Ok(base(m, f, 0))
        }
        Method::Static => {
            let train = sim.training();
            let fit = static_fpca_from(pre()?, &train, cfg)?;
            let signals: Vec<Vec<f64>> = fit.scores.iter().map(|s| fit.model.signal(s)).collect();
            // conditional expectations are per curve, so test curves can be
            // scored once and the VAR refitted on each prefix
            let all = fit.model.scores(&sim.data, cfg)?;
            let f = mspe(sim, |prefix| {
                let (_, next) = fit.model.forecast_scores(&all[..prefix], cfg)?;
                Ok(fit.model.signal(&next))
            })?;
            debug_assert_eq!(all.len(), j + p);
            Ok(base(mse(sim, &signals), f, fit.model.components()))
        }
        Method::Pada | Method::Nonopt => {
            let cfg = ModelConfig { optimize_phase: method == Method::Pada, ..cfg.clone() };
            let train = sim.training();
            let model = fit_from(pre()?, &train, &cfg)?;
            let signals: Vec<Vec<f64>> =
                reconstruct(&model.mean, &model.bank, &model.scores)?.iter().map(|x| centered(x, &model.mean)).collect();
            let f = dynamic_mspe(sim, &model, &cfg)?;
            Ok(RepOutcome {
                sup_norms: Some(model.diagnostics.raw_sup_norms.clone()),
                truncation_lags: Some(model.diagnostics.truncation_lags.clone()),
                ..base(mse(sim, &signals), f, model.components())
            })
        }
    }
}

fn run_rep(spec: &SimSpec, cfg: &ModelConfig, methods: &[Method], rep: usize) -> Vec<std::result::Result<RepOutcome, RepFailure>> {
    let seed = spec.seed.wrapping_add(rep as u64);
    let fail = |e: &PadaError| RepFailure { rep, seed, message: e.to_string() };
    let sim = match generate(&SimSpec { seed, ..spec.clone() }) {
        Ok(s) => s,
        Err(e) => return methods.iter().map(|_| Err(fail(&e))).collect(),
    };
    let cfg = ModelConfig { seed, ..cfg.clone() };
    let needs_pre = methods.iter().any(|m| m.dynamic() || *m == Method::Static);
    let pre = if needs_pre { Some(estimate_preliminary(&sim.training(), &cfg)) } else { None };
    methods
        .iter()
        .map(|&m| {
            let pre = match &pre {
                Some(Ok(p)) => Some(p),
                Some(Err(e)) if m != Method::Oracle && m != Method::Zero => return Err(fail(e)),
                _ => None,
            };
            run_method(m, &sim, pre, &cfg).map(|o| RepOutcome { rep, ..o }).map_err(|e| fail(&e))
        })
        .collect()
}

/// Rep `r` uses seed `spec.seed + r` for both the data and the phase
/// restarts. Reps run in parallel; the report is assembled in rep order.
pub fn run_benchmark(spec: &SimSpec, cfg: &ModelConfig, methods: &[Method], reps: usize) -> Result<BenchReport> {
    if reps < 1 {
        return Err(PadaError::Parameter("need at least one rep".into()));
    }
    if methods.is_empty() {
        return Err(PadaError::Parameter("no methods requested".into()));
    }
    spec.validate()?;
    cfg.validate()?;
    let results = par::map_indexed(cfg.parallelism, reps, |r| run_rep(spec, cfg, methods, r));
    let methods = methods
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let mut ok = Vec::new();
            let mut bad = Vec::new();
            for rep in &results {
                match &rep[i] {
                    Ok(o) => ok.push(o.clone()),
                    Err(f) => {
                        log::warn!("{m} failed in rep {}: {}", f.rep, f.message);
                        bad.push(f.clone());
                    }
                }
            }
            MethodReport::new(m, ok, bad)
        })
        .collect();
    Ok(BenchReport { spec: spec.clone(), reps, methods })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimSpec {
        SimSpec { curves: 60, ..SimSpec::default() }
    }

    #[test]
    fn oracle_is_exact() {
        let r = run_benchmark(&small(), &ModelConfig::default(), &[Method::Oracle], 2).unwrap();
        let o = r.method(Method::Oracle).unwrap();
        assert_eq!(o.mse.unwrap().mean, 0.0);
        assert_eq!(o.mspe.unwrap().mean, 0.0);
        assert!(o.failures.is_empty());
    }

    #[test]
    fn zero_predictor_matches_signal_energy() {
        let spec = small();
        let r = run_benchmark(&spec, &ModelConfig::default(), &[Method::Zero], 20).unwrap();
        let energy = spec.signal_energy();
        let m = r.method(Method::Zero).unwrap().mspe.unwrap().mean;
        assert!((m / energy - 1.0).abs() < 0.25, "{m} vs {energy}");
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("pace".parse::<Method>().is_err());
    }

    #[test]
    fn summary_quantiles() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.mean, 3.0);
        assert!((s.lower - 1.1).abs() < 1e-12 && (s.upper - 4.9).abs() < 1e-12);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn zero_reps_rejected() {
        assert!(run_benchmark(&small(), &ModelConfig::default(), &[Method::Zero], 0).is_err());
    }
}
