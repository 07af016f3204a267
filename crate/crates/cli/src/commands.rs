//! Subcommand bodies. Results go to files under the output directory; logs
//! go to stderr.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pada::forecast::{credible_bands, forecast, reconstruct, BandSpec, Bands, Horizon, DEFAULT_DRAWS};
use pada::pipeline::{fit, FittedModel};
use pada::sim::{generate, run_benchmark, BenchReport, Method, Summary};
use serde::Serialize;

use crate::bundle::{read_bundle, write_bundle, RNG};
use crate::config::{existing_file, RunConfig};
use crate::csvio::{read_curves_file, write_band_table, write_curves, write_grid_table};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let p = dir.join(name);
    Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, v: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    std::fs::write(dir.join(name), bytes).with_context(|| format!("writing {name}"))
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf> {
    let out = cfg.out_dir()?.to_path_buf();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok(out)
}

fn bundle_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let Some(b) = &cfg.bundle else { bail!("missing model bundle (--bundle)") };
    existing_file(&Some(b.join(crate::bundle::MANIFEST)), "bundle manifest")?;
    Ok(b.clone())
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<FittedModel> {
    let input = existing_file(&cfg.input, "input CSV (--input)")?;
    let model_cfg = cfg.model_config()?;
    let out = prepare_out(cfg)?;
    let data = read_curves_file(&input)?;
    log::info!("fitting {} curves, {} observations", data.len(), data.total_observations());
    let model = fit(&data, &model_cfg)?;
    if model.diagnostics.noise.unreliable() {
        log::warn!("noise variance estimate is unreliable ({:?})", model.diagnostics.noise.source);
    }
    write_bundle(&out, &model)?;
    log::info!("K = {}, lags {:?}", model.components(), model.bank.lags());
    Ok(model)
}

#[derive(Serialize)]
struct BandManifest<'a> {
    rng: &'a str,
    seed: u64,
    level: f64,
    draws: usize,
    files: Vec<&'a str>,
}

fn band_spec(cfg: &RunConfig, model: &FittedModel) -> Result<BandSpec> {
    Ok(BandSpec {
        draws: cfg.draws.unwrap_or(DEFAULT_DRAWS),
        parallelism: model.config.parallelism,
        ..BandSpec::new(cfg.level()?, cfg.seed())
    })
}

fn band_rows(bands: &Bands, first_id: usize, obs: bool) -> Vec<(usize, &'static str, &[f64])> {
    let mut rows = Vec::new();
    for (i, b) in bands.curves.iter().enumerate() {
        rows.push((first_id + i, "lower", b.lower.as_slice()));
        rows.push((first_id + i, "center", b.center.as_slice()));
        rows.push((first_id + i, "upper", b.upper.as_slice()));
        if let (true, Some(o)) = (obs, &bands.observations) {
            rows.push((first_id + i, "obs_lower", o[i].lower.as_slice()));
            rows.push((first_id + i, "obs_upper", o[i].upper.as_slice()));
        }
    }
    rows
}

pub fn cmd_reconstruct(cfg: &RunConfig) -> Result<()> {
    let dir = bundle_dir(cfg)?;
    let out = prepare_out(cfg)?;
    let model = read_bundle(&dir)?;
    let spec = band_spec(cfg, &model)?;
    let x = reconstruct(&model.mean, &model.bank, &model.scores)?;
    let rows: Vec<(usize, &[f64])> = x.iter().enumerate().map(|(j, v)| (j + 1, v.as_slice())).collect();
    write_grid_table(create(&out, "reconstruction.csv")?, &model.grid, &rows)?;
    let mut files = vec!["reconstruction.csv"];
    if model.scores.covariance.is_some() {
        let b = credible_bands(&model.scores, &model.bank, &model.mean, model.sigma2, &spec, Horizon::Reconstruction)?;
        write_band_table(create(&out, "reconstruction_bands.csv")?, &model.grid, &band_rows(&b, 1, false))?;
        files.push("reconstruction_bands.csv");
    } else {
        log::warn!("bundle has no posterior covariance; bands skipped");
    }
    write_json(&out, "reconstruct.json", &BandManifest { rng: RNG, seed: spec.seed, level: spec.level, draws: spec.draws, files })
}

pub fn cmd_forecast(cfg: &RunConfig) -> Result<()> {
    let dir = bundle_dir(cfg)?;
    let steps = cfg.horizon()?;
    let out = prepare_out(cfg)?;
    let model = read_bundle(&dir)?;
    let spec = band_spec(cfg, &model)?;
    let ars = model.ar_models()?;
    let j = model.scores.curves();
    let f = forecast(&model.bank, &model.scores, &ars, steps, &model.mean)?;
    let rows: Vec<(usize, &[f64])> = f.iter().enumerate().map(|(p, v)| (j + p + 1, v.as_slice())).collect();
    write_grid_table(create(&out, "forecast.csv")?, &model.grid, &rows)?;
    let mut files = vec!["forecast.csv"];
    if model.scores.covariance.is_some() {
        let b = credible_bands(&model.scores, &model.bank, &model.mean, model.sigma2, &spec, Horizon::Forecast { steps, ars: &ars })?;
        write_band_table(create(&out, "forecast_bands.csv")?, &model.grid, &band_rows(&b, j + 1, true))?;
        files.push("forecast_bands.csv");
    } else {
        log::warn!("bundle has no posterior covariance; bands skipped");
    }
    write_json(&out, "forecast.json", &BandManifest { rng: RNG, seed: spec.seed, level: spec.level, draws: spec.draws, files })
}

#[derive(Serialize)]
struct SimManifest<'a> {
    rng: &'a str,
    seed: u64,
    spec: &'a pada::sim::SimSpec,
    sigma2: f64,
    signal_energy: f64,
    files: [&'a str; 2],
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.sim_spec()?;
    let out = prepare_out(cfg)?;
    let sim = generate(&spec)?;
    write_curves(create(&out, "data.csv")?, &sim.data)?;
    let rows: Vec<(usize, &[f64])> = sim.truth.iter().enumerate().map(|(j, v)| (j + 1, v.as_slice())).collect();
    write_grid_table(create(&out, "truth.csv")?, &sim.grid, &rows)?;
    write_json(
        &out,
        "simulation.json",
        &SimManifest {
            rng: RNG,
            seed: spec.seed,
            spec: &spec,
            sigma2: sim.sigma2,
            signal_energy: spec.signal_energy(),
            files: ["data.csv", "truth.csv"],
        },
    )
}

pub const DEFAULT_REPS: usize = 20;

pub fn write_bench_csv<W: std::io::Write>(writer: W, report: &BenchReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["method".to_string(), "reps".into(), "failures".into()];
    for m in ["mse", "mspe", "sup_norm", "truncation"] {
        for s in ["mean", "lower", "upper"] {
            header.push(format!("{m}_{s}"));
        }
    }
    w.write_record(&header)?;
    let cells = |s: Option<Summary>| -> [String; 3] {
        match s {
            Some(s) => [s.mean.to_string(), s.lower.to_string(), s.upper.to_string()],
            None => [String::new(), String::new(), String::new()],
        }
    };
    for m in &report.methods {
        let mut row = vec![m.method.to_string(), m.outcomes.len().to_string(), m.failures.len().to_string()];
        for s in [m.mse, m.mspe, m.sup_norm, m.truncation] {
            row.extend(cells(s));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BenchManifest<'a> {
    rng: &'a str,
    seed: u64,
    report: &'a BenchReport,
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<BenchReport> {
    let spec = cfg.sim_spec()?;
    let model_cfg = cfg.model_config()?;
    let reps = cfg.reps.unwrap_or(DEFAULT_REPS);
    let methods = cfg.methods.clone().unwrap_or_else(|| Method::DEFAULT.to_vec());
    let out = prepare_out(cfg)?;
    let report = run_benchmark(&spec, &model_cfg, &methods, reps)?;
    for m in &report.methods {
        if !m.failures.is_empty() {
            log::warn!("{}: {} of {} reps failed", m.method, m.failures.len(), reps);
        }
    }
    write_json(&out, "bench.json", &BenchManifest { rng: RNG, seed: spec.seed, report: &report })?;
    write_bench_csv(create(&out, "bench.csv")?, &report)?;
    Ok(report)
}
