use std::path::{Path, PathBuf};
use std::process::Command;

use pada::scores::ScoreSet;
use pada::sim::{Method, SimCase};
use pada_cli::bundle::{read_bundle, write_bundle};
use pada_cli::commands::{cmd_bench, cmd_fit, cmd_forecast, cmd_reconstruct, cmd_simulate};
use pada_cli::config::RunConfig;

fn base(out: &Path) -> RunConfig {
    RunConfig {
        out: Some(out.to_path_buf()),
        seed: Some(11),
        case: Some(SimCase::Case1),
        curves: Some(120),
        components: Some(1),
        ..RunConfig::default()
    }
}

/// Simulates a data set and fits it; returns the bundle directory.
fn fitted(root: &Path) -> PathBuf {
    cmd_simulate(&base(&root.join("sim"))).unwrap();
    let bundle = root.join("model");
    cmd_fit(&RunConfig { input: Some(root.join("sim/data.csv")), ..base(&bundle) }).unwrap();
    bundle
}

fn read_table(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_owned).collect()).collect()
}

fn numbers(row: &[String], skip: usize) -> Vec<f64> {
    row[skip..].iter().map(|v| v.parse().unwrap()).collect()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn bundle_round_trip_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = fitted(tmp.path());
    let model = read_bundle(&a).unwrap();
    let b = tmp.path().join("again");
    write_bundle(&b, &model).unwrap();
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.iter().map(|f| &f.0).collect::<Vec<_>>(), fb.iter().map(|f| &f.0).collect::<Vec<_>>());
    for (x, y) in fa.iter().zip(&fb) {
        assert!(x.1 == y.1, "{} differs", x.0);
    }
    assert_eq!(read_bundle(&b).unwrap(), model);
}

#[test]
fn corrupt_bundle_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fitted(tmp.path());
    let p = dir.join("mean.f64");
    let mut bytes = std::fs::read(&p).unwrap();
    bytes[3] ^= 0x40;
    std::fs::write(&p, bytes).unwrap();
    let e = read_bundle(&dir).unwrap_err().to_string();
    assert!(e.contains("checksum"), "{e}");
    let r = cmd_reconstruct(&RunConfig { bundle: Some(dir), ..base(&tmp.path().join("rec")) });
    assert!(r.is_err());
}

#[test]
fn forecast_rows_and_band_order() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = fitted(tmp.path());
    let out = tmp.path().join("fc");
    cmd_forecast(&RunConfig { bundle: Some(bundle), horizon: Some(10), level: Some(0.95), draws: Some(400), ..base(&out) })
        .unwrap();
    let centers = read_table(&out.join("forecast.csv"));
    assert_eq!(centers.len(), 10);
    assert_eq!(centers[0].len(), 1 + 51);
    let bands = read_table(&out.join("forecast_bands.csv"));
    assert_eq!(bands.len(), 10 * 5);
    for chunk in bands.chunks(5) {
        let [lo, c, up, olo, oup] = [0, 1, 2, 3, 4].map(|i| numbers(&chunk[i], 2));
        for t in 0..lo.len() {
            assert!(lo[t] <= c[t] && c[t] <= up[t]);
            assert!(olo[t] <= oup[t]);
        }
        let width = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| y - x).sum::<f64>();
        assert!(width(&olo, &oup) > width(&lo, &up));
    }
}

#[test]
fn band_seeds_agree_within_monte_carlo_error() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = fitted(tmp.path());
    let run = |seed, sub: &str| {
        let out = tmp.path().join(sub);
        let cfg = RunConfig { bundle: Some(bundle.clone()), seed: Some(seed), draws: Some(1000), horizon: Some(2), ..base(&out) };
        cmd_forecast(&cfg).unwrap();
        (read_table(&out.join("forecast.csv")), read_table(&out.join("forecast_bands.csv")))
    };
    let (ca, ba) = run(1, "a");
    let (cb, bb) = run(2, "b");
    assert_eq!(ca, cb);
    assert_ne!(ba, bb);
    let (mut diff, mut width, mut n) = (0.0, 0.0, 0.0);
    for (ra, rb) in ba.chunks(5).zip(bb.chunks(5)) {
        let (lo, up) = (numbers(&ra[0], 2), numbers(&ra[2], 2));
        for i in [0, 2] {
            let (x, y) = (numbers(&ra[i], 2), numbers(&rb[i], 2));
            for t in 0..x.len() {
                diff += (x[t] - y[t]).abs();
                width += up[t] - lo[t];
                n += 1.0;
            }
        }
    }
    assert!(diff / n < 0.05 * width / n, "{} vs {}", diff / n, width / n);
}

#[test]
fn zero_scores_reconstruct_the_mean() {
    let tmp = tempfile::tempdir().unwrap();
    let mut model = read_bundle(&fitted(tmp.path())).unwrap();
    model.scores = ScoreSet::zeros(model.scores.curves(), &model.bank.lags());
    let dir = tmp.path().join("zero");
    write_bundle(&dir, &model).unwrap();
    let out = tmp.path().join("rec");
    cmd_reconstruct(&RunConfig { bundle: Some(dir), ..base(&out) }).unwrap();
    let rows = read_table(&out.join("reconstruction.csv"));
    assert_eq!(rows.len(), model.scores.curves());
    for r in &rows {
        for (v, m) in numbers(r, 1).iter().zip(&model.mean) {
            assert!((v - m).abs() < 1e-12);
        }
    }
    assert!(!out.join("reconstruction_bands.csv").exists());
}

#[test]
fn single_observation_curves_flag_noise() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    cmd_simulate(&RunConfig { obs_min: Some(1), obs_max: Some(1), curves: Some(300), ..base(&sim) }).unwrap();
    let model =
        cmd_fit(&RunConfig { input: Some(sim.join("data.csv")), ..base(&tmp.path().join("model")) }).unwrap();
    assert!(model.diagnostics.noise.unreliable());
}

#[test]
fn bench_reports_each_method() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bench");
    let methods = vec![Method::Pada, Method::Static, Method::Nonopt];
    let report = cmd_bench(&RunConfig { reps: Some(5), curves: Some(100), methods: Some(methods), ..base(&out) }).unwrap();
    assert_eq!(report.methods.len(), 3);
    let rows = read_table(&out.join("bench.csv"));
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r[1], "5");
        let mse: f64 = r[3].parse().unwrap();
        assert!(mse.is_finite() && mse > 0.0);
    }
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("bench.json")).unwrap()).unwrap();
    assert_eq!(json["rng"], "chacha8");
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_pada");
    let ok = Command::new(bin)
        .args(["simulate", "--case", "2", "--seed", "3", "--curves", "30", "--out"])
        .arg(tmp.path().join("s"))
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(ok.stdout.is_empty());
    assert!(tmp.path().join("s/data.csv").is_file());

    let missing = Command::new(bin).args(["fit", "--input", "/nonexistent.csv", "--out"]).arg(tmp.path().join("f")).output().unwrap();
    assert!(!missing.status.success());
    assert!(!tmp.path().join("f").exists(), "paths are validated before any output is created");

    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, r#"{"sed": 4}"#).unwrap();
    let bad = Command::new(bin).args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(tmp.path().join("x")).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown field"));
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, r#"{"case": "case2", "curves": 40, "seed": 1}"#).unwrap();
    let bin = env!("CARGO_BIN_EXE_pada");
    let run = |seed: &str, sub: &str| {
        let o = Command::new(bin)
            .args(["simulate", "--config"])
            .arg(&cfg)
            .args(["--seed", seed, "--out"])
            .arg(tmp.path().join(sub))
            .output()
            .unwrap();
        assert!(o.status.success());
        let meta: serde_json::Value =
            serde_json::from_slice(&std::fs::read(tmp.path().join(sub).join("simulation.json")).unwrap()).unwrap();
        meta
    };
    let m = run("9", "a");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["spec"]["curves"], 40);
}
