//! Model bundle: `model.json` (metadata, scalars, shapes, SHA-256 checksums)
//! plus little-endian f64 column-major arrays in sidecar `.f64` files.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use nalgebra::DMatrix;
use pada::filters::{ComponentFilters, FilterBank, PhaseVector};
use pada::pipeline::{FitDiagnostics, FittedModel};
use pada::scores::{ComponentScores, ScoreSet, WhittleSpectrum};
use pada::{FrequencyGrid, ModelConfig, TimeGrid, C64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "model.json";
pub const FORMAT: &str = "pada-model";
pub const VERSION: u32 = 1;
/// Generator behind every seeded draw.
pub const RNG: &str = "chacha8";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayEntry {
    pub name: String,
    pub file: String,
    /// `[rows, cols]`; column-major.
    pub shape: [usize; 2],
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentMeta {
    pub lag: usize,
    pub sup_norm: f64,
    pub raw_sup_norm: f64,
    pub retained_energy: f64,
    pub imag_residue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub rng: String,
    pub seed: u64,
    pub curves: usize,
    pub freq_half: usize,
    pub sigma2: f64,
    pub config: ModelConfig,
    pub components: Vec<ComponentMeta>,
    pub diagnostics: FitDiagnostics,
    pub arrays: Vec<ArrayEntry>,
}

struct Array {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Array {
    fn column(name: impl Into<String>, v: &[f64]) -> Self {
        Self { name: name.into(), rows: v.len(), cols: 1, data: v.to_vec() }
    }

    /// `cols[c][r]` stored column by column.
    fn columns(name: impl Into<String>, cols: &[Vec<f64>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        Self { name: name.into(), rows, cols: cols.len(), data: cols.concat() }
    }

    fn bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn arrays(model: &FittedModel) -> Vec<Array> {
    let mut out = vec![Array::column("grid", model.grid.points()), Array::column("mean", &model.mean)];
    for (k, c) in model.bank.components().iter().enumerate() {
        out.push(Array::columns(format!("filters_{k}"), &c.filters));
        let re: Vec<f64> = c.phase.values().iter().map(|z| z.re).collect();
        let im: Vec<f64> = c.phase.values().iter().map(|z| z.im).collect();
        out.push(Array::columns(format!("phase_{k}"), &[re, im]));
        out.push(Array::column(format!("eigenvalues_{k}"), &c.eigenvalues));
    }
    for (k, s) in model.spectra.iter().enumerate() {
        out.push(Array::column(format!("spectrum_{k}"), s.values()));
    }
    for (k, c) in model.scores.components.iter().enumerate() {
        out.push(Array::column(format!("scores_{k}"), &c.mean));
    }
    if let Some(cov) = &model.scores.covariance {
        out.push(Array { name: "covariance".into(), rows: cov.nrows(), cols: cov.ncols(), data: cov.as_slice().to_vec() });
    }
    out
}

pub fn manifest_bytes(m: &Manifest) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(m)?;
    v.push(b'\n');
    Ok(v)
}

/// Writes the bundle into `dir`, creating it if needed.
pub fn write_bundle(dir: &Path, model: &FittedModel) -> Result<Manifest> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut entries = Vec::new();
    for a in arrays(model) {
        let bytes = a.bytes();
        let file = format!("{}.f64", a.name);
        std::fs::write(dir.join(&file), &bytes).with_context(|| format!("writing {file}"))?;
        entries.push(ArrayEntry { sha256: digest(&bytes), name: a.name, file, shape: [a.rows, a.cols] });
    }
    let manifest = Manifest {
        format: FORMAT.into(),
        version: VERSION,
        rng: RNG.into(),
        seed: model.config.seed,
        curves: model.scores.curves(),
        freq_half: model.bank.freqs().half(),
        sigma2: model.sigma2,
        config: model.config.clone(),
        components: model
            .bank
            .components()
            .iter()
            .map(|c| ComponentMeta {
                lag: c.lag,
                sup_norm: c.sup_norm,
                raw_sup_norm: c.raw_sup_norm,
                retained_energy: c.retained_energy,
                imag_residue: c.imag_residue,
            })
            .collect(),
        diagnostics: model.diagnostics.clone(),
        arrays: entries,
    };
    std::fs::write(dir.join(MANIFEST), manifest_bytes(&manifest)?)?;
    Ok(manifest)
}

struct Loaded<'a> {
    dir: &'a Path,
    manifest: &'a Manifest,
}

impl Loaded<'_> {
    fn get(&self, name: &str) -> Result<(usize, usize, Vec<f64>)> {
        let e = self.manifest.arrays.iter().find(|a| a.name == name).with_context(|| format!("bundle lacks array `{name}`"))?;
        let bytes = std::fs::read(self.dir.join(&e.file)).with_context(|| format!("reading {}", e.file))?;
        if digest(&bytes) != e.sha256 {
            bail!("checksum mismatch for {}", e.file);
        }
        let [rows, cols] = e.shape;
        ensure!(bytes.len() == 8 * rows * cols, "{} holds {} bytes, expected {}", e.file, bytes.len(), 8 * rows * cols);
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok((rows, cols, data))
    }

    fn column(&self, name: &str) -> Result<Vec<f64>> {
        let (_, cols, d) = self.get(name)?;
        ensure!(cols == 1, "array `{name}` should be a single column");
        Ok(d)
    }

    fn columns(&self, name: &str) -> Result<Vec<Vec<f64>>> {
        let (rows, _, d) = self.get(name)?;
        Ok(if rows == 0 { Vec::new() } else { d.chunks(rows).map(<[f64]>::to_vec).collect() })
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if m.format != FORMAT || m.version != VERSION {
        bail!("unsupported bundle format {} v{}", m.format, m.version);
    }
    Ok(m)
}

pub fn read_bundle(dir: &Path) -> Result<FittedModel> {
    let m = read_manifest(dir)?;
    let l = Loaded { dir, manifest: &m };
    let grid = TimeGrid::new(l.column("grid")?)?;
    let freqs = FrequencyGrid::new(m.freq_half)?;
    let mut comps = Vec::with_capacity(m.components.len());
    let mut spectra = Vec::with_capacity(m.components.len());
    let mut scores = Vec::with_capacity(m.components.len());
    for (k, meta) in m.components.iter().enumerate() {
        let ph = l.columns(&format!("phase_{k}"))?;
        ensure!(ph.len() == 2, "phase_{k} should have two columns");
        let phase = PhaseVector::from_values(ph[0].iter().zip(&ph[1]).map(|(&re, &im)| C64::new(re, im)).collect())?;
        comps.push(ComponentFilters {
            lag: meta.lag,
            filters: l.columns(&format!("filters_{k}"))?,
            phase,
            eigenvalues: l.column(&format!("eigenvalues_{k}"))?,
            sup_norm: meta.sup_norm,
            raw_sup_norm: meta.raw_sup_norm,
            retained_energy: meta.retained_energy,
            imag_residue: meta.imag_residue,
        });
        spectra.push(WhittleSpectrum::new(l.column(&format!("spectrum_{k}"))?, meta.lag)?);
        scores.push(ComponentScores { lag: meta.lag, mean: l.column(&format!("scores_{k}"))? });
    }
    let covariance = match m.arrays.iter().any(|a| a.name == "covariance") {
        true => {
            let (r, c, d) = l.get("covariance")?;
            Some(DMatrix::from_column_slice(r, c, &d))
        }
        false => None,
    };
    let bank = FilterBank::new(grid.clone(), freqs, comps)?;
    let mean = l.column("mean")?;
    ensure!(mean.len() == grid.len(), "mean length does not match the grid");
    let scores = ScoreSet { components: scores, covariance };
    ensure!(scores.curves() == m.curves, "score length does not match the curve count");
    Ok(FittedModel {
        config: m.config,
        grid,
        mean,
        sigma2: m.sigma2,
        bank,
        spectra,
        scores,
        diagnostics: m.diagnostics,
    })
}
