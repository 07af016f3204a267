//! Lag-window spectral density kernel estimation by local-linear surface
//! smoothing of the raw lagged covariance products.
//!
//! The design matrix of the complex least-squares problem is real and the
//! target `c e^{i h omega}` is linear in the per-lag products, so the fit at
//! `(t, s, omega)` is `sum_h e^{i h omega} a_h(t, s)` where `a_h` is the real
//! local-linear intercept for lag `h` alone under the shared normal matrix.
//! One 3x3 factorisation per `(t, s)` serves every frequency.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::kernel::KernelSpec;
use super::products::RawCovProducts;
use crate::error::{dim_check, PadaError, Result};
use crate::grid::{FrequencyGrid, TimeGrid, C64};
use crate::linalg::{hermitian_eigen, hermitize, solve3, CMatrix};
use crate::par::{self, Parallelism};

const MAX_WIDENING: usize = 30;

/// Bartlett weight `1 - |h| / L` for `|h| < L`, zero otherwise.
pub fn bartlett_weight(h: i64, span: usize) -> f64 {
    let a = h.unsigned_abs() as f64;
    let l = span as f64;
    if a < l {
        1.0 - a / l
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralDiagnostics {
    /// Grid pairs `(t, s)` where the surface bandwidth was doubled.
    pub widened_points: usize,
    /// Largest bandwidth used anywhere.
    pub max_bandwidth: f64,
    /// Per frequency: trace mass of clipped negative eigenvalues relative to
    /// the positive trace.
    pub clipped_fraction: Vec<f64>,
}

/// Complex Hermitian kernel `f(t, s | omega)` on `grid x grid x freqs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    grid: TimeGrid,
    freqs: FrequencyGrid,
    slices: Vec<CMatrix>,
    pub diagnostics: SpectralDiagnostics,
}

impl SpectralDensity {
    /// Wraps precomputed slices; every slice is Hermitised and the negative
    /// half of the frequency grid is overwritten by conjugation of the
    /// non-negative half.
    pub fn from_slices(grid: TimeGrid, freqs: FrequencyGrid, slices: Vec<CMatrix>) -> Result<Self> {
        dim_check(slices.len(), freqs.len(), "spectral slices vs frequency grid")?;
        for m in &slices {
            if m.nrows() != grid.len() || m.ncols() != grid.len() {
                return Err(PadaError::Dimension("spectral slice shape does not match grid".into()));
            }
        }
        let mut sd = Self { grid, freqs, slices, diagnostics: SpectralDiagnostics::default() };
        sd.enforce_symmetry();
        Ok(sd)
    }

    fn enforce_symmetry(&mut self) {
        let z = self.freqs.zero_index();
        for i in z..self.freqs.len() {
            self.slices[i] = hermitize(&self.slices[i]);
        }
        self.slices[z].iter_mut().for_each(|v| v.im = 0.0);
        for i in z + 1..self.freqs.len() {
            let m = self.freqs.mirror(i);
            self.slices[m] = self.slices[i].map(|v| v.conj());
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn freqs(&self) -> &FrequencyGrid {
        &self.freqs
    }

    pub fn slices(&self) -> &[CMatrix] {
        &self.slices
    }

    pub fn slice(&self, idx: usize) -> &CMatrix {
        &self.slices[idx]
    }

    /// Trapezoid inverse transform `integral f(t, s | w) e^{-i h w} dw`.
    pub fn autocovariance(&self, h: i64) -> CMatrix {
        let g = self.grid.len();
        let w = self.freqs.weights();
        let mut out = CMatrix::zeros(g, g);
        for (idx, m) in self.slices.iter().enumerate() {
            let e = C64::from_polar(w[idx], -(h as f64) * self.freqs.omega(idx));
            out += m * e;
        }
        out
    }

    /// Real part of the lag-0 autocovariance recovered from the spectrum.
    pub fn lag0_covariance(&self) -> DMatrix<f64> {
        self.autocovariance(0).map(|v| v.re)
    }

    /// Projects every slice onto the PSD cone of the weighted operator by
    /// clipping negative eigenvalues.
    pub fn project_psd(&mut self, par: Parallelism) {
        let z = self.freqs.zero_index();
        let n = self.freqs.len();
        let sw: Vec<f64> = self.grid.weights().iter().map(|w| w.sqrt()).collect();
        let projected = par::map_indexed(par, n - z, |i| project_slice(&self.slices[z + i], &sw));
        let mut clipped = vec![0.0; n];
        for (i, (m, c)) in projected.into_iter().enumerate() {
            self.slices[z + i] = m;
            clipped[z + i] = c;
        }
        for i in z + 1..n {
            clipped[self.freqs.mirror(i)] = clipped[i];
        }
        self.enforce_symmetry();
        self.diagnostics.clipped_fraction = clipped;
    }
}

fn project_slice(m: &CMatrix, sw: &[f64]) -> (CMatrix, f64) {
    let g = m.nrows();
    let b = CMatrix::from_fn(g, g, |i, j| m[(i, j)] * (sw[i] * sw[j]));
    let e = hermitian_eigen(&hermitize(&b));
    let pos: f64 = e.values.iter().filter(|v| **v > 0.0).sum();
    let neg: f64 = -e.values.iter().filter(|v| **v < 0.0).sum::<f64>();
    let mut out = CMatrix::zeros(g, g);
    for (k, &lam) in e.values.iter().enumerate() {
        if lam <= 0.0 {
            break;
        }
        let v = e.vectors.column(k);
        for j in 0..g {
            let vj = v[j].conj() * lam;
            for i in 0..g {
                out[(i, j)] += v[i] * vj;
            }
        }
    }
    let out = CMatrix::from_fn(g, g, |i, j| out[(i, j)] / (sw[i] * sw[j]));
    (out, if pos > 0.0 { neg / pos } else { 0.0 })
}

/// Real local-linear intercepts `a_h(t_i, s_j)`, stored `[lag index][i * G + j]`.
#[derive(Debug, Clone)]
pub struct LagSurfaces {
    pub span: usize,
    pub max_lag: usize,
    pub coefs: Vec<Vec<f64>>,
    pub widened_points: usize,
    pub max_bandwidth: f64,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    s: [f64; 6],
}

impl Moments {
    #[inline]
    fn add(&mut self, w: f64, d1: f64, d2: f64) {
        self.s[0] += w;
        self.s[1] += w * d1;
        self.s[2] += w * d2;
        self.s[3] += w * d1 * d1;
        self.s[4] += w * d1 * d2;
        self.s[5] += w * d2 * d2;
    }

    fn matrix(&self) -> [[f64; 3]; 3] {
        let s = &self.s;
        [[s[0], s[1], s[2]], [s[1], s[3], s[4]], [s[2], s[4], s[5]]]
    }
}

/// Smooths each lag's products at every grid pair under the common normal
/// matrix, using Bartlett weights with span `span`.
pub fn smooth_lag_surfaces(
    prod: &RawCovProducts,
    spec: &KernelSpec,
    grid: &TimeGrid,
    span: usize,
    par: Parallelism,
) -> Result<LagSurfaces> {
    let g = grid.len();
    let nl = prod.lags().len();
    let pts = grid.points();
    let rows = par::try_map_indexed(par, g, |i| -> Result<(Vec<Vec<f64>>, usize, f64)> {
        let t = pts[i];
        let mut mom = vec![Moments::default(); g];
        let mut rhs = vec![vec![[0.0f64; 3]; g]; nl];
        accumulate_row(prod, spec, pts, t, span, &mut mom, &mut rhs, None);
        let mut out = vec![vec![0.0; g]; nl];
        let mut widened = 0;
        let mut maxb = spec.bandwidth;
        for j in 0..g {
            let r: Vec<[f64; 3]> = (0..nl).map(|l| rhs[l][j]).collect();
            let sol = match solve3(&mom[j].matrix(), &r) {
                Some(x) => x,
                None => {
                    widened += 1;
                    let (x, b) = widen_point(prod, spec, pts, t, pts[j], span)?;
                    maxb = maxb.max(b);
                    x
                }
            };
            for l in 0..nl {
                out[l][j] = sol[l][0];
            }
        }
        Ok((out, widened, maxb))
    })?;
    let mut coefs = vec![vec![0.0; g * g]; nl];
    let mut widened_points = 0;
    let mut max_bandwidth = spec.bandwidth;
    for (i, (row, w, b)) in rows.into_iter().enumerate() {
        widened_points += w;
        max_bandwidth = max_bandwidth.max(b);
        for l in 0..nl {
            coefs[l][i * g..(i + 1) * g].copy_from_slice(&row[l]);
        }
    }
    Ok(LagSurfaces { span, max_lag: prod.max_lag(), coefs, widened_points, max_bandwidth })
}

/// Adds every product within the kernel window of row `t` into the per-column
/// moments. With `only_col = Some(s)` only that column is touched.
#[allow(clippy::too_many_arguments)]
fn accumulate_row(
    prod: &RawCovProducts,
    spec: &KernelSpec,
    pts: &[f64],
    t: f64,
    span: usize,
    mom: &mut [Moments],
    rhs: &mut [Vec<[f64; 3]>],
    only_col: Option<(usize, f64)>,
) {
    let b = spec.support();
    for (li, lag) in prod.lags().iter().enumerate() {
        let wh = bartlett_weight(lag.lag, span);
        if wh == 0.0 {
            continue;
        }
        let p = &lag.products;
        let lo = p.partition_point(|q| q.t <= t - b);
        let hi = p.partition_point(|q| q.t < t + b);
        for q in &p[lo..hi] {
            let d1 = q.t - t;
            let kt = spec.eval(d1);
            if kt == 0.0 {
                continue;
            }
            let base = q.weight * wh * kt;
            match only_col {
                Some((col, s)) => {
                    let d2 = q.s - s;
                    let w = base * spec.eval(d2);
                    if w != 0.0 {
                        mom[col].add(w, d1, d2);
                        let r = &mut rhs[li][col];
                        r[0] += w * q.value;
                        r[1] += w * q.value * d1;
                        r[2] += w * q.value * d2;
                    }
                }
                None => {
                    let c0 = pts.partition_point(|&x| x <= q.s - b);
                    let c1 = pts.partition_point(|&x| x < q.s + b);
                    for col in c0..c1 {
                        let d2 = q.s - pts[col];
                        let w = base * spec.eval(d2);
                        if w == 0.0 {
                            continue;
                        }
                        mom[col].add(w, d1, d2);
                        let r = &mut rhs[li][col];
                        let v = w * q.value;
                        r[0] += v;
                        r[1] += v * d1;
                        r[2] += v * d2;
                    }
                }
            }
        }
    }
}

fn widen_point(
    prod: &RawCovProducts,
    spec: &KernelSpec,
    pts: &[f64],
    t: f64,
    s: f64,
    span: usize,
) -> Result<(Vec<[f64; 3]>, f64)> {
    point_fit(prod, &spec.with_bandwidth(spec.bandwidth * 2.0), pts, t, s, span)
}

/// Local-linear fit of every lag at a single `(t, s)`, doubling the bandwidth
/// until nonsingular. Returns per-lag `[d0, d1, d2]` and the bandwidth used.
pub(crate) fn point_fit(
    prod: &RawCovProducts,
    spec: &KernelSpec,
    pts: &[f64],
    t: f64,
    s: f64,
    span: usize,
) -> Result<(Vec<[f64; 3]>, f64)> {
    let nl = prod.lags().len();
    let mut k = *spec;
    for attempt in 0..MAX_WIDENING {
        if attempt > 0 {
            k = k.with_bandwidth(k.bandwidth * 2.0);
        }
        let mut mom = vec![Moments::default(); 1];
        let mut rhs = vec![vec![[0.0f64; 3]; 1]; nl];
        accumulate_row(prod, &k, pts, t, span, &mut mom, &mut rhs, Some((0, s)));
        let r: Vec<[f64; 3]> = (0..nl).map(|l| rhs[l][0]).collect();
        if let Some(x) = solve3(&mom[0].matrix(), &r) {
            return Ok((x, k.bandwidth));
        }
    }
    Err(PadaError::Numerical(format!("surface smoother singular at ({t}, {s}) for every bandwidth")))
}

impl LagSurfaces {
    /// `(L / 2 pi) sum_h e^{i h omega} a_h`, before any symmetrisation.
    pub fn slice(&self, g: usize, omega: f64) -> CMatrix {
        let scale = self.span as f64 / (2.0 * PI);
        let l = self.max_lag as i64;
        let phases: Vec<C64> = (-l..=l).map(|h| C64::from_polar(scale, h as f64 * omega)).collect();
        CMatrix::from_fn(g, g, |i, j| {
            let idx = i * g + j;
            phases.iter().zip(&self.coefs).fold(C64::new(0.0, 0.0), |acc, (p, c)| acc + p * c[idx])
        })
    }
}

/// Full estimator: lag-window surface smoothing, Hermitian and conjugate
/// symmetrisation, then PSD projection per frequency.
pub fn estimate_spectral_density(
    prod: &RawCovProducts,
    spec: &KernelSpec,
    grid: &TimeGrid,
    freqs: &FrequencyGrid,
    span: usize,
) -> Result<SpectralDensity> {
    estimate_spectral_density_with(prod, spec, grid, freqs, span, Parallelism::default())
}

pub fn estimate_spectral_density_with(
    prod: &RawCovProducts,
    spec: &KernelSpec,
    grid: &TimeGrid,
    freqs: &FrequencyGrid,
    span: usize,
    par: Parallelism,
) -> Result<SpectralDensity> {
    if span < 1 {
        return Err(PadaError::Parameter("lag window span must be at least 1".into()));
    }
    if span > prod.max_lag() + 1 {
        return Err(PadaError::Parameter(format!(
            "lag window {span} needs products up to lag {}, have {}",
            span - 1,
            prod.max_lag()
        )));
    }
    let surfaces = smooth_lag_surfaces(prod, spec, grid, span, par)?;
    let g = grid.len();
    let z = freqs.zero_index();
    let upper = par::map_indexed(par, freqs.len() - z, |i| surfaces.slice(g, freqs.omega(z + i)));
    let mut slices = vec![CMatrix::zeros(g, g); freqs.len()];
    for (i, m) in upper.into_iter().enumerate() {
        slices[z + i] = m;
    }
    let mut sd = SpectralDensity::from_slices(grid.clone(), freqs.clone(), slices)?;
    sd.project_psd(par);
    sd.diagnostics.widened_points = surfaces.widened_points;
    sd.diagnostics.max_bandwidth = surfaces.max_bandwidth;
    Ok(sd)
}
