//! Per-curve filter evaluations linking stacked scores to observations.

use nalgebra::{DMatrix, DVector};

use crate::data::FtsDataset;
use crate::error::{PadaError, Result};
use crate::filters::FilterBank;
use crate::grid::TimeGrid;

/// Filters evaluated at each curve's observation times.
///
/// Scores are stacked component by component; component `k` occupies
/// `offset(k)..offset(k) + J + 2 L_k` and position `j + l + L_k - 1` holds
/// `xi_(j+l)k` for the 1-based curve index `j`.
#[derive(Debug, Clone)]
pub struct DesignStack {
    curves: usize,
    lags: Vec<usize>,
    offsets: Vec<usize>,
    /// Demeaned observations per curve.
    residuals: Vec<Vec<f64>>,
    /// `blocks[j][k]` is row-major `N_j x (2 L_k + 1)`.
    blocks: Vec<Vec<Vec<f64>>>,
}

impl DesignStack {
    pub fn new(data: &FtsDataset, mean: &[f64], grid: &TimeGrid, bank: &FilterBank) -> Result<Self> {
        if mean.len() != grid.len() {
            return Err(PadaError::Dimension(format!("mean length {} vs grid {}", mean.len(), grid.len())));
        }
        let lags = bank.lags();
        let residuals = data
            .curves()
            .iter()
            .map(|c| c.times().iter().zip(c.values()).map(|(&t, y)| y - grid.interpolate(mean, t)).collect())
            .collect();
        let blocks = data
            .curves()
            .iter()
            .map(|c| {
                bank.components()
                    .iter()
                    .map(|comp| {
                        let w = 2 * comp.lag + 1;
                        let mut b = Vec::with_capacity(c.len() * w);
                        for &t in c.times() {
                            for l in -(comp.lag as i64)..=comp.lag as i64 {
                                b.push(comp.eval(bank.grid(), l, t));
                            }
                        }
                        b
                    })
                    .collect()
            })
            .collect();
        Ok(Self::from_parts(data.len(), lags, residuals, blocks))
    }

    /// Assembles a stack from raw parts; block sizes are trusted.
    pub fn from_parts(curves: usize, lags: Vec<usize>, residuals: Vec<Vec<f64>>, blocks: Vec<Vec<Vec<f64>>>) -> Self {
        let mut offsets = Vec::with_capacity(lags.len());
        let mut acc = 0;
        for &l in &lags {
            offsets.push(acc);
            acc += curves + 2 * l;
        }
        Self { curves, lags, offsets, residuals, blocks }
    }

    pub fn curves(&self) -> usize {
        self.curves
    }

    pub fn components(&self) -> usize {
        self.lags.len()
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    pub fn component_dim(&self, k: usize) -> usize {
        self.curves + 2 * self.lags[k]
    }

    pub fn dim(&self) -> usize {
        (0..self.components()).map(|k| self.component_dim(k)).sum()
    }

    /// Demeaned observations of curve `j` (0-based).
    pub fn residuals(&self, j: usize) -> &[f64] {
        &self.residuals[j]
    }

    pub fn observations(&self) -> usize {
        self.residuals.iter().map(Vec::len).sum()
    }

    /// `(stacked column, filter value)` entries of observation `z` of curve `j`.
    pub(crate) fn row(&self, j: usize, z: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.components()).flat_map(move |k| {
            let w = 2 * self.lags[k] + 1;
            let base = self.offsets[k] + j;
            self.blocks[j][k][z * w..(z + 1) * w].iter().enumerate().map(move |(i, &v)| (base + i, v))
        })
    }

    /// Fitted value of observation `z` of curve `j`.
    pub fn predict(&self, j: usize, z: usize, xi: &[f64]) -> f64 {
        self.row(j, z).map(|(c, v)| v * xi[c]).sum()
    }

    /// `sum_j Phi_j' Phi_j` and `sum_j Phi_j' Y~_j` over the stacked design.
    pub fn normal_equations(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.dim();
        let mut gram = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for j in 0..self.curves {
            for (z, y) in self.residuals[j].iter().enumerate() {
                let row: Vec<(usize, f64)> = self.row(j, z).collect();
                for &(a, va) in &row {
                    rhs[a] += va * y;
                    for &(b, vb) in &row {
                        gram[(a, b)] += va * vb;
                    }
                }
            }
        }
        (gram, rhs)
    }

    /// Splits a stacked vector into per-component slices.
    pub fn split(&self, xi: &[f64]) -> Vec<Vec<f64>> {
        (0..self.components())
            .map(|k| xi[self.offsets[k]..self.offsets[k] + self.component_dim(k)].to_vec())
            .collect()
    }

    pub fn stack(&self, parts: &[Vec<f64>]) -> Result<Vec<f64>> {
        if parts.len() != self.components() {
            return Err(PadaError::Dimension(format!("{} score vectors vs {} components", parts.len(), self.components())));
        }
        let mut out = Vec::with_capacity(self.dim());
        for (k, p) in parts.iter().enumerate() {
            if p.len() != self.component_dim(k) {
                return Err(PadaError::Dimension(format!(
                    "component {k} scores have length {} vs {}",
                    p.len(),
                    self.component_dim(k)
                )));
            }
            out.extend_from_slice(p);
        }
        Ok(out)
    }
}
