//! The Hermitian kernel `Psi_k(omega_l, omega_m) = <psi_k(.|omega_l), psi_k(.|omega_m)>`.

use serde::{Deserialize, Serialize};

use super::eigen::EigenSystem;
use crate::error::{PadaError, Result};
use crate::grid::C64;
use crate::linalg::{hermitize, CMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiKernel {
    matrix: CMatrix,
}

impl PsiKernel {
    /// Hermitises `matrix`.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() % 2 != 1 {
            return Err(PadaError::Dimension("psi kernel must be square of odd size 2s + 1".into()));
        }
        Ok(Self { matrix: hermitize(&matrix) })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `k` is 0-based.
pub fn build_psi_kernel(es: &EigenSystem, k: usize) -> Result<PsiKernel> {
    if k >= es.components() {
        return Err(PadaError::Parameter(format!("component {k} out of range")));
    }
    let w = es.grid().weights();
    let g = es.grid().len();
    let n = es.freqs().len();
    // columns sqrt(w) psi(. | omega); the kernel is the Gram matrix A^H A
    let a = CMatrix::from_fn(g, n, |r, c| es.eigenfunction(k, c)[r] * w[r].sqrt());
    PsiKernel::from_matrix(a.adjoint() * a)
}

/// Outer product `conj(g_l) g_m`.
pub fn rank_one_kernel(gamma: &[C64]) -> Result<PsiKernel> {
    let n = gamma.len();
    PsiKernel::from_matrix(CMatrix::from_fn(n, n, |l, m| gamma[l].conj() * gamma[m]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FrequencyGrid, TimeGrid};
    use std::f64::consts::PI;

    fn system(gamma: impl Fn(f64) -> C64) -> EigenSystem {
        let grid = TimeGrid::uniform(41).unwrap();
        let freqs = FrequencyGrid::new(5).unwrap();
        let p = grid.points().to_vec();
        let n = freqs.len();
        let f = (0..n)
            .map(|i| p.iter().map(|&t| gamma(freqs.omega(i)) * (2f64.sqrt() * (2.0 * PI * t).cos())).collect())
            .collect();
        EigenSystem::from_parts(grid, freqs, vec![vec![1.0; n]], vec![f]).unwrap()
    }

    #[test]
    fn constant_functions_give_all_ones() {
        let psi = build_psi_kernel(&system(|_| C64::new(1.0, 0.0)), 0).unwrap();
        for v in psi.matrix().iter() {
            assert!((v - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn separable_is_rank_one_outer_product() {
        let gamma = |w: f64| C64::from_polar(1.0, w);
        let es = system(gamma);
        let psi = build_psi_kernel(&es, 0).unwrap();
        let fr = es.freqs();
        for l in 0..psi.len() {
            for m in 0..psi.len() {
                let expect = gamma(fr.omega(l)).conj() * gamma(fr.omega(m));
                assert!((psi.matrix()[(l, m)] - expect).norm() < 1e-10);
            }
            assert!((psi.matrix()[(l, l)].re - 1.0).abs() < 1e-8);
        }
        assert_eq!(psi.matrix(), &psi.matrix().adjoint());
    }

    #[test]
    fn orthogonal_frequencies_give_zero_entry() {
        let grid = TimeGrid::uniform(41).unwrap();
        let freqs = FrequencyGrid::new(2).unwrap();
        let p = grid.points().to_vec();
        let c = |t: f64| C64::new(2f64.sqrt() * (2.0 * PI * t).cos(), 0.0);
        let s = |t: f64| C64::new(2f64.sqrt() * (2.0 * PI * t).sin(), 0.0);
        let f: Vec<Vec<C64>> = (0..5).map(|i| p.iter().map(|&t| if i == 3 { s(t) } else { c(t) }).collect()).collect();
        let mut f2 = f.clone();
        f2[1] = f[3].clone();
        let es = EigenSystem::from_parts(grid, freqs, vec![vec![1.0; 5]], vec![f2]).unwrap();
        let psi = build_psi_kernel(&es, 0).unwrap();
        assert!(psi.matrix()[(2, 3)].norm() < 1e-12);
    }
}
