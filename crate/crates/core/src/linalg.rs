//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{PadaError, Result};
use crate::grid::C64;

pub type CMatrix = DMatrix<C64>;

/// Eigenpairs of a Hermitian matrix, eigenvalues sorted descending.
pub struct SortedEigen {
    pub values: Vec<f64>,
    /// Column `i` pairs with `values[i]`.
    pub vectors: CMatrix,
}

pub fn hermitian_eigen(m: &CMatrix) -> SortedEigen {
    let e = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| e.eigenvectors[(r, order[c])]);
    SortedEigen { values, vectors }
}

/// Real symmetric eigendecomposition, eigenvalues sorted descending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| e.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `(M + M^H) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

pub fn cholesky_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, DVector<f64>)> {
    let chol = robust_cholesky(a)?;
    let x = chol.solve(b);
    Ok((chol, x))
}

/// Cholesky with a geometric jitter ladder on failure.
pub fn robust_cholesky(a: DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let n = a.nrows();
    if let Some(c) = a.clone().cholesky() {
        return Ok(c);
    }
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut jitter = 1e-12 * scale;
    for _ in 0..8 {
        let mut b = a.clone();
        for i in 0..n {
            b[(i, i)] += jitter;
        }
        if let Some(c) = b.cholesky() {
            log::warn!("cholesky needed diagonal jitter {jitter:.3e}");
            return Ok(c);
        }
        jitter *= 100.0;
    }
    Err(PadaError::Numerical("matrix is not positive definite".into()))
}

/// Symmetric square root of a PSD matrix (negative eigenvalues clipped).
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let lam = e.eigenvalues[k].max(0.0).sqrt();
        if lam == 0.0 {
            continue;
        }
        let v = e.eigenvectors.column(k);
        for j in 0..n {
            let vj = v[j] * lam;
            for i in 0..n {
                out[(i, j)] += v[i] * vj;
            }
        }
    }
    out
}

/// Solves the 3x3 system `a x = b` for two right-hand sides at once.
/// Returns `None` when `a` is numerically singular.
pub fn solve3(a: &[[f64; 3]; 3], rhs: &[[f64; 3]]) -> Option<Vec<[f64; 3]>> {
    let m = nalgebra::Matrix3::from_fn(|i, j| a[i][j]);
    let scale = m.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let lu = m.lu();
    let det = lu.determinant();
    // diagonal product bounds |det| for a PSD matrix
    let diag = a[0][0] * a[1][1] * a[2][2];
    if !(det.abs() > 1e-10 * diag.abs()) || diag == 0.0 {
        return None;
    }
    rhs.iter()
        .map(|r| lu.solve(&nalgebra::Vector3::new(r[0], r[1], r[2])).map(|x| [x[0], x[1], x[2]]))
        .collect()
}
