use thiserror::Error;

#[derive(Debug, Error)]
pub enum PadaError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("truncation lag for component {component} exceeds cap {cap}: phase optimization failed to concentrate the filter")]
    TruncationCap { component: usize, cap: usize },

    #[error("filter for component {component} has imaginary residue {residue:.3e}")]
    ImaginaryResidue { component: usize, residue: f64 },

    #[error("posterior dimension {dim} exceeds dense-solve guard {guard}; use map_estimate instead")]
    DimensionGuard { dim: usize, guard: usize },
}

pub type Result<T> = std::result::Result<T, PadaError>;

pub(crate) fn dim_check(a: usize, b: usize, what: &str) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(PadaError::Dimension(format!("{what}: {a} vs {b}")))
    }
}
