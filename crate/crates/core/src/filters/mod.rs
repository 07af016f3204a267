//! Spectral eigensystems, the phase kernel, phase optimisation, and the
//! resulting functional filters.

pub mod bank;
pub mod eigen;
pub mod phase;
pub mod psi;

pub use bank::{build_component, build_filters, shift_filter, ComponentFilters, FilterBank};
pub use eigen::{align_phases, eigendecompose, eigendecompose_with, EigenDiagnostics, EigenSystem};
pub use phase::{optimize_phase, optimize_phase_seeded, PhaseResult, PhaseVector};
pub use psi::{build_psi_kernel, PsiKernel};
