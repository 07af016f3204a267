//! Simulation study: generator, baselines and the Monte Carlo harness.

pub mod baseline;
pub mod bench;
pub mod generate;

pub use generate::{fourier_basis, filter_weights, generate, SimCase, SimData, SimSpec};
pub use baseline::{nonoptimal_dfpca_baseline, static_fpca_baseline, static_fpca_from, NonoptimalFit, StaticFit, StaticFpca};
pub use bench::{run_benchmark, BenchReport, Method, MethodReport, RepFailure, RepOutcome, Summary};
