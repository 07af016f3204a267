//! Optimal functional filters for sparse functional time series.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod error;
pub mod filters;
pub mod forecast;
pub mod grid;
pub mod linalg;
pub mod par;
pub mod pipeline;
pub mod scores;
pub mod sim;
pub mod smoothing;

pub use config::ModelConfig;
pub use data::{FtsDataset, SampledCurve};
pub use error::{PadaError, Result};
pub use grid::{FrequencyGrid, TimeGrid, C64};
pub use par::Parallelism;
