//! Reconstruction, score forecasting and credible bands.

pub mod ar;
pub mod bands;
pub mod reconstruct;
pub mod var;

pub use ar::{fit_ar, ArModel};
pub use bands::{credible_bands, quantile, BandSpec, Bands, CurveBand, Horizon, DEFAULT_DRAWS};
pub use reconstruct::{assemble, extend_scores, forecast, reconstruct};
pub use var::{fit_var, VarModel};
