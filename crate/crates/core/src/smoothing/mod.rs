//! Nonparametric estimation of the mean, the noise variance, and the
//! lag-window spectral density kernel from pooled sparse observations.

pub mod bandwidth;
pub mod kernel;
pub mod mean;
pub mod noise;
pub mod products;
pub mod spectral;

pub use bandwidth::{select_bandwidths, BandwidthChoice};
pub use kernel::{KernelFamily, KernelSpec};
pub use mean::{estimate_mean, estimate_mean_with, MeanEstimate, PooledObservations};
pub use noise::{estimate_noise_variance, NoiseEstimate};
pub use products::{collect_cov_products, CovProduct, LagProducts, PairCount, RawCovProducts};
pub use spectral::{
    bartlett_weight, estimate_spectral_density, estimate_spectral_density_with, SpectralDensity,
    SpectralDiagnostics,
};
