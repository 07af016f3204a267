use serde::{Deserialize, Serialize};

use crate::error::{PadaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Epanechnikov,
}

/// A scaled smoothing kernel `K_B(u) = K(u / B) / B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn epanechnikov(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(PadaError::Parameter(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self { family: KernelFamily::Epanechnikov, bandwidth })
    }

    pub fn with_bandwidth(self, bandwidth: f64) -> Self {
        Self { bandwidth, ..self }
    }

    /// Half-width of the support.
    pub fn support(&self) -> f64 {
        self.bandwidth
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        let x = u / self.bandwidth;
        match self.family {
            KernelFamily::Epanechnikov => {
                if x.abs() < 1.0 {
                    0.75 * (1.0 - x * x) / self.bandwidth
                } else {
                    0.0
                }
            }
        }
    }
}
