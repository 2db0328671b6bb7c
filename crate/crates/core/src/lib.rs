//! Posterior contraction rates via Wasserstein dynamics: measures and
//! distances, exponential families, Laplace-type series, Poincaré constants,
//! concrete models, posterior approximation and the experiment harness.
//!
//! The numerical core (`measure`, `laplace`, `poincare`) is generic over the
//! scalar type; the aliases below fix it to `f64`.

pub mod error;
pub mod expfam;
pub mod harness;
pub mod laplace;
pub mod measure;
pub mod models;
pub mod poincare;
pub mod posterior;
pub mod quad;
pub mod scalar;

pub use error::{PcrError, Result};
pub use scalar::Scalar;

pub type EmpiricalMeasure64 = measure::EmpiricalMeasure<f64>;
pub type QuantileMeasure64 = measure::QuantileMeasure<f64>;
pub type WeightedPointCloud64 = measure::WeightedPointCloud<f64>;
pub type SpectralDecay64 = laplace::SpectralDecay<f64>;
pub type GridDensity1D64 = poincare::GridDensity1D<f64>;
