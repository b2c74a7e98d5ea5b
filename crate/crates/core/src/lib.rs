//! Exact finite-time and relaxation-scale multi-point distributions of
//! periodic TASEP, together with a Monte Carlo cross-check.
//!
//! The numerical core is written against [`scalar::Field`]; the aliases
//! below fix the production scalar to double-precision complex numbers.

pub mod bethe;
pub mod error;
pub mod finite;
pub mod limits;
pub mod linalg;
pub mod model;
pub mod poly;
pub mod quad;
pub mod scalar;
pub mod sim;
pub mod symfun;
pub mod toeplitz;

pub use error::{Error, Result};
pub use model::{IcKind, InitialCondition, LimitCoordinates, LimitPoint, ModelParams, ObsPoint, ObservationSet, RandomIc};

pub type C64 = num_complex::Complex<f64>;
pub type Matrix64 = linalg::Matrix<C64>;
