//! Optimal vector quantization laboratory.
//!
//! Builds L^r-optimal quantizers of probability laws on R^d, measures their
//! L^s distortion, computes the associated high-resolution constants and
//! uses quantizers as cubature formulas, including product quantizers of
//! Brownian motion.

pub mod asymptotics;
pub mod distributions;
pub mod error;
pub mod functional_wiener;
pub mod integrate;
pub mod mismatch;
pub mod norm;
pub mod quadrature_rd;
pub mod quantizer1d;
pub mod quantizer_nd;
pub mod rng;
pub mod special;

pub use distributions::{parse_density, Density, Support};
pub use error::{Error, Result};
pub use norm::Norm;

/// Version string recorded in every artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
