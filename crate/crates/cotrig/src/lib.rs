//! Co-design of dynamic output-feedback controllers and event-trigger rules
//! for LTI plants.
//!
//! The crate synthesizes controller and trigger parameters by solving linear
//! matrix inequalities with a built-in dense semidefinite-programming solver,
//! certifies the resulting closed loop, and validates designs by simulating
//! the hybrid (flow + jump) dynamics while measuring inter-transmission
//! statistics.

pub mod codesign;
pub mod error;
pub mod lmi;
pub mod matrix;
pub mod model;
pub mod scalar;
pub mod sdp;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default double-precision matrix type.
pub type MatF64 = matrix::Mat<f64>;
/// Default double-precision symmetric matrix type.
pub type SymMatF64 = matrix::SymMat<f64>;
