//! Concurrent stochastic games with counterfactual responsibility,
//! bounded strategy-logic model checking and responsibility-aware
//! equilibria.

pub mod checker;
pub mod engine;
pub mod error;
pub mod logic;
pub mod model;
pub mod parametric;
pub mod responsibility;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Polynomials with double-precision coefficients.
pub type Poly = parametric::Polynomial<f64>;
/// Matrix games over doubles.
pub type MatrixGame = engine::MatrixGame<f64>;
