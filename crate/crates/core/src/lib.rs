#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail positivity checks
#![allow(clippy::excessive_precision)]

//! Numerical toolkit for fractional polar projection bodies, fractional
//! perimeters, radial mean bodies and symmetrizations in dimensions 1-3.

pub mod bodies;
pub mod constants;
pub mod error;
pub mod fields;
pub mod fractional;
pub mod io;
pub mod radialmean;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::Direction;
