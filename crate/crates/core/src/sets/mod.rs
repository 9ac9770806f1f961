//! Set representations: zonotopes, matrix zonotopes and interval vectors.
//!
//! All values are immutable after construction. Zero-generator zonotopes are
//! ordinary values and stand for single points.

mod interval;
mod matrix_zonotope;
mod zonotope;

pub use interval::IntervalVector;
pub use matrix_zonotope::MatrixZonotope;
pub use zonotope::{Zonotope, DEFAULT_CONTAINMENT_TOL};
