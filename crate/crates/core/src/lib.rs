//! Exact arithmetic for quantum tori T(H, alpha): Heisenberg groups, theta
//! multipliers and quantized theta functions over a formal base field.
//!
//! Scalars are truncated Laurent series in u = q^{1/2} over Q(zeta_m); every
//! series tracks the order through which it is known.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod corpus;
pub mod error;
pub mod heisenberg;
pub mod json;
pub mod lattice;
pub mod linalg;
pub mod multiplier;
pub mod par;
pub mod qtorus;
pub mod scalar_ring;
pub mod small_heisenberg;

pub use error::{Error, Result};
