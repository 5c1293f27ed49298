//! Exact finite-stage computations for algebras of continuous functions with
//! values in normed rings isolated at zero.
//!
//! Spaces are finite, rings are quotients of Z with integer-valued norms, and
//! every norm is an exact [`scalars::NormValue`]. No floating point is used in
//! any verdict.

// Matrix code indexes several rows at once; `Expr::add` builds trees.
#![allow(
    clippy::needless_range_loop,
    clippy::should_implement_trait,
    clippy::too_many_arguments
)]

pub mod bases;
pub mod cech;
pub mod error;
pub mod exactness;
pub mod fixtures;
pub mod functions;
pub mod linalg;
pub mod modtensor;
pub mod scalars;
pub mod spaces;
pub mod spectrum;
pub mod weierstrass;

pub use error::{Error, Result};
