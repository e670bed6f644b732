//! Exact and numerical tools for exchangeable binary measures.
//!
//! The crate decides whether an exchangeable law on `{0,1}^n` is a mixture of
//! i.i.d. laws (infinitely extendible), whether it is the marginal of an
//! exchangeable law on `l > n` sites, and provides the Curie-Weiss model
//! families, explicit signed extensions, and sampling from de Finetti style
//! Gaussian mixtures for general spin models.

pub mod curie_weiss;
pub mod definetti;
pub mod error;
pub mod extendibility;
pub mod extension;
mod fixed;
pub mod linalg;
pub mod measure;
pub mod moment;
pub mod quadrature;
pub mod scalar;
pub mod simplex;

pub use error::{Error, Result};
pub use measure::CountDistribution;
pub use scalar::{Scalar, Sign, DEFAULT_TOL};
