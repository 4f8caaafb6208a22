//! Numerical model of Colombeau generalized functions on the line and the
//! circle: nets, asymptotic classification, embeddings of distributions and
//! support decompositions.

pub mod embedding;
pub mod error;
pub mod geometry;
pub mod jet;
pub mod manifold;
pub mod mollifier;
pub mod nets;
pub mod quadrature;
pub mod scenario;
pub mod suppleness;

pub use error::{Error, Result};
