//! Geodesic orbit metrics on reductive spaces `(G1 × G2)/ΔK`.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common case.

pub mod algebra;
pub mod catalog;
pub mod cli;
pub mod error;
pub mod geodesic;
pub mod isotropy;
pub mod linalg;
pub mod representations;
pub mod scalar;
pub mod spaces;
pub mod weyl;

pub use error::{Error, Result};
pub use scalar::Real;

pub type LieAlgebraF64 = algebra::LieAlgebra<f64>;
pub type LieAlgebraF32 = algebra::LieAlgebra<f32>;
pub type RepresentationF64 = representations::Representation<f64>;
pub type RepresentationF32 = representations::Representation<f32>;
pub type EmbeddingF64 = spaces::Embedding<f64>;
pub type EmbeddingF32 = spaces::Embedding<f32>;
pub type SpaceF64 = spaces::ReductiveSpace<f64>;
pub type SpaceF32 = spaces::ReductiveSpace<f32>;
