//! GloVe-style word embeddings in Cartesian products of Poincaré balls.
//!
//! The crate covers the whole pipeline: corpus statistics, Riemannian
//! training of the metric GloVe objective, analogy solving via
//! gyro-parallelograms, a Gaussian-embedding hypernymy score, rank-based
//! evaluation, and δ-hyperbolicity estimation of co-occurrence-induced
//! metrics.

pub mod analogy;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod hyperbolicity;
pub mod hypernymy;
pub mod manifold;
pub mod par;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
