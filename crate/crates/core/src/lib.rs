//! Bayesian compressive sensing decoded by belief propagation over sparse
//! sign measurement matrices.
//!
//! * [`signal`]: two-state mixture Gaussian prior and signal sampling.
//! * [`matrix`]: sparse `{-1, 0, +1}` matrices with constant row weight.
//! * [`grid`] and [`mog`]: the two message codecs (sampled densities and
//!   Gaussian mixtures).
//! * [`decoder`]: the damped belief-propagation decoder.
//! * [`oracles`]: exact enumeration posterior, IHT, the median-sketch
//!   decoder, and norm-bound validation.

pub mod decoder;
pub mod error;
pub mod graph;
pub mod grid;
pub mod matrix;
pub mod mog;
pub mod oracles;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
