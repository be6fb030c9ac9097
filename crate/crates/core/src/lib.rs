//! Zigzag persistence of layer-wise attention graphs, vectorized barcodes and
//! a random-forest detector on top.

pub mod classify;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod vectorize;
pub mod zigzag;

pub use error::{Error, Result};
