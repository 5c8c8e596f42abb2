//! Amenity clustering, economic complexity and market-boundary analysis for
//! point-of-interest shop data.

pub mod artifacts;
pub mod cluster;
pub mod complexity;
pub mod econometrics;
pub mod error;
pub mod geo;
pub mod ingest;
pub mod market;
pub mod sampling;
pub mod synth;

pub use error::{Error, Result};
