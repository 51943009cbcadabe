//! Wearable-sensor human activity recognition pipeline.
//!
//! End-to-end flow: raw recordings -> trial segmentation -> temporal windows
//! (SNOW/FNOW) -> hand-crafted time/frequency features -> base classifiers ->
//! voting ensemble -> leave-one-trial-out cross-validated metrics with 90%
//! confidence intervals.

pub mod classifiers;
pub mod dataio;
pub mod ensemble;
pub mod error;
pub mod features;
pub mod harness;
pub mod matrix;
pub mod rng;
pub mod windowing;

pub use error::{HarError, Result};
pub use matrix::Matrix;
