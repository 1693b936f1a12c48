//! Library side of the `manifold-embed` binary: CSV ingestion, synthetic
//! datasets, quality metrics, plotting, and the command implementations.

pub mod app;
pub mod error;
pub mod io;
pub mod plot;
pub mod quality;
pub mod synth;

pub use error::{AppError, Result};
