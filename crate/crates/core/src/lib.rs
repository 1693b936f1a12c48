//! The MDS family of embedding methods: classical and kernel classical MDS,
//! metric and non-metric MDS, Sammon mapping, Isomap and kernel Isomap,
//! out-of-sample embedding (eigenfunction, landmark-formula, and
//! kernel-mapping routes), and Nystrom-based landmark variants for large
//! point sets.
//!
//! Conventions: a point set is a `d x n` matrix with one point per column;
//! an embedding is `p x n`. Fits are pure functions of their inputs plus an
//! explicit seed, and fitted models are immutable and safe to share across
//! threads for concurrent out-of-sample queries.

pub mod distance;
pub mod error;
pub mod iterative;
pub mod kernel;
pub mod landmark;
pub mod linalg;
pub mod model;
pub mod oos;
pub mod spectral;
pub mod types;

pub use error::{MdsError, Result};
pub use types::{DataMatrix, DistanceMatrix, Embedding, EigenSystem, KernelMatrix, Scale};
