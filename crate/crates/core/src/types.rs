//! Core domain types shared by every module: point sets, distance and kernel
//! matrices, eigen systems, and embeddings.
//!
//! All matrices are dense `f64` and column-major; a point set is `d x n` with
//! one point per column.

use nalgebra::{DMatrix, DVector};

use crate::error::{MdsError, Result};

/// Tolerance under which a distance matrix must be symmetric.
pub const DISTANCE_SYMMETRY_TOL: f64 = 1e-12;
/// Tolerance under which a kernel matrix must be symmetric.
pub const KERNEL_SYMMETRY_TOL: f64 = 1e-10;

/// Whether distance entries are plain Euclidean lengths or their squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Raw,
    Squared,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Raw => "raw",
            Scale::Squared => "squared",
        }
    }
}

/// A `d x n` point set, one point per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    /// Wraps a `d x n` matrix, rejecting empty shapes and non-finite entries.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(MdsError::InvalidMatrix(format!(
                "data matrix must be at least 1x1, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(MdsError::InvalidMatrix(
                "data matrix has non-finite entries".into(),
            ));
        }
        Ok(Self { values })
    }

    /// Feature count `d`.
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Point count `n`.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Per-feature mean over all points, length `d`.
    pub fn mean(&self) -> DVector<f64> {
        let n = self.len() as f64;
        DVector::from_iterator(
            self.dim(),
            self.values.row_iter().map(|r| r.sum() / n),
        )
    }

    /// Returns a copy with the given per-feature mean subtracted from every column.
    pub fn centered_at(&self, mean: &DVector<f64>) -> DataMatrix {
        let mut m = self.values.clone();
        for mut col in m.column_iter_mut() {
            col -= mean;
        }
        DataMatrix { values: m }
    }

    /// Centers at the point set's own mean; returns the centered set and the mean.
    pub fn centered(&self) -> (DataMatrix, DVector<f64>) {
        let mean = self.mean();
        (self.centered_at(&mean), mean)
    }
}

impl AsRef<DMatrix<f64>> for DataMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// Symmetric nonnegative `n x n` pairwise-distance matrix with zero diagonal,
/// tagged with its [`Scale`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: DMatrix<f64>,
    scale: Scale,
}

impl DistanceMatrix {
    /// Validates symmetry (to `1e-12`), nonnegativity, finiteness and a zero
    /// diagonal, then forces exact symmetry and an exactly-zero diagonal.
    pub fn new(mut values: DMatrix<f64>, scale: Scale) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(MdsError::InvalidMatrix(format!(
                "distance matrix must be square, got {}x{}",
                n,
                values.ncols()
            )));
        }
        for i in 0..n {
            if values[(i, i)].abs() > DISTANCE_SYMMETRY_TOL {
                return Err(MdsError::InvalidMatrix(format!(
                    "distance diagonal entry ({i},{i}) = {} is not zero",
                    values[(i, i)]
                )));
            }
            values[(i, i)] = 0.0;
            for j in (i + 1)..n {
                let (a, b) = (values[(i, j)], values[(j, i)]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(MdsError::InvalidMatrix(format!(
                        "distance entry ({i},{j}) is not finite"
                    )));
                }
                if (a - b).abs() > DISTANCE_SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(MdsError::InvalidMatrix(format!(
                        "distance matrix asymmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
                if a < 0.0 || b < 0.0 {
                    return Err(MdsError::InvalidMatrix(format!(
                        "negative distance at ({i},{j})"
                    )));
                }
                let v = 0.5 * (a + b);
                values[(i, j)] = v;
                values[(j, i)] = v;
            }
        }
        Ok(Self { values, scale })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Entry accessor.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Elementwise square of a RAW matrix (no-op clone when already SQUARED).
    pub fn squared(&self) -> DistanceMatrix {
        match self.scale {
            Scale::Squared => self.clone(),
            Scale::Raw => DistanceMatrix {
                values: self.values.map(|v| v * v),
                scale: Scale::Squared,
            },
        }
    }
}

/// Symmetric `n x n` kernel (similarity) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    values: DMatrix<f64>,
}

impl KernelMatrix {
    /// Validates squareness, finiteness and symmetry (to `1e-10`), then
    /// symmetrizes as `(K + K^T) / 2` to absorb rounding.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(MdsError::InvalidMatrix(format!(
                "kernel matrix must be square, got {}x{}",
                n,
                values.ncols()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(MdsError::InvalidMatrix(
                "kernel matrix has non-finite entries".into(),
            ));
        }
        let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = (values[(i, j)] - values[(j, i)]).abs();
                if gap > KERNEL_SYMMETRY_TOL * max_abs.max(1.0) {
                    return Err(MdsError::InvalidMatrix(format!(
                        "kernel matrix asymmetric at ({i},{j}) by {gap}"
                    )));
                }
            }
        }
        let values = 0.5 * (&values + values.transpose());
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Largest absolute entry (zero for an all-zero kernel).
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Eigendecomposition of a symmetric matrix: eigenvalues sorted descending,
/// eigenvector `k` in column `k`, signs canonicalized so the largest-magnitude
/// entry of each eigenvector is positive.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// A `p x n` embedding, one embedded point per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    coordinates: DMatrix<f64>,
}

impl Embedding {
    /// `p <= n` holds for fitted training embeddings and is enforced by the
    /// fit operations; out-of-sample batches may be smaller than `p`, so the
    /// type itself only requires finite entries.
    pub fn new(coordinates: DMatrix<f64>) -> Result<Self> {
        if !coordinates.iter().all(|v| v.is_finite()) {
            return Err(MdsError::InvalidMatrix(
                "embedding has non-finite entries".into(),
            ));
        }
        Ok(Self { coordinates })
    }

    /// Embedding dimension `p`.
    pub fn dim(&self) -> usize {
        self.coordinates.nrows()
    }

    /// Point count `n`.
    pub fn len(&self) -> usize {
        self.coordinates.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.coordinates.ncols() == 0
    }

    pub fn coordinates(&self) -> &DMatrix<f64> {
        &self.coordinates
    }
}

impl AsRef<DMatrix<f64>> for Embedding {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.coordinates
    }
}
