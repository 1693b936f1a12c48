//! Shared numerical kernels: symmetric eigendecomposition, Moore-Penrose
//! pseudo-inverse, and double centering.

use nalgebra::{DMatrix, DVector};

use crate::error::{MdsError, Result};
use crate::types::{DistanceMatrix, EigenSystem, KernelMatrix, Scale};

/// Relative singular-value cutoff for pseudo-inversion.
pub const PINV_RELATIVE_TOL: f64 = 1e-12;

/// Eigendecomposition of a symmetric matrix.
///
/// The input is symmetrized as `(K + K^T) / 2` before factoring so callers do
/// not have to scrub rounding noise. Eigenvalues come back sorted descending;
/// each eigenvector's sign is canonicalized so its largest-magnitude entry is
/// positive, which makes downstream embeddings deterministic.
pub fn sym_eig(kernel: &KernelMatrix) -> Result<EigenSystem> {
    sym_eig_values(kernel.values())
}

/// [`sym_eig`] on a bare matrix (already-validated callers).
pub(crate) fn sym_eig_values(m: &DMatrix<f64>) -> Result<EigenSystem> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(MdsError::InvalidMatrix(
            "eigendecomposition input has non-finite entries".into(),
        ));
    }
    let sym = 0.5 * (m + m.transpose());
    let decomp = sym.symmetric_eigen();

    let n = decomp.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        decomp.eigenvalues[b]
            .partial_cmp(&decomp.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| decomp.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &decomp.eigenvectors.column(src));
    }
    canonicalize_signs(&mut eigenvectors);

    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

/// Flips each column so its largest-magnitude entry (first such entry on
/// ties) is positive.
pub(crate) fn canonicalize_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Moore-Penrose pseudo-inverse via SVD with singular values below
/// `1e-12 * sigma_max` treated as zero. An `m x n` input yields `n x m`.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(MdsError::InvalidMatrix(
            "pseudo-inverse input has non-finite entries".into(),
        ));
    }
    let (rows, cols) = m.shape();
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    if sigma_max == 0.0 {
        return Ok(DMatrix::zeros(cols, rows));
    }
    let cutoff = PINV_RELATIVE_TOL * sigma_max;
    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    // pinv = V * S^+ * U^T, assembled as (S^+ U^T) premultiplied by V^T's transpose
    let mut s_inv_ut = DMatrix::zeros(svd.singular_values.len(), rows);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let inv = 1.0 / s;
            for j in 0..rows {
                s_inv_ut[(i, j)] = inv * u[(j, i)];
            }
        }
    }
    Ok(v_t.transpose() * s_inv_ut)
}

/// Double centering of a SQUARED distance matrix: `K = -1/2 H D H` with
/// `H = I - (1/n) 1 1^T`, computed by subtracting row/column/grand means
/// instead of materializing `H`.
pub fn double_center(d: &DistanceMatrix) -> Result<KernelMatrix> {
    if d.scale() != Scale::Squared {
        return Err(MdsError::ScaleMismatch {
            expected: Scale::Squared.name(),
            found: d.scale().name(),
        });
    }
    KernelMatrix::new(double_center_values(d.values()))
}

/// The `-1/2 H M H` formula on a bare square matrix. Exposed to the kernel
/// module, which also applies it to raw (unsquared) geodesic distances.
pub(crate) fn double_center_values(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = m.row_iter().map(|r| r.sum() / nf).collect();
    let col_means: Vec<f64> = m.column_iter().map(|c| c.sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (m[(i, j)] - row_means[i] - col_means[j] + grand)
    })
}

/// Kernel centering `H K H` (no `-1/2` factor): removes row, column and
/// grand means. Idempotent on already-centered kernels.
pub(crate) fn center_kernel_values(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = m.row_iter().map(|r| r.sum() / nf).collect();
    let col_means: Vec<f64> = m.column_iter().map(|c| c.sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    DMatrix::from_fn(n, n, |i, j| {
        m[(i, j)] - row_means[i] - col_means[j] + grand
    })
}
