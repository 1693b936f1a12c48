//! Kernel construction: linear (Gram), cosine, RBF and geodesic kernels, the
//! kernel-Isomap PSD correction, and centered out-of-sample kernels.

use nalgebra::DMatrix;

use crate::distance::{geodesic_distances, knn_graph, pairwise_euclidean};
use crate::error::{MdsError, Result};
use crate::linalg::double_center_values;
use crate::types::{DataMatrix, DistanceMatrix, KernelMatrix, Scale};

/// Which kernel to build. `Rbf { bandwidth: None }` selects the median
/// heuristic (median pairwise RAW distance) at build time.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Linear,
    Cosine,
    Rbf { bandwidth: Option<f64> },
    Geodesic { k: usize },
}

impl KernelSpec {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            KernelSpec::Rbf {
                bandwidth: Some(s),
            } if *s <= 0.0 || !s.is_finite() => Err(MdsError::DegenerateInput(format!(
                "RBF bandwidth must be positive, got {s}"
            ))),
            KernelSpec::Geodesic { k } if *k == 0 || *k > n.saturating_sub(1) => {
                Err(MdsError::InvalidK { k: *k, n })
            }
            _ => Ok(()),
        }
    }
}

/// Additive-constant correction bounds for kernel Isomap: `c_star` is the
/// largest real eigenvalue of the 2n x 2n block matrix, and `c_used >= c_star`
/// is the constant actually applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsomapCorrection {
    pub c_star: f64,
    pub c_used: f64,
}

/// Median pairwise RAW Euclidean distance; the default RBF bandwidth when
/// none is supplied.
pub fn median_pairwise_distance(x: &DataMatrix) -> f64 {
    let d = pairwise_euclidean(x, Scale::Raw);
    let n = d.len();
    let mut offdiag = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            offdiag.push(d.get(i, j));
        }
    }
    if offdiag.is_empty() {
        return 1.0;
    }
    offdiag.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = offdiag.len() / 2;
    if offdiag.len() % 2 == 1 {
        offdiag[mid]
    } else {
        0.5 * (offdiag[mid - 1] + offdiag[mid])
    }
}

/// Builds the requested kernel over the columns of `x`.
///
/// LINEAR is the plain Gram matrix `X^T X` of the data as given (spectral
/// fits double-center it); COSINE normalizes inner products to unit norms;
/// RBF is `exp(-||x_i - x_j||^2 / (2 sigma^2))`; GEODESIC is the
/// double-centered squared geodesic distance matrix, i.e. the Isomap kernel.
pub fn build_kernel(x: &DataMatrix, spec: &KernelSpec) -> Result<KernelMatrix> {
    spec.validate(x.len())?;
    let m = x.values();
    let n = x.len();
    match spec {
        KernelSpec::Linear => KernelMatrix::new(m.transpose() * m),
        KernelSpec::Cosine => {
            let norms: Vec<f64> = (0..n).map(|i| m.column(i).norm()).collect();
            if let Some(i) = norms.iter().position(|&v| v == 0.0) {
                return Err(MdsError::DegenerateInput(format!(
                    "cosine kernel undefined: column {i} has zero norm"
                )));
            }
            let gram = m.transpose() * m;
            KernelMatrix::new(DMatrix::from_fn(n, n, |i, j| {
                gram[(i, j)] / (norms[i] * norms[j])
            }))
        }
        KernelSpec::Rbf { bandwidth } => {
            let sigma = match bandwidth {
                Some(s) => *s,
                None => {
                    let med = median_pairwise_distance(x);
                    if med <= 0.0 {
                        return Err(MdsError::DegenerateInput(
                            "median pairwise distance is zero; supply an RBF bandwidth".into(),
                        ));
                    }
                    med
                }
            };
            let d2 = pairwise_euclidean(x, Scale::Squared);
            let denom = 2.0 * sigma * sigma;
            KernelMatrix::new(d2.values().map(|v| (-v / denom).exp()))
        }
        KernelSpec::Geodesic { k } => {
            let d = pairwise_euclidean(x, Scale::Raw);
            let graph = knn_graph(&d, *k)?;
            let geo = geodesic_distances(&graph)?;
            isomap_kernel(&geo)
        }
    }
}

/// The Isomap kernel `-1/2 H (D^(g))^2 H` from RAW geodesic distances.
pub fn isomap_kernel(geodesics: &DistanceMatrix) -> Result<KernelMatrix> {
    if geodesics.scale() != Scale::Raw {
        return Err(MdsError::ScaleMismatch {
            expected: Scale::Raw.name(),
            found: geodesics.scale().name(),
        });
    }
    KernelMatrix::new(double_center_values(geodesics.squared().values()))
}

/// The kernel-Isomap pair `(K(D^2), K(D))`: centering applied to the squared
/// and to the raw geodesic distances respectively.
pub fn isomap_kernel_pair(geodesics: &DistanceMatrix) -> Result<(KernelMatrix, KernelMatrix)> {
    if geodesics.scale() != Scale::Raw {
        return Err(MdsError::ScaleMismatch {
            expected: Scale::Raw.name(),
            found: geodesics.scale().name(),
        });
    }
    let k_d2 = KernelMatrix::new(double_center_values(geodesics.squared().values()))?;
    let k_d = KernelMatrix::new(double_center_values(geodesics.values()))?;
    Ok((k_d2, k_d))
}

/// Safety margin applied above `c_star` so the corrected kernel stays PSD
/// under floating-point noise.
pub const C_STAR_MARGIN: f64 = 1e-6;

/// Smallest additive constant making the corrected kernel PSD, from the
/// largest real eigenvalue of the non-symmetric block matrix
/// `[[0, 2 K(D^2)], [-I, -4 K(D)]]`.
pub fn kernel_isomap_cstar(k_d2: &KernelMatrix, k_d: &KernelMatrix) -> Result<IsomapCorrection> {
    let n = k_d2.len();
    if k_d.len() != n {
        return Err(MdsError::ShapeError(format!(
            "kernel sizes differ: {} vs {}",
            n,
            k_d.len()
        )));
    }
    let mut block = DMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, n), (n, n)).copy_from(&(2.0 * k_d2.values()));
    block
        .view_mut((n, 0), (n, n))
        .copy_from(&(-1.0 * DMatrix::<f64>::identity(n, n)));
    block.view_mut((n, n), (n, n)).copy_from(&(-4.0 * k_d.values()));

    let schur = nalgebra::Schur::try_new(block, 1e-12, 0)
        .ok_or_else(|| MdsError::NumericalFailure("Schur iteration did not converge".into()))?;
    let eigs = schur
        .complex_eigenvalues();
    let c_star = eigs
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !c_star.is_finite() {
        return Err(MdsError::NumericalFailure(
            "block eigenvalues are not finite".into(),
        ));
    }
    // c_star <= 0 means the kernel is already PSD; zero shift (>= c_star)
    // keeps the dissimilarities untouched
    let c_used = if c_star > 0.0 {
        c_star * (1.0 + C_STAR_MARGIN)
    } else {
        0.0
    };
    Ok(IsomapCorrection { c_star, c_used })
}

/// The corrected kernel `K' = K(D^2) + 2c K(D) + 1/2 c^2 H`, PSD for
/// `c >= c_star`.
pub fn kernel_isomap_correct(
    k_d2: &KernelMatrix,
    k_d: &KernelMatrix,
    corr: &IsomapCorrection,
) -> Result<KernelMatrix> {
    let n = k_d2.len();
    if k_d.len() != n {
        return Err(MdsError::ShapeError(format!(
            "kernel sizes differ: {} vs {}",
            n,
            k_d.len()
        )));
    }
    if corr.c_used < corr.c_star {
        return Err(MdsError::InvalidCorrection {
            c_used: corr.c_used,
            c_star: corr.c_star,
        });
    }
    let c = corr.c_used;
    let nf = n as f64;
    let half_c2 = 0.5 * c * c;
    let mut k = k_d2.values() + 2.0 * c * k_d.values();
    for i in 0..n {
        for j in 0..n {
            let h = if i == j { 1.0 - 1.0 / nf } else { -1.0 / nf };
            k[(i, j)] += half_c2 * h;
        }
    }
    KernelMatrix::new(k)
}

/// Centers a raw train-vs-test kernel against the training kernel's
/// statistics:
/// `Kt - (1/n) 1 1^T Kt - (1/n) K 1 1^T + (1/n^2) 1 1^T K 1 1^T`.
///
/// `k` is the training kernel used at fit time (uncentered), `k_t` is the
/// raw `n x n_t` kernel between training and test points.
pub fn center_oos_kernel(k: &KernelMatrix, k_t: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = k.len();
    if k_t.nrows() != n {
        return Err(MdsError::ShapeError(format!(
            "train-test kernel has {} rows, expected {}",
            k_t.nrows(),
            n
        )));
    }
    let nf = n as f64;
    let train_row_means: Vec<f64> = k.values().row_iter().map(|r| r.sum() / nf).collect();
    let grand = train_row_means.iter().sum::<f64>() / nf;
    let test_col_means: Vec<f64> = k_t.column_iter().map(|c| c.sum() / nf).collect();
    Ok(DMatrix::from_fn(n, k_t.ncols(), |i, j| {
        k_t[(i, j)] - test_col_means[j] - train_row_means[i] + grand
    }))
}
