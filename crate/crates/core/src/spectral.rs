//! Closed-form spectral embeddings: classical MDS, kernel classical MDS,
//! Isomap, kernel Isomap, plus a PCA path used as an equivalence oracle.
//!
//! Every method reduces to the same pipeline: build a kernel, double-center
//! it, eigendecompose, and read the embedding off `Y = Delta^(1/2) V^T`
//! truncated to the leading `p` rows. The fitted [`SpectralModel`] keeps
//! everything out-of-sample embedding needs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distance::{geodesic_distances, knn_graph, pairwise_euclidean, NeighborGraph};
use crate::error::{MdsError, Result};
use crate::kernel::{
    build_kernel, isomap_kernel_pair, kernel_isomap_correct, kernel_isomap_cstar, KernelSpec,
};
use crate::linalg::{center_kernel_values, sym_eig_values};
use crate::types::{DataMatrix, DistanceMatrix, Embedding, EigenSystem, KernelMatrix, Scale};

/// Tag identifying which spectral method produced a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Method {
    ClassicalMds,
    KernelMds { kind: ResolvedKernel },
    Isomap { k: usize },
    KernelIsomap { k: usize, c_used: f64 },
}

/// A kernel spec with every data-dependent default (RBF bandwidth) resolved,
/// so out-of-sample kernels can be rebuilt exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ResolvedKernel {
    Linear,
    Cosine,
    Rbf { bandwidth: f64 },
}

/// Geodesic state a fitted Isomap model carries for out-of-sample queries.
#[derive(Debug, Clone)]
pub struct IsomapState {
    pub k: usize,
    pub graph: NeighborGraph,
    pub geodesics: DistanceMatrix,
}

/// Fitted state of a spectral method: the eigensystem of the centered
/// training kernel, the uncentered training kernel (out-of-sample centering
/// needs it), and the training data. Immutable after fit.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    method: Method,
    /// Eigenvalues of the centered kernel, descending, unclamped.
    eigenvalues: DVector<f64>,
    /// Matching eigenvectors in columns; at least the leading `p`.
    eigenvectors: DMatrix<f64>,
    /// Uncentered training kernel.
    train_kernel: KernelMatrix,
    /// Training data as given.
    train_x: DataMatrix,
    /// Per-feature training mean.
    train_mean: DVector<f64>,
    p: usize,
    clamped_count: usize,
    isomap: Option<IsomapState>,
}

impl SpectralModel {
    pub fn method(&self) -> &Method {
        &self.method
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.train_x.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn train_kernel(&self) -> &KernelMatrix {
        &self.train_kernel
    }

    pub fn train_x(&self) -> &DataMatrix {
        &self.train_x
    }

    pub fn train_mean(&self) -> &DVector<f64> {
        &self.train_mean
    }

    /// Count of negative eigenvalues clamped to zero among the leading `p`.
    pub fn clamped_count(&self) -> usize {
        self.clamped_count
    }

    pub fn isomap_state(&self) -> Option<&IsomapState> {
        self.isomap.as_ref()
    }

    /// Reconstructs the training embedding `Y = Delta^(1/2) V^T` (leading
    /// `p` rows) from the stored eigensystem.
    pub fn training_embedding(&self) -> Embedding {
        embedding_from_eigen(&self.eigenvalues, &self.eigenvectors, self.p)
            .expect("stored eigensystem satisfies p <= n")
    }

    /// Rebuilds a model from stored parts; used by the serialization layer.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        method: Method,
        eigenvalues: DVector<f64>,
        eigenvectors: DMatrix<f64>,
        train_kernel: KernelMatrix,
        train_x: DataMatrix,
        train_mean: DVector<f64>,
        p: usize,
        clamped_count: usize,
        isomap: Option<IsomapState>,
    ) -> Result<Self> {
        let n = train_x.len();
        if eigenvalues.len() != n || eigenvectors.nrows() != n {
            return Err(MdsError::ShapeError(
                "eigensystem size does not match training set".into(),
            ));
        }
        if eigenvectors.ncols() < p {
            return Err(MdsError::ShapeError(format!(
                "model stores {} eigenvectors but p = {}",
                eigenvectors.ncols(),
                p
            )));
        }
        Ok(Self {
            method,
            eigenvalues,
            eigenvectors,
            train_kernel,
            train_x,
            train_mean,
            p,
            clamped_count,
            isomap,
        })
    }
}

/// `Y = Delta^(1/2) V^T`, leading `p` rows, with negative eigenvalues
/// clamped to zero.
fn embedding_from_eigen(
    eigenvalues: &DVector<f64>,
    eigenvectors: &DMatrix<f64>,
    p: usize,
) -> Result<Embedding> {
    let n = eigenvectors.nrows();
    if p > n {
        return Err(MdsError::InvalidDimension { p, limit: n });
    }
    let mut y = DMatrix::zeros(p, n);
    for k in 0..p {
        let scale = eigenvalues[k].max(0.0).sqrt();
        for i in 0..n {
            y[(k, i)] = scale * eigenvectors[(i, k)];
        }
    }
    Embedding::new(y)
}

/// Eigendecomposes a centered kernel and reads off the embedding; returns
/// the eigensystem, the embedding, and how many of the leading `p`
/// eigenvalues were negative (clamped).
fn embed_centered_kernel(centered: &DMatrix<f64>, p: usize) -> Result<(EigenSystem, Embedding, usize)> {
    let n = centered.nrows();
    if p == 0 || p > n {
        return Err(MdsError::InvalidDimension { p, limit: n });
    }
    let eig = sym_eig_values(centered)?;
    // rounding noise around zero is not a negative direction
    let tol = 1e-12 * eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let clamped = (0..p).filter(|&k| eig.eigenvalues[k] < -tol).count();
    if clamped > 0 {
        log::warn!("clamped {clamped} negative eigenvalue(s) among the leading {p}");
    }
    let emb = embedding_from_eigen(&eig.eigenvalues, &eig.eigenvectors, p)?;
    Ok((eig, emb, clamped))
}

/// Classical MDS (principal coordinates): eigendecomposition of the Gram
/// matrix of the centered data.
pub fn fit_classical_mds(x: &DataMatrix, p: usize) -> Result<(SpectralModel, Embedding)> {
    fit_linear_gram(x, p, Method::ClassicalMds)
}

fn fit_linear_gram(x: &DataMatrix, p: usize, method: Method) -> Result<(SpectralModel, Embedding)> {
    let (xc, mean) = x.centered();
    let gram = KernelMatrix::new(xc.values().transpose() * xc.values())?;
    let (eig, emb, clamped) = embed_centered_kernel(gram.values(), p)?;
    let model = SpectralModel {
        method,
        eigenvalues: eig.eigenvalues,
        eigenvectors: eig.eigenvectors,
        train_kernel: gram,
        train_x: x.clone(),
        train_mean: mean,
        p,
        clamped_count: clamped,
        isomap: None,
    };
    Ok((model, emb))
}

/// Kernel classical MDS: double-centers the chosen kernel and embeds it.
/// A LINEAR spec reproduces [`fit_classical_mds`] exactly.
pub fn fit_kernel_mds(
    x: &DataMatrix,
    spec: &KernelSpec,
    p: usize,
) -> Result<(SpectralModel, Embedding)> {
    let resolved = match spec {
        KernelSpec::Linear => ResolvedKernel::Linear,
        KernelSpec::Cosine => ResolvedKernel::Cosine,
        KernelSpec::Rbf { bandwidth } => ResolvedKernel::Rbf {
            bandwidth: match bandwidth {
                Some(s) => *s,
                None => {
                    let med = crate::kernel::median_pairwise_distance(x);
                    if med <= 0.0 {
                        return Err(MdsError::DegenerateInput(
                            "median pairwise distance is zero; supply an RBF bandwidth".into(),
                        ));
                    }
                    med
                }
            },
        },
        KernelSpec::Geodesic { k } => {
            // geodesic kernel MDS is exactly Isomap
            return fit_isomap(x, *k, p);
        }
    };
    if matches!(resolved, ResolvedKernel::Linear) {
        return fit_linear_gram(x, p, Method::KernelMds { kind: resolved });
    }
    let raw = build_kernel(
        x,
        &match &resolved {
            ResolvedKernel::Linear => unreachable!(),
            ResolvedKernel::Cosine => KernelSpec::Cosine,
            ResolvedKernel::Rbf { bandwidth } => KernelSpec::Rbf {
                bandwidth: Some(*bandwidth),
            },
        },
    )?;
    let centered = center_kernel_values(raw.values());
    let (eig, emb, clamped) = embed_centered_kernel(&centered, p)?;
    let mean = x.mean();
    let model = SpectralModel {
        method: Method::KernelMds { kind: resolved },
        eigenvalues: eig.eigenvalues,
        eigenvectors: eig.eigenvectors,
        train_kernel: raw,
        train_x: x.clone(),
        train_mean: mean,
        p,
        clamped_count: clamped,
        isomap: None,
    };
    Ok((model, emb))
}

fn isomap_prerequisites(x: &DataMatrix, k: usize) -> Result<(NeighborGraph, DistanceMatrix)> {
    if x.len() < 3 {
        return Err(MdsError::DegenerateInput(format!(
            "Isomap needs at least 3 points, got {}",
            x.len()
        )));
    }
    let d = pairwise_euclidean(x, Scale::Raw);
    let graph = knn_graph(&d, k)?;
    let geo = geodesic_distances(&graph)?;
    Ok((graph, geo))
}

/// Isomap: classical MDS on the double-centered squared geodesic distances.
pub fn fit_isomap(x: &DataMatrix, k: usize, p: usize) -> Result<(SpectralModel, Embedding)> {
    let (graph, geo) = isomap_prerequisites(x, k)?;
    // uncentered counterpart -1/2 D^2 is what out-of-sample centering expects
    let raw = KernelMatrix::new(geo.squared().values().map(|v| -0.5 * v))?;
    let centered = center_kernel_values(raw.values());
    let (eig, emb, clamped) = embed_centered_kernel(&centered, p)?;
    let mean = x.mean();
    let model = SpectralModel {
        method: Method::Isomap { k },
        eigenvalues: eig.eigenvalues,
        eigenvectors: eig.eigenvectors,
        train_kernel: raw,
        train_x: x.clone(),
        train_mean: mean,
        p,
        clamped_count: clamped,
        isomap: Some(IsomapState {
            k,
            graph,
            geodesics: geo,
        }),
    };
    Ok((model, emb))
}

/// Kernel Isomap: applies the additive-constant correction
/// `K' = K(D^2) + 2c K(D) + 1/2 c^2 H` with `c = c_used >= c_star` and embeds
/// the guaranteed-PSD `K'`.
pub fn fit_kernel_isomap(x: &DataMatrix, k: usize, p: usize) -> Result<(SpectralModel, Embedding)> {
    let corr = None;
    fit_kernel_isomap_with(x, k, p, corr)
}

/// Test seam: a caller may force the correction constant (e.g. `c_used = 0`
/// reduces kernel Isomap to plain Isomap when the kernel is already PSD).
pub fn fit_kernel_isomap_with(
    x: &DataMatrix,
    k: usize,
    p: usize,
    forced_c: Option<f64>,
) -> Result<(SpectralModel, Embedding)> {
    let (graph, geo) = isomap_prerequisites(x, k)?;
    let (k_d2, k_d) = isomap_kernel_pair(&geo)?;
    let mut corr = kernel_isomap_cstar(&k_d2, &k_d)?;
    if let Some(c) = forced_c {
        corr.c_used = c;
        corr.c_star = corr.c_star.min(c);
    }
    let k_prime = kernel_isomap_correct(&k_d2, &k_d, &corr)?;
    let (eig, emb, clamped) = embed_centered_kernel(k_prime.values(), p)?;
    // uncentered corrected kernel: -1/2 (D + c off-diagonal)^2 elementwise
    let c = corr.c_used;
    let n = geo.len();
    let raw = KernelMatrix::new(DMatrix::from_fn(n, n, |i, j| {
        let d = geo.get(i, j);
        let shifted = if d > 0.0 { d + c } else { 0.0 };
        -0.5 * shifted * shifted
    }))?;
    let mean = x.mean();
    let model = SpectralModel {
        method: Method::KernelIsomap { k, c_used: c },
        eigenvalues: eig.eigenvalues,
        eigenvectors: eig.eigenvectors,
        train_kernel: raw,
        train_x: x.clone(),
        train_mean: mean,
        p,
        clamped_count: clamped,
        isomap: Some(IsomapState {
            k,
            graph,
            geodesics: geo,
        }),
    };
    Ok((model, emb))
}

/// Fitted PCA state: the training mean and the projection onto the leading
/// left singular vectors, sign-matched to the returned embedding.
#[derive(Debug, Clone)]
pub struct PcaModel {
    mean: DVector<f64>,
    /// `d x p` projection matrix.
    components: DMatrix<f64>,
}

impl PcaModel {
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn p(&self) -> usize {
        self.components.ncols()
    }

    pub(crate) fn from_parts(mean: DVector<f64>, components: DMatrix<f64>) -> Result<Self> {
        if mean.len() != components.nrows() {
            return Err(MdsError::ShapeError(
                "PCA mean and components disagree on feature count".into(),
            ));
        }
        Ok(Self { mean, components })
    }

    /// Projects new points: `W^T (x - mean)`.
    pub fn transform(&self, x_t: &DataMatrix) -> Result<Embedding> {
        if x_t.dim() != self.mean.len() {
            return Err(MdsError::ShapeError(format!(
                "test points have {} features, PCA model has {}",
                x_t.dim(),
                self.mean.len()
            )));
        }
        let centered = x_t.centered_at(&self.mean);
        Embedding::new(self.components.transpose() * centered.values())
    }
}

/// PCA of the centered data with the fitted projection retained.
pub fn fit_pca_model(x: &DataMatrix, p: usize) -> Result<(PcaModel, Embedding)> {
    let limit = x.dim().min(x.len());
    if p == 0 || p > limit {
        return Err(MdsError::InvalidDimension { p, limit });
    }
    let (xc, mean) = x.centered();
    let svd = xc.values().clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let n = x.len();
    let d = x.dim();
    let mut y = DMatrix::zeros(p, n);
    let mut components = DMatrix::zeros(d, p);
    for k in 0..p {
        let sigma = svd.singular_values[k];
        // same sign convention as the eigen route: the largest-magnitude
        // coordinate of each embedding dimension is positive
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for i in 0..n {
            let v = sigma * v_t[(k, i)];
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        let flip = if sigma * v_t[(k, best)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            y[(k, i)] = flip * sigma * v_t[(k, i)];
        }
        for r in 0..d {
            components[(r, k)] = flip * u[(r, k)];
        }
    }
    Ok((PcaModel::from_parts(mean, components)?, Embedding::new(y)?))
}

/// PCA of the centered data: right singular vectors scaled by singular
/// values. Equivalent to classical MDS; kept as a cross-check oracle.
pub fn fit_pca(x: &DataMatrix, p: usize) -> Result<Embedding> {
    fit_pca_model(x, p).map(|(_, emb)| emb)
}
