//! Out-of-sample embedding: the eigenfunction route for MDS and Isomap, the
//! landmark-formula route for Isomap, and the kernel-mapping route that works
//! for any fitted embedding (including the iterative ones).

use nalgebra::DMatrix;

use crate::distance::{dijkstra, knn_graph, pairwise_euclidean, NeighborGraph};
use crate::error::{MdsError, Result};
use crate::kernel::center_oos_kernel;
use crate::linalg::pseudo_inverse;
use crate::spectral::{IsomapState, Method, ResolvedKernel, SpectralModel};
use crate::types::{DataMatrix, Embedding, Scale};

/// Options for the eigenfunction route.
#[derive(Debug, Clone, Copy, Default)]
pub struct OosOptions {
    /// Allow test points to serve as shortest-path intermediates when
    /// computing out-of-sample geodesics (a cheaper approximation; off by
    /// default, which matches the training-only contract).
    pub test_points_as_intermediates: bool,
}

fn check_test_dim(train: &DataMatrix, test: &DataMatrix) -> Result<()> {
    if train.dim() != test.dim() {
        return Err(MdsError::ShapeError(format!(
            "test points have {} features, training data has {}",
            test.dim(),
            train.dim()
        )));
    }
    Ok(())
}

fn positive_leading_eigenvalues(model: &SpectralModel) -> Result<()> {
    for k in 0..model.p() {
        let ev = model.eigenvalues()[k];
        if ev <= 0.0 {
            return Err(MdsError::NonEmbeddableDirection {
                index: k,
                eigenvalue: ev,
            });
        }
    }
    Ok(())
}

/// Geodesic distances from each test point to every training point, using
/// only training points as intermediates: each test point attaches to its
/// `k` nearest training points and a shortest-path run fans out over the
/// stored training graph. Returns `n x n_t`.
fn test_geodesics(
    state: &IsomapState,
    train_x: &DataMatrix,
    x_t: &DataMatrix,
) -> Result<DMatrix<f64>> {
    let n = train_x.len();
    let n_t = x_t.len();
    let k = state.k;
    let mut out = DMatrix::zeros(n, n_t);
    for t in 0..n_t {
        let test_col = x_t.values().column(t);
        let mut near: Vec<(usize, f64)> = (0..n)
            .map(|i| (i, (train_x.values().column(i) - test_col).norm()))
            .collect();
        near.sort_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        let seeds = &near[..k.min(n)];
        let dist = dijkstra_from_virtual(&state.graph, seeds);
        for (i, d) in dist.iter().enumerate() {
            match d {
                Some(v) => out[(i, t)] = *v,
                None => {
                    return Err(MdsError::Disconnected {
                        components: state.graph.components(),
                    })
                }
            }
        }
    }
    Ok(out)
}

/// Dijkstra from a virtual source attached to `seeds` (node, weight) pairs.
fn dijkstra_from_virtual(graph: &NeighborGraph, seeds: &[(usize, f64)]) -> Vec<Option<f64>> {
    use ordered_float::OrderedFloat;
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let n = graph.len();
    let mut dist: Vec<Option<f64>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    for &(node, w) in seeds {
        heap.push(Reverse((OrderedFloat(w), node)));
    }
    while let Some(Reverse((OrderedFloat(du), u))) = heap.pop() {
        if dist[u].is_some() {
            continue;
        }
        dist[u] = Some(du);
        for &(v, w) in graph.neighbors(u) {
            if dist[v].is_none() {
                heap.push(Reverse((OrderedFloat(du + w), v)));
            }
        }
    }
    dist
}

/// Test geodesics under the test-as-intermediate approximation: the kNN
/// graph is rebuilt over the union of training and test points.
fn test_geodesics_joint(
    state: &IsomapState,
    train_x: &DataMatrix,
    x_t: &DataMatrix,
) -> Result<DMatrix<f64>> {
    let n = train_x.len();
    let n_t = x_t.len();
    let mut combined = DMatrix::zeros(train_x.dim(), n + n_t);
    combined
        .view_mut((0, 0), (train_x.dim(), n))
        .copy_from(train_x.values());
    combined
        .view_mut((0, n), (train_x.dim(), n_t))
        .copy_from(x_t.values());
    let combined = DataMatrix::new(combined)?;
    let d = pairwise_euclidean(&combined, Scale::Raw);
    let graph = knn_graph(&d, state.k)?;
    let mut out = DMatrix::zeros(n, n_t);
    for t in 0..n_t {
        let dist = dijkstra(&graph, n + t);
        for i in 0..n {
            match dist[i] {
                Some(v) => out[(i, t)] = v,
                None => {
                    return Err(MdsError::Disconnected {
                        components: graph.components(),
                    })
                }
            }
        }
    }
    Ok(out)
}

/// Raw train-vs-test kernel `K_t` (`n x n_t`) matching the model's training
/// kernel convention.
fn oos_kernel(model: &SpectralModel, x_t: &DataMatrix, opts: OosOptions) -> Result<DMatrix<f64>> {
    let train_x = model.train_x();
    check_test_dim(train_x, x_t)?;
    let n = train_x.len();
    let n_t = x_t.len();
    match model.method() {
        Method::ClassicalMds | Method::KernelMds { kind: ResolvedKernel::Linear } => {
            let xc = train_x.centered_at(model.train_mean());
            let xtc = x_t.centered_at(model.train_mean());
            Ok(xc.values().transpose() * xtc.values())
        }
        Method::KernelMds { kind: ResolvedKernel::Cosine } => {
            let train_norms: Vec<f64> = (0..n).map(|i| train_x.values().column(i).norm()).collect();
            for (t, norm) in (0..n_t).map(|t| (t, x_t.values().column(t).norm())) {
                if norm == 0.0 {
                    return Err(MdsError::DegenerateInput(format!(
                        "cosine kernel undefined: test point {t} has zero norm"
                    )));
                }
            }
            Ok(DMatrix::from_fn(n, n_t, |i, t| {
                train_x.values().column(i).dot(&x_t.values().column(t))
                    / (train_norms[i] * x_t.values().column(t).norm())
            }))
        }
        Method::KernelMds { kind: ResolvedKernel::Rbf { bandwidth } } => {
            let denom = 2.0 * bandwidth * bandwidth;
            Ok(DMatrix::from_fn(n, n_t, |i, t| {
                let d2 = (train_x.values().column(i) - x_t.values().column(t)).norm_squared();
                (-d2 / denom).exp()
            }))
        }
        Method::Isomap { .. } => {
            let state = model
                .isomap_state()
                .ok_or_else(|| MdsError::ModelFormat("Isomap model lacks geodesic state".into()))?;
            let d_t = if opts.test_points_as_intermediates {
                test_geodesics_joint(state, train_x, x_t)?
            } else {
                test_geodesics(state, train_x, x_t)?
            };
            Ok(d_t.map(|v| -0.5 * v * v))
        }
        Method::KernelIsomap { c_used, .. } => {
            let state = model
                .isomap_state()
                .ok_or_else(|| MdsError::ModelFormat("Isomap model lacks geodesic state".into()))?;
            let d_t = if opts.test_points_as_intermediates {
                test_geodesics_joint(state, train_x, x_t)?
            } else {
                test_geodesics(state, train_x, x_t)?
            };
            let c = *c_used;
            Ok(d_t.map(|v| {
                let shifted = if v > 0.0 { v + c } else { 0.0 };
                -0.5 * shifted * shifted
            }))
        }
    }
}

/// Eigenfunction out-of-sample embedding
/// `y_k(x) = (1/sqrt(delta_k)) sum_i v_ki centered_k_t(x_i, x)`.
///
/// Embedding a training point re-presented as a test point reproduces its
/// training coordinates.
pub fn oos_embed_eigen(model: &SpectralModel, x_t: &DataMatrix) -> Result<Embedding> {
    oos_embed_eigen_with(model, x_t, OosOptions::default())
}

/// [`oos_embed_eigen`] with explicit options.
pub fn oos_embed_eigen_with(
    model: &SpectralModel,
    x_t: &DataMatrix,
    opts: OosOptions,
) -> Result<Embedding> {
    positive_leading_eigenvalues(model)?;
    let k_t = oos_kernel(model, x_t, opts)?;
    let centered = center_oos_kernel(model.train_kernel(), &k_t)?;
    let p = model.p();
    let n = model.len();
    let n_t = x_t.len();
    let mut y = DMatrix::zeros(p, n_t);
    for k in 0..p {
        let inv_sqrt = 1.0 / model.eigenvalues()[k].sqrt();
        for t in 0..n_t {
            let mut acc = 0.0;
            for i in 0..n {
                acc += model.eigenvectors()[(i, k)] * centered[(i, t)];
            }
            y[(k, t)] = inv_sqrt * acc;
        }
    }
    Embedding::new(y)
}

/// Landmark-formula out-of-sample embedding for Isomap:
/// `y_k(x) = (1/(2 sqrt(delta_k))) sum_i v_ki (avg_i - d_t^2(x_i, x))`
/// where `avg_i` is the mean squared training geodesic anchored at `x_i`.
/// Equivalent to the eigenfunction route for Isomap models.
pub fn oos_embed_isomap_landmark_formula(
    model: &SpectralModel,
    x_t: &DataMatrix,
) -> Result<Embedding> {
    let state = match model.method() {
        Method::Isomap { .. } => model
            .isomap_state()
            .ok_or_else(|| MdsError::ModelFormat("Isomap model lacks geodesic state".into()))?,
        other => {
            return Err(MdsError::UnsupportedRoute(format!(
                "landmark-formula route requires an Isomap model, got {other:?}"
            )))
        }
    };
    positive_leading_eigenvalues(model)?;
    check_test_dim(model.train_x(), x_t)?;

    let n = model.len();
    let n_t = x_t.len();
    let d_t = test_geodesics(state, model.train_x(), x_t)?;
    let geo2 = state.geodesics.squared();
    let row_mean_sq: Vec<f64> = (0..n)
        .map(|i| geo2.values().row(i).sum() / n as f64)
        .collect();

    let p = model.p();
    let mut y = DMatrix::zeros(p, n_t);
    for k in 0..p {
        let coef = 1.0 / (2.0 * model.eigenvalues()[k].sqrt());
        for t in 0..n_t {
            let mut acc = 0.0;
            for i in 0..n {
                let dt2 = d_t[(i, t)] * d_t[(i, t)];
                acc += model.eigenvectors()[(i, k)] * (row_mean_sq[i] - dt2);
            }
            y[(k, t)] = coef * acc;
        }
    }
    Embedding::new(y)
}

/// Fitted kernel-mapping regression: out-of-sample points embed as convex
/// combinations `Y_t = K''_t A` of the learned coefficient rows.
#[derive(Debug, Clone)]
pub struct KernelMap {
    /// `n x p` coefficient matrix (row `j` is `alpha_j^T`).
    coefficients: DMatrix<f64>,
    /// Per-training-point Gaussian bandwidths `sigma_j`.
    bandwidths: Vec<f64>,
    gamma: f64,
    train_x: DataMatrix,
}

impl KernelMap {
    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn train_x(&self) -> &DataMatrix {
        &self.train_x
    }

    /// Embedding dimension `p`.
    pub fn dim(&self) -> usize {
        self.coefficients.ncols()
    }

    /// Recomputes the row-normalized training kernel `K''`.
    pub fn training_matrix(&self) -> DMatrix<f64> {
        normalized_kernel(self.train_x.values(), self.train_x.values(), &self.bandwidths)
    }

    pub(crate) fn from_parts(
        coefficients: DMatrix<f64>,
        bandwidths: Vec<f64>,
        gamma: f64,
        train_x: DataMatrix,
    ) -> Result<Self> {
        if coefficients.nrows() != train_x.len() || bandwidths.len() != train_x.len() {
            return Err(MdsError::ShapeError(
                "kernel map parts do not conform".into(),
            ));
        }
        Ok(Self {
            coefficients,
            bandwidths,
            gamma,
            train_x,
        })
    }
}

/// Rows indexed by columns of `a`, columns by columns of `b`:
/// `K(i,j) = k(a_i, b_j) / sum_l k(a_i, b_l)` with per-`j` bandwidths.
fn normalized_kernel(a: &DMatrix<f64>, b: &DMatrix<f64>, bandwidths: &[f64]) -> DMatrix<f64> {
    let rows = a.ncols();
    let cols = b.ncols();
    let mut out = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        let mut sum = 0.0;
        for j in 0..cols {
            let d2 = (a.column(i) - b.column(j)).norm_squared();
            let v = (-d2 / (2.0 * bandwidths[j] * bandwidths[j])).exp();
            out[(i, j)] = v;
            sum += v;
        }
        if sum > 0.0 {
            for j in 0..cols {
                out[(i, j)] /= sum;
            }
        }
    }
    out
}

/// Fits the kernel mapping `A = pinv(K'') Y^T` to an already-computed
/// embedding. `gamma` scales the per-point bandwidths
/// `sigma_j = gamma * min_{i != j} ||x_j - x_i||`.
pub fn kernel_map_fit(x: &DataMatrix, y: &Embedding, gamma: f64) -> Result<KernelMap> {
    if x.len() != y.len() {
        return Err(MdsError::ShapeError(format!(
            "embedding has {} points, data has {}",
            y.len(),
            x.len()
        )));
    }
    if x.len() < 2 {
        return Err(MdsError::DegenerateInput(
            "kernel map needs at least 2 points (bandwidths minimize over i != j)".into(),
        ));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(MdsError::DegenerateInput(format!(
            "gamma must be a positive real, got {gamma}"
        )));
    }
    let d = pairwise_euclidean(x, Scale::Raw);
    let n = x.len();
    let mut bandwidths = Vec::with_capacity(n);
    for j in 0..n {
        let min = (0..n)
            .filter(|&i| i != j)
            .map(|i| d.get(j, i))
            .fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            return Err(MdsError::DegenerateInput(format!(
                "duplicate training point {j}: sigma_j would be zero"
            )));
        }
        bandwidths.push(gamma * min);
    }
    let k2 = normalized_kernel(x.values(), x.values(), &bandwidths);
    let pinv = pseudo_inverse(&k2)?;
    let coefficients = pinv * y.coordinates().transpose();
    KernelMap::from_parts(coefficients, bandwidths, gamma, x.clone())
}

/// Applies a fitted kernel map to out-of-sample points: `Y_t = K''_t A`,
/// returned as `p x n_t`. If every kernel value of a test row underflows to
/// zero, the row falls back to the nearest training point's embedding.
pub fn kernel_map_apply(map: &KernelMap, x_t: &DataMatrix) -> Result<Embedding> {
    check_test_dim(&map.train_x, x_t)?;
    let n = map.train_x.len();
    let n_t = x_t.len();
    let mut k_t = DMatrix::zeros(n_t, n);
    for t in 0..n_t {
        let mut sum = 0.0;
        for j in 0..n {
            let d2 = (x_t.values().column(t) - map.train_x.values().column(j)).norm_squared();
            let v = (-d2 / (2.0 * map.bandwidths[j] * map.bandwidths[j])).exp();
            k_t[(t, j)] = v;
            sum += v;
        }
        if sum == 0.0 {
            // all kernel values underflow: evaluate the map at the nearest
            // training point instead, which reproduces its embedding
            let nearest = (0..n)
                .min_by(|&a, &b| {
                    let da = (x_t.values().column(t) - map.train_x.values().column(a)).norm();
                    let db = (x_t.values().column(t) - map.train_x.values().column(b)).norm();
                    da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("n >= 2");
            log::warn!(
                "kernel map row {t} underflowed; using nearest training point {nearest}"
            );
            let mut row_sum = 0.0;
            for j in 0..n {
                let d2 = (map.train_x.values().column(nearest)
                    - map.train_x.values().column(j))
                .norm_squared();
                let v = (-d2 / (2.0 * map.bandwidths[j] * map.bandwidths[j])).exp();
                k_t[(t, j)] = v;
                row_sum += v;
            }
            for j in 0..n {
                k_t[(t, j)] /= row_sum;
            }
        } else {
            for j in 0..n {
                k_t[(t, j)] /= sum;
            }
        }
    }
    let y_t = (k_t * &map.coefficients).transpose();
    Embedding::new(y_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::spectral::{fit_classical_mds, fit_isomap, fit_kernel_isomap, fit_kernel_mds};
    use approx::assert_abs_diff_eq;
    use manifold_oracles as oracles;
    use nalgebra::dmatrix;

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn eigen_route_reembeds_training_set_classical() {
        let x = DataMatrix::new(oracles::random_matrix(4, 15, 3)).unwrap();
        let (model, emb) = fit_classical_mds(&x, 2).unwrap();
        let oos = oos_embed_eigen(&model, &x).unwrap();
        assert!(max_abs_diff(oos.coordinates(), emb.coordinates()) <= 1e-8);
    }

    #[test]
    fn eigen_route_reembeds_training_set_rbf() {
        let x = DataMatrix::new(oracles::random_matrix(3, 12, 5)).unwrap();
        let (model, emb) =
            fit_kernel_mds(&x, &KernelSpec::Rbf { bandwidth: Some(1.2) }, 2).unwrap();
        let oos = oos_embed_eigen(&model, &x).unwrap();
        assert!(max_abs_diff(oos.coordinates(), emb.coordinates()) <= 1e-8);
    }

    #[test]
    fn eigen_route_reembeds_training_set_isomap() {
        let x = DataMatrix::new(oracles::random_matrix(3, 14, 9)).unwrap();
        let (model, emb) = fit_isomap(&x, 4, 2).unwrap();
        let oos = oos_embed_eigen(&model, &x).unwrap();
        assert!(max_abs_diff(oos.coordinates(), emb.coordinates()) <= 1e-8);
    }

    #[test]
    fn eigen_route_reembeds_training_set_kernel_isomap() {
        let x = DataMatrix::new(oracles::random_matrix(3, 14, 11)).unwrap();
        let (model, emb) = fit_kernel_isomap(&x, 4, 2).unwrap();
        let oos = oos_embed_eigen(&model, &x).unwrap();
        assert!(max_abs_diff(oos.coordinates(), emb.coordinates()) <= 1e-8);
    }

    #[test]
    fn eigen_route_single_training_point_matches_column() {
        let x = DataMatrix::new(oracles::random_matrix(4, 10, 21)).unwrap();
        let (model, emb) = fit_classical_mds(&x, 2).unwrap();
        let one = DataMatrix::new(x.values().columns(4, 1).into_owned()).unwrap();
        let oos = oos_embed_eigen(&model, &one).unwrap();
        assert!(
            max_abs_diff(
                oos.coordinates(),
                &emb.coordinates().columns(4, 1).into_owned()
            ) <= 1e-8
        );
        // y_k = sqrt(delta_k) v_ki, stated directly
        for k in 0..2 {
            let expect = model.eigenvalues()[k].sqrt() * model.eigenvectors()[(4, k)];
            assert_abs_diff_eq!(oos.coordinates()[(k, 0)], expect, epsilon = 1e-8);
        }
    }

    #[test]
    fn eigen_route_training_mean_embeds_to_zero() {
        let x = DataMatrix::new(oracles::random_matrix(3, 9, 2)).unwrap();
        let (model, _) = fit_classical_mds(&x, 2).unwrap();
        let mean = DataMatrix::new(DMatrix::from_column_slice(
            3,
            1,
            model.train_mean().as_slice(),
        ))
        .unwrap();
        let oos = oos_embed_eigen(&model, &mean).unwrap();
        assert!(oos.coordinates().iter().all(|v| v.abs() <= 1e-9));
    }

    #[test]
    fn eigen_route_is_columnwise_linear() {
        let x = DataMatrix::new(oracles::random_matrix(3, 10, 7)).unwrap();
        let (model, _) = fit_classical_mds(&x, 2).unwrap();
        let x_t = DataMatrix::new(oracles::random_matrix(3, 4, 8)).unwrap();
        let batch = oos_embed_eigen(&model, &x_t).unwrap();
        for t in 0..4 {
            let single =
                DataMatrix::new(x_t.values().columns(t, 1).into_owned()).unwrap();
            let one = oos_embed_eigen(&model, &single).unwrap();
            assert_eq!(
                one.coordinates().column(0),
                batch.coordinates().column(t),
                "batch embedding must equal per-point embedding exactly"
            );
        }
    }

    #[test]
    fn landmark_formula_recovers_duplicated_training_point() {
        let x = DataMatrix::new(oracles::random_matrix(3, 16, 13)).unwrap();
        let (model, emb) = fit_isomap(&x, 5, 2).unwrap();
        let dup = DataMatrix::new(x.values().columns(7, 1).into_owned()).unwrap();
        let oos = oos_embed_isomap_landmark_formula(&model, &dup).unwrap();
        assert!(
            max_abs_diff(
                oos.coordinates(),
                &emb.coordinates().columns(7, 1).into_owned()
            ) <= 1e-6
        );
    }

    #[test]
    fn landmark_formula_agrees_with_eigen_route() {
        let x = DataMatrix::new(oracles::random_matrix(3, 18, 17)).unwrap();
        let (model, _) = fit_isomap(&x, 5, 2).unwrap();
        let x_t = DataMatrix::new(oracles::random_matrix(3, 6, 18).map(|v| 0.8 * v)).unwrap();
        let a = oos_embed_eigen(&model, &x_t).unwrap();
        let mut b = oos_embed_isomap_landmark_formula(&model, &x_t)
            .unwrap()
            .coordinates()
            .clone();
        let dev = oracles::sign_aligned_max_deviation(a.coordinates(), &mut b);
        assert!(dev <= 1e-6, "route disagreement {dev}");
    }

    #[test]
    fn landmark_formula_rejects_non_isomap_models() {
        let x = DataMatrix::new(oracles::random_matrix(3, 8, 1)).unwrap();
        let (model, _) = fit_classical_mds(&x, 2).unwrap();
        assert!(matches!(
            oos_embed_isomap_landmark_formula(&model, &x),
            Err(MdsError::UnsupportedRoute(_))
        ));
    }

    #[test]
    fn isomap_fit_rejects_tiny_training_sets() {
        let x = DataMatrix::new(dmatrix![0.0, 1.0]).unwrap();
        assert!(matches!(
            fit_isomap(&x, 1, 1),
            Err(MdsError::DegenerateInput(_))
        ));
    }

    #[test]
    fn kernel_map_self_map_is_tight() {
        let x = DataMatrix::new(oracles::random_matrix(3, 12, 23)).unwrap();
        let (_, emb) = fit_classical_mds(&x, 2).unwrap();
        let map = kernel_map_fit(&x, &emb, 0.5).unwrap();
        let residual = max_abs_diff(
            &(map.training_matrix() * map.coefficients()),
            &emb.coordinates().transpose(),
        );
        assert!(residual <= 1e-6, "training self-map residual {residual}");
        let applied = kernel_map_apply(&map, &x).unwrap();
        assert!(max_abs_diff(applied.coordinates(), emb.coordinates()) <= 1e-6);
    }

    #[test]
    fn kernel_map_rejects_single_point_and_duplicates() {
        let x1 = DataMatrix::new(dmatrix![1.0]).unwrap();
        let y1 = Embedding::new(dmatrix![0.0]).unwrap();
        assert!(matches!(
            kernel_map_fit(&x1, &y1, 0.5),
            Err(MdsError::DegenerateInput(_))
        ));
        let x2 = DataMatrix::new(dmatrix![1.0, 1.0, 2.0]).unwrap();
        let y2 = Embedding::new(dmatrix![0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            kernel_map_fit(&x2, &y2, 0.5),
            Err(MdsError::DegenerateInput(_))
        ));
    }

    #[test]
    fn kernel_map_gamma_scaling_keeps_self_map() {
        let x = DataMatrix::new(oracles::random_matrix(2, 10, 29)).unwrap();
        let (_, emb) = fit_classical_mds(&x, 2).unwrap();
        for gamma in [0.5, 1.0] {
            let map = kernel_map_fit(&x, &emb, gamma).unwrap();
            let k2 = map.training_matrix();
            let svd = k2.clone().svd(false, false);
            let cond = svd.singular_values.max() / svd.singular_values.min().max(1e-300);
            if cond < 1e8 {
                let applied = kernel_map_apply(&map, &x).unwrap();
                assert!(
                    max_abs_diff(applied.coordinates(), emb.coordinates()) <= 1e-6,
                    "gamma {gamma}"
                );
            }
        }
    }

    #[test]
    fn kernel_map_rows_sum_to_one_and_outputs_are_convex() {
        let x = DataMatrix::new(oracles::random_matrix(2, 8, 31)).unwrap();
        let (_, emb) = fit_classical_mds(&x, 2).unwrap();
        let map = kernel_map_fit(&x, &emb, 0.5).unwrap();
        let k2 = map.training_matrix();
        for r in k2.row_iter() {
            assert_abs_diff_eq!(r.sum(), 1.0, epsilon = 1e-12);
            assert!(r.iter().all(|v| *v >= 0.0));
        }
        let x_t = DataMatrix::new(oracles::random_matrix(2, 3, 32).map(|v| 0.5 * v)).unwrap();
        // test rows renormalize to 1 as well
        let n = x.len();
        let mut k_t = DMatrix::zeros(3, n);
        for t in 0..3 {
            for j in 0..n {
                let d2 = (x_t.values().column(t) - x.values().column(j)).norm_squared();
                k_t[(t, j)] = (-d2 / (2.0 * map.bandwidths()[j].powi(2))).exp();
            }
            let s: f64 = k_t.row(t).sum();
            assert!(s > 0.0);
        }
        let _ = kernel_map_apply(&map, &x_t).unwrap();
    }

    #[test]
    fn kernel_map_exact_duplicate_test_point_peaks_at_twin() {
        let x = DataMatrix::new(oracles::random_matrix(2, 9, 37)).unwrap();
        let (_, emb) = fit_classical_mds(&x, 2).unwrap();
        let map = kernel_map_fit(&x, &emb, 0.5).unwrap();
        let dup = DataMatrix::new(x.values().columns(3, 1).into_owned()).unwrap();
        let out = kernel_map_apply(&map, &dup).unwrap();
        let target = emb.coordinates().column(3).into_owned();
        // kernel peaks at the duplicate; output is near the training column
        let gap = (out.coordinates().column(0) - &target).norm();
        assert!(gap <= 1e-3 * target.norm().max(1.0), "gap {gap}");
    }

    #[test]
    fn underflow_guard_snaps_to_nearest_neighbour() {
        let x = DataMatrix::new(dmatrix![0.0, 1.0; 0.0, 0.0]).unwrap();
        let y = Embedding::new(dmatrix![-0.5, 0.5]).unwrap();
        let map = kernel_map_fit(&x, &y, 0.5).unwrap();
        // test point absurdly far away: all kernel values underflow, and the
        // guard reproduces the nearest training point's embedding
        let far = DataMatrix::new(dmatrix![1e6; 0.0]).unwrap();
        let out = kernel_map_apply(&map, &far).unwrap();
        assert_abs_diff_eq!(out.coordinates()[(0, 0)], 0.5, epsilon = 1e-8);
    }

    #[test]
    fn test_as_intermediate_flag_approximates_training_route() {
        let x = DataMatrix::new(oracles::random_matrix(3, 14, 41)).unwrap();
        let (model, _) = fit_isomap(&x, 6, 2).unwrap();
        let x_t = DataMatrix::new(oracles::random_matrix(3, 3, 42).map(|v| 0.7 * v)).unwrap();
        let strict = oos_embed_eigen(&model, &x_t).unwrap();
        let opts = OosOptions { test_points_as_intermediates: true };
        let approx_route = oos_embed_eigen_with(&model, &x_t, opts).unwrap();
        assert_eq!(approx_route.dim(), 2);
        assert_eq!(approx_route.len(), 3);
        // the joint graph rewires paths, so this is an approximation; it
        // must stay in the same neighbourhood as the strict route
        let scale = strict
            .coordinates()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let dev = max_abs_diff(approx_route.coordinates(), strict.coordinates());
        assert!(dev <= 0.5 * scale.max(1.0), "approximation drifted: {dev}");
    }
}
