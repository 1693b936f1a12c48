//! Nystrom approximation and landmark MDS / landmark Isomap: embed large
//! point sets from an `m x m` landmark block plus an `m x (n-m)` cross block
//! instead of a full `n x n` eigenproblem.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distance::{dijkstra, knn_graph, pairwise_euclidean};
use crate::error::{MdsError, Result};
use crate::linalg::sym_eig_values;
use crate::types::{DataMatrix, Embedding, KernelMatrix, Scale};

/// Relative eigenvalue cutoff below which the landmark block counts as
/// singular.
const SINGULAR_REL_TOL: f64 = 1e-12;

/// Landmark partition of a kernel matrix: the PSD landmark block `A`, the
/// cross block `B`, and where the landmarks sit in the original ordering.
#[derive(Debug, Clone)]
pub struct NystromParts {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    landmarks: Vec<usize>,
    n: usize,
}

impl NystromParts {
    /// Validates shapes, landmark indices (distinct, sorted, in range) and
    /// symmetry of `A` (within `1e-10`), symmetrizing rounding noise.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, landmarks: Vec<usize>, n: usize) -> Result<Self> {
        let m = landmarks.len();
        if m == 0 || m > n {
            return Err(MdsError::InvalidM { m, n });
        }
        if a.nrows() != m || a.ncols() != m {
            return Err(MdsError::ShapeError(format!(
                "landmark block is {}x{}, expected {m}x{m}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != m || b.ncols() != n - m {
            return Err(MdsError::ShapeError(format!(
                "cross block is {}x{}, expected {m}x{}",
                b.nrows(),
                b.ncols(),
                n - m
            )));
        }
        if landmarks.windows(2).any(|w| w[0] >= w[1]) || landmarks.iter().any(|&i| i >= n) {
            return Err(MdsError::InvalidMatrix(
                "landmark indices must be distinct, sorted and in range".into(),
            ));
        }
        let max_abs = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..m {
            for j in (i + 1)..m {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-10 * max_abs.max(1.0) {
                    return Err(MdsError::InvalidMatrix(format!(
                        "landmark block asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        let a = 0.5 * (&a + a.transpose());
        Ok(Self { a, b, landmarks, n })
    }

    pub fn landmark_block(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn cross_block(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn landmarks(&self) -> &[usize] {
        &self.landmarks
    }

    pub fn m(&self) -> usize {
        self.landmarks.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Non-landmark indices, ascending.
    pub fn others(&self) -> Vec<usize> {
        let mut mark = vec![false; self.n];
        for &l in &self.landmarks {
            mark[l] = true;
        }
        (0..self.n).filter(|&i| !mark[i]).collect()
    }
}

/// `m` distinct uniform-random indices out of `n`, seeded and sorted.
pub fn select_landmarks(n: usize, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m == 0 || m > n {
        return Err(MdsError::InvalidM { m, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<usize> = rand::seq::index::sample(&mut rng, n, m).into_vec();
    picks.sort_unstable();
    Ok(picks)
}

/// Inverse (or spectral pseudo-inverse) of the landmark block.
fn landmark_block_inverse(a: &DMatrix<f64>, pseudo_fallback: bool) -> Result<DMatrix<f64>> {
    let eig = sym_eig_values(a)?;
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = SINGULAR_REL_TOL * max_abs;
    let singular = max_abs == 0.0 || eig.eigenvalues.iter().any(|v| v.abs() <= cutoff);
    if singular {
        if !pseudo_fallback {
            return Err(MdsError::SingularLandmarkBlock);
        }
        log::warn!("landmark block is numerically singular; using spectral pseudo-inverse");
    }
    let m = a.nrows();
    let mut inv = DMatrix::zeros(m, m);
    for k in 0..m {
        let ev = eig.eigenvalues[k];
        if ev.abs() <= cutoff {
            continue;
        }
        let col = eig.eigenvectors.column(k);
        let scale = 1.0 / ev;
        for i in 0..m {
            for j in 0..m {
                inv[(i, j)] += scale * col[i] * col[j];
            }
        }
    }
    Ok(inv)
}

/// Completes the full kernel `[[A, B], [B^T, B^T A^{-1} B]]`, reassembled in
/// the original index order. A numerically singular `A` falls back to a
/// spectral pseudo-inverse when `pseudo_fallback` is set, and errors
/// otherwise.
pub fn nystrom_complete(parts: &NystromParts, pseudo_fallback: bool) -> Result<KernelMatrix> {
    let inv = landmark_block_inverse(&parts.a, pseudo_fallback)?;
    let c = parts.b.transpose() * inv * &parts.b;
    let n = parts.n;
    let others = parts.others();
    let mut k = DMatrix::zeros(n, n);
    for (i, &li) in parts.landmarks.iter().enumerate() {
        for (j, &lj) in parts.landmarks.iter().enumerate() {
            k[(li, lj)] = parts.a[(i, j)];
        }
        for (j, &oj) in others.iter().enumerate() {
            k[(li, oj)] = parts.b[(i, j)];
            k[(oj, li)] = parts.b[(i, j)];
        }
    }
    for (i, &oi) in others.iter().enumerate() {
        for (j, &oj) in others.iter().enumerate() {
            k[(oi, oj)] = c[(i, j)];
        }
    }
    KernelMatrix::new(k)
}

/// Embeds all `n` points from the landmark parts: `A = U Sigma U^T`, then
/// landmarks map to `Sigma^(1/2) U^T` and the rest to `Sigma^(-1/2) U^T B`,
/// truncated to the leading `p` rows and restored to original column order.
pub fn landmark_embed(parts: &NystromParts, p: usize) -> Result<Embedding> {
    let m = parts.m();
    if p == 0 || p > m {
        return Err(MdsError::InvalidDimension { p, limit: m });
    }
    let eig = sym_eig_values(&parts.a)?;
    for k in 0..p {
        if eig.eigenvalues[k] <= 0.0 {
            return Err(MdsError::NonEmbeddableDirection {
                index: k,
                eigenvalue: eig.eigenvalues[k],
            });
        }
    }
    let others = parts.others();
    let mut y = DMatrix::zeros(p, parts.n);
    for k in 0..p {
        let sqrt_ev = eig.eigenvalues[k].sqrt();
        for (i, &li) in parts.landmarks.iter().enumerate() {
            y[(k, li)] = sqrt_ev * eig.eigenvectors[(i, k)];
        }
        for (j, &oj) in others.iter().enumerate() {
            let mut acc = 0.0;
            for i in 0..m {
                acc += eig.eigenvectors[(i, k)] * parts.b[(i, j)];
            }
            y[(k, oj)] = acc / sqrt_ev;
        }
    }
    Embedding::new(y)
}

/// Converts SQUARED-distance blocks into kernel blocks with means taken over
/// the `m` landmarks only:
/// `A_ij = -1/2 (E_ij - colmean_j(E) - rowmean_i(E) + grandmean(E))`,
/// `B_ij = -1/2 (F_ij - colmean_j(F) - rowmean_i(E))`.
///
/// The blocks must already be squared; nothing is squared here, so the
/// caller squares raw distances exactly once.
pub fn kernel_parts_from_distance_parts(
    e: &DMatrix<f64>,
    f: &DMatrix<f64>,
    scale: Scale,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if scale != Scale::Squared {
        return Err(MdsError::ScaleMismatch {
            expected: Scale::Squared.name(),
            found: scale.name(),
        });
    }
    let m = e.nrows();
    if e.ncols() != m {
        return Err(MdsError::ShapeError(format!(
            "landmark distance block is {}x{}, expected square",
            m,
            e.ncols()
        )));
    }
    if f.nrows() != m {
        return Err(MdsError::ShapeError(format!(
            "cross distance block has {} rows, expected {m}",
            f.nrows()
        )));
    }
    let mf = m as f64;
    let e_row_means: Vec<f64> = e.row_iter().map(|r| r.sum() / mf).collect();
    let e_col_means: Vec<f64> = e.column_iter().map(|c| c.sum() / mf).collect();
    let e_grand = e_row_means.iter().sum::<f64>() / mf;
    let a = DMatrix::from_fn(m, m, |i, j| {
        -0.5 * (e[(i, j)] - e_col_means[j] - e_row_means[i] + e_grand)
    });
    let f_col_means: Vec<f64> = f.column_iter().map(|c| c.sum() / mf).collect();
    let b = DMatrix::from_fn(m, f.ncols(), |i, j| {
        -0.5 * (f[(i, j)] - f_col_means[j] - e_row_means[i])
    });
    Ok((a, b))
}

/// Squared-distance blocks (`E`: landmark x landmark, `F`: landmark x other)
/// from per-landmark raw distance rows.
fn squared_blocks(
    rows: &[Vec<f64>],
    landmarks: &[usize],
    others: &[usize],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = landmarks.len();
    let mut e = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let v = rows[i][landmarks[j]];
            e[(i, j)] = v * v;
        }
    }
    // per-source shortest paths round independently; keep E exactly symmetric
    e = 0.5 * (&e + e.transpose());
    let f = DMatrix::from_fn(m, others.len(), |i, j| {
        let v = rows[i][others[j]];
        v * v
    });
    (e, f)
}

fn embed_from_distance_rows(
    rows: &[Vec<f64>],
    landmarks: Vec<usize>,
    n: usize,
    p: usize,
) -> Result<Embedding> {
    let mut mark = vec![false; n];
    for &l in &landmarks {
        mark[l] = true;
    }
    let others: Vec<usize> = (0..n).filter(|&i| !mark[i]).collect();
    let (e, f) = squared_blocks(rows, &landmarks, &others);
    let (a, b) = kernel_parts_from_distance_parts(&e, &f, Scale::Squared)?;
    let parts = NystromParts::new(a, b, landmarks, n)?;
    landmark_embed(&parts, p)
}

/// Landmark MDS: Euclidean distance rows from `m` random landmarks, kernel
/// blocks via [`kernel_parts_from_distance_parts`], Nystrom embedding.
/// Deterministic given the seed.
pub fn fit_landmark_mds(x: &DataMatrix, m: usize, p: usize, seed: u64) -> Result<Embedding> {
    let n = x.len();
    let landmarks = select_landmarks(n, m, seed)?;
    let rows: Vec<Vec<f64>> = landmarks
        .iter()
        .map(|&l| {
            (0..n)
                .map(|j| (x.values().column(l) - x.values().column(j)).norm())
                .collect()
        })
        .collect();
    embed_from_distance_rows(&rows, landmarks, n, p)
}

/// Landmark Isomap: geodesic distance rows from `m` single-source
/// shortest-path runs over the full kNN graph (never all pairs), then the
/// same Nystrom pipeline as landmark MDS.
pub fn fit_landmark_isomap(
    x: &DataMatrix,
    m: usize,
    k: usize,
    p: usize,
    seed: u64,
) -> Result<Embedding> {
    let n = x.len();
    let landmarks = select_landmarks(n, m, seed)?;
    let d = pairwise_euclidean(x, Scale::Raw);
    let graph = knn_graph(&d, k)?;
    let rows: Vec<Vec<f64>> = landmarks
        .par_iter()
        .map(|&l| dijkstra(&graph, l))
        .collect::<Vec<_>>()
        .into_iter()
        .map(|row| {
            row.into_iter()
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| MdsError::Disconnected {
                    components: graph.components(),
                })
        })
        .collect::<Result<_>>()?;
    embed_from_distance_rows(&rows, landmarks, n, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::double_center;
    use crate::spectral::fit_classical_mds;
    use crate::types::DistanceMatrix;
    use approx::assert_abs_diff_eq;
    use manifold_oracles as oracles;
    use nalgebra::{dmatrix, DVector};

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Random PSD matrix of the given rank: sum of r outer products.
    fn random_psd(n: usize, rank: usize, seed: u64) -> DMatrix<f64> {
        let basis = oracles::random_matrix(rank, n, seed);
        basis.transpose() * basis
    }

    fn partition(k: &DMatrix<f64>, landmarks: &[usize], n: usize) -> NystromParts {
        let mut mark = vec![false; n];
        for &l in landmarks {
            mark[l] = true;
        }
        let others: Vec<usize> = (0..n).filter(|&i| !mark[i]).collect();
        let a = DMatrix::from_fn(landmarks.len(), landmarks.len(), |i, j| {
            k[(landmarks[i], landmarks[j])]
        });
        let b = DMatrix::from_fn(landmarks.len(), others.len(), |i, j| {
            k[(landmarks[i], others[j])]
        });
        NystromParts::new(a, b, landmarks.to_vec(), n).unwrap()
    }

    #[test]
    fn select_full_set_is_identity() {
        assert_eq!(select_landmarks(5, 5, 0).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn select_single_and_determinism() {
        let one = select_landmarks(10, 1, 7).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0] < 10);
        assert_eq!(
            select_landmarks(40, 12, 99).unwrap(),
            select_landmarks(40, 12, 99).unwrap()
        );
        assert!(matches!(
            select_landmarks(3, 4, 0),
            Err(MdsError::InvalidM { .. })
        ));
    }

    #[test]
    fn nystrom_rank_one_exact() {
        let v = DVector::from_fn(8, |i, _| (i as f64 + 1.0) / 3.0);
        let k = &v * v.transpose();
        let parts = partition(&k, &[2], 8);
        let completed = nystrom_complete(&parts, true).unwrap();
        assert!(max_abs_diff(completed.values(), &k) <= 1e-8 * k.max());
    }

    #[test]
    fn nystrom_full_set_reconstruction() {
        let k = random_psd(6, 6, 3);
        let parts = partition(&k, &[0, 1, 2, 3, 4, 5], 6);
        let completed = nystrom_complete(&parts, false).unwrap();
        assert!(max_abs_diff(completed.values(), &k) <= 1e-12 * k.max().max(1.0));
    }

    #[test]
    fn nystrom_error_shrinks_with_more_landmarks() {
        let k = random_psd(40, 40, 11); // full rank
        let mut means = Vec::new();
        for m in [4usize, 10, 20, 36] {
            let mut total = 0.0;
            for seed in 0..6u64 {
                let landmarks = select_landmarks(40, m, seed).unwrap();
                let parts = partition(&k, &landmarks, 40);
                let completed = nystrom_complete(&parts, true).unwrap();
                total += max_abs_diff(completed.values(), &k);
            }
            means.push(total / 6.0);
        }
        for w in means.windows(2) {
            assert!(w[1] <= w[0] * 1.05, "error means not shrinking: {means:?}");
        }
    }

    #[test]
    fn nystrom_singular_block_requires_fallback() {
        let k = random_psd(10, 2, 5);
        let landmarks = vec![0, 3, 6, 9]; // m = 4 > rank 2: A singular
        let parts = partition(&k, &landmarks, 10);
        assert!(matches!(
            nystrom_complete(&parts, false),
            Err(MdsError::SingularLandmarkBlock)
        ));
        let completed = nystrom_complete(&parts, true).unwrap();
        // landmarks span the range with probability 1, so still exact
        assert!(max_abs_diff(completed.values(), &k) <= 1e-8 * k.max());
    }

    #[test]
    fn landmark_embed_full_set_matches_classical_mds() {
        let x = DataMatrix::new(oracles::random_matrix(3, 12, 9)).unwrap();
        let emb = fit_landmark_mds(&x, 12, 2, 0).unwrap();
        let (_, full) = fit_classical_mds(&x, 2).unwrap();
        let mut cand = emb.coordinates().clone();
        let dev = oracles::sign_aligned_max_deviation(full.coordinates(), &mut cand);
        assert!(dev <= 1e-8, "m = n deviation {dev}");
    }

    #[test]
    fn landmark_embed_preserves_distances_of_low_rank_data() {
        // intrinsically 3-dimensional data, m = 5 landmarks
        let x = DataMatrix::new(oracles::random_matrix(3, 30, 13)).unwrap();
        let emb = fit_landmark_mds(&x, 5, 3, 1).unwrap();
        let orig = pairwise_euclidean(&x, Scale::Raw);
        let got = pairwise_euclidean(
            &DataMatrix::new(emb.coordinates().clone()).unwrap(),
            Scale::Raw,
        );
        assert!(max_abs_diff(got.values(), orig.values()) <= 1e-6);
    }

    #[test]
    fn landmark_embed_single_landmark_defined() {
        let x = DataMatrix::new(dmatrix![0.0, 1.0, 5.0]).unwrap();
        let landmarks = vec![1usize];
        let rows = vec![vec![1.0, 0.0, 4.0]];
        let emb = embed_from_distance_rows(&rows, landmarks, 3, 1);
        // 1x1 landmark-centered block is all zero: nothing embeddable
        assert!(matches!(
            emb,
            Err(MdsError::NonEmbeddableDirection { .. })
        ));
        // two landmarks give a defined scalar problem
        let emb2 = fit_landmark_mds(&x, 2, 1, 0).unwrap();
        assert_eq!(emb2.dim(), 1);
        assert_eq!(emb2.len(), 3);
    }

    #[test]
    fn kernel_parts_full_set_equals_double_center() {
        let x = DataMatrix::new(oracles::random_matrix(2, 7, 21)).unwrap();
        let d2 = pairwise_euclidean(&x, Scale::Squared);
        let (a, b) = kernel_parts_from_distance_parts(
            d2.values(),
            &DMatrix::zeros(7, 0),
            Scale::Squared,
        )
        .unwrap();
        assert_eq!(b.ncols(), 0);
        let full = double_center(&d2).unwrap();
        assert!(max_abs_diff(&a, full.values()) <= 1e-12 * full.max_abs().max(1.0));
    }

    #[test]
    fn kernel_parts_two_landmark_example() {
        let e = dmatrix![0.0, 4.0; 4.0, 0.0];
        let (a, b) =
            kernel_parts_from_distance_parts(&e, &DMatrix::zeros(2, 0), Scale::Squared).unwrap();
        assert_abs_diff_eq!(a, dmatrix![1.0, -1.0; -1.0, 1.0], epsilon = 1e-12);
        assert_eq!(b.ncols(), 0);
    }

    #[test]
    fn kernel_parts_rejects_raw_blocks() {
        let e = dmatrix![0.0, 2.0; 2.0, 0.0];
        assert!(matches!(
            kernel_parts_from_distance_parts(&e, &DMatrix::zeros(2, 0), Scale::Raw),
            Err(MdsError::ScaleMismatch { .. })
        ));
    }

    #[test]
    fn kernel_parts_agree_with_landmark_centered_full_kernel() {
        // full-pipeline oracle: center the full squared-distance matrix with
        // means over the landmark set, partition it, and compare
        let x = DataMatrix::new(oracles::random_matrix(3, 11, 17)).unwrap();
        let n = x.len();
        let d2 = pairwise_euclidean(&x, Scale::Squared);
        let landmarks = select_landmarks(n, 4, 3).unwrap();
        let others: Vec<usize> = (0..n).filter(|i| !landmarks.contains(i)).collect();
        let m = landmarks.len() as f64;

        let col_mean = |j: usize| landmarks.iter().map(|&p| d2.get(p, j)).sum::<f64>() / m;
        let row_mean = |i: usize| landmarks.iter().map(|&q| d2.get(i, q)).sum::<f64>() / m;
        let grand = landmarks
            .iter()
            .map(|&p| landmarks.iter().map(|&q| d2.get(p, q)).sum::<f64>())
            .sum::<f64>()
            / (m * m);
        let centered =
            DMatrix::from_fn(n, n, |i, j| {
                -0.5 * (d2.get(i, j) - col_mean(j) - row_mean(i) + grand)
            });

        let e = DMatrix::from_fn(4, 4, |i, j| d2.get(landmarks[i], landmarks[j]));
        let f = DMatrix::from_fn(4, others.len(), |i, j| d2.get(landmarks[i], others[j]));
        let (a, b) = kernel_parts_from_distance_parts(&e, &f, Scale::Squared).unwrap();

        // landmark block matches exactly
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(
                    a[(i, j)],
                    centered[(landmarks[i], landmarks[j])],
                    epsilon = 1e-9
                );
            }
        }
        // cross block differs only by the constant grand-mean offset, which
        // the embedding annihilates (eigenvectors of A are orthogonal to 1)
        let offset = 0.5 * grand;
        for i in 0..4 {
            for (j, &oj) in others.iter().enumerate() {
                assert_abs_diff_eq!(
                    b[(i, j)] - centered[(landmarks[i], oj)],
                    offset,
                    epsilon = 1e-9
                );
            }
        }
        // and the two cross blocks give the same non-landmark embedding
        let parts_spec = NystromParts::new(a.clone(), b, landmarks.clone(), n).unwrap();
        let b_oracle = DMatrix::from_fn(4, others.len(), |i, j| {
            centered[(landmarks[i], others[j])]
        });
        let parts_oracle = NystromParts::new(a, b_oracle, landmarks, n).unwrap();
        let e1 = landmark_embed(&parts_spec, 2).unwrap();
        let e2 = landmark_embed(&parts_oracle, 2).unwrap();
        assert!(max_abs_diff(e1.coordinates(), e2.coordinates()) <= 1e-9);
    }

    #[test]
    fn landmark_isomap_runs_and_is_deterministic() {
        let x = DataMatrix::new(oracles::random_matrix(3, 40, 23)).unwrap();
        let a = fit_landmark_isomap(&x, 10, 6, 2, 5).unwrap();
        let b = fit_landmark_isomap(&x, 10, 6, 2, 5).unwrap();
        assert_eq!(a.coordinates(), b.coordinates());
    }

    #[test]
    fn landmark_isomap_propagates_disconnection() {
        let x = DataMatrix::new(dmatrix![0.0, 1.0, 2.0, 50.0, 51.0, 52.0]).unwrap();
        assert!(matches!(
            fit_landmark_isomap(&x, 3, 1, 1, 0),
            Err(MdsError::Disconnected { .. })
        ));
    }

    #[test]
    fn rank_sweep_low_m_worse_than_high_m() {
        // rank-3 data: m below 3+1 cannot capture the geometry
        let x = DataMatrix::new(oracles::random_matrix(3, 60, 31)).unwrap();
        let orig = pairwise_euclidean(&x, Scale::Raw);
        let err_for = |m: usize| {
            let emb = fit_landmark_mds(&x, m, 2, 4).unwrap();
            let got = pairwise_euclidean(
                &DataMatrix::new(emb.coordinates().clone()).unwrap(),
                Scale::Raw,
            );
            max_abs_diff(got.values(), orig.values())
        };
        // p=2 of rank-3 data always truncates something; more landmarks
        // should still not hurt on average
        assert!(err_for(30) <= err_for(3) * 1.5 + 1e-9);
    }
}
