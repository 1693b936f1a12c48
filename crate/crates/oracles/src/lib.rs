//! Independent reference implementations used as test oracles.
//!
//! Everything here is deliberately naive (double loops, O(n^3) sweeps,
//! exhaustive enumeration) and shares no code with the library under test.
//! This crate is a dev-dependency only; it never ships.

use nalgebra::DMatrix;

/// Deterministic pseudo-random matrix in `[-1, 1)` from a splitmix-style
/// generator. Not statistically strong; only needs to be reproducible and
/// unstructured.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut state = seed.wrapping_add(0x9e3779b97f4a7c15);
    let mut next = move || {
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    DMatrix::from_fn(rows, cols, |_, _| next())
}

/// Uniform value in `[lo, hi)` derived from the same generator, for scalar needs.
pub fn random_values(count: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    random_matrix(1, count, seed)
        .iter()
        .map(|v| lo + (v + 1.0) / 2.0 * (hi - lo))
        .collect()
}

/// Naive per-pair Euclidean distances between columns of a `d x n` matrix.
pub fn naive_pairwise(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols();
    DMatrix::from_fn(n, n, |i, j| {
        let mut s = 0.0;
        for r in 0..x.nrows() {
            let diff = x[(r, i)] - x[(r, j)];
            s += diff * diff;
        }
        s.sqrt()
    })
}

/// O(n^3) Floyd-Warshall over an adjacency list with nonnegative weights.
/// Unreachable pairs come back as `f64::INFINITY`.
pub fn floyd_warshall(adjacency: &[Vec<(usize, f64)>]) -> DMatrix<f64> {
    let n = adjacency.len();
    let mut d = DMatrix::from_element(n, n, f64::INFINITY);
    for i in 0..n {
        d[(i, i)] = 0.0;
    }
    for (i, nbrs) in adjacency.iter().enumerate() {
        for &(j, w) in nbrs {
            if w < d[(i, j)] {
                d[(i, j)] = w;
                d[(j, i)] = w;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[(i, k)] + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    d
}

/// Central finite-difference gradient of `f` at `x`, step `h` per coordinate.
pub fn central_gradient<F>(f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for (i, gi) in g.iter_mut().enumerate() {
        let orig = probe[i];
        probe[i] = orig + h;
        let fp = f(&probe);
        probe[i] = orig - h;
        let fm = f(&probe);
        probe[i] = orig;
        *gi = (fp - fm) / (2.0 * h);
    }
    g
}

/// Second central difference `(f(x+h) - 2 f(x) + f(x-h)) / h^2` per coordinate.
pub fn central_second_diag<F>(f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let f0 = f(x);
    let mut out = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for (i, oi) in out.iter_mut().enumerate() {
        let orig = probe[i];
        probe[i] = orig + h;
        let fp = f(&probe);
        probe[i] = orig - h;
        let fm = f(&probe);
        probe[i] = orig;
        *oi = (fp - 2.0 * f0 + fm) / (h * h);
    }
    out
}

/// Exhaustive least-squares isotonic fit: enumerates every contiguous block
/// partition of `ys`, fits block means, keeps the feasible (nondecreasing)
/// candidates, returns the cheapest. Exponential; use for short sequences.
pub fn brute_force_isotonic(ys: &[f64]) -> Vec<f64> {
    let n = ys.len();
    assert!(n >= 1 && n <= 20, "exhaustive oracle is for short sequences");
    let mut best: Option<(f64, Vec<f64>)> = None;
    // bitmask over n-1 possible block boundaries
    for mask in 0u32..(1u32 << (n - 1)) {
        let mut fit = Vec::with_capacity(n);
        let mut start = 0usize;
        let mut feasible = true;
        let mut prev_mean = f64::NEG_INFINITY;
        for end in 0..n {
            let boundary = end == n - 1 || (mask >> end) & 1 == 1;
            if boundary {
                let block = &ys[start..=end];
                let mean = block.iter().sum::<f64>() / block.len() as f64;
                if mean < prev_mean - 1e-12 {
                    feasible = false;
                    break;
                }
                prev_mean = mean;
                fit.extend(std::iter::repeat_n(mean, block.len()));
                start = end + 1;
            }
        }
        if !feasible {
            continue;
        }
        let cost: f64 = fit.iter().zip(ys).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c - 1e-15) {
            best = Some((cost, fit));
        }
    }
    best.expect("at least the single-block partition is feasible").1
}

/// Pearson correlation between two equal-length samples.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

/// Flips rows of `candidate` (in place) to best match `reference`, then
/// returns the max absolute deviation. Embeddings are defined up to
/// per-dimension sign, so comparisons go through this.
pub fn sign_aligned_max_deviation(reference: &DMatrix<f64>, candidate: &mut DMatrix<f64>) -> f64 {
    assert_eq!(reference.shape(), candidate.shape());
    for r in 0..reference.nrows() {
        let dot: f64 = reference
            .row(r)
            .iter()
            .zip(candidate.row(r).iter())
            .map(|(a, b)| a * b)
            .sum();
        if dot < 0.0 {
            for v in candidate.row_mut(r).iter_mut() {
                *v = -*v;
            }
        }
    }
    (reference - &*candidate)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}
