//! Stress-based iterative embeddings: metric MDS, Sammon mapping (full and
//! kNN-restricted), and non-metric MDS with monotone (isotonic) regression.
//!
//! All three run through one pair-sum engine with different weightings and
//! targets. Updates follow the diagonal quasi-Newton rule
//! `y <- y - eta * |d2c/dy2|^-1 * dc/dy` (or plain gradient descent), wrapped
//! in a step-halving safeguard so the recorded stress trace never increases.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distance::{knn_graph, pairwise_euclidean};
use crate::error::{MdsError, Result};
use crate::linalg::sym_eig_values;
use crate::types::{DataMatrix, DistanceMatrix, Embedding, Scale};

/// Floor substituted for coincident embedded points in gradient and second
/// derivative denominators.
const DY_FLOOR: f64 = 1e-12;
/// Maximum step halvings before an iteration gives up.
const MAX_HALVINGS: usize = 20;

/// Update rule for the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    GradientDescent,
    #[default]
    DiagonalQuasiNewton,
}

/// How the solver seeds its starting configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitStrategy {
    /// Classical MDS of the input distances; falls back to seeded random
    /// noise if the eigendecomposition fails.
    #[default]
    Spectral,
    /// Seeded small-amplitude random coordinates.
    Random,
}

/// Solver configuration.
#[derive(Debug, Clone)]
pub struct IterConfig {
    pub max_iters: usize,
    /// Sammon's "magic factor" step size.
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    /// Relative stress-change stopping threshold.
    pub tolerance: f64,
    /// Seed for random initialization (and the spectral-init fallback).
    pub seed: u64,
    /// `Some(k)` restricts the stress sums to the union-symmetrized kNN
    /// pairs of the input distances.
    pub neighbors: Option<usize>,
    pub init: InitStrategy,
}

impl Default for IterConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            learning_rate: 0.3,
            optimizer: Optimizer::default(),
            tolerance: 1e-7,
            seed: 0,
            neighbors: None,
            init: InitStrategy::default(),
        }
    }
}

/// Trace of one solver run. `stresses[0]` is the stress of the initial
/// configuration; entry `i >= 1` is the accepted stress of iteration `i`.
#[derive(Debug, Clone)]
pub struct StressReport {
    pub stresses: Vec<f64>,
    /// Step scale accepted at each recorded entry (1.0 for the initial row).
    pub step_scales: Vec<f64>,
    pub final_stress: f64,
    pub iterations: usize,
    pub halvings: usize,
}

impl StressReport {
    /// CSV rendering with header `iteration,stress,step_scale`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,stress,step_scale\n");
        for (i, (s, scale)) in self.stresses.iter().zip(&self.step_scales).enumerate() {
            out.push_str(&format!("{i},{s},{scale}\n"));
        }
        out
    }
}

fn check_conforming(d_x: &DistanceMatrix, y: &Embedding) -> Result<()> {
    if d_x.scale() != Scale::Raw {
        return Err(MdsError::ScaleMismatch {
            expected: Scale::Raw.name(),
            found: d_x.scale().name(),
        });
    }
    if d_x.len() != y.len() {
        return Err(MdsError::ShapeError(format!(
            "distance matrix is {}x{} but embedding has {} points",
            d_x.len(),
            d_x.len(),
            y.len()
        )));
    }
    Ok(())
}

fn embedded_distance(y: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (y.column(i) - y.column(j)).norm()
}

/// Metric MDS stress: `sqrt(sum_{j<i} (d_x - d_y)^2 / sum_{j<i} d_x^2)` when
/// normalized, `sqrt(sum_{j<i} (d_x - d_y)^2)` otherwise.
pub fn metric_stress(d_x: &DistanceMatrix, y: &Embedding, normalized: bool) -> Result<f64> {
    check_conforming(d_x, y)?;
    let n = d_x.len();
    let mut num = 0.0;
    let mut denom = 0.0;
    for i in 0..n {
        for j in 0..i {
            let dx = d_x.get(i, j);
            let dy = embedded_distance(y.coordinates(), i, j);
            num += (dx - dy) * (dx - dy);
            denom += dx * dx;
        }
    }
    if !normalized {
        return Ok(num.sqrt());
    }
    if denom == 0.0 {
        return Err(MdsError::DegenerateInput(
            "normalized stress undefined: all input distances are zero".into(),
        ));
    }
    Ok((num / denom).sqrt())
}

/// All unordered pairs `(i, j)` with `j < i`.
fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in 0..i {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Union-symmetrized kNN pairs of the input distances, as `(i, j)`, `j < i`.
fn knn_pairs(d_x: &DistanceMatrix, k: usize) -> Result<Vec<(usize, usize)>> {
    let graph = knn_graph(d_x, k)?;
    let mut pairs = Vec::new();
    for i in 0..graph.len() {
        for &(j, _) in graph.neighbors(i) {
            if j < i {
                pairs.push((i, j));
            }
        }
    }
    Ok(pairs)
}

fn sammon_check_pairs(d_x: &DistanceMatrix, pairs: &[(usize, usize)]) -> Result<f64> {
    let mut a = 0.0;
    for &(i, j) in pairs {
        let dx = d_x.get(i, j);
        if dx == 0.0 {
            return Err(MdsError::DegenerateInput(format!(
                "coincident input points ({j}, {i}): Sammon weights divide by d_x"
            )));
        }
        a += dx;
    }
    if a == 0.0 {
        return Err(MdsError::DegenerateInput(
            "Sammon normalizer is zero: no usable pairs".into(),
        ));
    }
    Ok(a)
}

/// Pair-sum objective `(1/a) sum_pairs w (t - d_y)^2` with per-pair weight
/// `w` and target `t`. Sammon uses `w = 1/d_x, t = d_x, a = sum d_x`; metric
/// MDS uses `w = 1, t = d_x`; non-metric MDS uses `w = 1` with monotone
/// targets.
struct PairObjective<'a> {
    pairs: &'a [(usize, usize)],
    weights: Vec<f64>,
    targets: Vec<f64>,
    normalizer: f64,
}

impl<'a> PairObjective<'a> {
    fn sammon(d_x: &'a DistanceMatrix, pairs: &'a [(usize, usize)]) -> Result<Self> {
        let a = sammon_check_pairs(d_x, pairs)?;
        let weights = pairs.iter().map(|&(i, j)| 1.0 / d_x.get(i, j)).collect();
        let targets = pairs.iter().map(|&(i, j)| d_x.get(i, j)).collect();
        Ok(Self {
            pairs,
            weights,
            targets,
            normalizer: a,
        })
    }

    fn metric(d_x: &'a DistanceMatrix, pairs: &'a [(usize, usize)], normalized: bool) -> Result<Self> {
        let targets: Vec<f64> = pairs.iter().map(|&(i, j)| d_x.get(i, j)).collect();
        let denom: f64 = targets.iter().map(|t| t * t).sum();
        if normalized && denom == 0.0 {
            return Err(MdsError::DegenerateInput(
                "normalized stress undefined: all input distances are zero".into(),
            ));
        }
        Ok(Self {
            pairs,
            weights: vec![1.0; pairs.len()],
            targets,
            normalizer: if normalized { denom } else { 1.0 },
        })
    }

    fn cost(&self, y: &DMatrix<f64>) -> f64 {
        let mut c = 0.0;
        for (idx, &(i, j)) in self.pairs.iter().enumerate() {
            let dy = embedded_distance(y, i, j);
            let gap = self.targets[idx] - dy;
            c += self.weights[idx] * gap * gap;
        }
        c / self.normalizer
    }

    /// `p x n` gradient; entry `(k, i)` sums over every pair containing `i`.
    fn gradient(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let (p, n) = y.shape();
        let mut g = DMatrix::zeros(p, n);
        for (idx, &(i, j)) in self.pairs.iter().enumerate() {
            let dy = embedded_distance(y, i, j).max(DY_FLOOR);
            let coef = -2.0 / self.normalizer * self.weights[idx] * (self.targets[idx] - dy) / dy;
            for k in 0..p {
                let diff = y[(k, i)] - y[(k, j)];
                g[(k, i)] += coef * diff;
                g[(k, j)] -= coef * diff;
            }
        }
        g
    }

    /// Diagonal of the second derivative, same shape as the gradient.
    fn hessian_diag(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let (p, n) = y.shape();
        let mut h = DMatrix::zeros(p, n);
        for (idx, &(i, j)) in self.pairs.iter().enumerate() {
            let dy = embedded_distance(y, i, j).max(DY_FLOOR);
            let w = self.weights[idx];
            let t = self.targets[idx];
            for k in 0..p {
                let diff = y[(k, i)] - y[(k, j)];
                let term = -2.0 / self.normalizer
                    * w
                    * ((t - dy) / dy - t * diff * diff / (dy * dy * dy));
                h[(k, i)] += term;
                h[(k, j)] += term;
            }
        }
        h
    }
}

/// Sammon's cost `c = (1/a) sum_{j<i} (d_x - d_y)^2 / d_x` with
/// `a = sum_{j<i} d_x`.
pub fn sammon_cost(d_x: &DistanceMatrix, y: &Embedding) -> Result<f64> {
    check_conforming(d_x, y)?;
    let pairs = all_pairs(d_x.len());
    let obj = PairObjective::sammon(d_x, &pairs)?;
    Ok(obj.cost(y.coordinates()))
}

/// Gradient of [`sammon_cost`] with respect to every embedded coordinate;
/// entry `(k, i)` sums over all partners `j != i` of point `i`.
pub fn sammon_gradient(d_x: &DistanceMatrix, y: &Embedding) -> Result<DMatrix<f64>> {
    check_conforming(d_x, y)?;
    let pairs = all_pairs(d_x.len());
    let obj = PairObjective::sammon(d_x, &pairs)?;
    Ok(obj.gradient(y.coordinates()))
}

/// Elementwise second derivative of [`sammon_cost`].
pub fn sammon_hessian_diag(d_x: &DistanceMatrix, y: &Embedding) -> Result<DMatrix<f64>> {
    check_conforming(d_x, y)?;
    let pairs = all_pairs(d_x.len());
    let obj = PairObjective::sammon(d_x, &pairs)?;
    Ok(obj.hessian_diag(y.coordinates()))
}

/// Classical-MDS initialization from the input distances, with a seeded
/// random fallback when the eigendecomposition fails.
fn initial_embedding(d_x: &DistanceMatrix, p: usize, cfg: &IterConfig) -> DMatrix<f64> {
    let n = d_x.len();
    if cfg.init == InitStrategy::Spectral {
        let centered = crate::linalg::double_center_values(d_x.squared().values());
        if let Ok(eig) = sym_eig_values(&centered) {
            let mut y = DMatrix::zeros(p, n);
            for k in 0..p.min(n) {
                let scale = eig.eigenvalues[k].max(0.0).sqrt();
                for i in 0..n {
                    y[(k, i)] = scale * eig.eigenvectors[(i, k)];
                }
            }
            return y;
        }
        log::warn!("spectral initialization failed; falling back to seeded random");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = 1e-2 * d_x.values().max() + 1e-3;
    DMatrix::from_fn(p, n, |_, _| rng.random_range(-scale..scale))
}

/// One safeguarded optimization run. `stress` maps the engine cost to the
/// reported stress (monotone), so the recorded trace is non-increasing.
fn optimize<S, G, H>(
    mut y: DMatrix<f64>,
    cfg: &IterConfig,
    mut stress: S,
    gradient: G,
    hessian: H,
) -> (DMatrix<f64>, StressReport)
where
    S: FnMut(&DMatrix<f64>) -> f64,
    G: Fn(&DMatrix<f64>) -> DMatrix<f64>,
    H: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let mut current = stress(&y);
    let mut stresses = vec![current];
    let mut step_scales = vec![1.0];
    let mut total_halvings = 0usize;
    let mut iterations = 0usize;

    for _ in 0..cfg.max_iters {
        let g = gradient(&y);
        let step = match cfg.optimizer {
            Optimizer::GradientDescent => cfg.learning_rate * &g,
            Optimizer::DiagonalQuasiNewton => {
                let h = hessian(&y);
                let mut s = g.clone();
                for (sv, hv) in s.iter_mut().zip(h.iter()) {
                    *sv *= cfg.learning_rate / hv.abs().max(DY_FLOOR);
                }
                s
            }
        };

        let mut scale = 1.0f64;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = &y - scale * &step;
            let cand_stress = stress(&cand);
            if cand_stress.is_finite() && cand_stress <= current {
                accepted = Some((cand, cand_stress, scale));
                break;
            }
            total_halvings += 1;
            scale *= 0.5;
        }
        let Some((cand, cand_stress, used_scale)) = accepted else {
            // no descent direction at the halving floor: stop where we are
            let _ = stress(&y); // restore any internal targets to the kept point
            break;
        };
        let previous = current;
        y = cand;
        current = cand_stress;
        iterations += 1;
        stresses.push(current);
        step_scales.push(used_scale);
        if (previous - current).abs() <= cfg.tolerance * previous.abs().max(1e-30) {
            break;
        }
    }

    let report = StressReport {
        final_stress: current,
        stresses,
        step_scales,
        iterations,
        halvings: total_halvings,
    };
    (y, report)
}

fn resolve_pairs(d_x: &DistanceMatrix, cfg: &IterConfig) -> Result<Vec<(usize, usize)>> {
    match cfg.neighbors {
        Some(k) => knn_pairs(d_x, k),
        None => Ok(all_pairs(d_x.len())),
    }
}

/// Sammon mapping from a RAW distance matrix.
pub fn fit_sammon_from_distances(
    d_x: &DistanceMatrix,
    p: usize,
    cfg: &IterConfig,
) -> Result<(Embedding, StressReport)> {
    if d_x.scale() != Scale::Raw {
        return Err(MdsError::ScaleMismatch {
            expected: Scale::Raw.name(),
            found: d_x.scale().name(),
        });
    }
    if p == 0 || p > d_x.len() {
        return Err(MdsError::InvalidDimension { p, limit: d_x.len() });
    }
    let pairs = resolve_pairs(d_x, cfg)?;
    let obj = PairObjective::sammon(d_x, &pairs)?;
    let y0 = initial_embedding(d_x, p, cfg);
    let (y, report) = optimize(
        y0,
        cfg,
        |y| obj.cost(y),
        |y| obj.gradient(y),
        |y| obj.hessian_diag(y),
    );
    Ok((Embedding::new(y)?, report))
}

/// Sammon mapping of a point set (Euclidean input distances).
pub fn fit_sammon(x: &DataMatrix, p: usize, cfg: &IterConfig) -> Result<(Embedding, StressReport)> {
    let d = pairwise_euclidean(x, Scale::Raw);
    fit_sammon_from_distances(&d, p, cfg)
}

/// Metric MDS from a RAW distance matrix; shares the Sammon engine with
/// unit weights. The reported stress follows the `normalized` flag.
pub fn fit_metric_mds(
    d_x: &DistanceMatrix,
    p: usize,
    cfg: &IterConfig,
    normalized: bool,
) -> Result<(Embedding, StressReport)> {
    if d_x.scale() != Scale::Raw {
        return Err(MdsError::ScaleMismatch {
            expected: Scale::Raw.name(),
            found: d_x.scale().name(),
        });
    }
    if p == 0 || p > d_x.len() {
        return Err(MdsError::InvalidDimension { p, limit: d_x.len() });
    }
    let pairs = resolve_pairs(d_x, cfg)?;
    let obj = PairObjective::metric(d_x, &pairs, normalized)?;
    let y0 = initial_embedding(d_x, p, cfg);
    let (y, report) = optimize(
        y0,
        cfg,
        |y| obj.cost(y).sqrt(),
        |y| obj.gradient(y),
        |y| obj.hessian_diag(y),
    );
    Ok((Embedding::new(y)?, report))
}

/// Metric MDS of a point set.
pub fn fit_metric_mds_points(
    x: &DataMatrix,
    p: usize,
    cfg: &IterConfig,
    normalized: bool,
) -> Result<(Embedding, StressReport)> {
    let d = pairwise_euclidean(x, Scale::Raw);
    fit_metric_mds(&d, p, cfg, normalized)
}

/// Least-squares fit of a nondecreasing sequence to `values` by pool
/// adjacent violators.
pub fn pool_adjacent_violators(values: &[f64]) -> Vec<f64> {
    let mut sums: Vec<f64> = Vec::with_capacity(values.len());
    let mut counts: Vec<usize> = Vec::with_capacity(values.len());
    for &v in values {
        sums.push(v);
        counts.push(1);
        while sums.len() >= 2 {
            let last = sums.len() - 1;
            if sums[last - 1] / counts[last - 1] as f64 > sums[last] / counts[last] as f64 {
                let (s, c) = (sums.pop().unwrap(), counts.pop().unwrap());
                *sums.last_mut().unwrap() += s;
                *counts.last_mut().unwrap() += c;
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (s, c) in sums.iter().zip(&counts) {
        let mean = s / *c as f64;
        out.extend(std::iter::repeat_n(mean, *c));
    }
    out
}

/// Fitted monotone targets for the current configuration: embedded distances
/// regressed isotonically in the rank order of the input distances.
struct MonotoneTargets {
    /// Pair indices sorted by ascending input distance (ties by index).
    order: Vec<usize>,
}

impl MonotoneTargets {
    fn new(d_x: &DistanceMatrix, pairs: &[(usize, usize)]) -> Self {
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by(|&a, &b| {
            let da = d_x.get(pairs[a].0, pairs[a].1);
            let db = d_x.get(pairs[b].0, pairs[b].1);
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        Self { order }
    }

    /// PAV fit of the embedded distances in input-distance order; returns
    /// targets indexed like `pairs`.
    fn fit(&self, pairs: &[(usize, usize)], y: &DMatrix<f64>) -> Vec<f64> {
        let dys: Vec<f64> = self
            .order
            .iter()
            .map(|&idx| embedded_distance(y, pairs[idx].0, pairs[idx].1))
            .collect();
        let fitted = pool_adjacent_violators(&dys);
        let mut targets = vec![0.0; pairs.len()];
        for (pos, &idx) in self.order.iter().enumerate() {
            targets[idx] = fitted[pos];
        }
        targets
    }
}

/// Non-metric MDS (Kruskal-style): alternates a pool-adjacent-violators fit
/// of monotone targets with a safeguarded descent step on
/// `sum (target - d_y)^2 / sum d_x^2`; the square root of that quantity is
/// the reported Stress-1.
pub fn fit_nonmetric_mds(
    d_x: &DistanceMatrix,
    p: usize,
    cfg: &IterConfig,
) -> Result<(Embedding, StressReport)> {
    if d_x.scale() != Scale::Raw {
        return Err(MdsError::ScaleMismatch {
            expected: Scale::Raw.name(),
            found: d_x.scale().name(),
        });
    }
    if p == 0 || p > d_x.len() {
        return Err(MdsError::InvalidDimension { p, limit: d_x.len() });
    }
    let pairs = resolve_pairs(d_x, cfg)?;
    let denom: f64 = pairs.iter().map(|&(i, j)| d_x.get(i, j).powi(2)).sum();
    if denom == 0.0 {
        return Err(MdsError::DegenerateInput(
            "Stress-1 undefined: all input distances are zero".into(),
        ));
    }
    let monotone = MonotoneTargets::new(d_x, &pairs);
    let y0 = initial_embedding(d_x, p, cfg);

    // Targets refit at every stress evaluation, so the safeguard compares
    // candidate configurations under their own best monotone fit.
    let targets = std::cell::RefCell::new(vec![0.0; pairs.len()]);
    let stress1 = |y: &DMatrix<f64>| -> f64 {
        let t = monotone.fit(&pairs, y);
        let mut num = 0.0;
        for (idx, &(i, j)) in pairs.iter().enumerate() {
            let gap = t[idx] - embedded_distance(y, i, j);
            num += gap * gap;
        }
        *targets.borrow_mut() = t;
        (num / denom).sqrt()
    };
    let gradient = |y: &DMatrix<f64>| -> DMatrix<f64> {
        let t = targets.borrow();
        let obj = PairObjective {
            pairs: &pairs,
            weights: vec![1.0; pairs.len()],
            targets: t.clone(),
            normalizer: denom,
        };
        obj.gradient(y)
    };
    let hessian = |y: &DMatrix<f64>| -> DMatrix<f64> {
        let t = targets.borrow();
        let obj = PairObjective {
            pairs: &pairs,
            weights: vec![1.0; pairs.len()],
            targets: t.clone(),
            normalizer: denom,
        };
        obj.hessian_diag(y)
    };

    let (y, report) = optimize(y0, cfg, stress1, gradient, hessian);
    Ok((Embedding::new(y)?, report))
}

/// Non-metric MDS of a point set.
pub fn fit_nonmetric_mds_points(
    x: &DataMatrix,
    p: usize,
    cfg: &IterConfig,
) -> Result<(Embedding, StressReport)> {
    let d = pairwise_euclidean(x, Scale::Raw);
    fit_nonmetric_mds(&d, p, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use manifold_oracles as oracles;
    use nalgebra::dmatrix;

    fn raw(values: DMatrix<f64>) -> DistanceMatrix {
        DistanceMatrix::new(values, Scale::Raw).unwrap()
    }

    fn embedding(values: DMatrix<f64>) -> Embedding {
        Embedding::new(values).unwrap()
    }

    fn random_instance(n: usize, p: usize, seed: u64) -> (DistanceMatrix, Embedding) {
        let x = DataMatrix::new(oracles::random_matrix(3, n, seed)).unwrap();
        let d = pairwise_euclidean(&x, Scale::Raw);
        let y = oracles::random_matrix(p, n, seed + 1000);
        (d, embedding(y))
    }

    #[test]
    fn metric_stress_perfect_embedding_is_zero() {
        let y = embedding(dmatrix![0.0, 3.0; 0.0, 4.0]);
        let x = DataMatrix::new(dmatrix![0.0, 3.0; 0.0, 4.0]).unwrap();
        let d = pairwise_euclidean(&x, Scale::Raw);
        assert_abs_diff_eq!(metric_stress(&d, &y, true).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(metric_stress(&d, &y, false).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn metric_stress_single_pair_arithmetic() {
        let d = raw(dmatrix![0.0, 2.0; 2.0, 0.0]);
        let y = embedding(dmatrix![0.0, 1.0]);
        assert_abs_diff_eq!(metric_stress(&d, &y, true).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(metric_stress(&d, &y, false).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn metric_stress_matches_naive_loop() {
        let (d, y) = random_instance(12, 2, 7);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..12 {
            for j in 0..i {
                let dy = (y.coordinates().column(i) - y.coordinates().column(j)).norm();
                num += (d.get(i, j) - dy).powi(2);
                den += d.get(i, j).powi(2);
            }
        }
        assert_abs_diff_eq!(
            metric_stress(&d, &y, true).unwrap(),
            (num / den).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn metric_stress_degenerate_zero_distances() {
        let d = raw(DMatrix::zeros(3, 3));
        let y = embedding(DMatrix::zeros(1, 3));
        assert!(matches!(
            metric_stress(&d, &y, true),
            Err(MdsError::DegenerateInput(_))
        ));
        assert_abs_diff_eq!(metric_stress(&d, &y, false).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sammon_cost_single_pair() {
        let d = raw(dmatrix![0.0, 2.0; 2.0, 0.0]);
        let y = embedding(dmatrix![0.0, 1.0]);
        assert_abs_diff_eq!(sammon_cost(&d, &y).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn sammon_cost_rejects_coincident_inputs() {
        let d = raw(dmatrix![0.0, 0.0, 1.0; 0.0, 0.0, 1.0; 1.0, 1.0, 0.0]);
        let y = embedding(DMatrix::zeros(1, 3));
        assert!(matches!(
            sammon_cost(&d, &y),
            Err(MdsError::DegenerateInput(_))
        ));
    }

    #[test]
    fn sammon_gradient_zero_at_perfect_embedding() {
        let x = DataMatrix::new(dmatrix![0.0, 1.0, 3.0; 0.0, 2.0, 1.0]).unwrap();
        let d = pairwise_euclidean(&x, Scale::Raw);
        let y = embedding(x.values().clone());
        let g = sammon_gradient(&d, &y).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn sammon_gradient_two_point_hand_value() {
        let d = raw(dmatrix![0.0, 2.0; 2.0, 0.0]);
        let y = embedding(dmatrix![0.5, -0.5]);
        let g = sammon_gradient(&d, &y).unwrap();
        // single pair: d_x = 2, d_y = 1, a = 2
        // (k,i)=(0,0): (-2/2) * (2-1)/(2*1) * (0.5 - (-0.5)) = -0.5
        assert_abs_diff_eq!(g[(0, 0)], -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(g[(0, 1)], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn sammon_hessian_two_point_hand_value() {
        let d = raw(dmatrix![0.0, 2.0; 2.0, 0.0]);
        let y = embedding(dmatrix![0.5, -0.5]);
        let h = sammon_hessian_diag(&d, &y).unwrap();
        // (-2/2) * [ (2-1)/(2*1) - 1^2 / 1^3 ] = 0.5 at both points
        assert_abs_diff_eq!(h[(0, 0)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(h[(0, 1)], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn sammon_gradient_matches_finite_differences() {
        for seed in 0..20u64 {
            let n = 5 + (seed as usize % 11); // n <= 15
            let p = 1 + (seed as usize % 3);
            let (d, y) = random_instance(n, p, seed);
            let g = sammon_gradient(&d, &y).unwrap();
            let flat: Vec<f64> = y.coordinates().iter().copied().collect();
            let cost = |v: &[f64]| {
                let ym = DMatrix::from_column_slice(p, n, v);
                sammon_cost(&d, &embedding(ym)).unwrap()
            };
            let fd = oracles::central_gradient(cost, &flat, 1e-6);
            let g_flat: Vec<f64> = g.iter().copied().collect();
            let num: f64 = g_flat
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(num / den.max(1e-12) < 1e-5, "seed {seed}: rel error {}", num / den);
        }
    }

    #[test]
    fn sammon_hessian_matches_finite_differences() {
        for seed in 0..20u64 {
            let n = 5 + (seed as usize % 11);
            let p = 1 + (seed as usize % 3);
            let (d, y) = random_instance(n, p, seed + 400);
            let h = sammon_hessian_diag(&d, &y).unwrap();
            let flat: Vec<f64> = y.coordinates().iter().copied().collect();
            let cost = |v: &[f64]| {
                let ym = DMatrix::from_column_slice(p, n, v);
                sammon_cost(&d, &embedding(ym)).unwrap()
            };
            let fd = oracles::central_second_diag(cost, &flat, 1e-4);
            let h_flat: Vec<f64> = h.iter().copied().collect();
            let num: f64 = h_flat
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(num / den.max(1e-12) < 1e-3, "seed {seed}: rel error {}", num / den);
        }
    }

    #[test]
    fn sammon_hessian_bounded_far_from_data() {
        let d = raw(dmatrix![0.0, 1.0; 1.0, 0.0]);
        let y = embedding(dmatrix![1e8, -1e8]);
        let h = sammon_hessian_diag(&d, &y).unwrap();
        assert!(h.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn knn_restricted_with_max_k_equals_full() {
        let x = DataMatrix::new(oracles::random_matrix(3, 9, 5)).unwrap();
        let d = pairwise_euclidean(&x, Scale::Raw);
        let y = embedding(oracles::random_matrix(2, 9, 6));
        let full_pairs = all_pairs(9);
        let knn = knn_pairs(&d, 8).unwrap();
        let full = PairObjective::sammon(&d, &full_pairs).unwrap();
        let restricted = PairObjective::sammon(&d, &knn).unwrap();
        assert_abs_diff_eq!(
            full.cost(y.coordinates()),
            restricted.cost(y.coordinates()),
            epsilon = 1e-12
        );
        let gap = (full.gradient(y.coordinates()) - restricted.gradient(y.coordinates()))
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(gap <= 1e-12);
    }

    #[test]
    fn fit_sammon_exactly_embeddable_data_converges() {
        // data already 2-dimensional: classical-MDS init is optimal
        let x = DataMatrix::new(oracles::random_matrix(2, 10, 3)).unwrap();
        let (_, report) = fit_sammon(&x, 2, &IterConfig::default()).unwrap();
        assert!(
            report.final_stress < 1e-10,
            "stress {} after {} iterations",
            report.final_stress,
            report.iterations
        );
    }

    #[test]
    fn fit_sammon_two_points_exact() {
        let x = DataMatrix::new(dmatrix![0.0, 2.0]).unwrap();
        let cfg = IterConfig { init: InitStrategy::Random, ..Default::default() };
        let (emb, _) = fit_sammon(&x, 1, &cfg).unwrap();
        let d_y = (emb.coordinates()[(0, 0)] - emb.coordinates()[(0, 1)]).abs();
        assert!((d_y - 2.0).abs() <= 1e-8, "d_y = {d_y}");
    }

    #[test]
    fn stress_traces_non_increasing_across_solvers() {
        for seed in 0..8u64 {
            let x = DataMatrix::new(oracles::random_matrix(4, 20, seed)).unwrap();
            let d = pairwise_euclidean(&x, Scale::Raw);
            let cfg = IterConfig { max_iters: 60, seed, ..Default::default() };
            let (_, r1) = fit_sammon_from_distances(&d, 2, &cfg).unwrap();
            let (_, r2) = fit_metric_mds(&d, 2, &cfg, true).unwrap();
            let (_, r3) = fit_nonmetric_mds(&d, 2, &cfg).unwrap();
            for (name, r) in [("sammon", r1), ("metric", r2), ("nonmetric", r3)] {
                for w in r.stresses.windows(2) {
                    assert!(w[1] <= w[0] + 1e-15, "{name} seed {seed}: {} -> {}", w[0], w[1]);
                }
            }
        }
    }

    #[test]
    fn solvers_deterministic_given_seed() {
        let x = DataMatrix::new(oracles::random_matrix(3, 15, 2)).unwrap();
        let cfg = IterConfig { init: InitStrategy::Random, seed: 11, max_iters: 40, ..Default::default() };
        let (a, ra) = fit_sammon(&x, 2, &cfg).unwrap();
        let (b, rb) = fit_sammon(&x, 2, &cfg).unwrap();
        assert_eq!(a.coordinates(), b.coordinates());
        assert_eq!(ra.stresses, rb.stresses);
    }

    #[test]
    fn pav_identity_on_sorted() {
        let v = [1.0, 2.0, 3.5];
        assert_eq!(pool_adjacent_violators(&v), v.to_vec());
    }

    #[test]
    fn pav_reversed_pair_merges_to_mean() {
        assert_eq!(pool_adjacent_violators(&[2.0, 1.0]), vec![1.5, 1.5]);
    }

    #[test]
    fn pav_matches_exhaustive_oracle() {
        for seed in 0..30u64 {
            let ys = oracles::random_values(6, -1.0, 1.0, seed);
            let got = pool_adjacent_violators(&ys);
            let want = oracles::brute_force_isotonic(&ys);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9, "seed {seed}: {got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn nonmetric_order_compatible_configuration_has_zero_stress() {
        // embedded distances already increase with input distances
        let d = raw(dmatrix![
            0.0, 1.0, 2.0;
            1.0, 0.0, 1.5;
            2.0, 1.5, 0.0
        ]);
        let y = embedding(dmatrix![0.0, 0.5, 1.5]);
        // d_y pairs: (1,0)=0.5, (2,0)=1.5, (2,1)=1.0; d_x order: (1,0) < (2,1) < (2,0)
        // d_y in that order: 0.5, 1.0, 1.5 -> already monotone
        let pairs = all_pairs(3);
        let monotone = MonotoneTargets::new(&d, &pairs);
        let t = monotone.fit(&pairs, y.coordinates());
        for (idx, &(i, j)) in pairs.iter().enumerate() {
            assert_abs_diff_eq!(
                t[idx],
                embedded_distance(y.coordinates(), i, j),
                epsilon = 1e-12
            );
        }
        // and the solver leaves it at stress ~0 without moving
        let cfg = IterConfig::default();
        let denom: f64 = pairs.iter().map(|&(i, j)| d.get(i, j).powi(2)).sum();
        let num: f64 = pairs
            .iter()
            .enumerate()
            .map(|(idx, &(i, j))| {
                (t[idx] - embedded_distance(y.coordinates(), i, j)).powi(2)
            })
            .sum();
        assert!((num / denom).sqrt() < 1e-12);
        let _ = cfg;
    }

    #[test]
    fn nonmetric_fit_improves_random_start() {
        let x = DataMatrix::new(oracles::random_matrix(2, 12, 9)).unwrap();
        let d = pairwise_euclidean(&x, Scale::Raw);
        let cfg = IterConfig { init: InitStrategy::Random, seed: 3, ..Default::default() };
        let (_, report) = fit_nonmetric_mds(&d, 2, &cfg).unwrap();
        assert!(report.final_stress < report.stresses[0]);
        assert!(report.final_stress < 0.1, "stress-1 {}", report.final_stress);
    }

    #[test]
    fn stress_report_csv_layout() {
        let r = StressReport {
            stresses: vec![1.0, 0.5],
            step_scales: vec![1.0, 0.5],
            final_stress: 0.5,
            iterations: 1,
            halvings: 1,
        };
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("iteration,stress,step_scale"));
        assert_eq!(lines.next(), Some("0,1,1"));
        assert_eq!(lines.next(), Some("1,0.5,0.5"));
    }
}
