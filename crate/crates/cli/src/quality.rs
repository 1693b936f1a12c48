//! Embedding-quality metrics reported after every fit.

use manifold_core::iterative::{metric_stress, sammon_cost};
use manifold_core::{distance::pairwise_euclidean, DataMatrix, DistanceMatrix, Embedding, Scale};

use crate::error::Result;

/// Quality summary of one fitted embedding against a reference distance
/// matrix (the method's input distances: Euclidean, or geodesic for the
/// Isomap family).
#[derive(Debug, Clone)]
pub struct QualityReport {
    /// Normalized metric stress.
    pub stress_normalized: f64,
    /// Sammon stress; undefined when the input has coincident points.
    pub sammon_stress: Option<f64>,
    /// `1 - r^2` between reference and embedded pairwise distances.
    pub residual_variance: f64,
    pub runtime_seconds: f64,
}

/// Pearson correlation between the upper triangles of two distance matrices.
pub fn distance_correlation(reference: &DistanceMatrix, embedded: &DistanceMatrix) -> f64 {
    let n = reference.len();
    let mut a = Vec::with_capacity(n * (n - 1) / 2);
    let mut b = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            a.push(reference.get(i, j));
            b.push(embedded.get(i, j));
        }
    }
    pearson(&a, &b)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
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

/// `1 - r^2` between reference distances and the embedding's Euclidean
/// distances; 0 is a perfect monotone-linear fit, 1 is uncorrelated.
pub fn residual_variance(reference: &DistanceMatrix, emb: &Embedding) -> Result<f64> {
    let d_emb = pairwise_euclidean(&DataMatrix::new(emb.coordinates().clone())?, Scale::Raw);
    let r = distance_correlation(reference, &d_emb);
    Ok((1.0 - r * r).clamp(0.0, 1.0))
}

/// Builds the full report for a fitted embedding.
pub fn quality_report(
    reference: &DistanceMatrix,
    emb: &Embedding,
    runtime_seconds: f64,
) -> Result<QualityReport> {
    let stress_normalized = metric_stress(reference, emb, true)?;
    let sammon_stress = sammon_cost(reference, emb).ok();
    let residual = residual_variance(reference, emb)?;
    Ok(QualityReport {
        stress_normalized,
        sammon_stress,
        residual_variance: residual,
        runtime_seconds,
    })
}
