//! Synthetic dataset generation.

use manifold_core::{DataMatrix, MdsError};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;

/// Arc length of the spiral `(t cos t, t sin t)` from the roll's starting
/// parameter: `s(t) = 1/2 [u sqrt(1+u^2) + asinh(u)]` evaluated at the ends.
fn spiral_arc_length(t: f64, t0: f64) -> f64 {
    let f = |u: f64| 0.5 * (u * (1.0 + u * u).sqrt() + u.asinh());
    f(t) - f(t0)
}

/// Swiss roll: `x = (t cos t, h, t sin t)` with `t ~ U[1.5 pi, 4.5 pi]`,
/// `h ~ U[0, 21]`, plus isotropic Gaussian noise of the given scale.
/// Returns the 3 x n point set and the 2 x n intrinsic coordinates
/// (arc length along the spiral, height).
pub fn swiss_roll(n: usize, noise: f64, seed: u64) -> Result<(DataMatrix, DMatrix<f64>)> {
    if n < 10 {
        return Err(MdsError::DegenerateInput(format!(
            "swiss roll needs at least 10 points, got {n}"
        ))
        .into());
    }
    let t0 = 1.5 * std::f64::consts::PI;
    let t1 = 4.5 * std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = DMatrix::zeros(3, n);
    let mut intrinsic = DMatrix::zeros(2, n);
    // parameter draws first, noise after: the clean skeleton is identical
    // across noise levels for a fixed seed
    for j in 0..n {
        let t = rng.random_range(t0..t1);
        let h = rng.random_range(0.0..21.0);
        points[(0, j)] = t * t.cos();
        points[(1, j)] = h;
        points[(2, j)] = t * t.sin();
        intrinsic[(0, j)] = spiral_arc_length(t, t0);
        intrinsic[(1, j)] = h;
    }
    if noise > 0.0 {
        let gauss = Normal::new(0.0, noise).map_err(|e| {
            MdsError::DegenerateInput(format!("invalid noise scale {noise}: {e}"))
        })?;
        for j in 0..n {
            for r in 0..3 {
                points[(r, j)] += gauss.sample(&mut rng);
            }
        }
    }
    Ok((DataMatrix::new(points)?, intrinsic))
}
