//! Independent oracles for the integration suites. Each deliberately takes a
//! different computational route than the implementation it checks.

// Not every test target uses every oracle.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Leave-one-out mean squared error by m explicit refits.
///
/// Each held-out least-squares problem is solved through the normal equations
/// with a Cholesky factorization, a route fully independent of the SVD
/// pseudoinverse under test. Requires every held-out subproblem to be full
/// rank (callers filter on leverage < 1).
pub fn explicit_loocv(theta: &DMatrix<f64>, y: &[f64]) -> f64 {
    let m = theta.nrows();
    let k = theta.ncols();
    let mut total = 0.0;
    for hold in 0..m {
        let kept: Vec<usize> = (0..m).filter(|&j| j != hold).collect();
        let sub = DMatrix::from_fn(m - 1, k, |r, c| theta[(kept[r], c)]);
        let rhs = DVector::from_fn(m - 1, |r, _| y[kept[r]]);
        let gram = sub.transpose() * &sub;
        let moment = sub.transpose() * rhs;
        let solution = gram
            .clone()
            .cholesky()
            .map(|ch| ch.solve(&moment))
            .or_else(|| gram.lu().solve(&moment))
            .expect("held-out normal equations should be solvable for full-rank subsets");
        let prediction: f64 = (0..k).map(|c| solution[c] * theta[(hold, c)]).sum();
        let residual = y[hold] - prediction;
        total += residual * residual;
    }
    total / m as f64
}

/// Matrix exponential by scaling-and-squaring with a Taylor series, accurate
/// to machine precision for the moderate norms used here.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    // 1-norm (max column sum)
    let norm = (0..n)
        .map(|c| a.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = DMatrix::<f64>::identity(n, n);
    for i in 1..=30u32 {
        term = &term * &scaled / f64::from(i);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Deterministic uniform value in [lo, hi).
pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random m × k matrix with entries in [-2, 2).
pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, k, |_, _| uniform(rng, -2.0, 2.0))
}

pub fn random_vector(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| uniform(rng, -2.0, 2.0)).collect()
}
