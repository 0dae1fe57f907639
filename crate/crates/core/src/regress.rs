//! Least squares on column subsets of the design matrix, with the
//! leave-one-sample-out cross-validation error computed in closed form from
//! the hat-matrix diagonal:
//!
//! ```text
//! ε = (1/m) Σ_j ((y_j − ŷ_j) / (1 − H_jj))²,   H = Θ Θ†
//! ```
//!
//! so each candidate subset is scored with a single fit instead of m held-out
//! refits.

use crate::basis::DesignMatrix;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// A sample whose leverage exceeds 1 − this tolerance is interpolated by the
/// fit; its held-out residual is undefined and ε becomes +∞.
pub const DEFAULT_LEVERAGE_TOLERANCE: f64 = 1e-8;

/// ε below this fraction of mean(y²) is rounding noise from a fit that is
/// exact up to machine precision; it is snapped to exactly 0 so the growth
/// criterion sees a genuine zero rather than noise.
pub const EXACT_FIT_RELATIVE_FLOOR: f64 = 1e-20;

/// Result of projecting y onto the column span of a subset matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Least-squares coefficients ζ̂ = Θ†y, one per column.
    pub coefficients: Vec<f64>,
    /// Fitted values ŷ = Θζ̂.
    pub fitted: Vec<f64>,
    /// Diagonal of the hat matrix H = ΘΘ†, computed from the left singular
    /// vectors without forming the m × m matrix.
    pub leverage: Vec<f64>,
}

/// One scored column subset: the least-squares solution plus its closed-form
/// leave-one-out error.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresFit {
    /// Library column indices, ascending.
    pub subset: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub leverage: Vec<f64>,
    /// +∞ when some sample has leverage ≥ 1 − tolerance (unvalidatable fit).
    pub loocv_error: f64,
}

/// Minimum-norm least squares via SVD with small singular values zeroed.
///
/// Singular values below `max(m, k) · machine epsilon · σ_max` are treated as
/// zero, which keeps rank-deficient subsets well defined (plain normal
/// equations are not). Leverage of sample j is Σ_l U[j,l]² over the retained
/// singular directions.
pub fn pseudoinverse_solve(theta: &DMatrix<f64>, y: &[f64]) -> Result<Projection> {
    let rel_cutoff = theta.nrows().max(theta.ncols()) as f64 * f64::EPSILON;
    pseudoinverse_solve_with_cutoff(theta, y, rel_cutoff)
}

/// As [`pseudoinverse_solve`] with an explicit relative singular-value cutoff.
pub fn pseudoinverse_solve_with_cutoff(
    theta: &DMatrix<f64>,
    y: &[f64],
    rel_cutoff: f64,
) -> Result<Projection> {
    let m = theta.nrows();
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            context: "regression target length vs rows",
            expected: m,
            got: y.len(),
        });
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "subset matrix".to_string(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "regression target".to_string(),
        });
    }

    let svd = theta.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = rel_cutoff * sigma_max;

    let yv = DVector::from_column_slice(y);
    // w_l = (u_l · y) / σ_l for retained directions, 0 otherwise.
    let mut w = DVector::zeros(sigma.len());
    for l in 0..sigma.len() {
        if sigma[l] > cutoff {
            w[l] = u.column(l).dot(&yv) / sigma[l];
        }
    }
    let coefficients = v_t.transpose() * w;
    let fitted = theta * &coefficients;

    let mut leverage = vec![0.0; m];
    for l in 0..sigma.len() {
        if sigma[l] > cutoff {
            for j in 0..m {
                leverage[j] += u[(j, l)] * u[(j, l)];
            }
        }
    }
    Ok(Projection {
        coefficients: coefficients.iter().copied().collect(),
        fitted: fitted.iter().copied().collect(),
        leverage,
    })
}

/// Closed-form leave-one-sample-out mean squared error.
///
/// Returns +∞ as soon as any 1 − H_jj falls below the default leverage
/// tolerance: such a fit interpolates that sample and cannot be
/// cross-validated, so the growth loop must never select it.
pub fn loocv_error(fitted: &[f64], y: &[f64], leverage: &[f64]) -> Result<f64> {
    loocv_error_with_tolerance(fitted, y, leverage, DEFAULT_LEVERAGE_TOLERANCE)
}

/// As [`loocv_error`] with an explicit leverage tolerance.
pub fn loocv_error_with_tolerance(
    fitted: &[f64],
    y: &[f64],
    leverage: &[f64],
    leverage_tolerance: f64,
) -> Result<f64> {
    let m = y.len();
    if fitted.len() != m {
        return Err(Error::DimensionMismatch {
            context: "fitted values length vs targets",
            expected: m,
            got: fitted.len(),
        });
    }
    if leverage.len() != m {
        return Err(Error::DimensionMismatch {
            context: "leverage length vs targets",
            expected: m,
            got: leverage.len(),
        });
    }
    if leverage.iter().any(|&h| 1.0 - h < leverage_tolerance) {
        return Ok(f64::INFINITY);
    }
    let mut sum = 0.0;
    let mut scale = 0.0;
    for j in 0..m {
        let held_out = (y[j] - fitted[j]) / (1.0 - leverage[j]);
        sum += held_out * held_out;
        scale += y[j] * y[j];
    }
    let eps = sum / m as f64;
    let mean_sq = scale / m as f64;
    if eps <= EXACT_FIT_RELATIVE_FLOOR * mean_sq {
        return Ok(0.0);
    }
    Ok(eps)
}

/// Extract the subset columns, solve, and score: the single evaluation each
/// candidate combination gets.
pub fn fit_subset(design: &DesignMatrix, subset: &[usize], y: &[f64]) -> Result<LeastSquaresFit> {
    let m = design.nrows();
    let p = design.ncols();
    if subset.is_empty() {
        return Err(Error::InvalidSubset { index: 0, size: p });
    }
    for (pos, &idx) in subset.iter().enumerate() {
        if idx >= p {
            return Err(Error::InvalidSubset {
                index: idx,
                size: p,
            });
        }
        if subset[..pos].contains(&idx) {
            return Err(Error::InvalidSubset {
                index: idx,
                size: p,
            });
        }
    }
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            context: "regression target length vs samples",
            expected: m,
            got: y.len(),
        });
    }
    let theta = DMatrix::from_fn(m, subset.len(), |j, l| design.value(j, subset[l]));
    let projection = pseudoinverse_solve(&theta, y)?;
    let loocv = loocv_error(&projection.fitted, y, &projection.leverage)?;
    Ok(LeastSquaresFit {
        subset: subset.to_vec(),
        coefficients: projection.coefficients,
        fitted: projection.fitted,
        leverage: projection.leverage,
        loocv_error: loocv,
    })
}
