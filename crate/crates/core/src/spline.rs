//! Interpolating cubic splines with not-a-knot end conditions, used to
//! estimate state derivatives at the sample times.

use crate::error::{Error, Result};
use crate::series::{validate_times, TimeSeries};
use nalgebra::{DMatrix, DVector};

/// Minimum number of knots: the not-a-knot conditions need four points.
pub const MIN_KNOTS: usize = 4;

/// Coefficients of one cubic piece s(t) = a·τ³ + b·τ² + c·τ + d, τ = t − t_left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplinePiece {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// A C² interpolating cubic spline with not-a-knot end conditions.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    knots: Vec<f64>,
    pieces: Vec<SplinePiece>,
}

impl CubicSpline {
    /// Fit an interpolating cubic spline through (times[j], values[j]).
    ///
    /// Not-a-knot end conditions: the third derivative is continuous across
    /// the second and second-to-last knots, so the spline reproduces any cubic
    /// polynomial exactly. Requires at least [`MIN_KNOTS`] strictly increasing
    /// knots.
    pub fn fit(times: &[f64], values: &[f64]) -> Result<Self> {
        let m = times.len();
        if m < MIN_KNOTS {
            return Err(Error::TooFewSamples {
                min: MIN_KNOTS,
                got: m,
            });
        }
        if values.len() != m {
            return Err(Error::DimensionMismatch {
                context: "spline values vs knots",
                expected: m,
                got: values.len(),
            });
        }
        validate_times(times)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "spline values".to_string(),
            });
        }

        let h: Vec<f64> = (0..m - 1).map(|i| times[i + 1] - times[i]).collect();
        let sigma = solve_second_derivatives(&h, values, m);

        let mut pieces = Vec::with_capacity(m - 1);
        for i in 0..m - 1 {
            let a = (sigma[i + 1] - sigma[i]) / (6.0 * h[i]);
            let b = sigma[i] / 2.0;
            let c =
                (values[i + 1] - values[i]) / h[i] - h[i] * (2.0 * sigma[i] + sigma[i + 1]) / 6.0;
            pieces.push(SplinePiece {
                a,
                b,
                c,
                d: values[i],
            });
        }
        Ok(Self {
            knots: times.to_vec(),
            pieces,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn pieces(&self) -> &[SplinePiece] {
        &self.pieces
    }

    /// Index of the piece owning t: the interval to the right of interior and
    /// first knots, the last interval beyond the final knot.
    fn piece_index(&self, t: f64) -> usize {
        let pos = self.knots.partition_point(|&k| k <= t);
        pos.saturating_sub(1).min(self.pieces.len() - 1)
    }

    /// Evaluate s(t).
    pub fn evaluate(&self, t: f64) -> f64 {
        let i = self.piece_index(t);
        let tau = t - self.knots[i];
        let p = &self.pieces[i];
        ((p.a * tau + p.b) * tau + p.c) * tau + p.d
    }

    /// Evaluate s′(t) = 3aτ² + 2bτ + c on the owning piece.
    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.piece_index(t);
        let tau = t - self.knots[i];
        let p = &self.pieces[i];
        (3.0 * p.a * tau + 2.0 * p.b) * tau + p.c
    }

    /// s′ at every knot, length m.
    ///
    /// Knots 0..m−2 use the piece to their right (τ = 0, so s′ = c); the last
    /// knot uses the final piece at τ = h.
    pub fn knot_derivatives(&self) -> Vec<f64> {
        let m = self.knots.len();
        let mut out = Vec::with_capacity(m);
        for p in &self.pieces {
            out.push(p.c);
        }
        let last = &self.pieces[m - 2];
        let tau = self.knots[m - 1] - self.knots[m - 2];
        out.push((3.0 * last.a * tau + 2.0 * last.b) * tau + last.c);
        out
    }
}

/// Solve for the second derivatives σ_0..σ_{m−1} at the knots.
///
/// The m−2 interior continuity equations plus the two not-a-knot corner
/// substitutions give a tridiagonal system in σ_1..σ_{m−2}; σ_0 and σ_{m−1}
/// are recovered from the corner relations afterwards. The reduced system is
/// strictly diagonally dominant for any strictly increasing knots, so an
/// unpivoted Thomas sweep is safe; a dense LU solve of the full not-a-knot
/// system stands by for pathological spacing.
fn solve_second_derivatives(h: &[f64], y: &[f64], m: usize) -> Vec<f64> {
    let n = m - 2; // unknowns σ_1..σ_{m−2}
    let rhs_at = |i: usize| 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);

    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    for (row, i) in (1..=n).enumerate() {
        lower[row] = h[i - 1];
        diag[row] = 2.0 * (h[i - 1] + h[i]);
        upper[row] = h[i];
        rhs[row] = rhs_at(i);
    }
    debug_assert!(
        n >= 2,
        "MIN_KNOTS = 4 guarantees at least two interior knots"
    );
    // Left not-a-knot: σ_0 = σ_1 (1 + h0/h1) − σ_2 h0/h1 folded into row 0.
    diag[0] += h[0] * (h[0] + h[1]) / h[1];
    upper[0] -= h[0] * h[0] / h[1];
    // Right not-a-knot: σ_{m−1} = σ_{m−2} (1 + h_{m−2}/h_{m−3}) − σ_{m−3} h_{m−2}/h_{m−3}.
    let hm2 = h[m - 2];
    let hm3 = h[m - 3];
    diag[n - 1] += hm2 * (hm2 + hm3) / hm3;
    lower[n - 1] -= hm2 * hm2 / hm3;

    let interior = thomas(&lower, &diag, &upper, &rhs)
        .unwrap_or_else(|| dense_not_a_knot(h, y, m)[1..m - 1].to_vec());

    let mut sigma = vec![0.0; m];
    sigma[1..m - 1].copy_from_slice(&interior);
    sigma[0] = sigma[1] * (1.0 + h[0] / h[1]) - sigma[2] * (h[0] / h[1]);
    sigma[m - 1] = sigma[m - 2] * (1.0 + hm2 / hm3) - sigma[m - 3] * (hm2 / hm3);
    sigma
}

/// Unpivoted tridiagonal elimination; returns None if a pivot degenerates.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot.abs() < f64::MIN_POSITIVE {
        return None;
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot.abs() < f64::MIN_POSITIVE {
            return None;
        }
        c[i] = upper[i] / pivot;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Dense fallback: assemble the full m × m not-a-knot system and LU-solve it.
fn dense_not_a_knot(h: &[f64], y: &[f64], m: usize) -> Vec<f64> {
    let mut a = DMatrix::zeros(m, m);
    let mut b = DVector::zeros(m);
    // Row 0: third-derivative continuity across knot 1.
    a[(0, 0)] = h[1];
    a[(0, 1)] = -(h[0] + h[1]);
    a[(0, 2)] = h[0];
    for i in 1..m - 1 {
        a[(i, i - 1)] = h[i - 1];
        a[(i, i)] = 2.0 * (h[i - 1] + h[i]);
        a[(i, i + 1)] = h[i];
        b[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    // Last row: third-derivative continuity across knot m−2.
    a[(m - 1, m - 3)] = h[m - 2];
    a[(m - 1, m - 2)] = -(h[m - 3] + h[m - 2]);
    a[(m - 1, m - 1)] = h[m - 3];
    let solution = a
        .lu()
        .solve(&b)
        .expect("not-a-knot system is nonsingular for strictly increasing knots");
    solution.iter().copied().collect()
}

/// Derivative estimates ẋ_i(t_j) at the sample times, one column per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeEstimate {
    times: Vec<f64>,
    values: Vec<Vec<f64>>, // m rows × n columns
}

impl DerivativeEstimate {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn dimension(&self) -> usize {
        self.values[0].len()
    }

    /// Copy of one variable's derivative estimates (column i).
    pub fn variable(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[i]).collect()
    }

    /// CSV dump `t,dx1,...,dxn` with full-precision numbers.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("t");
        for i in 1..=self.dimension() {
            let _ = write!(out, ",dx{i}");
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.values) {
            let _ = write!(out, "{}", crate::series::format_full(*t));
            for v in row {
                let _ = write!(out, ",{}", crate::series::format_full(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Fit one spline per state variable and evaluate its derivative at every
/// sample time.
pub fn estimate_derivatives(samples: &TimeSeries) -> Result<DerivativeEstimate> {
    let m = samples.len();
    let n = samples.dimension();
    let mut columns = Vec::with_capacity(n);
    for i in 0..n {
        let spline = CubicSpline::fit(samples.times(), &samples.variable(i))?;
        columns.push(spline.knot_derivatives());
    }
    let values = (0..m)
        .map(|j| (0..n).map(|i| columns[i][j]).collect())
        .collect();
    Ok(DerivativeEstimate {
        times: samples.times().to_vec(),
        values,
    })
}
