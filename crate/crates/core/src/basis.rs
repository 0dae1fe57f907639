//! Monomial basis functions over the state variables and the design matrix
//! built by evaluating them along a sampled trajectory.

use crate::error::{Error, Result};
use crate::series::TimeSeries;
use serde::Serialize;
use std::fmt;
use std::path::Path;

/// One monomial Π_i x_i^{e_i} over n state variables.
///
/// The zero exponent vector (a constant term) is rejected: the model class has
/// no constant column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct BasisFunction {
    exponents: Vec<u32>,
}

impl BasisFunction {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidBasisFunction {
                reason: "exponent vector is empty".to_string(),
            });
        }
        if exponents.iter().all(|&e| e == 0) {
            return Err(Error::InvalidBasisFunction {
                reason: "all exponents are zero (constant term not allowed)".to_string(),
            });
        }
        Ok(Self { exponents })
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// Number of state variables the monomial is defined over.
    pub fn dimension(&self) -> usize {
        self.exponents.len()
    }

    /// Total degree Σ_i e_i.
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// Evaluate Π_i state[i]^{e_i}.
    pub fn evaluate(&self, state: &[f64]) -> f64 {
        debug_assert_eq!(state.len(), self.exponents.len());
        self.exponents
            .iter()
            .zip(state)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }
}

impl fmt::Display for BasisFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.exponents.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "x{}", i + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// An ordered list of p distinct basis functions over n variables.
///
/// The order is fixed: column j of any design matrix built from this library
/// always corresponds to `functions()[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisLibrary {
    functions: Vec<BasisFunction>,
    dimension: usize,
}

impl BasisLibrary {
    pub fn new(functions: Vec<BasisFunction>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidLibrary {
                reason: "library is empty".to_string(),
            });
        }
        let dimension = functions[0].dimension();
        for f in &functions {
            if f.dimension() != dimension {
                return Err(Error::InvalidLibrary {
                    reason: format!("mixed dimensions: {} and {}", dimension, f.dimension()),
                });
            }
        }
        for (j, f) in functions.iter().enumerate() {
            if functions[..j].contains(f) {
                return Err(Error::InvalidLibrary {
                    reason: format!("duplicate basis function {f}"),
                });
            }
        }
        Ok(Self {
            functions,
            dimension,
        })
    }

    /// Number of basis functions p.
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn functions(&self) -> &[BasisFunction] {
        &self.functions
    }

    pub fn get(&self, j: usize) -> &BasisFunction {
        &self.functions[j]
    }

    /// Column index of a monomial given by its exponent vector.
    pub fn index_of(&self, exponents: &[u32]) -> Option<usize> {
        self.functions
            .iter()
            .position(|f| f.exponents() == exponents)
    }

    /// Evaluate every basis function at one state (one design-matrix row).
    pub fn evaluate_all(&self, state: &[f64]) -> Vec<f64> {
        self.functions.iter().map(|f| f.evaluate(state)).collect()
    }

    /// Parse a library file: one monomial per line as space-separated
    /// exponents (`2 1` means x1^2*x2); `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut functions = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut exponents = Vec::new();
            for tok in line.split_whitespace() {
                let e: u32 = tok.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    reason: format!("cannot parse exponent '{tok}'"),
                })?;
                exponents.push(e);
            }
            functions.push(BasisFunction::new(exponents).map_err(|e| Error::Parse {
                line: line_no,
                reason: e.to_string(),
            })?);
        }
        Self::new(functions)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }
}

/// All monomials over `dimension` variables with total degree in
/// 1..=`max_total_degree`, ordered by total degree ascending and, within a
/// degree, by descending lexicographic exponent order (x1 most significant).
///
/// The library size is C(n + d, d) − 1.
pub fn monomial_library(dimension: usize, max_total_degree: u32) -> BasisLibrary {
    assert!(dimension >= 1, "dimension must be at least 1");
    assert!(max_total_degree >= 1, "max_total_degree must be at least 1");
    let mut functions = Vec::new();
    let mut exponents = vec![0u32; dimension];
    for degree in 1..=max_total_degree {
        push_compositions(&mut functions, &mut exponents, 0, degree);
    }
    BasisLibrary::new(functions).expect("generated monomials are distinct and non-constant")
}

fn push_compositions(
    out: &mut Vec<BasisFunction>,
    exponents: &mut Vec<u32>,
    var: usize,
    remaining: u32,
) {
    if var == exponents.len() - 1 {
        exponents[var] = remaining;
        out.push(BasisFunction::new(exponents.clone()).expect("degree >= 1"));
        exponents[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        exponents[var] = e;
        push_compositions(out, exponents, var + 1, remaining - e);
        exponents[var] = 0;
    }
}

/// The m × p matrix Θ of all basis functions evaluated at all sample states.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    values: Vec<f64>, // row-major, m × p
    rows: usize,
    library: BasisLibrary,
    times: Vec<f64>,
}

impl DesignMatrix {
    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.library.len()
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.library.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let p = self.library.len();
        &self.values[row * p..(row + 1) * p]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|j| self.value(j, col)).collect()
    }

    pub fn library(&self) -> &BasisLibrary {
        &self.library
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// Evaluate the library along the samples: entry (j, l) is functions[l] at the
/// state sampled at time t_j.
pub fn build_design_matrix(library: &BasisLibrary, samples: &TimeSeries) -> Result<DesignMatrix> {
    if samples.dimension() != library.dimension() {
        return Err(Error::DimensionMismatch {
            context: "design matrix: sample dimension vs library dimension",
            expected: library.dimension(),
            got: samples.dimension(),
        });
    }
    let m = samples.len();
    let p = library.len();
    let mut values = Vec::with_capacity(m * p);
    for j in 0..m {
        values.extend(library.evaluate_all(samples.state(j)));
    }
    Ok(DesignMatrix {
        values,
        rows: m,
        library: library.clone(),
        times: samples.times().to_vec(),
    })
}
