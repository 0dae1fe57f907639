//! The subset-growth identification loop: per state variable, grow the number
//! of active basis functions k from 1, score every k-subset by its closed-form
//! leave-one-out error, and stop as soon as the best error no longer improves
//! by more than `stop_factor` of the previous best:
//!
//! ```text
//! ε_{k−1} − ε_k ≤ stop_factor · ε_{k−1}    (stop, keep the k−1 best subset)
//! ```
//!
//! The selected subset's least-squares solution becomes one row of the sparse
//! coefficient matrix; every off-support entry is an exact 0.0.

use crate::basis::{build_design_matrix, BasisFunction, BasisLibrary, DesignMatrix};
use crate::error::{Error, Result};
use crate::regress::{fit_subset, LeastSquaresFit};
use crate::series::TimeSeries;
use crate::spline::estimate_derivatives;
use itertools::Itertools;
use rayon::prelude::*;
use std::fmt::Write as _;

/// Knobs for the growth loop.
#[derive(Debug, Clone)]
pub struct GrowthOptions {
    /// Relative improvement below which growth stops (the displayed criterion
    /// uses 0.1).
    pub stop_factor: f64,
    /// Largest subset size considered; defaults to p.
    pub k_max: Option<usize>,
    /// Guard on the exhaustive enumeration: growth stops adding k-levels once
    /// the cumulative number of fits would exceed this.
    pub fit_budget: u64,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        Self {
            stop_factor: 0.1,
            k_max: None,
            fit_budget: 1_000_000,
        }
    }
}

impl GrowthOptions {
    fn validate(&self, p: usize) -> Result<usize> {
        if !(self.stop_factor > 0.0 && self.stop_factor < 1.0) {
            return Err(Error::InvalidParameter {
                name: "stop_factor",
                reason: format!("must be in (0, 1), got {}", self.stop_factor),
            });
        }
        let k_cap = self.k_max.unwrap_or(p);
        if k_cap == 0 || k_cap > p {
            return Err(Error::InvalidParameter {
                name: "k_max",
                reason: format!("must be in 1..={p}, got {k_cap}"),
            });
        }
        Ok(k_cap)
    }
}

/// One scored candidate: subset size, column indices, and its ε.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRecord {
    pub k: usize,
    pub subset: Vec<usize>,
    pub epsilon: f64,
}

/// Everything one variable's growth run evaluated, for trace export and the
/// scatter plots the per-k minima come from.
#[derive(Debug, Clone)]
pub struct GrowthTrace {
    /// Every (k, subset, ε) evaluated, in enumeration order.
    pub records: Vec<SubsetRecord>,
    /// The best record of each evaluated k (ties broken by lexicographically
    /// smallest subset).
    pub k_minima: Vec<SubsetRecord>,
    /// The k at which the criterion fired, or the last evaluated k if it never
    /// did.
    pub stop_k: usize,
    pub criterion_fired: bool,
    /// True when the fit budget cut enumeration short.
    pub budget_exhausted: bool,
    /// The record whose subset was selected.
    pub selected: SubsetRecord,
}

/// Recovered sparse model: coefficient matrix rows scattered onto explicit
/// per-variable supports, exact zeros elsewhere.
#[derive(Debug, Clone)]
pub struct SparseModel {
    library: BasisLibrary,
    z: Vec<Vec<f64>>,
    supports: Vec<Vec<BasisFunction>>,
}

impl SparseModel {
    /// Assemble from per-variable (column index, coefficient) lists.
    pub fn from_selections(
        library: &BasisLibrary,
        selections: &[Vec<(usize, f64)>],
    ) -> Result<Self> {
        let p = library.len();
        let mut z = Vec::with_capacity(selections.len());
        let mut supports = Vec::with_capacity(selections.len());
        for row_sel in selections {
            let mut row = vec![0.0; p];
            let mut support = Vec::with_capacity(row_sel.len());
            for &(idx, coef) in row_sel {
                if idx >= p {
                    return Err(Error::InvalidSubset {
                        index: idx,
                        size: p,
                    });
                }
                row[idx] = coef;
                support.push(library.get(idx).clone());
            }
            z.push(row);
            supports.push(support);
        }
        Ok(Self {
            library: library.clone(),
            z,
            supports,
        })
    }

    pub fn library(&self) -> &BasisLibrary {
        &self.library
    }

    /// Number of state variables n.
    pub fn dimension(&self) -> usize {
        self.z.len()
    }

    /// The n × p coefficient matrix; off-support entries compare equal to 0.0.
    pub fn z(&self) -> &[Vec<f64>] {
        &self.z
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.z[i]
    }

    /// Selected basis functions of variable i, in library order.
    pub fn support(&self, i: usize) -> &[BasisFunction] {
        &self.supports[i]
    }

    pub fn supports(&self) -> &[Vec<BasisFunction>] {
        &self.supports
    }

    /// Selected subset size k of variable i.
    pub fn k(&self, i: usize) -> usize {
        self.supports[i].len()
    }
}

/// Grow subsets for a single regression target.
///
/// For each k the loop scores every k-subset of the library columns
/// (lexicographic enumeration, evaluated in parallel, aggregated in
/// enumeration order so results are independent of thread count). Candidates
/// with ε = +∞ participate but can never be selected. From k = 2 on, the
/// stopping inequality compares the recorded per-k minima; when it fires the
/// previous k's best subset is returned (its least-squares solution was
/// already computed during scoring). If it never fires the best subset at the last
/// evaluated k is returned with `criterion_fired = false`.
pub fn grow_one_variable(
    design: &DesignMatrix,
    y: &[f64],
    options: &GrowthOptions,
) -> Result<(LeastSquaresFit, GrowthTrace)> {
    let p = design.ncols();
    let k_cap = options.validate(p)?;

    let mut records = Vec::new();
    let mut k_minima: Vec<SubsetRecord> = Vec::new();
    let mut best_fits: Vec<LeastSquaresFit> = Vec::new();
    let mut fits_done: u64 = 0;
    let mut budget_exhausted = false;
    let mut fired_at: Option<usize> = None;

    for k in 1..=k_cap {
        let level: u64 = binomial(p, k);
        if fits_done.saturating_add(level) > options.fit_budget {
            budget_exhausted = true;
            break;
        }
        let combos: Vec<Vec<usize>> = (0..p).combinations(k).collect();
        let fits: Vec<LeastSquaresFit> = combos
            .par_iter()
            .map(|subset| fit_subset(design, subset, y))
            .collect::<Result<Vec<_>>>()?;
        fits_done += level;

        let mut best_idx = 0;
        for (idx, fit) in fits.iter().enumerate() {
            records.push(SubsetRecord {
                k,
                subset: fit.subset.clone(),
                epsilon: fit.loocv_error,
            });
            if fit.loocv_error < fits[best_idx].loocv_error {
                best_idx = idx;
            }
        }
        let eps_k = fits[best_idx].loocv_error;
        k_minima.push(SubsetRecord {
            k,
            subset: fits[best_idx].subset.clone(),
            epsilon: eps_k,
        });
        best_fits.push(fits[best_idx].clone());

        if k == 1 {
            if eps_k.is_infinite() {
                return Err(Error::Unvalidatable { k: 1 });
            }
            continue;
        }
        let eps_prev = k_minima[k - 2].epsilon;
        if eps_prev - eps_k <= options.stop_factor * eps_prev {
            fired_at = Some(k);
            break;
        }
    }

    if best_fits.is_empty() {
        // Budget too small for even k = 1.
        return Err(Error::InvalidParameter {
            name: "fit_budget",
            reason: format!(
                "budget {} does not cover the {} size-1 subsets",
                options.fit_budget, p
            ),
        });
    }

    let (selected_fit, stop_k, criterion_fired) = match fired_at {
        Some(k) => (&best_fits[k - 2], k, true),
        None => (
            best_fits.last().expect("at least one level evaluated"),
            k_minima.last().expect("at least one level evaluated").k,
            false,
        ),
    };
    if selected_fit.loocv_error.is_infinite() {
        return Err(Error::Unvalidatable {
            k: selected_fit.subset.len(),
        });
    }

    let trace = GrowthTrace {
        records,
        k_minima,
        stop_k,
        criterion_fired,
        budget_exhausted,
        selected: SubsetRecord {
            k: selected_fit.subset.len(),
            subset: selected_fit.subset.clone(),
            epsilon: selected_fit.loocv_error,
        },
    };
    Ok((selected_fit.clone(), trace))
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    let mut value: u64 = 1;
    for i in 0..k {
        value = value.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    value
}

/// Run the growth loop for every state variable against externally supplied
/// regression targets (one vector of length m per variable).
///
/// This is the core of [`identify`]; it is public so exact targets can be
/// supplied directly, bypassing the spline stage.
pub fn identify_from_targets(
    design: &DesignMatrix,
    targets: &[Vec<f64>],
    options: &GrowthOptions,
) -> Result<(SparseModel, Vec<GrowthTrace>)> {
    let mut selections = Vec::with_capacity(targets.len());
    let mut traces = Vec::with_capacity(targets.len());
    for (variable, y) in targets.iter().enumerate() {
        let (fit, trace) =
            grow_one_variable(design, y, options).map_err(|e| Error::GrowthFailed {
                variable,
                source: Box::new(e),
            })?;
        selections.push(
            fit.subset
                .iter()
                .copied()
                .zip(fit.coefficients.iter().copied())
                .collect::<Vec<_>>(),
        );
        traces.push(trace);
    }
    let model = SparseModel::from_selections(design.library(), &selections)?;
    Ok((model, traces))
}

/// Full pipeline: spline-estimate derivatives, build the design matrix, and
/// grow each variable's subset.
pub fn identify(
    samples: &TimeSeries,
    library: &BasisLibrary,
    options: &GrowthOptions,
) -> Result<(SparseModel, Vec<GrowthTrace>)> {
    let derivatives = estimate_derivatives(samples)?;
    let design = build_design_matrix(library, samples)?;
    let targets: Vec<Vec<f64>> = (0..samples.dimension())
        .map(|i| derivatives.variable(i))
        .collect();
    identify_from_targets(&design, &targets, options)
}

/// Trace CSV: `variable,k,subset,epsilon,is_k_minimum,is_selected`, one row
/// per evaluated candidate, subsets as `;`-joined 1-based library indices,
/// variables 1-based.
pub fn traces_to_csv(traces: &[GrowthTrace]) -> String {
    let mut out = String::from("variable,k,subset,epsilon,is_k_minimum,is_selected\n");
    for (i, trace) in traces.iter().enumerate() {
        for record in &trace.records {
            let subset = record
                .subset
                .iter()
                .map(|idx| (idx + 1).to_string())
                .join(";");
            let is_min = trace
                .k_minima
                .iter()
                .any(|m| m.k == record.k && m.subset == record.subset);
            let is_selected =
                trace.selected.subset == record.subset && trace.selected.k == record.k;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                i + 1,
                record.k,
                subset,
                crate::series::format_full(record.epsilon),
                is_min,
                is_selected
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::monomial_library;
    use approx::assert_relative_eq;

    /// Design from explicit states over the coordinate monomials, so the
    /// design matrix equals the state matrix.
    fn coordinate_design(states: Vec<Vec<f64>>) -> DesignMatrix {
        let n = states[0].len();
        let times: Vec<f64> = (0..states.len()).map(|j| j as f64).collect();
        let ts = TimeSeries::new(times, states).unwrap();
        build_design_matrix(&monomial_library(n, 1), &ts).unwrap()
    }

    #[test]
    fn exact_decay_selects_single_term() {
        // ẋ = −x with exact targets over library {x, x²}.
        let times: Vec<f64> = (0..13).map(|j| 0.5 * j as f64).collect();
        let states: Vec<Vec<f64>> = times.iter().map(|&t| vec![(-t).exp()]).collect();
        let ts = TimeSeries::new(times, states).unwrap();
        let lib = monomial_library(1, 2);
        let design = build_design_matrix(&lib, &ts).unwrap();
        let y: Vec<f64> = (0..13).map(|j| -design.value(j, 0)).collect();
        let (fit, trace) = grow_one_variable(&design, &y, &GrowthOptions::default()).unwrap();
        assert_eq!(fit.subset, vec![0]);
        assert_relative_eq!(fit.coefficients[0], -1.0, epsilon = 1e-10);
        assert!(trace.criterion_fired);
        assert_eq!(trace.stop_k, 2);
        assert_eq!(trace.selected.epsilon, 0.0);
    }

    #[test]
    fn trace_contains_every_subset_per_k() {
        let states: Vec<Vec<f64>> = (0..10)
            .map(|j| {
                let t = j as f64 * 0.37;
                vec![t.sin() + 0.2, (1.3 * t).cos(), (0.4 * t).exp() - 1.5]
            })
            .collect();
        let design = coordinate_design(states);
        let y: Vec<f64> = (0..10)
            .map(|j| (j as f64 * 0.11).sin() + 0.05 * j as f64)
            .collect();
        let options = GrowthOptions {
            stop_factor: 1e-9, // effectively never fires on generic data
            ..GrowthOptions::default()
        };
        let (_, trace) = grow_one_variable(&design, &y, &options).unwrap();
        for (k, count) in [(1usize, 3usize), (2, 3), (3, 1)] {
            let got = trace.records.iter().filter(|r| r.k == k).count();
            assert_eq!(got, count, "k = {k}");
        }
        // per-k minima really are the minima
        for min in &trace.k_minima {
            let level_min = trace
                .records
                .iter()
                .filter(|r| r.k == min.k)
                .map(|r| r.epsilon)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(min.epsilon, level_min);
        }
    }

    #[test]
    fn single_function_library_selects_it() {
        let states: Vec<Vec<f64>> = (0..6).map(|j| vec![1.0 + j as f64]).collect();
        let design = coordinate_design(states);
        let y: Vec<f64> = (0..6)
            .map(|j| 2.0 * (1.0 + j as f64) + 0.01 * (j as f64).sin())
            .collect();
        let (fit, trace) = grow_one_variable(&design, &y, &GrowthOptions::default()).unwrap();
        assert_eq!(fit.subset, vec![0]);
        assert!(!trace.criterion_fired);
        assert_eq!(trace.stop_k, 1);
    }

    #[test]
    fn error_increase_fires_criterion() {
        // Adding the second column makes ε worse here; the criterion's left
        // side goes negative and growth must stop at k = 2 keeping {x1}.
        let states: Vec<Vec<f64>> = (0..8)
            .map(|j| {
                let t = j as f64;
                vec![(0.9f64).powf(t), (t * 1.7).sin()]
            })
            .collect();
        let design = coordinate_design(states);
        let y: Vec<f64> = (0..8)
            .map(|j| {
                let t = j as f64;
                3.0 * (0.9f64).powf(t) + 0.05 * (2.3 * t).cos()
            })
            .collect();
        let (fit, trace) = grow_one_variable(&design, &y, &GrowthOptions::default()).unwrap();
        assert!(
            trace.k_minima[1].epsilon > trace.k_minima[0].epsilon,
            "premise: ε_2 = {} should exceed ε_1 = {}",
            trace.k_minima[1].epsilon,
            trace.k_minima[0].epsilon
        );
        assert!(trace.criterion_fired);
        assert_eq!(trace.stop_k, 2);
        assert_eq!(fit.subset, vec![0]);
    }

    #[test]
    fn unvalidatable_first_level_errors() {
        // One sample: every single-column fit interpolates it.
        let design = coordinate_design(vec![vec![1.0, 2.0]]);
        let err = grow_one_variable(&design, &[1.0], &GrowthOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Unvalidatable { k: 1 }));
    }

    #[test]
    fn budget_guard_limits_levels() {
        let states: Vec<Vec<f64>> = (0..9)
            .map(|j| {
                let t = j as f64 * 0.5;
                vec![t.sin(), t.cos(), (0.3 * t).sin(), (0.7 * t).cos()]
            })
            .collect();
        let design = coordinate_design(states);
        let y: Vec<f64> = (0..9)
            .map(|j| (j as f64 * 0.21).cos() * 2.0 + 0.3)
            .collect();
        let options = GrowthOptions {
            stop_factor: 1e-12,
            fit_budget: 5, // covers k = 1 (4 fits) but not k = 2 (6 more)
            ..GrowthOptions::default()
        };
        let (fit, trace) = grow_one_variable(&design, &y, &options).unwrap();
        assert!(trace.budget_exhausted);
        assert!(!trace.criterion_fired);
        assert_eq!(trace.stop_k, 1);
        assert_eq!(fit.subset.len(), 1);
    }

    #[test]
    fn off_support_entries_are_exact_zeros() {
        let lib = monomial_library(2, 2);
        let model =
            SparseModel::from_selections(&lib, &[vec![(1, 0.5)], vec![(0, -1.0), (3, 2.0)]])
                .unwrap();
        let mut nonzero = 0;
        for row in model.z() {
            for &v in row {
                if v != 0.0 {
                    nonzero += 1;
                }
            }
        }
        assert_eq!(nonzero, 3);
        assert_eq!(model.k(0), 1);
        assert_eq!(model.k(1), 2);
        assert_eq!(model.row(0)[0], 0.0);
        assert!(model.row(0)[0].to_bits() == 0.0f64.to_bits());
    }

    #[test]
    fn trace_csv_shape() {
        let states: Vec<Vec<f64>> = (0..7)
            .map(|j| vec![(j as f64 * 0.5).sin(), (j as f64 * 0.3).cos()])
            .collect();
        let design = coordinate_design(states);
        let y: Vec<f64> = (0..7).map(|j| (j as f64 * 0.5).sin() * 2.0).collect();
        let (_, trace) = grow_one_variable(&design, &y, &GrowthOptions::default()).unwrap();
        let csv = traces_to_csv(std::slice::from_ref(&trace));
        assert!(csv.starts_with("variable,k,subset,epsilon,is_k_minimum,is_selected\n"));
        assert_eq!(csv.lines().count(), trace.records.len() + 1);
        assert!(csv.lines().skip(1).all(|l| l.starts_with("1,")));
        assert_eq!(csv.lines().filter(|l| l.ends_with(",true")).count(), 1);
    }

    #[test]
    fn identical_inputs_give_identical_output() {
        let times: Vec<f64> = (0..11).map(|j| 0.37 * j as f64).collect();
        let states: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| vec![t.sin() + 0.1, (0.8 * t).cos() - 0.2])
            .collect();
        let ts = TimeSeries::new(times, states).unwrap();
        let lib = monomial_library(2, 2);
        let (m1, t1) = identify(&ts, &lib, &GrowthOptions::default()).unwrap();
        let (m2, t2) = identify(&ts, &lib, &GrowthOptions::default()).unwrap();
        assert_eq!(m1.z(), m2.z());
        assert_eq!(traces_to_csv(&t1), traces_to_csv(&t2));
    }
}
