//! Ground-truth polynomial systems ẋ = Zθ(x), uneven sample-time generation,
//! and a fixed-step RK4 integrator that lands exactly on the requested stamps.

use crate::basis::{monomial_library, BasisFunction, BasisLibrary};
use crate::error::{Error, Result};
use crate::series::{validate_times, TimeSeries};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A polynomial dynamical system ẋ = Zθ(x) with a named coefficient matrix
/// over an explicit basis library.
#[derive(Debug, Clone)]
pub struct PolynomialSystem {
    name: String,
    library: BasisLibrary,
    z: Vec<Vec<f64>>,
    initial_state: Vec<f64>,
}

impl PolynomialSystem {
    pub fn new(
        name: impl Into<String>,
        library: BasisLibrary,
        z: Vec<Vec<f64>>,
        initial_state: Vec<f64>,
    ) -> Result<Self> {
        let n = initial_state.len();
        if z.len() != n {
            return Err(Error::DimensionMismatch {
                context: "coefficient rows vs state dimension",
                expected: n,
                got: z.len(),
            });
        }
        if library.dimension() != n {
            return Err(Error::DimensionMismatch {
                context: "library dimension vs state dimension",
                expected: n,
                got: library.dimension(),
            });
        }
        for row in &z {
            if row.len() != library.len() {
                return Err(Error::DimensionMismatch {
                    context: "coefficient row length vs library size",
                    expected: library.len(),
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: "coefficient matrix".to_string(),
                });
            }
        }
        if initial_state.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "initial state".to_string(),
            });
        }
        Ok(Self {
            name: name.into(),
            library,
            z,
            initial_state,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn library(&self) -> &BasisLibrary {
        &self.library
    }

    pub fn z(&self) -> &[Vec<f64>] {
        &self.z
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.initial_state
    }

    pub fn dimension(&self) -> usize {
        self.initial_state.len()
    }

    /// Right-hand side Zθ(x).
    pub fn rhs(&self, state: &[f64]) -> Vec<f64> {
        let theta = self.library.evaluate_all(state);
        self.z
            .iter()
            .map(|row| row.iter().zip(&theta).map(|(c, t)| c * t).sum())
            .collect()
    }

    /// Basis functions with nonzero coefficient in row i.
    pub fn true_support(&self, i: usize) -> Vec<&BasisFunction> {
        self.z[i]
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, _)| self.library.get(j))
            .collect()
    }
}

/// The 6-node feedback ring: linear dynamics over the coordinate library,
/// twelve ±1 entries, started at e_1.
pub fn ring6() -> PolynomialSystem {
    let library = monomial_library(6, 1);
    let z = vec![
        vec![-1.0, 0.0, 0.0, 0.0, 0.0, -1.0],
        vec![1.0, -1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, -1.0, -1.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, -1.0, -1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0, -1.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 1.0, -1.0],
    ];
    let x0 = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    PolynomialSystem::new("ring6", library, z, x0).expect("ring6 definition is consistent")
}

/// The Van der Pol oscillator ẋ₁ = x₂, ẋ₂ = −x₁ + x₂ − x₁²x₂ over the nine
/// monomials of total degree ≤ 3, started at (−1, 1).
pub fn vanderpol() -> PolynomialSystem {
    let library = monomial_library(2, 3);
    let p = library.len();
    let mut z = vec![vec![0.0; p]; 2];
    let col = |e: &[u32]| library.index_of(e).expect("monomial in degree-3 library");
    z[0][col(&[0, 1])] = 1.0; // x2
    z[1][col(&[1, 0])] = -1.0; // -x1
    z[1][col(&[0, 1])] = 1.0; // +x2
    z[1][col(&[2, 1])] = -1.0; // -x1^2 x2
    let x0 = vec![-1.0, 1.0];
    PolynomialSystem::new("vanderpol", library, z, x0).expect("vanderpol definition is consistent")
}

/// Look up a builtin system by name.
pub fn builtin_system(name: &str) -> Option<PolynomialSystem> {
    match name {
        "ring6" | "ring" => Some(ring6()),
        "vanderpol" | "vdp" => Some(vanderpol()),
        _ => None,
    }
}

/// Uneven sampling: m = intervals + 1 stamps over `horizon`, the nominal grid
/// t_start + d·T perturbed per-sample by Δt ~ U(−jitter·T, +jitter·T).
#[derive(Debug, Clone)]
pub struct SamplingScheme {
    pub t_start: f64,
    pub horizon: f64,
    /// m − 1: the number of jittered samples after t_start.
    pub intervals: usize,
    /// Fraction of the nominal period T used as the jitter half-width; must be
    /// below 1/2 so stamps stay strictly increasing.
    pub jitter_fraction: f64,
    pub seed: u64,
}

impl SamplingScheme {
    pub fn new(intervals: usize, jitter_fraction: f64, seed: u64) -> Self {
        Self {
            t_start: 0.0,
            horizon: 6.0,
            intervals,
            jitter_fraction,
            seed,
        }
    }

    /// Nominal period T = horizon / (m − 1).
    pub fn period(&self) -> f64 {
        self.horizon / self.intervals as f64
    }

    fn validate(&self) -> Result<()> {
        if self.intervals < 1 {
            return Err(Error::InvalidParameter {
                name: "intervals",
                reason: "need at least one interval".to_string(),
            });
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: format!("must be positive and finite, got {}", self.horizon),
            });
        }
        if !(0.0..0.5).contains(&self.jitter_fraction) {
            return Err(Error::InvalidParameter {
                name: "jitter_fraction",
                reason: format!("must be in [0, 1/2), got {}", self.jitter_fraction),
            });
        }
        Ok(())
    }

    /// Draw the m sample stamps. Deterministic per seed; strictly increasing
    /// for any seed because consecutive gaps are at least T(1 − 2·jitter) > 0.
    pub fn sample_times(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let t = self.period();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut times = Vec::with_capacity(self.intervals + 1);
        times.push(self.t_start);
        for d in 1..=self.intervals {
            let delta = if self.jitter_fraction == 0.0 {
                0.0
            } else {
                let half = self.jitter_fraction * t;
                rng.random_range(-half..half)
            };
            times.push(self.t_start + d as f64 * t + delta);
        }
        Ok(times)
    }
}

/// Integrate ẋ = Zθ(x) from the system's initial state across the given
/// stamps with classical fixed-step RK4. The step on each interval is the
/// interval length divided evenly so the integrator lands exactly on every
/// requested time; the default internal step is at most 1e-3 of the span.
pub fn integrate(system: &PolynomialSystem, times: &[f64]) -> Result<TimeSeries> {
    let span = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
    integrate_with_max_step(system, times, 1e-3 * span)
}

/// As [`integrate`] with an explicit bound on the internal step size.
pub fn integrate_with_max_step(
    system: &PolynomialSystem,
    times: &[f64],
    max_step: f64,
) -> Result<TimeSeries> {
    if times.is_empty() {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    validate_times(times)?;
    if !max_step.is_finite() || max_step <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "max_step",
            reason: format!("must be positive, got {max_step}"),
        });
    }

    let mut state = system.initial_state().to_vec();
    let mut states = Vec::with_capacity(times.len());
    states.push(state.clone());
    for w in times.windows(2) {
        let (from, to) = (w[0], w[1]);
        let span = to - from;
        let substeps = (span / max_step).ceil().max(1.0) as usize;
        let h = span / substeps as f64;
        for s in 0..substeps {
            rk4_step(system, &mut state, h);
            if state.iter().any(|v| !v.is_finite()) {
                return Err(Error::Blowup {
                    time: from + (s + 1) as f64 * h,
                });
            }
        }
        states.push(state.clone());
    }
    TimeSeries::new(times.to_vec(), states)
}

fn rk4_step(system: &PolynomialSystem, state: &mut [f64], h: f64) {
    let n = state.len();
    let k1 = system.rhs(state);
    let mut stage = vec![0.0; n];
    for i in 0..n {
        stage[i] = state[i] + 0.5 * h * k1[i];
    }
    let k2 = system.rhs(&stage);
    for i in 0..n {
        stage[i] = state[i] + 0.5 * h * k2[i];
    }
    let k3 = system.rhs(&stage);
    for i in 0..n {
        stage[i] = state[i] + h * k3[i];
    }
    let k4 = system.rhs(&stage);
    for i in 0..n {
        state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}
