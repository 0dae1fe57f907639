//! Run configuration for the CLI: a TOML file whose every field has a
//! default; unknown keys are rejected so typos fail loudly. Command-line
//! flags override config-file values.

use crate::basis::{monomial_library, BasisFunction, BasisLibrary};
use crate::error::{Error, Result};
use crate::growth::GrowthOptions;
use crate::simulate::{builtin_system, PolynomialSystem};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Builtin name or inline definition; absent means the command must get
    /// `--system` (or, for identify, `--input`).
    pub system: Option<SystemConfig>,
    pub sampling: SamplingConfig,
    pub identification: IdentificationConfig,
    pub experiment: ExperimentSection,
    pub output: OutputConfig,
}

/// Either `{ name = "ring6" }` or an inline system with `library` (exponent
/// vectors), `z` (coefficient rows), and `initial_state`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: Option<String>,
    pub library: Option<Vec<Vec<u32>>>,
    pub z: Option<Vec<Vec<f64>>>,
    pub initial_state: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    /// Total samples m; m − 1 jittered stamps follow t_start.
    pub m: usize,
    pub horizon: f64,
    pub t_start: f64,
    /// Jitter half-width as a fraction of the nominal period, in [0, 1/2).
    pub jitter: f64,
    pub seed: Option<u64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            m: 13,
            horizon: 6.0,
            t_start: 0.0,
            jitter: 0.25,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentificationConfig {
    /// Monomial library degree; takes precedence over `library_file`.
    pub degree: Option<u32>,
    /// Custom library file: one monomial per line as space-separated
    /// exponents, `#` comments.
    pub library_file: Option<PathBuf>,
    pub stop_factor: f64,
    pub k_max: Option<usize>,
    pub fit_budget: u64,
}

impl Default for IdentificationConfig {
    fn default() -> Self {
        let growth = GrowthOptions::default();
        Self {
            degree: None,
            library_file: None,
            stop_factor: growth.stop_factor,
            k_max: growth.k_max,
            fit_budget: growth.fit_budget,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Total sample counts m to sweep.
    pub m: Vec<usize>,
    pub repetitions: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            m: vec![13, 25, 49],
            repetitions: 50,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParameter {
            name: "config",
            reason: e.to_string(),
        })
    }

    /// Growth options from the identification section.
    pub fn growth_options(&self) -> GrowthOptions {
        GrowthOptions {
            stop_factor: self.identification.stop_factor,
            k_max: self.identification.k_max,
            fit_budget: self.identification.fit_budget,
        }
    }

    /// Resolve the system to simulate. `name_override` is the `--system`
    /// flag; it must name a builtin and wins over the config section.
    pub fn resolve_system(&self, name_override: Option<&str>) -> Result<PolynomialSystem> {
        if let Some(name) = name_override {
            return builtin_system(name).ok_or_else(|| Error::InvalidParameter {
                name: "system",
                reason: format!("unknown builtin '{name}' (available: ring6, vanderpol)"),
            });
        }
        let section = self
            .system
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter {
                name: "system",
                reason: "no system given; pass --system or add a [system] section".to_string(),
            })?;
        section.resolve()
    }

    /// Identification library for data of the given dimension.
    ///
    /// Precedence: explicit degree, then a custom library file, then the
    /// simulated system's own library, then monomials of degree 3.
    pub fn resolve_library(
        &self,
        dimension: usize,
        system: Option<&PolynomialSystem>,
    ) -> Result<BasisLibrary> {
        if let Some(degree) = self.identification.degree {
            if degree == 0 {
                return Err(Error::InvalidParameter {
                    name: "degree",
                    reason: "must be at least 1".to_string(),
                });
            }
            return Ok(monomial_library(dimension, degree));
        }
        if let Some(path) = &self.identification.library_file {
            let library = BasisLibrary::load(path)?;
            if library.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    context: "library file dimension vs data dimension",
                    expected: dimension,
                    got: library.dimension(),
                });
            }
            return Ok(library);
        }
        if let Some(system) = system {
            return Ok(system.library().clone());
        }
        Ok(monomial_library(dimension, 3))
    }
}

impl SystemConfig {
    fn resolve(&self) -> Result<PolynomialSystem> {
        let inline = [
            self.library.is_some(),
            self.z.is_some(),
            self.initial_state.is_some(),
        ];
        if inline.iter().any(|&b| b) {
            if !inline.iter().all(|&b| b) {
                return Err(Error::InvalidParameter {
                    name: "system",
                    reason: "inline systems need all of library, z, initial_state".to_string(),
                });
            }
            let functions = self
                .library
                .as_ref()
                .unwrap()
                .iter()
                .map(|e| BasisFunction::new(e.clone()))
                .collect::<Result<Vec<_>>>()?;
            let library = BasisLibrary::new(functions)?;
            return PolynomialSystem::new(
                self.name.clone().unwrap_or_else(|| "custom".to_string()),
                library,
                self.z.clone().unwrap(),
                self.initial_state.clone().unwrap(),
            );
        }
        let name = self.name.as_ref().ok_or_else(|| Error::InvalidParameter {
            name: "system",
            reason: "[system] needs a name or an inline definition".to_string(),
        })?;
        builtin_system(name).ok_or_else(|| Error::InvalidParameter {
            name: "system",
            reason: format!("unknown builtin '{name}' (available: ring6, vanderpol)"),
        })
    }
}
