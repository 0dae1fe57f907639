//! Sampled trajectories: strictly increasing time stamps plus one state row per stamp.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// A multivariate trajectory sampled at strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
}

impl TimeSeries {
    /// Build a series from time stamps and one state row per stamp.
    ///
    /// Times must be finite and strictly increasing; every state row must have
    /// the same length and contain only finite values.
    pub fn new(times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::TooFewSamples { min: 1, got: 0 });
        }
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                context: "state rows vs time stamps",
                expected: times.len(),
                got: states.len(),
            });
        }
        validate_times(&times)?;
        let dim = states[0].len();
        for (j, row) in states.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "state row length",
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("state row {j}"),
                });
            }
        }
        Ok(Self { times, states })
    }

    /// Number of samples m.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of state variables n.
    pub fn dimension(&self) -> usize {
        self.states[0].len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    /// State row at sample index j.
    pub fn state(&self, j: usize) -> &[f64] {
        &self.states[j]
    }

    /// Copy of one variable's samples (column i).
    pub fn variable(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|row| row[i]).collect()
    }

    /// Render as CSV with header `t,x1,...,xn`.
    ///
    /// `comments` are emitted first as `# ...` lines (ignored on parse).
    /// Numbers carry 17 significant digits so parsing recovers them exactly.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let n = self.dimension();
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        out.push('t');
        for i in 1..=n {
            let _ = write!(out, ",x{i}");
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{}", format_full(*t));
            for v in row {
                let _ = write!(out, ",{}", format_full(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Parse the CSV format produced by [`TimeSeries::to_csv`].
    ///
    /// Lines starting with `#` are skipped; the first remaining line must be
    /// the header. Errors name the offending 1-based line.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut times = Vec::new();
        let mut states = Vec::new();
        let mut dim: Option<usize> = None;
        let mut header_seen = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                if !line.starts_with('t') {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: format!("expected header starting with 't', got '{line}'"),
                    });
                }
                dim = Some(line.split(',').count() - 1);
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let expected = dim.unwrap_or(0) + 1;
            if fields.len() != expected {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("expected {expected} fields, got {}", fields.len()),
                });
            }
            let mut values = Vec::with_capacity(fields.len());
            for f in &fields {
                let v: f64 = f.trim().parse().map_err(|_| Error::Parse {
                    line: line_no,
                    reason: format!("cannot parse '{f}' as a number"),
                })?;
                values.push(v);
            }
            let t = values[0];
            if let Some(&prev) = times.last() {
                if t <= prev {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: format!("time {t} does not exceed previous time {prev}"),
                    });
                }
            }
            times.push(t);
            states.push(values[1..].to_vec());
        }
        if times.is_empty() {
            return Err(Error::Parse {
                line: 0,
                reason: "no data rows".to_string(),
            });
        }
        Self::new(times, states)
    }

    pub fn write_csv(&self, path: &Path, comments: &[String]) -> Result<()> {
        std::fs::write(path, self.to_csv(comments))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv(&text)
    }
}

/// Format with 17 significant digits; round-trips through `f64::from_str`.
pub fn format_full(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn validate_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite {
            context: "time stamps".to_string(),
        });
    }
    for j in 1..times.len() {
        if times[j] <= times[j - 1] {
            return Err(Error::NonMonotonicTimes {
                index: j,
                previous: times[j - 1],
                value: times[j],
            });
        }
    }
    Ok(())
}
