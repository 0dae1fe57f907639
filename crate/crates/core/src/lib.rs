//! Sparse continuous-time system identification from unevenly sampled
//! trajectories.
//!
//! The pipeline: cubic-spline derivative estimation at the sample times
//! ([`spline`]), a design matrix of candidate monomials evaluated along the
//! trajectory ([`basis`]), closed-form leave-one-sample-out scoring of every
//! column subset ([`regress`]), and an exhaustive subset-growth loop that
//! stops once the best score stops improving ([`growth`]). [`simulate`] and
//! [`bench`] provide the benchmark systems and the averaged-RMSE experiment
//! harness; [`cli`] wires everything into the `sisug` binary.

pub mod basis;
pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod growth;
pub mod regress;
pub mod series;
pub mod simulate;
pub mod spline;

pub use error::{Error, Result};
