//! Low-rank quantum state tomography from sampled Pauli expectation values.
//!
//! The pipeline: draw a [`SensingEnsemble`] of Pauli words, simulate (or
//! ingest) shot-noisy expectations with [`simulator`], reconstruct a rank-`r`
//! estimate with Riemannian gradient descent ([`rgd::solve`]), and compare
//! against factored-gradient baselines ([`baselines`]) and the error-bound
//! calculators in [`bounds`].
//!
//! Pauli observables are never materialized as `d × d` matrices; they act as
//! signed permutations ([`pauli::CompiledPauli`]). The only dense object per
//! iteration is `A†(y − A(X))`.

pub mod baselines;
pub mod bounds;
pub mod error;
pub mod experiment;
pub mod factor;
pub mod linalg;
pub mod metrics;
pub mod pauli;
pub mod rgd;
pub mod sensing;
pub mod simulator;
pub mod state;
pub mod trace;

pub type C64 = nalgebra::Complex<f64>;

pub use bounds::{BoundInputs, GammaSeries};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, ExperimentSummary};
pub use factor::RankRFactor;
pub use metrics::Metrics;
pub use pauli::{CompiledPauli, Pauli, PauliLabel};
pub use rgd::{SolveOutcome, SolverOptions, TangentElement};
pub use sensing::{EnsembleRecord, RipProbe, SensingEnsemble};
pub use simulator::{Convention, CountsFile, Dataset, MeasurementVector, Shots};
pub use state::{DensityState, StateKind, StateSpec};
pub use trace::{IterRecord, SolverTrace, StopReason};
