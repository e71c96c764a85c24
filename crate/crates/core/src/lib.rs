//! Learning quantum states from measurement data for classically simulable
//! families: stabilizer states, bounded-Schmidt-rank chains, and preparations
//! of efficient ontological models.
//!
//! Each family pairs a simulator with an inversion step that characterises
//! every hypothesis consistent with a training example. Together they give a
//! [`Learner`]: `fit` solves the approximate feasibility problem and
//! `predict` runs the simulator on the hypothesis.
//!
//! Numerical kernels are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix them to `f64`.

pub mod circuit;
pub mod dense;
pub mod eom;
pub mod harness;
pub mod io;
pub mod learner;
pub mod linalg;
pub mod measurement;
pub mod mps;
pub mod pac;
pub mod pauli;
pub mod rng;
pub mod scalar;
pub mod stabilizer;
pub mod training;

use thiserror::Error;

pub use circuit::{Circuit, Gate, GateKind};
pub use learner::Learner;
pub use measurement::{sample_measurements, Measurement, MeasurementDistribution};
pub use pauli::{Pauli, PauliString};
pub use scalar::Real;
pub use stabilizer::StabilizerTableau;
pub use training::{make_training_set, Provenance, TrainingExample, TrainingSet};

pub type DenseState = dense::DenseState<f64>;
pub type ChainState = mps::ChainState<f64>;
pub type OntModel = eom::OntModel<f64>;
pub type Preparation = eom::Preparation<f64>;
pub type ChainLearner = mps::ChainLearner<f64>;
pub type PreparationLearner = eom::PreparationLearner<f64>;

pub type DenseState32 = dense::DenseState<f32>;
pub type ChainState32 = mps::ChainState<f32>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("arity mismatch: expected {expected} qubits, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("oracle cap exceeded: {n} qubits > cap {cap}")]
    OracleCap { n: usize, cap: usize },
    #[error("infeasible measurement distribution: {0}")]
    InfeasibleDistribution(String),
}
