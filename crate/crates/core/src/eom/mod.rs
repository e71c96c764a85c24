//! Efficient ontological models: a small ontic space `Λ`, a response
//! function `f(λ, E) ∈ [0, 1]`, and preparations `q` over `Λ` predicting
//! `Σ_λ q(λ) f(λ, E)`.
//!
//! Learning a preparation from data is a linear feasibility problem over the
//! probability simplex, solved by [`lp_feasibility`].

mod simplex;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::learner::Learner;
use crate::measurement::Measurement;
use crate::pauli::{Pauli, PauliString};
use crate::scalar::Real;
use crate::training::TrainingSet;
use crate::CoreError;

pub use simplex::{lp_feasibility, INFEASIBILITY_THRESHOLD, PIVOT_TOLERANCE};

/// Absolute tolerance for re-verifying a learned preparation.
pub const VERIFY_TOLERANCE: f64 = 1e-9;
/// Tolerance on `Σq = 1` for a stored preparation.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EomError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("infeasible: no preparation fits the data (phase-1 objective {objective})")]
    Infeasible { objective: f64 },
    #[error("measurement {0} is outside the model's pool")]
    UnknownMeasurement(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid preparation: {0}")]
    InvalidPreparation(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Default ontic-space budget `10 n²`.
pub fn default_lambda_budget(n: usize) -> usize {
    10 * n * n
}

/// A probability vector over the ontic space.
#[derive(Clone, Debug, PartialEq)]
pub struct Preparation<T> {
    probs: Vec<T>,
}

impl<T: Real> Preparation<T> {
    pub fn new(probs: Vec<T>) -> Result<Self, EomError> {
        if probs.is_empty() {
            return Err(EomError::InvalidPreparation("empty".into()));
        }
        if probs.iter().any(|p| !(*p >= T::zero()) || !p.is_finite()) {
            return Err(EomError::InvalidPreparation("entries must be finite and nonnegative".into()));
        }
        let sum: T = probs.iter().copied().sum();
        if (sum - T::one()).abs() > T::tol(SUM_TOLERANCE) {
            return Err(EomError::InvalidPreparation(format!("entries sum to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(size: usize) -> Self {
        Self { probs: vec![T::one() / T::lit(size as f64); size] }
    }

    pub fn delta(size: usize, index: usize) -> Self {
        let mut probs = vec![T::zero(); size];
        probs[index] = T::one();
        Self { probs }
    }

    /// Uniform point of the simplex (flat Dirichlet).
    pub fn random<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Self {
        let w: Vec<f64> = (0..size).map(|_| rng.sample::<f64, _>(rand_distr::Exp1)).collect();
        let s: f64 = w.iter().sum();
        Self { probs: w.iter().map(|v| T::lit(v / s)).collect() }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }
}

type Callback<T> = Arc<dyn Fn(usize, &Measurement) -> Option<T> + Send + Sync>;

/// Response function `f(λ, E)`.
#[derive(Clone)]
pub enum Response<T> {
    /// `values[λ][j] = f(λ, pool[j])`.
    Table { pool: Vec<Measurement>, values: Vec<Vec<T>> },
    /// Must be total over the measurements it is asked about; `None` marks
    /// a measurement outside the model.
    Callback(Callback<T>),
}

impl<T: fmt::Debug> fmt::Debug for Response<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Response::Table { pool, values } => {
                f.debug_struct("Table").field("pool", pool).field("values", values).finish()
            }
            Response::Callback(_) => f.write_str("Callback"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OntModel<T> {
    n: usize,
    lambda_size: usize,
    response: Response<T>,
    states: BTreeMap<String, Preparation<T>>,
}

impl<T: Real> OntModel<T> {
    pub fn from_table(
        n: usize,
        lambda_size: usize,
        pool: Vec<Measurement>,
        values: Vec<Vec<T>>,
    ) -> Result<Self, EomError> {
        Self::from_table_with_budget(n, lambda_size, pool, values, default_lambda_budget(n))
    }

    pub fn from_table_with_budget(
        n: usize,
        lambda_size: usize,
        pool: Vec<Measurement>,
        values: Vec<Vec<T>>,
        budget: usize,
    ) -> Result<Self, EomError> {
        check_size(lambda_size, budget)?;
        if values.len() != lambda_size {
            return Err(EomError::LengthMismatch { expected: lambda_size, got: values.len() });
        }
        if let Some(row) = values.iter().find(|r| r.len() != pool.len()) {
            return Err(EomError::LengthMismatch { expected: pool.len(), got: row.len() });
        }
        if let Some(m) = pool.iter().find(|m| m.n() != n) {
            return Err(CoreError::ArityMismatch { expected: n, got: m.n() }.into());
        }
        for (i, m) in pool.iter().enumerate() {
            if pool[..i].contains(m) {
                return Err(EomError::InvalidModel(format!("pool lists {} twice", describe(m))));
            }
        }
        if values.iter().flatten().any(|v| !(*v >= T::zero() && *v <= T::one())) {
            return Err(EomError::InvalidModel("response values must lie in [0, 1]".into()));
        }
        Ok(Self { n, lambda_size, response: Response::Table { pool, values }, states: BTreeMap::new() })
    }

    pub fn from_callback<F>(n: usize, lambda_size: usize, f: F) -> Result<Self, EomError>
    where
        F: Fn(usize, &Measurement) -> Option<T> + Send + Sync + 'static,
    {
        check_size(lambda_size, default_lambda_budget(n))?;
        Ok(Self { n, lambda_size, response: Response::Callback(Arc::new(f)), states: BTreeMap::new() })
    }

    pub fn with_state(mut self, name: impl Into<String>, p: Preparation<T>) -> Result<Self, EomError> {
        if p.len() != self.lambda_size {
            return Err(EomError::LengthMismatch { expected: self.lambda_size, got: p.len() });
        }
        self.states.insert(name.into(), p);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda_size(&self) -> usize {
        self.lambda_size
    }

    pub fn response_kind(&self) -> &Response<T> {
        &self.response
    }

    pub fn states(&self) -> &BTreeMap<String, Preparation<T>> {
        &self.states
    }

    pub fn state(&self, name: &str) -> Option<&Preparation<T>> {
        self.states.get(name)
    }

    pub fn pool(&self) -> Option<&[Measurement]> {
        match &self.response {
            Response::Table { pool, .. } => Some(pool),
            Response::Callback(_) => None,
        }
    }

    /// `f(λ, m)`.
    pub fn response(&self, lambda: usize, m: &Measurement) -> Result<T, EomError> {
        if lambda >= self.lambda_size {
            return Err(EomError::LengthMismatch { expected: self.lambda_size, got: lambda + 1 });
        }
        let v = match &self.response {
            Response::Table { pool, values } => {
                let j = pool.iter().position(|p| p == m).ok_or_else(|| EomError::UnknownMeasurement(describe(m)))?;
                values[lambda][j]
            }
            Response::Callback(f) => f(lambda, m).ok_or_else(|| EomError::UnknownMeasurement(describe(m)))?,
        };
        if !(v >= T::zero() && v <= T::one()) {
            return Err(EomError::InvalidModel(format!("response {v} outside [0, 1]")));
        }
        Ok(v)
    }

    /// `f(·, m)` over the whole ontic space.
    pub fn column(&self, m: &Measurement) -> Result<Vec<T>, EomError> {
        if let Response::Table { pool, values } = &self.response {
            let j = pool.iter().position(|p| p == m).ok_or_else(|| EomError::UnknownMeasurement(describe(m)))?;
            return Ok(values.iter().map(|r| r[j]).collect());
        }
        (0..self.lambda_size).map(|l| self.response(l, m)).collect()
    }
}

fn check_size(lambda_size: usize, budget: usize) -> Result<(), EomError> {
    if lambda_size == 0 {
        return Err(EomError::InvalidModel("ontic space must be nonempty".into()));
    }
    if lambda_size > budget {
        return Err(EomError::InvalidModel(format!("ontic space size {lambda_size} exceeds budget {budget}")));
    }
    Ok(())
}

fn describe(m: &Measurement) -> String {
    match m {
        Measurement::Pauli(p) => p.to_string(),
        Measurement::CircuitInduced { circuit, line } => {
            format!("circuit measurement ({} gates, line {line})", circuit.gates().len())
        }
    }
}

/// Random table model over a pool of distinct unsigned Pauli measurements.
/// Deterministic models draw responses from {0, 1}, others from `[0, 1)`.
pub fn random_table_model<T: Real, R: Rng + ?Sized>(
    n: usize,
    lambda_size: usize,
    pool_size: usize,
    deterministic: bool,
    rng: &mut R,
) -> Result<OntModel<T>, EomError> {
    let available = 4f64.powi(n as i32) - 1.0;
    if pool_size as f64 > available {
        return Err(EomError::InvalidInput(format!("only {available} Pauli labels on {n} qubits")));
    }
    let mut pool: Vec<Measurement> = Vec::with_capacity(pool_size);
    while pool.len() < pool_size {
        let letters: Vec<Pauli> =
            (0..n).map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..4)]).collect();
        let m = Measurement::Pauli(PauliString::from_letters(&letters, false));
        if !letters.iter().all(|&l| l == Pauli::I) && !pool.contains(&m) {
            pool.push(m);
        }
    }
    let values = (0..lambda_size)
        .map(|_| {
            (0..pool_size)
                .map(|_| if deterministic { T::lit(rng.random_range(0..2) as f64) } else { T::lit(rng.random()) })
                .collect()
        })
        .collect();
    OntModel::from_table_with_budget(n, lambda_size, pool, values, usize::MAX)
}

pub fn eom_expectation<T: Real>(q: &Preparation<T>, model: &OntModel<T>, m: &Measurement) -> Result<T, EomError> {
    if q.len() != model.lambda_size {
        return Err(EomError::LengthMismatch { expected: model.lambda_size, got: q.len() });
    }
    let col = model.column(m)?;
    let v: T = q.probs.iter().zip(&col).map(|(&p, &f)| p * f).sum();
    Ok(v.max(T::zero()).min(T::one()))
}

/// Mean of `shots` draws of Bernoulli(`f(λ, m)`) with `λ ~ q`.
pub fn eom_sample_estimate<T: Real>(
    q: &Preparation<T>,
    model: &OntModel<T>,
    m: &Measurement,
    shots: usize,
    seed: u64,
) -> Result<f64, EomError> {
    if shots == 0 {
        return Err(EomError::InvalidInput("at least one shot is needed".into()));
    }
    if q.len() != model.lambda_size {
        return Err(EomError::LengthMismatch { expected: model.lambda_size, got: q.len() });
    }
    let col: Vec<f64> = model.column(m)?.into_iter().map(Real::as_f64).collect();
    let weights: Vec<f64> = q.probs.iter().map(|p| p.as_f64()).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| EomError::InvalidPreparation(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..shots {
        let lambda = dist.sample(&mut rng);
        if rng.random::<f64>() < col[lambda] {
            hits += 1;
        }
    }
    Ok(hits as f64 / shots as f64)
}

/// Finds a preparation reproducing every training value within `eta`.
pub fn learn_preparation<T: Real>(model: &OntModel<T>, data: &TrainingSet, eta: f64) -> Result<Preparation<T>, EomError> {
    if !(eta >= 0.0) {
        return Err(EomError::InvalidInput(format!("tolerance must be nonnegative, got {eta}")));
    }
    if data.n() != model.n {
        return Err(CoreError::ArityMismatch { expected: model.n, got: data.n() }.into());
    }
    if data.is_empty() {
        return Ok(Preparation::uniform(model.lambda_size));
    }
    let a: Vec<Vec<T>> = data.examples().iter().map(|ex| model.column(&ex.measurement)).collect::<Result<_, _>>()?;
    let b: Vec<T> = data.examples().iter().map(|ex| T::lit(ex.value)).collect();
    let x = lp_feasibility(&a, &b, T::lit(eta), true)?;
    let sum: T = x.iter().copied().sum();
    if (sum - T::one()).abs() > T::tol(VERIFY_TOLERANCE) {
        return Err(EomError::Infeasible { objective: (sum - T::one()).abs().as_f64() });
    }
    let q = Preparation { probs: x.into_iter().map(|v| v / sum).collect() };
    for (row, &target) in a.iter().zip(&b) {
        let v: T = row.iter().zip(&q.probs).map(|(&f, &p)| f * p).sum();
        let miss = (v - target).abs() - T::lit(eta);
        if miss > T::tol(VERIFY_TOLERANCE) {
            return Err(EomError::Infeasible { objective: miss.as_f64() });
        }
    }
    Ok(q)
}

/// Whether the training rows, together with the normalization row, span
/// every pool row. When they do, any two preparations that agree on the
/// training data agree on the whole pool.
pub fn training_spans_pool<T: Real>(model: &OntModel<T>, data: &TrainingSet) -> Result<bool, EomError> {
    let pool = model
        .pool()
        .ok_or_else(|| EomError::InvalidInput("span check needs a tabulated response".into()))?;
    let l = model.lambda_size;
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0; l]];
    for ex in data.examples() {
        rows.push(model.column(&ex.measurement)?.into_iter().map(Real::as_f64).collect());
    }
    let base = rank(&rows);
    for m in pool {
        rows.push(model.column(m)?.into_iter().map(Real::as_f64).collect());
    }
    Ok(rank(&rows) == base)
}

fn rank(rows: &[Vec<f64>]) -> usize {
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let sv = m.singular_values();
    let top = sv.max();
    sv.iter().filter(|&&s| s > 1e-9 * top.max(1.0)).count()
}

/// Preparation learner for a fixed model.
#[derive(Clone, Debug)]
pub struct PreparationLearner<T> {
    pub model: OntModel<T>,
}

impl<T: Real> Learner for PreparationLearner<T> {
    type Hypothesis = Preparation<T>;
    type Error = EomError;

    fn fit(&self, data: &TrainingSet, eta: f64) -> Result<Preparation<T>, EomError> {
        learn_preparation(&self.model, data, eta)
    }

    fn predict(&self, q: &Preparation<T>, m: &Measurement) -> Result<f64, EomError> {
        Ok(eom_expectation(q, &self.model, m)?.as_f64())
    }
}
