//! Training sets `T = {(E_i, Tr(E_i ρ))}` and their provenance.

use std::fmt;
use std::str::FromStr;

use crate::measurement::{Measurement, MeasurementDistribution};
use crate::CoreError;

const VALUE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    pub measurement: Measurement,
    pub value: f64,
}

impl TrainingExample {
    pub fn new(measurement: Measurement, value: f64) -> Result<Self, CoreError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(CoreError::Invalid(format!("training value {value} outside [0, 1]")));
        }
        Ok(Self { measurement, value })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance {
    /// Free-form description of the state that produced the values.
    pub true_state: String,
    pub distribution: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    n: usize,
    examples: Vec<TrainingExample>,
    pub provenance: Provenance,
}

impl TrainingSet {
    pub fn new(n: usize, examples: Vec<TrainingExample>, provenance: Provenance) -> Result<Self, CoreError> {
        for ex in &examples {
            if ex.measurement.n() != n {
                return Err(CoreError::ArityMismatch { expected: n, got: ex.measurement.n() });
            }
            if !(0.0..=1.0).contains(&ex.value) {
                return Err(CoreError::Invalid(format!("training value {} outside [0, 1]", ex.value)));
            }
        }
        Ok(Self { n, examples, provenance })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn examples(&self) -> &[TrainingExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Labels each measurement with the oracle's value. Values may stray from
/// `[0, 1]` by at most `1e-12` and are clamped; anything further is rejected.
pub fn make_training_set<E, F>(
    n: usize,
    mut oracle: F,
    measurements: Vec<Measurement>,
    provenance: Provenance,
) -> Result<TrainingSet, E>
where
    E: From<CoreError>,
    F: FnMut(&Measurement) -> Result<f64, E>,
{
    let mut examples = Vec::with_capacity(measurements.len());
    for m in measurements {
        if m.n() != n {
            return Err(CoreError::ArityMismatch { expected: n, got: m.n() }.into());
        }
        let v = oracle(&m)?;
        if !(-VALUE_SLACK..=1.0 + VALUE_SLACK).contains(&v) || v.is_nan() {
            return Err(CoreError::Invalid(format!("oracle value {v} outside [0, 1]")).into());
        }
        examples.push(TrainingExample { measurement: m, value: v.clamp(0.0, 1.0) });
    }
    Ok(TrainingSet::new(n, examples, provenance)?)
}

impl fmt::Display for MeasurementDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasurementDistribution::UniformPauli { max_weight } => write!(f, "pauli:{max_weight}"),
            MeasurementDistribution::CircuitFamily { gate_count, d_budget } => {
                write!(f, "circuit:{gate_count}:{d_budget}")
            }
        }
    }
}

impl FromStr for MeasurementDistribution {
    type Err = CoreError;

    /// `pauli:<max_weight>` or `circuit:<gate_count>:<d_budget>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| t.parse::<usize>().map_err(|_| CoreError::Parse(format!("bad number {t:?} in {s:?}")));
        match parts.as_slice() {
            ["pauli", w] => Ok(Self::UniformPauli { max_weight: num(w)? }),
            ["circuit", g, d] => Ok(Self::CircuitFamily { gate_count: num(g)?, d_budget: num(d)? }),
            _ => Err(CoreError::Parse(format!("unknown distribution spec {s:?}"))),
        }
    }
}
