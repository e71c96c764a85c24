//! Two-outcome measurements and the distributions training data is drawn from.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{random_bounded_circuit, Circuit, TwoQubitFamily};
use crate::pauli::{Pauli, PauliString};
use crate::CoreError;

/// A two-outcome POVM element `E`.
///
/// * `Pauli(P)` is `E = (I + P)/2`, so value 1 means `⟨P⟩ = +1`.
/// * `CircuitInduced { circuit: U, line: i }` is `E = U†((I + Z_i)/2)U`,
///   the probability of reading 0 on line `i` after running `U`.
#[derive(Clone, Debug, PartialEq)]
pub enum Measurement {
    Pauli(PauliString),
    CircuitInduced { circuit: Circuit, line: usize },
}

impl Measurement {
    pub fn circuit_induced(circuit: Circuit, line: usize) -> Result<Self, CoreError> {
        if line >= circuit.n() {
            return Err(CoreError::Invalid(format!(
                "measured line {line} out of range for {} lines",
                circuit.n()
            )));
        }
        Ok(Measurement::CircuitInduced { circuit, line })
    }

    pub fn n(&self) -> usize {
        match self {
            Measurement::Pauli(p) => p.n(),
            Measurement::CircuitInduced { circuit, .. } => circuit.n(),
        }
    }

    pub fn as_pauli(&self) -> Option<&PauliString> {
        match self {
            Measurement::Pauli(p) => Some(p),
            _ => None,
        }
    }
}

impl From<PauliString> for Measurement {
    fn from(p: PauliString) -> Self {
        Measurement::Pauli(p)
    }
}

/// The distribution `D_n` over measurements.
#[derive(Clone, Debug, PartialEq)]
pub enum MeasurementDistribution {
    /// Uniform over non-identity Pauli strings of weight `1..=max_weight`, sign `+1`.
    UniformPauli { max_weight: usize },
    /// Random circuit-induced measurements: `gate_count` gates, at most
    /// `d_budget` gates across any cut, measured line uniform.
    CircuitFamily { gate_count: usize, d_budget: usize },
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn random_subset<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

impl MeasurementDistribution {
    pub fn validate(&self, n: usize) -> Result<(), CoreError> {
        match *self {
            MeasurementDistribution::UniformPauli { max_weight } => {
                if max_weight == 0 {
                    return Err(CoreError::InfeasibleDistribution(
                        "max_weight = 0 leaves only the identity, which is excluded".into(),
                    ));
                }
                if max_weight > n {
                    return Err(CoreError::InfeasibleDistribution(format!(
                        "max_weight {max_weight} exceeds qubit count {n}"
                    )));
                }
            }
            MeasurementDistribution::CircuitFamily { .. } => {
                if n == 0 {
                    return Err(CoreError::InfeasibleDistribution("circuit family needs n >= 1".into()));
                }
            }
        }
        Ok(())
    }

    /// One draw; the caller has validated the spec for `n`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Measurement {
        match *self {
            MeasurementDistribution::UniformPauli { max_weight } => {
                let weights: Vec<f64> =
                    (1..=max_weight).map(|w| binomial(n, w) * 3f64.powi(w as i32)).collect();
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut w = max_weight;
                for (i, &c) in weights.iter().enumerate() {
                    if u < c {
                        w = i + 1;
                        break;
                    }
                    u -= c;
                }
                let mut p = PauliString::identity(n);
                for q in random_subset(n, w, rng) {
                    let letter = [Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..3)];
                    p.set(q, letter);
                }
                Measurement::Pauli(p)
            }
            MeasurementDistribution::CircuitFamily { gate_count, d_budget } => {
                let circuit = random_bounded_circuit(n, gate_count, d_budget, TwoQubitFamily::Generic, rng);
                let line = rng.random_range(0..n);
                Measurement::CircuitInduced { circuit, line }
            }
        }
    }
}

/// `m` i.i.d. draws from `dist`, deterministic in `seed`.
pub fn sample_measurements(
    dist: &MeasurementDistribution,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<Measurement>, CoreError> {
    if m == 0 {
        return Err(CoreError::Invalid("sample count must be at least 1".into()));
    }
    dist.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m).map(|_| dist.sample(n, &mut rng)).collect())
}
