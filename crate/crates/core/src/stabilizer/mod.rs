//! Stabilizer states: tableau simulation under Clifford gates and Pauli
//! measurements, and learning a stabilizer state from Pauli data.
//!
//! Conjugation table used by [`conjugate`] (`r` is the sign bit, updates
//! applied per generator, `P ↦ G P G†`):
//!
//! | gate        | sign update                         | bit update                    |
//! |-------------|-------------------------------------|-------------------------------|
//! | `H a`       | `r ^= x_a z_a`                      | swap `x_a`, `z_a`             |
//! | `S a`       | `r ^= x_a z_a`                      | `z_a ^= x_a`                  |
//! | `X a`       | `r ^= z_a`                          |                               |
//! | `Y a`       | `r ^= x_a ^ z_a`                    |                               |
//! | `Z a`       | `r ^= x_a`                          |                               |
//! | `CNOT c→t`  | `r ^= x_c z_t (x_t ^ z_c ^ 1)`      | `x_t ^= x_c`, `z_c ^= z_t`    |
//! | `CZ a,b`    | `r ^= x_a x_b (z_a ^ z_b)`          | `z_a ^= x_b`, `z_b ^= x_a`    |
//!
//! So `H: Z ↦ X`, `S: X ↦ Y`, `CNOT: XI ↦ XX, IZ ↦ ZZ`, `CZ: XI ↦ XZ`.

mod gf2;
mod learn;

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::learner::Learner;
use crate::measurement::Measurement;
use crate::pauli::{Pauli, PauliString};
use crate::training::TrainingSet;
use crate::CoreError;

use gf2::GroupBasis;
pub use learn::{
    classify_value, invert_constraint, learn_stabilizer, Constraint, ConstraintSet, StabilizerLearner,
    VALUE_TOLERANCE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilizerError {
    #[error("gate {0} is not a supported Clifford gate")]
    NonClifford(&'static str),
    #[error("stabilizer learner needs Pauli measurements")]
    NonPauliMeasurement,
    #[error("training value {0} is not within tolerance of 0, 1/2 or 1")]
    OutOfAlphabet(f64),
    #[error("inconsistent data: {0}")]
    InconsistentData(String),
    #[error("completion failed: unbiased constraint {violated} cannot be honoured")]
    CompletionFailed { violated: String },
    #[error("invalid tableau: {0}")]
    InvalidTableau(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// `n` independent, pairwise commuting signed Pauli generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    generators: Vec<PauliString>,
}

impl StabilizerTableau {
    pub fn new(n: usize, generators: Vec<PauliString>) -> Result<Self, StabilizerError> {
        if generators.len() != n {
            return Err(StabilizerError::InvalidTableau(format!("{} generators for {n} qubits", generators.len())));
        }
        if let Some(g) = generators.iter().find(|g| g.n() != n) {
            return Err(StabilizerError::InvalidTableau(format!("generator {g} has wrong length")));
        }
        for (i, a) in generators.iter().enumerate() {
            for b in &generators[i + 1..] {
                if !a.commutes_with(b) {
                    return Err(StabilizerError::InvalidTableau(format!("{a} and {b} anticommute")));
                }
            }
        }
        let mut basis = GroupBasis::new(n);
        for g in &generators {
            if !basis.insert(g) {
                return Err(StabilizerError::InvalidTableau(format!("generator {g} is dependent")));
            }
        }
        Ok(Self { n, generators })
    }

    /// `|0…0⟩`: generators `Z_0, …, Z_{n-1}`.
    pub fn zero(n: usize) -> Self {
        let generators = (0..n).map(|q| PauliString::single(n, q, Pauli::Z)).collect();
        Self { n, generators }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    pub fn apply_clifford(&self, gate: &Gate) -> Result<Self, StabilizerError> {
        if gate.targets().iter().any(|&t| t >= self.n) {
            return Err(CoreError::Invalid(format!("gate targets {:?} out of range", gate.targets())).into());
        }
        let generators = self.generators.iter().map(|g| conjugate(g, gate)).collect::<Result<_, _>>()?;
        Ok(Self { n: self.n, generators })
    }

    pub fn apply_circuit(&self, circuit: &Circuit) -> Result<Self, StabilizerError> {
        circuit.gates().iter().try_fold(self.clone(), |t, g| t.apply_clifford(g))
    }

    /// `Tr((I + P)/2 σ)`: 1 or 0 when `±P` is a stabilizer, ½ otherwise.
    pub fn pauli_value(&self, p: &PauliString) -> Result<f64, StabilizerError> {
        if p.n() != self.n {
            return Err(CoreError::ArityMismatch { expected: self.n, got: p.n() }.into());
        }
        if self.generators.iter().any(|g| !g.commutes_with(p)) {
            return Ok(0.5);
        }
        let element = self.basis().signed_member(p).expect("a maximal abelian group contains its commutant");
        Ok(if element.is_negative() == p.is_negative() { 1.0 } else { 0.0 })
    }

    /// Probability of reading 0 on `line` after a Clifford circuit.
    pub fn value(&self, m: &Measurement) -> Result<f64, StabilizerError> {
        match m {
            Measurement::Pauli(p) => self.pauli_value(p),
            Measurement::CircuitInduced { circuit, line } => {
                if circuit.n() != self.n {
                    return Err(CoreError::ArityMismatch { expected: self.n, got: circuit.n() }.into());
                }
                let evolved = self.apply_circuit(circuit)?;
                evolved.pauli_value(&PauliString::single(self.n, *line, Pauli::Z))
            }
        }
    }

    fn basis(&self) -> GroupBasis {
        let mut b = GroupBasis::new(self.n);
        for g in &self.generators {
            b.insert(g);
        }
        b
    }

    /// Canonical generator set: reduced echelon form of the group, so two
    /// tableaux describe the same state iff their canonical forms are equal.
    pub fn canonical(&self) -> Vec<PauliString> {
        let ncols = 2 * self.n;
        let mut rows: Vec<PauliString> = self.generators.clone();
        let mut r = 0;
        for col in 0..ncols {
            let bit = |p: &PauliString| gf2::sym_bits(p)[col];
            let Some(pi) = (r..rows.len()).find(|&i| bit(&rows[i])) else { continue };
            rows.swap(r, pi);
            let pivot = rows[r].clone();
            for i in 0..rows.len() {
                if i != r && bit(&rows[i]) {
                    rows[i] = rows[i].mul_commuting(&pivot);
                }
            }
            r += 1;
        }
        rows
    }

    /// Every stabilizer state on `n` qubits, by breadth-first search over
    /// {H, S, CNOT} from `|0…0⟩`. Sizes grow as 6, 60, 1080, … so keep `n` tiny.
    pub fn enumerate_all(n: usize) -> Vec<Self> {
        let mut gates: Vec<Gate> = (0..n).flat_map(|q| [Gate::h(q), Gate::s(q)]).collect();
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    gates.push(Gate::cnot(a, b));
                }
            }
        }
        let start = Self::zero(n);
        let mut seen: HashSet<Vec<PauliString>> = HashSet::from([start.canonical()]);
        let mut out = vec![start.clone()];
        let mut queue = VecDeque::from([start]);
        while let Some(t) = queue.pop_front() {
            for g in &gates {
                let next = t.apply_clifford(g).expect("clifford gate");
                if seen.insert(next.canonical()) {
                    out.push(next.clone());
                    queue.push_back(next);
                }
            }
        }
        out
    }
}

/// `G P G†` for a Clifford gate `G`.
pub fn conjugate(p: &PauliString, gate: &Gate) -> Result<PauliString, StabilizerError> {
    let mut out = p.clone();
    let xs = |q: &PauliString, i: usize| q.x_bits()[i];
    let zs = |q: &PauliString, i: usize| q.z_bits()[i];
    match (gate.kind(), gate.targets()) {
        (GateKind::H, &[a]) => {
            let (x, z) = (xs(p, a), zs(p, a));
            out.flip_sign(x & z);
            out.set_bits(a, z, x);
        }
        (GateKind::S, &[a]) => {
            let (x, z) = (xs(p, a), zs(p, a));
            out.flip_sign(x & z);
            out.set_bits(a, x, z ^ x);
        }
        (GateKind::X, &[a]) => out.flip_sign(zs(p, a)),
        (GateKind::Y, &[a]) => out.flip_sign(xs(p, a) ^ zs(p, a)),
        (GateKind::Z, &[a]) => out.flip_sign(xs(p, a)),
        (GateKind::Cnot, &[c, t]) => {
            let (xc, zc, xt, zt) = (xs(p, c), zs(p, c), xs(p, t), zs(p, t));
            out.flip_sign(xc & zt & !(xt ^ zc));
            out.set_bits(t, xt ^ xc, zt);
            out.set_bits(c, xc, zc ^ zt);
        }
        (GateKind::Cz, &[a, b]) => {
            let (xa, za, xb, zb) = (xs(p, a), zs(p, a), xs(p, b), zs(p, b));
            out.flip_sign(xa & xb & (za ^ zb));
            out.set_bits(a, xa, za ^ xb);
            out.set_bits(b, xb, zb ^ xa);
        }
        (kind, _) => return Err(StabilizerError::NonClifford(kind.name())),
    }
    Ok(out)
}

impl Learner for StabilizerLearner {
    type Hypothesis = StabilizerTableau;
    type Error = StabilizerError;

    /// Stabilizer data is exact, so `eta` only needs to be non-negative.
    fn fit(&self, data: &TrainingSet, _eta: f64) -> Result<StabilizerTableau, StabilizerError> {
        learn_stabilizer(data)
    }

    fn predict(&self, h: &StabilizerTableau, m: &Measurement) -> Result<f64, StabilizerError> {
        h.value(m)
    }
}
