//! Brute-force statevector oracle for small qubit counts.
//!
//! Qubit 0 is the most significant bit of the amplitude index, so `H` on
//! line 0 of `|00⟩` gives `(1/√2, 0, 1/√2, 0)`.

use num_complex::Complex;

use crate::circuit::{Circuit, Gate};
use crate::measurement::Measurement;
use crate::pauli::PauliString;
use crate::scalar::{cast_complex, Real, C};
use crate::CoreError;

/// Largest qubit count the oracle accepts unless told otherwise.
pub const DEFAULT_ORACLE_CAP: usize = 12;

/// Single-qubit pure state `a|0⟩ + b|1⟩`.
pub type Qubit<T> = [C<T>; 2];

pub fn qubit_zero<T: Real>() -> Qubit<T> {
    [Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero())]
}

pub fn qubit_plus<T: Real>() -> Qubit<T> {
    let r = T::FRAC_1_SQRT_2();
    [Complex::new(r, T::zero()), Complex::new(r, T::zero())]
}

pub(crate) fn check_qubit<T: Real>(q: &Qubit<T>) -> Result<(), CoreError> {
    let norm = q[0].norm_sqr() + q[1].norm_sqr();
    if (norm - T::one()).abs() > T::tol(1e-9) {
        return Err(CoreError::Invalid(format!("single-qubit input has squared norm {norm}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState<T> {
    n: usize,
    amps: Vec<C<T>>,
}

impl<T: Real> DenseState<T> {
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << n];
        amps[0] = Complex::new(T::one(), T::zero());
        Self { n, amps }
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C<T>>) -> Result<Self, CoreError> {
        if amps.len() != 1 << n {
            return Err(CoreError::Invalid(format!("expected {} amplitudes, got {}", 1usize << n, amps.len())));
        }
        let s = Self { n, amps };
        let norm = s.norm_sqr();
        if (norm - T::one()).abs() > T::tol(1e-9) {
            return Err(CoreError::Invalid(format!("amplitudes have squared norm {norm}")));
        }
        Ok(s)
    }

    pub fn product(inputs: &[Qubit<T>]) -> Result<Self, CoreError> {
        for q in inputs {
            check_qubit(q)?;
        }
        let mut amps = vec![Complex::new(T::one(), T::zero())];
        for q in inputs {
            amps = amps.iter().flat_map(|&a| [a * q[0], a * q[1]]).collect();
        }
        Ok(Self { n: inputs.len(), amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    #[inline]
    fn mask(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        let m: Vec<C<T>> = gate.matrix().into_iter().map(cast_complex).collect();
        match *gate.targets() {
            [q] => {
                let bit = self.mask(q);
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                        self.amps[i] = m[0] * a0 + m[1] * a1;
                        self.amps[i | bit] = m[2] * a0 + m[3] * a1;
                    }
                }
            }
            [qa, qb] => {
                let (ba, bb) = (self.mask(qa), self.mask(qb));
                for i in 0..self.amps.len() {
                    if i & ba == 0 && i & bb == 0 {
                        let idx = [i, i | bb, i | ba, i | ba | bb];
                        let v = idx.map(|k| self.amps[k]);
                        for (r, &k) in idx.iter().enumerate() {
                            self.amps[k] = (0..4).map(|c| m[r * 4 + c] * v[c]).sum();
                        }
                    }
                }
            }
            _ => unreachable!("gates act on one or two lines"),
        }
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) {
        for g in circuit.gates() {
            self.apply_gate(g);
        }
    }

    /// `⟨ψ|P|ψ⟩` including the sign of `P`, in `[-1, 1]`.
    pub fn pauli_expectation(&self, p: &PauliString) -> T {
        let mut xmask = 0usize;
        let mut zmask = 0usize;
        let mut ys = 0u32;
        for q in 0..self.n {
            let (x, z) = (p.x_bits()[q], p.z_bits()[q]);
            if x {
                xmask |= self.mask(q);
            }
            if z {
                zmask |= self.mask(q);
            }
            if x && z {
                ys += 1;
            }
        }
        let mut acc = Complex::new(T::zero(), T::zero());
        for (i, &a) in self.amps.iter().enumerate() {
            let term = self.amps[i ^ xmask].conj() * a;
            if (i & zmask).count_ones() % 2 == 1 {
                acc = acc - term;
            } else {
                acc = acc + term;
            }
        }
        // i^{#Y}
        let acc = match ys % 4 {
            0 => acc,
            1 => Complex::new(-acc.im, acc.re),
            2 => -acc,
            _ => Complex::new(acc.im, -acc.re),
        };
        let e = acc.re;
        if p.is_negative() {
            -e
        } else {
            e
        }
    }

    /// Probability that line `q` reads 0.
    pub fn prob_zero(&self, q: usize) -> T {
        let bit = self.mask(q);
        self.amps.iter().enumerate().filter(|(i, _)| i & bit == 0).map(|(_, a)| a.norm_sqr()).sum()
    }
}

pub(crate) fn clamp_unit<T: Real>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}

/// Applies `circuit` to the product of `inputs`, rejecting more than
/// [`DEFAULT_ORACLE_CAP`] lines.
pub fn dense_from_circuit<T: Real>(circuit: &Circuit, inputs: &[Qubit<T>]) -> Result<DenseState<T>, CoreError> {
    dense_from_circuit_capped(circuit, inputs, DEFAULT_ORACLE_CAP)
}

pub fn dense_from_circuit_capped<T: Real>(
    circuit: &Circuit,
    inputs: &[Qubit<T>],
    cap: usize,
) -> Result<DenseState<T>, CoreError> {
    if circuit.n() > cap {
        return Err(CoreError::OracleCap { n: circuit.n(), cap });
    }
    if inputs.len() != circuit.n() {
        return Err(CoreError::ArityMismatch { expected: circuit.n(), got: inputs.len() });
    }
    let mut s = DenseState::product(inputs)?;
    s.apply_circuit(circuit);
    Ok(s)
}

/// `Tr(Eρ)` for the pure state `ρ = |ψ⟩⟨ψ|`.
pub fn dense_expectation<T: Real>(state: &DenseState<T>, m: &Measurement) -> Result<T, CoreError> {
    if m.n() != state.n() {
        return Err(CoreError::ArityMismatch { expected: state.n(), got: m.n() });
    }
    let v = match m {
        Measurement::Pauli(p) => (T::one() + state.pauli_expectation(p)) / T::lit(2.0),
        Measurement::CircuitInduced { circuit, line } => {
            let mut evolved = state.clone();
            evolved.apply_circuit(circuit);
            evolved.prob_zero(*line)
        }
    };
    Ok(clamp_unit(v))
}
