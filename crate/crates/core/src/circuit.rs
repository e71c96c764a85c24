//! Gates, circuits, and the per-cut gate count that bounds Schmidt rank.

use num_complex::Complex64;
use rand::Rng;

use crate::linalg::random_unitary;
use crate::CoreError;

const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    H,
    S,
    X,
    Y,
    Z,
    /// Control is `targets[0]`, target is `targets[1]`.
    Cnot,
    Cz,
    /// Row-major 2×2 unitary.
    Unitary1(Box<[Complex64; 4]>),
    /// Row-major 4×4 unitary on `|t0 t1⟩`, `t0 = targets[0]` most significant.
    Unitary2(Box<[Complex64; 16]>),
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz | GateKind::Unitary2(_) => 2,
            _ => 1,
        }
    }

    pub fn is_clifford(&self) -> bool {
        !matches!(self, GateKind::Unitary1(_) | GateKind::Unitary2(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::Unitary1(_) => "U1",
            GateKind::Unitary2(_) => "U2",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
}

fn check_unitary(m: &[Complex64], dim: usize) -> Result<(), CoreError> {
    for i in 0..dim {
        for j in 0..dim {
            let dot: Complex64 = (0..dim).map(|k| m[k * dim + i].conj() * m[k * dim + j]).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            if (dot - want).norm() > UNITARY_TOL || !dot.re.is_finite() {
                return Err(CoreError::Invalid(format!(
                    "gate matrix is not unitary (entry ({i},{j}) of U†U is {dot})"
                )));
            }
        }
    }
    Ok(())
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>) -> Result<Self, CoreError> {
        if targets.len() != kind.arity() {
            return Err(CoreError::Invalid(format!(
                "{} expects {} target(s), got {}",
                kind.name(),
                kind.arity(),
                targets.len()
            )));
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(CoreError::Invalid(format!("{} targets must be distinct", kind.name())));
        }
        match &kind {
            GateKind::Unitary1(m) => check_unitary(&m[..], 2)?,
            GateKind::Unitary2(m) => check_unitary(&m[..], 4)?,
            _ => {}
        }
        Ok(Self { kind, targets })
    }

    pub fn h(q: usize) -> Self {
        Self { kind: GateKind::H, targets: vec![q] }
    }
    pub fn s(q: usize) -> Self {
        Self { kind: GateKind::S, targets: vec![q] }
    }
    pub fn x(q: usize) -> Self {
        Self { kind: GateKind::X, targets: vec![q] }
    }
    pub fn y(q: usize) -> Self {
        Self { kind: GateKind::Y, targets: vec![q] }
    }
    pub fn z(q: usize) -> Self {
        Self { kind: GateKind::Z, targets: vec![q] }
    }
    pub fn cnot(control: usize, target: usize) -> Self {
        assert_ne!(control, target);
        Self { kind: GateKind::Cnot, targets: vec![control, target] }
    }
    pub fn cz(a: usize, b: usize) -> Self {
        assert_ne!(a, b);
        Self { kind: GateKind::Cz, targets: vec![a, b] }
    }
    pub fn unitary1(q: usize, m: [Complex64; 4]) -> Result<Self, CoreError> {
        Self::new(GateKind::Unitary1(Box::new(m)), vec![q])
    }
    pub fn unitary2(a: usize, b: usize, m: [Complex64; 16]) -> Result<Self, CoreError> {
        Self::new(GateKind::Unitary2(Box::new(m)), vec![a, b])
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn is_two_qubit(&self) -> bool {
        self.targets.len() == 2
    }

    /// Row-major matrix: 2×2 for one target, 4×4 on `|t0 t1⟩` for two.
    pub fn matrix(&self) -> Vec<Complex64> {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match &self.kind {
            GateKind::H => vec![r, r, r, -r],
            GateKind::S => vec![o, z, z, i],
            GateKind::X => vec![z, o, o, z],
            GateKind::Y => vec![z, -i, i, z],
            GateKind::Z => vec![o, z, z, -o],
            GateKind::Cnot => {
                let mut m = vec![z; 16];
                m[0] = o;
                m[5] = o;
                m[11] = o;
                m[14] = o;
                m
            }
            GateKind::Cz => {
                let mut m = vec![z; 16];
                m[0] = o;
                m[5] = o;
                m[10] = o;
                m[15] = -o;
                m
            }
            GateKind::Unitary1(m) => m.to_vec(),
            GateKind::Unitary2(m) => m.to_vec(),
        }
    }

    /// Lines strictly between the two targets' cut positions: cut `c` sits
    /// between lines `c` and `c + 1`.
    pub fn crossed_cuts(&self) -> std::ops::Range<usize> {
        match self.targets[..] {
            [a, b] => a.min(b)..a.max(b),
            _ => 0..0,
        }
    }
}

/// Ordered list of gates on `n` lines.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self, CoreError> {
        let mut c = Self::empty(n);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn empty(n: usize) -> Self {
        Self { n, gates: Vec::new() }
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CoreError> {
        if let Some(&t) = gate.targets.iter().find(|&&t| t >= self.n) {
            return Err(CoreError::Invalid(format!(
                "gate target {t} out of range for {} lines",
                self.n
            )));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn is_clifford(&self) -> bool {
        self.gates.iter().all(|g| g.kind.is_clifford())
    }

    /// Number of two-qubit gates crossing each of the `n - 1` cuts.
    pub fn cut_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n.saturating_sub(1)];
        for g in &self.gates {
            for c in g.crossed_cuts() {
                counts[c] += 1;
            }
        }
        counts
    }

    /// `D = max_i D_i`, the largest number of gates crossing any cut.
    pub fn schmidt_bound(&self) -> usize {
        self.cut_counts().into_iter().max().unwrap_or(0)
    }

    /// The inverse circuit `U†`.
    pub fn adjoint(&self) -> Self {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| {
                let kind = match &g.kind {
                    GateKind::S => {
                        let m = g.matrix();
                        GateKind::Unitary1(Box::new([m[0], m[1], m[2], m[3].conj()]))
                    }
                    GateKind::Unitary1(m) => GateKind::Unitary1(Box::new(dagger::<4, 2>(m))),
                    GateKind::Unitary2(m) => GateKind::Unitary2(Box::new(dagger::<16, 4>(m))),
                    other => other.clone(),
                };
                Gate { kind, targets: g.targets.clone() }
            })
            .collect();
        Self { n: self.n, gates }
    }
}

fn dagger<const N: usize, const D: usize>(m: &[Complex64; N]) -> [Complex64; N] {
    let mut out = [Complex64::new(0.0, 0.0); N];
    for i in 0..D {
        for j in 0..D {
            out[i * D + j] = m[j * D + i].conj();
        }
    }
    out
}

/// Which two-qubit gates a random bounded circuit may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoQubitFamily {
    /// CNOT and CZ: each crossing at most doubles the cut rank.
    Controlled,
    /// Haar-ish random 4×4 unitaries.
    Generic,
}

/// Random circuit of up to `gate_count` gates whose cut counts never exceed
/// `d_budget`. Two-qubit gates act on neighbouring lines; single-qubit gates
/// are random unitaries. A two-qubit draw that would break the budget is
/// replaced by a single-qubit gate.
pub fn random_bounded_circuit<R: Rng + ?Sized>(
    n: usize,
    gate_count: usize,
    d_budget: usize,
    family: TwoQubitFamily,
    rng: &mut R,
) -> Circuit {
    let mut circuit = Circuit::empty(n);
    let mut counts = vec![0usize; n.saturating_sub(1)];
    for _ in 0..gate_count {
        let two = n >= 2 && rng.random_bool(0.5);
        let gate = if two {
            let a = rng.random_range(0..n - 1);
            if counts[a] < d_budget {
                counts[a] += 1;
                let (p, q) = if rng.random_bool(0.5) { (a, a + 1) } else { (a + 1, a) };
                Some(match family {
                    TwoQubitFamily::Controlled => {
                        if rng.random_bool(0.5) {
                            Gate::cnot(p, q)
                        } else {
                            Gate::cz(p, q)
                        }
                    }
                    TwoQubitFamily::Generic => {
                        let u = random_unitary(4, rng);
                        Gate::unitary2(p, q, u.try_into().expect("4x4")).expect("unitary")
                    }
                })
            } else {
                None
            }
        } else {
            None
        };
        let gate = gate.unwrap_or_else(|| {
            let q = rng.random_range(0..n);
            let u = random_unitary(2, rng);
            Gate::unitary1(q, u.try_into().expect("2x2")).expect("unitary")
        });
        circuit.push(gate).expect("targets in range");
    }
    circuit
}

/// Random Clifford circuit with gates drawn uniformly from {H, S, CNOT}
/// over valid targets.
pub fn random_clifford_circuit<R: Rng + ?Sized>(n: usize, gate_count: usize, rng: &mut R) -> Circuit {
    let mut circuit = Circuit::empty(n);
    for _ in 0..gate_count {
        let choice = if n >= 2 { rng.random_range(0..3) } else { rng.random_range(0..2) };
        let gate = match choice {
            0 => Gate::h(rng.random_range(0..n)),
            1 => Gate::s(rng.random_range(0..n)),
            _ => {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                Gate::cnot(a, b)
            }
        };
        circuit.push(gate).expect("targets in range");
    }
    circuit
}
