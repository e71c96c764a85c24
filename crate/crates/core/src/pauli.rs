//! Signed Pauli strings in the binary symplectic representation.

use std::fmt;
use std::str::FromStr;

use crate::CoreError;

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (false, true) => Pauli::Z,
            (true, true) => Pauli::Y,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Z => (false, true),
            Pauli::Y => (true, true),
        }
    }

    /// Rank in the completion order `I < X < Z < Y`.
    pub fn order_rank(self) -> u8 {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Z => 2,
            Pauli::Y => 3,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// An `n`-qubit Hermitian Pauli operator `±P_0 ⊗ … ⊗ P_{n-1}`.
///
/// Qubit `i` carries `(x_i, z_i)`: `00 → I`, `10 → X`, `01 → Z`, `11 → Y`.
/// `Y` is the Hermitian Pauli, so only the real signs `±1` are representable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    x: Vec<bool>,
    z: Vec<bool>,
    negative: bool,
}

/// Exponent `k` such that `σ(x1,z1) σ(x2,z2) = i^k σ(x1^x2, z1^z2)` (mod 4).
fn phase_exponent(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
    let (x2, z2) = (x2 as i32, z2 as i32);
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 - x2,
        (true, false) => z2 * (2 * x2 - 1),
        (false, true) => x2 * (1 - 2 * z2),
    }
}

impl PauliString {
    pub fn new(x: Vec<bool>, z: Vec<bool>, negative: bool) -> Result<Self, CoreError> {
        if x.len() != z.len() {
            return Err(CoreError::Invalid(format!(
                "pauli bit vectors differ in length ({} vs {})",
                x.len(),
                z.len()
            )));
        }
        Ok(Self { x, z, negative })
    }

    pub fn identity(n: usize) -> Self {
        Self { x: vec![false; n], z: vec![false; n], negative: false }
    }

    /// `letter` on qubit `q`, identity elsewhere.
    pub fn single(n: usize, q: usize, letter: Pauli) -> Self {
        let mut p = Self::identity(n);
        p.set(q, letter);
        p
    }

    pub fn from_letters(letters: &[Pauli], negative: bool) -> Self {
        let (x, z) = letters.iter().map(|l| l.bits()).unzip();
        Self { x, z, negative }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x_bits(&self) -> &[bool] {
        &self.x
    }

    pub fn z_bits(&self) -> &[bool] {
        &self.z
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    /// `+1` or `-1`.
    pub fn sign(&self) -> i8 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn letter(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x[q], self.z[q])
    }

    pub fn letters(&self) -> impl Iterator<Item = Pauli> + '_ {
        (0..self.n()).map(|q| self.letter(q))
    }

    pub fn set(&mut self, q: usize, letter: Pauli) {
        let (x, z) = letter.bits();
        self.x[q] = x;
        self.z[q] = z;
    }

    pub(crate) fn set_bits(&mut self, q: usize, x: bool, z: bool) {
        self.x[q] = x;
        self.z[q] = z;
    }

    pub(crate) fn flip_sign(&mut self, flip: bool) {
        self.negative ^= flip;
    }

    pub fn with_sign(mut self, negative: bool) -> Self {
        self.negative = negative;
        self
    }

    pub fn negated(mut self) -> Self {
        self.negative = !self.negative;
        self
    }

    /// The same operator with sign `+1`.
    pub fn unsigned(&self) -> Self {
        self.clone().with_sign(false)
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).filter(|(&x, &z)| x || z).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Equal as operators up to sign.
    pub fn same_support_letters(&self, other: &Self) -> bool {
        self.x == other.x && self.z == other.z
    }

    /// Symplectic inner product is zero.
    pub fn commutes_with(&self, other: &Self) -> bool {
        let mut acc = false;
        for q in 0..self.n() {
            acc ^= (self.x[q] & other.z[q]) ^ (self.z[q] & other.x[q]);
        }
        !acc
    }

    /// Returns `(Q, k)` with `self · other = i^k Q`, where `Q` has sign `+1`
    /// and `k` already accounts for both operands' signs.
    pub fn multiply(&self, other: &Self) -> (Self, u8) {
        debug_assert_eq!(self.n(), other.n());
        let mut k: i32 = 2 * (self.negative as i32 + other.negative as i32);
        let mut out = Self::identity(self.n());
        for q in 0..self.n() {
            k += phase_exponent(self.x[q], self.z[q], other.x[q], other.z[q]);
            out.x[q] = self.x[q] ^ other.x[q];
            out.z[q] = self.z[q] ^ other.z[q];
        }
        (out, k.rem_euclid(4) as u8)
    }

    /// Product of two commuting Pauli strings (always Hermitian).
    pub fn mul_commuting(&self, other: &Self) -> Self {
        let (q, k) = self.multiply(other);
        assert!(k % 2 == 0, "product of anticommuting Paulis is anti-Hermitian");
        q.with_sign(k == 2)
    }

    /// Completion-order key: per qubit `I < X < Z < Y`, qubit 0 most significant.
    pub fn order_key(&self) -> Vec<u8> {
        self.letters().map(Pauli::order_rank).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.negative { "-" } else { "+" })?;
        for l in self.letters() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = CoreError;

    /// Parses strings such as `"+XIZ"`, `"-YY"` or `"ZZ"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (negative, body) = match s.as_bytes().first() {
            Some(b'+') => (false, &s[1..]),
            Some(b'-') => (true, &s[1..]),
            _ => (false, s),
        };
        if body.is_empty() {
            return Err(CoreError::Parse(format!("empty pauli string {s:?}")));
        }
        let letters = body
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(CoreError::Parse(format!("bad pauli letter {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_letters(&letters, negative))
    }
}
