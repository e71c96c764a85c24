//! GF(2) row reduction over symplectic Pauli vectors.
//!
//! Bit vectors here use completion significance order: position `2q` holds
//! `z_q` and `2q + 1` holds `x_q`, so comparing vectors lexicographically
//! compares Pauli strings in the order `I < X < Z < Y`, qubit 0 first.

use crate::pauli::PauliString;

pub(crate) type Bits = Vec<bool>;

pub(crate) fn sym_bits(p: &PauliString) -> Bits {
    let mut v = Vec::with_capacity(2 * p.n());
    for q in 0..p.n() {
        v.push(p.z_bits()[q]);
        v.push(p.x_bits()[q]);
    }
    v
}

pub(crate) fn from_sym_bits(bits: &[bool]) -> PauliString {
    let n = bits.len() / 2;
    let x = (0..n).map(|q| bits[2 * q + 1]).collect();
    let z = (0..n).map(|q| bits[2 * q]).collect();
    PauliString::new(x, z, false).expect("equal lengths")
}

/// Row of the linear system `⟨v, g⟩ = 0` in significance order.
pub(crate) fn symplectic_dual(p: &PauliString) -> Bits {
    let mut v = Vec::with_capacity(2 * p.n());
    for q in 0..p.n() {
        v.push(p.x_bits()[q]);
        v.push(p.z_bits()[q]);
    }
    v
}

pub(crate) fn xor_into(dst: &mut [bool], src: &[bool]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// Reduced row echelon form; zero rows dropped, rows ordered by pivot.
pub(crate) fn rref(mut rows: Vec<Bits>, ncols: usize) -> (Vec<Bits>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][col]) else { continue };
        rows.swap(r, p);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row[col] {
                xor_into(row, &pivot_row);
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

/// Basis of `{v : row · v = 0 for every row}`, itself in reduced echelon form.
pub(crate) fn null_space(rows: &[Bits], ncols: usize) -> Vec<Bits> {
    let (red, pivots) = rref(rows.to_vec(), ncols);
    let mut basis = Vec::new();
    for f in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![false; ncols];
        v[f] = true;
        for (row, &p) in red.iter().zip(&pivots) {
            v[p] = row[f];
        }
        basis.push(v);
    }
    rref(basis, ncols).0
}

/// Incrementally built basis of a commuting signed Pauli group.
///
/// Rows are kept in echelon order of insertion; each row stores the signed
/// product of generators it represents, so reducing a target also yields the
/// sign with which its operator appears in the group.
#[derive(Clone, Debug)]
pub(crate) struct GroupBasis {
    n: usize,
    rows: Vec<(PauliString, usize)>,
}

impl GroupBasis {
    pub(crate) fn new(n: usize) -> Self {
        Self { n, rows: Vec::new() }
    }

    /// Reduces `p` (sign ignored). Returns the unsigned remainder and the
    /// signed product of group rows consumed.
    pub(crate) fn reduce(&self, p: &PauliString) -> (Bits, PauliString) {
        let mut rem = sym_bits(p);
        let mut acc = PauliString::identity(self.n);
        for (row, pivot) in &self.rows {
            if rem[*pivot] {
                xor_into(&mut rem, &sym_bits(row));
                acc = acc.mul_commuting(row);
            }
        }
        (rem, acc)
    }

    /// `Some(signed element)` if `p` lies in the group up to sign.
    pub(crate) fn signed_member(&self, p: &PauliString) -> Option<PauliString> {
        let (rem, acc) = self.reduce(p);
        rem.iter().all(|b| !b).then_some(acc)
    }

    /// Adds `p` with its sign. Returns `false` when `p` is already spanned.
    /// The caller guarantees `p` commutes with every row.
    pub(crate) fn insert(&mut self, p: &PauliString) -> bool {
        let (rem, acc) = self.reduce(p);
        let Some(pivot) = rem.iter().position(|&b| b) else { return false };
        // p = acc · row  ⇒  row = acc · p
        let row = acc.mul_commuting(p);
        self.rows.push((row, pivot));
        true
    }
}
