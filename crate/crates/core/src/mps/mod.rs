//! Chain (matrix product) states with bounded Schmidt rank.
//!
//! A state on `n` lines is stored as site tensors `A_k[l, p, r]` with left
//! bond `l`, physical index `p ∈ {0, 1}` and right bond `r`:
//!
//! ```text
//! |ψ⟩ = Σ A_0[0, p0, j] A_1[j, p1, k] A_2[k, p2, l] … |p0 p1 p2 …⟩
//! ```
//!
//! Public states are right-canonical: site 0 has unit norm and every other
//! site has orthonormal rows when reshaped to `(l, 2·r)`. Internally a state
//! may carry a moving orthogonality center so that two-line updates see the
//! true Schmidt coefficients.

mod learn;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::circuit::{Circuit, Gate};
use crate::dense::{check_qubit, clamp_unit, DenseState, Qubit, DEFAULT_ORACLE_CAP};
use crate::linalg::{lq, qr, svd, CMatrix};
use crate::measurement::Measurement;
use crate::pauli::{Pauli, PauliString};
use crate::scalar::{cast_complex, Real, C};
use crate::training::TrainingExample;
use crate::CoreError;

pub use learn::{learn_chain, ChainBudget, ChainLearner};

/// Relative cutoff below which Schmidt coefficients count as zero.
pub const SCHMIDT_CUTOFF: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("rank overflow at cut {cut}: need {needed}, cap {cap}")]
    RankOverflow { cut: usize, needed: usize, cap: usize },
    #[error("no hypothesis within tolerance; best max residual {best}")]
    BudgetExhausted { best: f64 },
    #[error("invalid chain: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Site tensor `A[l, p, r]`, stored at `(l * 2 + p) * right + r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Site<T> {
    left: usize,
    right: usize,
    data: Vec<C<T>>,
}

impl<T: Real> Site<T> {
    pub fn new(left: usize, right: usize, data: Vec<C<T>>) -> Result<Self, ChainError> {
        if left == 0 || right == 0 || data.len() != left * 2 * right {
            return Err(ChainError::Invalid(format!(
                "site of shape ({left}, 2, {right}) needs {} entries, got {}",
                left * 2 * right,
                data.len()
            )));
        }
        Ok(Self { left, right, data })
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn data(&self) -> &[C<T>] {
        &self.data
    }

    #[inline]
    pub(crate) fn at(&self, l: usize, p: usize, r: usize) -> C<T> {
        self.data[(l * 2 + p) * self.right + r]
    }

    /// `(l·2, r)` view.
    fn as_tall(&self) -> CMatrix<T> {
        CMatrix::from_vec(self.left * 2, self.right, self.data.clone())
    }

    /// `(l, 2·r)` view.
    fn as_wide(&self) -> CMatrix<T> {
        CMatrix::from_vec(self.left, 2 * self.right, self.data.clone())
    }

    fn from_tall(m: CMatrix<T>) -> Self {
        Self { left: m.rows / 2, right: m.cols, data: m.data }
    }

    fn from_wide(m: CMatrix<T>) -> Self {
        Self { left: m.rows, right: m.cols / 2, data: m.data }
    }

    fn norm_sqr(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainState<T> {
    n: usize,
    bond_cap: usize,
    sites: Vec<Site<T>>,
}

impl<T: Real> ChainState<T> {
    /// Builds a state from raw site tensors and brings it to right-canonical
    /// form. The tensors need not be normalized.
    pub fn from_sites(bond_cap: usize, sites: Vec<Site<T>>) -> Result<Self, ChainError> {
        let n = sites.len();
        if n == 0 {
            return Err(ChainError::Invalid("a chain needs at least one site".into()));
        }
        if bond_cap == 0 {
            return Err(ChainError::Invalid("bond cap must be positive".into()));
        }
        if sites[0].left != 1 || sites[n - 1].right != 1 {
            return Err(ChainError::Invalid("boundary bonds must have dimension 1".into()));
        }
        for (k, w) in sites.windows(2).enumerate() {
            if w[0].right != w[1].left {
                return Err(ChainError::Invalid(format!("bond {k} has mismatched dimensions")));
            }
            if w[0].right > bond_cap {
                return Err(ChainError::RankOverflow { cut: k, needed: w[0].right, cap: bond_cap });
            }
        }
        let mut s = Self { n, bond_cap, sites };
        s.right_canonicalize()?;
        Ok(s)
    }

    pub fn zero(n: usize, bond_cap: usize) -> Self {
        chain_from_product(&vec![crate::dense::qubit_zero(); n], bond_cap).expect("valid product")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bond_cap(&self) -> usize {
        self.bond_cap
    }

    pub fn sites(&self) -> &[Site<T>] {
        &self.sites
    }

    /// Stored bond dimensions `r_1 … r_{n-1}` (at least the Schmidt ranks).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.n - 1].iter().map(|s| s.right).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.sites.iter().map(|s| s.data.len()).sum()
    }

    /// Schmidt weights `λ_i` (squared coefficients, summing to 1) at every
    /// cut, largest first, with coefficients below the cutoff dropped.
    pub fn schmidt_values(&self) -> Vec<Vec<T>> {
        let mut work = self.sites.clone();
        let mut out = Vec::with_capacity(self.n.saturating_sub(1));
        for k in 0..self.n - 1 {
            let d = svd(&work[k].as_tall());
            let keep = d.numerical_rank(T::lit(SCHMIDT_CUTOFF)).max(1);
            let total: T = d.s.iter().map(|&v| v * v).sum();
            out.push(d.s[..keep].iter().map(|&v| v * v / total).collect());
            let mut u = CMatrix::zeros(d.u.rows, keep);
            for r in 0..d.u.rows {
                for c in 0..keep {
                    *u.at_mut(r, c) = d.u.at(r, c);
                }
            }
            let mut sv = CMatrix::zeros(keep, d.vh.cols);
            for r in 0..keep {
                for c in 0..d.vh.cols {
                    *sv.at_mut(r, c) = d.vh.at(r, c) * d.s[r];
                }
            }
            work[k] = Site::from_tall(u);
            let next = sv.matmul(&work[k + 1].as_wide());
            work[k + 1] = Site::from_wide(next);
        }
        out
    }

    pub fn schmidt_ranks(&self) -> Vec<usize> {
        self.schmidt_values().iter().map(Vec::len).collect()
    }

    pub fn apply_gate(&self, gate: &Gate) -> Result<Self, ChainError> {
        let mut w = Working::new(self.clone());
        w.apply_gate(gate)?;
        w.finish()
    }

    pub fn apply_circuit(&self, circuit: &Circuit) -> Result<Self, ChainError> {
        if circuit.n() != self.n {
            return Err(CoreError::ArityMismatch { expected: self.n, got: circuit.n() }.into());
        }
        let mut w = Working::new(self.clone());
        for g in circuit.gates() {
            w.apply_gate(g)?;
        }
        w.finish()
    }

    /// `⟨ψ|P|ψ⟩` including the sign of `P`.
    pub fn pauli_expectation(&self, p: &PauliString) -> T {
        let v = transfer(&self.sites, &self.sites, |k| p.letter(k));
        let e = v.re;
        if p.is_negative() {
            -e
        } else {
            e
        }
    }

    /// Probability that line `q` reads 0.
    pub fn prob_zero(&self, q: usize) -> T {
        let mut w = Working::new(self.clone());
        w.move_center(q);
        let site = &w.state.sites[q];
        let mut acc = T::zero();
        for l in 0..site.left {
            for r in 0..site.right {
                acc = acc + site.at(l, 0, r).norm_sqr();
            }
        }
        acc / site.norm_sqr()
    }

    fn right_canonicalize(&mut self) -> Result<(), ChainError> {
        for k in (1..self.n).rev() {
            let (l, q) = lq(&self.sites[k].as_wide());
            self.sites[k] = Site::from_wide(q);
            let prev = self.sites[k - 1].as_tall().matmul(&l);
            self.sites[k - 1] = Site::from_tall(prev);
        }
        let norm = self.sites[0].norm_sqr().sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(ChainError::Invalid("chain contracts to a zero or non-finite vector".into()));
        }
        for z in self.sites[0].data.iter_mut() {
            *z = *z / norm;
        }
        Ok(())
    }
}

/// Contracts `⟨a| O_0 ⊗ O_1 ⊗ … |b⟩` with single-line Pauli factors.
fn transfer<T: Real, F: Fn(usize) -> Pauli>(bra: &[Site<T>], ket: &[Site<T>], letter: F) -> C<T> {
    let zero = C::new(T::zero(), T::zero());
    let mut env = vec![C::new(T::one(), T::zero())];
    let mut dim = (1, 1);
    for (k, (a, b)) in bra.iter().zip(ket).enumerate() {
        let op = pauli_matrix::<T>(letter(k));
        let (ra, rb) = (a.right, b.right);
        // t[l_a, p', r_b] = Σ_{l_b, p} env[l_a, l_b] op[p', p] b[l_b, p, r_b]
        let mut t = vec![zero; dim.0 * 2 * rb];
        for la in 0..dim.0 {
            for lb in 0..dim.1 {
                let e = env[la * dim.1 + lb];
                if e == zero {
                    continue;
                }
                for pp in 0..2 {
                    for p in 0..2 {
                        let o = op[pp * 2 + p];
                        if o == zero {
                            continue;
                        }
                        let f = e * o;
                        for r in 0..rb {
                            t[(la * 2 + pp) * rb + r] = t[(la * 2 + pp) * rb + r] + f * b.at(lb, p, r);
                        }
                    }
                }
            }
        }
        let mut next = vec![zero; ra * rb];
        for la in 0..dim.0 {
            for pp in 0..2 {
                for r_a in 0..ra {
                    let c = a.at(la, pp, r_a).conj();
                    if c == zero {
                        continue;
                    }
                    for r in 0..rb {
                        next[r_a * rb + r] = next[r_a * rb + r] + c * t[(la * 2 + pp) * rb + r];
                    }
                }
            }
        }
        env = next;
        dim = (ra, rb);
    }
    env[0]
}

pub(crate) fn pauli_matrix<T: Real>(p: Pauli) -> [C<T>; 4] {
    let z = C::new(T::zero(), T::zero());
    let o = C::new(T::one(), T::zero());
    let i = C::new(T::zero(), T::one());
    match p {
        Pauli::I => [o, z, z, o],
        Pauli::X => [z, o, o, z],
        Pauli::Y => [z, -i, i, z],
        Pauli::Z => [o, z, z, -o],
    }
}

/// Mixed-canonical working copy: sites left of `center` are left-canonical,
/// sites right of it right-canonical.
struct Working<T> {
    state: ChainState<T>,
    center: usize,
}

impl<T: Real> Working<T> {
    fn new(state: ChainState<T>) -> Self {
        Self { state, center: 0 }
    }

    fn with_cap(mut state: ChainState<T>, cap: usize) -> Self {
        state.bond_cap = cap;
        Self { state, center: 0 }
    }

    fn move_center(&mut self, target: usize) {
        let sites = &mut self.state.sites;
        while self.center < target {
            let k = self.center;
            let (q, r) = qr(&sites[k].as_tall());
            sites[k] = Site::from_tall(q);
            let next = r.matmul(&sites[k + 1].as_wide());
            sites[k + 1] = Site::from_wide(next);
            self.center += 1;
        }
        while self.center > target {
            let k = self.center;
            let (l, q) = lq(&sites[k].as_wide());
            sites[k] = Site::from_wide(q);
            let prev = sites[k - 1].as_tall().matmul(&l);
            sites[k - 1] = Site::from_tall(prev);
            self.center -= 1;
        }
    }

    fn apply_gate(&mut self, gate: &Gate) -> Result<(), ChainError> {
        let m: Vec<C<T>> = gate.matrix().into_iter().map(cast_complex).collect();
        match *gate.targets() {
            [q] => {
                if q >= self.state.n {
                    return Err(CoreError::Invalid(format!("gate target {q} out of range")).into());
                }
                let site = &mut self.state.sites[q];
                let (left, right) = (site.left, site.right);
                for l in 0..left {
                    for r in 0..right {
                        let a0 = site.at(l, 0, r);
                        let a1 = site.at(l, 1, r);
                        site.data[(l * 2) * right + r] = m[0] * a0 + m[1] * a1;
                        site.data[(l * 2 + 1) * right + r] = m[2] * a0 + m[3] * a1;
                    }
                }
                Ok(())
            }
            [a, b] => {
                if a.max(b) >= self.state.n {
                    return Err(CoreError::Invalid(format!("gate targets ({a}, {b}) out of range")).into());
                }
                let (lo, hi) = (a.min(b), a.max(b));
                // route line `lo` next to `hi`, act, route back
                for k in lo..hi - 1 {
                    self.apply_adjacent(k, &swap_matrix())?;
                }
                let local = if a < b { m } else { reversed(&m) };
                self.apply_adjacent(hi - 1, &local)?;
                for k in (lo..hi - 1).rev() {
                    self.apply_adjacent(k, &swap_matrix())?;
                }
                Ok(())
            }
            _ => unreachable!("gates act on one or two lines"),
        }
    }

    /// Applies a 4×4 matrix on lines `(k, k + 1)` and splits by SVD.
    fn apply_adjacent(&mut self, k: usize, m: &[C<T>]) -> Result<(), ChainError> {
        self.move_center(k);
        let zero = C::new(T::zero(), T::zero());
        let (a, b) = (&self.state.sites[k], &self.state.sites[k + 1]);
        let (left, mid, right) = (a.left, a.right, b.right);
        // theta[l, p, q, r]
        let mut theta = vec![zero; left * 4 * right];
        for l in 0..left {
            for p in 0..2 {
                for j in 0..mid {
                    let x = a.at(l, p, j);
                    if x == zero {
                        continue;
                    }
                    for q in 0..2 {
                        for r in 0..right {
                            let idx = ((l * 2 + p) * 2 + q) * right + r;
                            theta[idx] = theta[idx] + x * b.at(j, q, r);
                        }
                    }
                }
            }
        }
        let mut gated = CMatrix::zeros(left * 2, 2 * right);
        for l in 0..left {
            for r in 0..right {
                let v = [0, 1, 2, 3].map(|pq| theta[(l * 4 + pq) * right + r]);
                for row in 0..4 {
                    let s: C<T> = (0..4).map(|c| m[row * 4 + c] * v[c]).sum();
                    *gated.at_mut(l * 2 + row / 2, (row % 2) * right + r) = s;
                }
            }
        }
        let d = svd(&gated);
        let chi = d.numerical_rank(T::lit(SCHMIDT_CUTOFF)).max(1);
        if chi > self.state.bond_cap {
            return Err(ChainError::RankOverflow { cut: k, needed: chi, cap: self.state.bond_cap });
        }
        let mut u = CMatrix::zeros(left * 2, chi);
        for r in 0..left * 2 {
            for c in 0..chi {
                *u.at_mut(r, c) = d.u.at(r, c);
            }
        }
        let norm = d.s[..chi].iter().map(|&v| v * v).sum::<T>().sqrt();
        let mut sv = CMatrix::zeros(chi, 2 * right);
        for r in 0..chi {
            for c in 0..2 * right {
                *sv.at_mut(r, c) = d.vh.at(r, c) * (d.s[r] / norm);
            }
        }
        self.state.sites[k] = Site::from_tall(u);
        self.state.sites[k + 1] = Site::from_wide(sv);
        self.center = k + 1;
        Ok(())
    }

    fn finish(mut self) -> Result<ChainState<T>, ChainError> {
        self.move_center(0);
        self.state.right_canonicalize()?;
        Ok(self.state)
    }
}

fn swap_matrix<T: Real>() -> Vec<C<T>> {
    let mut m = vec![C::new(T::zero(), T::zero()); 16];
    for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        m[r * 4 + c] = C::new(T::one(), T::zero());
    }
    m
}

/// Re-expresses a two-line matrix on `|a b⟩` as one on `|b a⟩`.
fn reversed<T: Real>(m: &[C<T>]) -> Vec<C<T>> {
    let flip = |i: usize| ((i & 1) << 1) | (i >> 1);
    let mut out = m.to_vec();
    for r in 0..4 {
        for c in 0..4 {
            out[flip(r) * 4 + flip(c)] = m[r * 4 + c];
        }
    }
    out
}

pub fn chain_from_product<T: Real>(inputs: &[Qubit<T>], bond_cap: usize) -> Result<ChainState<T>, ChainError> {
    if inputs.is_empty() {
        return Err(ChainError::Invalid("a chain needs at least one site".into()));
    }
    if bond_cap == 0 {
        return Err(ChainError::Invalid("bond cap must be positive".into()));
    }
    for q in inputs {
        check_qubit(q)?;
    }
    let sites = inputs.iter().map(|q| Site { left: 1, right: 1, data: q.to_vec() }).collect();
    Ok(ChainState { n: inputs.len(), bond_cap, sites })
}

/// Bond cap for the working copy that evaluates a circuit-induced
/// measurement: each two-line gate has operator Schmidt rank at most 4 and a
/// routed gate crosses each cut at most twice on the way.
pub fn measurement_cap(bond_cap: usize, circuit: &Circuit) -> usize {
    let d = circuit.schmidt_bound() as u32;
    bond_cap.saturating_mul(4usize.saturating_pow(2 * d))
}

/// `Tr(Eρ)` for the chain state.
pub fn chain_expectation<T: Real>(s: &ChainState<T>, m: &Measurement) -> Result<T, ChainError> {
    if m.n() != s.n {
        return Err(CoreError::ArityMismatch { expected: s.n, got: m.n() }.into());
    }
    let v = match m {
        Measurement::Pauli(p) => (T::one() + s.pauli_expectation(p)) / T::lit(2.0),
        Measurement::CircuitInduced { circuit, line } => {
            let mut w = Working::with_cap(s.clone(), measurement_cap(s.bond_cap, circuit));
            for g in circuit.gates() {
                w.apply_gate(g)?;
            }
            w.move_center(*line);
            let site = &w.state.sites[*line];
            let mut acc = T::zero();
            for l in 0..site.left {
                for r in 0..site.right {
                    acc = acc + site.at(l, 0, r).norm_sqr();
                }
            }
            acc / site.norm_sqr()
        }
    };
    Ok(clamp_unit(v))
}

pub fn residual<T: Real>(s: &ChainState<T>, ex: &TrainingExample) -> Result<T, ChainError> {
    Ok(chain_expectation(s, &ex.measurement)? - T::lit(ex.value))
}

pub fn chain_to_dense<T: Real>(s: &ChainState<T>) -> Result<DenseState<T>, ChainError> {
    chain_to_dense_capped(s, DEFAULT_ORACLE_CAP)
}

pub fn chain_to_dense_capped<T: Real>(s: &ChainState<T>, cap: usize) -> Result<DenseState<T>, ChainError> {
    if s.n > cap {
        return Err(CoreError::OracleCap { n: s.n, cap }.into());
    }
    let zero = C::new(T::zero(), T::zero());
    // acc[prefix, bond]
    let mut acc = vec![C::new(T::one(), T::zero())];
    let mut bond = 1;
    for site in &s.sites {
        let prefixes = acc.len() / bond;
        let mut next = vec![zero; prefixes * 2 * site.right];
        for x in 0..prefixes {
            for l in 0..bond {
                let a = acc[x * bond + l];
                if a == zero {
                    continue;
                }
                for p in 0..2 {
                    for r in 0..site.right {
                        let idx = (x * 2 + p) * site.right + r;
                        next[idx] = next[idx] + a * site.at(l, p, r);
                    }
                }
            }
        }
        acc = next;
        bond = site.right;
    }
    Ok(DenseState::from_amplitudes(s.n, acc)?)
}

/// Random state with every stored bond equal to
/// `min(cap, 2^(k+1), 2^(n-k-1))`, from complex Gaussian site tensors.
pub fn random_chain<T: Real, R: Rng + ?Sized>(n: usize, bond_cap: usize, rng: &mut R) -> ChainState<T> {
    let dims = full_bond_dims(n, bond_cap);
    let sites = (0..n)
        .map(|k| {
            let left = if k == 0 { 1 } else { dims[k - 1] };
            let right = if k == n - 1 { 1 } else { dims[k] };
            let data = (0..left * 2 * right)
                .map(|_| {
                    C::new(T::lit(rng.sample::<f64, _>(StandardNormal)), T::lit(rng.sample::<f64, _>(StandardNormal)))
                })
                .collect();
            Site { left, right, data }
        })
        .collect();
    ChainState::from_sites(bond_cap, sites).expect("gaussian tensors are nonzero")
}

/// Largest useful bond dimensions under `cap`.
pub fn full_bond_dims(n: usize, bond_cap: usize) -> Vec<usize> {
    (0..n.saturating_sub(1))
        .map(|k| {
            let left = 1usize.checked_shl((k + 1) as u32).unwrap_or(usize::MAX);
            let right = 1usize.checked_shl((n - k - 1) as u32).unwrap_or(usize::MAX);
            bond_cap.min(left).min(right)
        })
        .collect()
}
