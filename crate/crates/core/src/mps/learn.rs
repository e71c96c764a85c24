//! Fitting a chain state to training data.
//!
//! The unknowns are the real and imaginary parts of every site tensor at
//! fixed bond dimensions `min(L, 2^(k+1), 2^(n-k-1))`. Levenberg–Marquardt
//! minimizes `Σ residual²`, re-projecting to right-canonical form after each
//! accepted step; independent restarts start from seeded Gaussian tensors.

use std::marker::PhantomData;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{chain_expectation, pauli_matrix, random_chain, ChainError, ChainState, Site};
use crate::learner::Learner;
use crate::measurement::Measurement;
use crate::pauli::PauliString;
use crate::rng::rng_for;
use crate::scalar::{Real, C};
use crate::training::TrainingSet;

const RESTART_TAG: u64 = 0x4348_4149_4e;
/// Restarts evaluated together; the winner is the lowest feasible index, so
/// results do not depend on the thread count.
const RESTART_BATCH: usize = 4;
const FD_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainBudget {
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for ChainBudget {
    fn default() -> Self {
        Self { restarts: 16, max_iters: 300 }
    }
}

pub fn learn_chain<T: Real>(
    data: &TrainingSet,
    bond_cap: usize,
    eta: f64,
    budget: ChainBudget,
    seed: u64,
) -> Result<ChainState<T>, ChainError> {
    if !(eta > 0.0) {
        return Err(ChainError::Invalid(format!("tolerance must be positive, got {eta}")));
    }
    if bond_cap == 0 {
        return Err(ChainError::Invalid("bond cap must be positive".into()));
    }
    let n = data.n();
    if data.is_empty() {
        return Ok(ChainState::zero(n, bond_cap));
    }
    let mut best = f64::INFINITY;
    for batch in (0..budget.restarts).collect::<Vec<_>>().chunks(RESTART_BATCH) {
        let results: Vec<Result<(Option<ChainState<T>>, f64), ChainError>> = batch
            .par_iter()
            .map(|&i| {
                let mut rng = rng_for(seed, RESTART_TAG, i as u64);
                let start = random_chain::<f64, _>(n, bond_cap, &mut rng);
                let fitted = levenberg_marquardt(start, data, eta, budget.max_iters)?;
                let cast = cast_chain::<T>(&fitted)?;
                let worst = max_residual(&cast, data)?;
                Ok(((worst <= eta).then_some(cast), worst))
            })
            .collect();
        for r in results {
            let (found, worst) = r?;
            if let Some(s) = found {
                return Ok(s);
            }
            best = best.min(worst);
        }
    }
    Err(ChainError::BudgetExhausted { best })
}

fn max_residual<T: Real>(s: &ChainState<T>, data: &TrainingSet) -> Result<f64, ChainError> {
    let mut worst: f64 = 0.0;
    for ex in data.examples() {
        worst = worst.max((chain_expectation(s, &ex.measurement)?.as_f64() - ex.value).abs());
    }
    Ok(worst)
}

fn cast_chain<T: Real>(s: &ChainState<f64>) -> Result<ChainState<T>, ChainError> {
    let sites = s
        .sites
        .iter()
        .map(|site| Site {
            left: site.left,
            right: site.right,
            data: site.data.iter().map(|z| C::new(T::lit(z.re), T::lit(z.im))).collect(),
        })
        .collect();
    ChainState::from_sites(s.bond_cap, sites)
}

fn params(s: &ChainState<f64>) -> Vec<f64> {
    s.sites.iter().flat_map(|site| site.data.iter().flat_map(|z| [z.re, z.im])).collect()
}

fn with_params(template: &ChainState<f64>, x: &[f64]) -> Vec<Site<f64>> {
    let mut offset = 0;
    template
        .sites
        .iter()
        .map(|site| {
            let len = site.data.len();
            let data = (0..len).map(|i| C::new(x[2 * (offset + i)], x[2 * (offset + i) + 1])).collect();
            offset += len;
            Site { left: site.left, right: site.right, data }
        })
        .collect()
}

/// Prediction on unnormalized sites.
fn predict_raw(sites: &[Site<f64>], cap: usize, m: &Measurement) -> Result<f64, ChainError> {
    match m {
        Measurement::Pauli(p) => Ok(pauli_value_and_gradient(sites, p, false).0),
        Measurement::CircuitInduced { .. } => {
            let s = ChainState::from_sites(cap, sites.to_vec())?;
            chain_expectation(&s, m)
        }
    }
}

/// `(1 + ⟨P⟩/⟨ψ|ψ⟩)/2` and, if asked, its gradient with respect to the
/// real and imaginary parts of every site entry.
fn pauli_value_and_gradient(sites: &[Site<f64>], p: &PauliString, gradient: bool) -> (f64, Vec<f64>) {
    let n = sites.len();
    let ops: Vec<[C<f64>; 4]> = (0..n).map(|k| pauli_matrix(p.letter(k))).collect();
    let ident = pauli_matrix::<f64>(crate::pauli::Pauli::I);
    let sign = if p.is_negative() { -1.0 } else { 1.0 };

    let lefts_n = left_envs(sites, |k| ops[k]);
    let lefts_d = left_envs(sites, |_| ident);
    let num = lefts_n[n][0].re;
    let den = lefts_d[n][0].re;
    let value = 0.5 * (1.0 + sign * num / den);
    if !gradient {
        return (value, Vec::new());
    }
    let rights_n = right_envs(sites, |k| ops[k]);
    let rights_d = right_envs(sites, |_| ident);
    let mut grad = Vec::with_capacity(2 * sites.iter().map(|s| s.data.len()).sum::<usize>());
    for k in 0..n {
        let gn = site_gradient(&sites[k], &lefts_n[k], &ops[k], &rights_n[k + 1]);
        let gd = site_gradient(&sites[k], &lefts_d[k], &ident, &rights_d[k + 1]);
        for (a, b) in gn.iter().zip(&gd) {
            // dN = 2 Re(G dA): d/dRe = 2 Re G, d/dIm = -2 Im G
            let dn = [2.0 * a.re, -2.0 * a.im];
            let dd = [2.0 * b.re, -2.0 * b.im];
            for t in 0..2 {
                grad.push(0.5 * sign * (dn[t] * den - num * dd[t]) / (den * den));
            }
        }
    }
    (value, grad)
}

/// `env[k]` contracts sites `0..k`, indexed `[bra, ket]`.
fn left_envs<F: Fn(usize) -> [C<f64>; 4]>(sites: &[Site<f64>], op: F) -> Vec<Vec<C<f64>>> {
    let zero = C::new(0.0, 0.0);
    let mut envs = vec![vec![C::new(1.0, 0.0)]];
    for (k, a) in sites.iter().enumerate() {
        let env = &envs[k];
        let o = op(k);
        let (dl, dr) = (a.left, a.right);
        let mut next = vec![zero; dr * dr];
        for lb in 0..dl {
            for lk in 0..dl {
                let e = env[lb * dl + lk];
                if e == zero {
                    continue;
                }
                for pb in 0..2 {
                    for pk in 0..2 {
                        let w = o[pb * 2 + pk];
                        if w == zero {
                            continue;
                        }
                        let f = e * w;
                        for rb in 0..dr {
                            let c = a.at(lb, pb, rb).conj() * f;
                            for rk in 0..dr {
                                next[rb * dr + rk] += c * a.at(lk, pk, rk);
                            }
                        }
                    }
                }
            }
        }
        envs.push(next);
    }
    envs
}

/// `env[k]` contracts sites `k..n`, indexed `[bra, ket]` on bond `k-1|k`.
fn right_envs<F: Fn(usize) -> [C<f64>; 4]>(sites: &[Site<f64>], op: F) -> Vec<Vec<C<f64>>> {
    let zero = C::new(0.0, 0.0);
    let n = sites.len();
    let mut envs = vec![Vec::new(); n + 1];
    envs[n] = vec![C::new(1.0, 0.0)];
    for k in (0..n).rev() {
        let a = &sites[k];
        let o = op(k);
        let (dl, dr) = (a.left, a.right);
        let env = &envs[k + 1];
        let mut next = vec![zero; dl * dl];
        for rb in 0..dr {
            for rk in 0..dr {
                let e = env[rb * dr + rk];
                if e == zero {
                    continue;
                }
                for pb in 0..2 {
                    for pk in 0..2 {
                        let w = o[pb * 2 + pk];
                        if w == zero {
                            continue;
                        }
                        let f = e * w;
                        for lb in 0..dl {
                            let c = a.at(lb, pb, rb).conj() * f;
                            for lk in 0..dl {
                                next[lb * dl + lk] += c * a.at(lk, pk, rk);
                            }
                        }
                    }
                }
            }
        }
        envs[k] = next;
    }
    envs
}

/// `G[l', p', r'] = Σ conj(A[l, p, r]) L[l, l'] O[p, p'] R[r, r']`.
fn site_gradient(a: &Site<f64>, left: &[C<f64>], o: &[C<f64>; 4], right: &[C<f64>]) -> Vec<C<f64>> {
    let zero = C::new(0.0, 0.0);
    let (dl, dr) = (a.left, a.right);
    let mut g = vec![zero; a.data.len()];
    for l in 0..dl {
        for p in 0..2 {
            for r in 0..dr {
                let c = a.at(l, p, r).conj();
                if c == zero {
                    continue;
                }
                for lk in 0..dl {
                    let cl = c * left[l * dl + lk];
                    for pk in 0..2 {
                        let w = cl * o[p * 2 + pk];
                        if w == zero {
                            continue;
                        }
                        for rk in 0..dr {
                            g[(lk * 2 + pk) * dr + rk] += w * right[r * dr + rk];
                        }
                    }
                }
            }
        }
    }
    g
}

struct Problem<'a> {
    data: &'a TrainingSet,
    cap: usize,
}

impl Problem<'_> {
    fn residuals(&self, sites: &[Site<f64>]) -> Result<Vec<f64>, ChainError> {
        self.data.examples().iter().map(|ex| Ok(predict_raw(sites, self.cap, &ex.measurement)? - ex.value)).collect()
    }

    fn jacobian(&self, template: &ChainState<f64>, x: &[f64]) -> Result<DMatrix<f64>, ChainError> {
        let sites = with_params(template, x);
        let rows: Vec<Vec<f64>> = self
            .data
            .examples()
            .iter()
            .map(|ex| match &ex.measurement {
                Measurement::Pauli(p) => Ok(pauli_value_and_gradient(&sites, p, true).1),
                m => {
                    let mut row = Vec::with_capacity(x.len());
                    let mut probe = x.to_vec();
                    for i in 0..x.len() {
                        probe[i] = x[i] + FD_STEP;
                        let up = predict_raw(&with_params(template, &probe), self.cap, m)?;
                        probe[i] = x[i] - FD_STEP;
                        let down = predict_raw(&with_params(template, &probe), self.cap, m)?;
                        probe[i] = x[i];
                        row.push((up - down) / (2.0 * FD_STEP));
                    }
                    Ok(row)
                }
            })
            .collect::<Result<_, ChainError>>()?;
        Ok(DMatrix::from_fn(rows.len(), x.len(), |i, j| rows[i][j]))
    }
}

fn max_abs(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |a, v| a.max(v.abs()))
}

fn levenberg_marquardt(
    start: ChainState<f64>,
    data: &TrainingSet,
    eta: f64,
    max_iters: usize,
) -> Result<ChainState<f64>, ChainError> {
    let problem = Problem { data, cap: start.bond_cap };
    let mut state = start;
    let mut r = problem.residuals(&state.sites)?;
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut mu: Option<f64> = None;
    let mut stalled = 0;
    for _ in 0..max_iters {
        if max_abs(&r) <= 0.5 * eta {
            break;
        }
        let x = params(&state);
        let j = problem.jacobian(&state, &x)?;
        let jt = j.transpose();
        let a = &jt * &j;
        let g = &jt * DVector::from_column_slice(&r);
        let diag_max = a.diagonal().max();
        let lambda = mu.get_or_insert(1e-3 * diag_max.max(1e-12));
        let mut accepted = false;
        for _ in 0..12 {
            let mut damped = a.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += *lambda * (a[(i, i)] + 1e-9 * diag_max.max(1e-12));
            }
            let Some(chol) = damped.cholesky() else {
                *lambda *= 4.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let Ok(candidate) = ChainState::from_sites(state.bond_cap, with_params(&state, &trial)) else {
                *lambda *= 4.0;
                continue;
            };
            let r_new = problem.residuals(&candidate.sites)?;
            let c_new: f64 = r_new.iter().map(|v| v * v).sum();
            if c_new < cost {
                stalled = if c_new > cost * (1.0 - 1e-6) { stalled + 1 } else { 0 };
                state = candidate;
                r = r_new;
                cost = c_new;
                *lambda = (*lambda / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            *lambda *= 4.0;
        }
        if !accepted || stalled >= 8 {
            break;
        }
    }
    Ok(state)
}

/// Chain-state learner with bond cap `L`.
#[derive(Clone, Debug)]
pub struct ChainLearner<T> {
    pub bond_cap: usize,
    pub budget: ChainBudget,
    pub seed: u64,
    _scalar: PhantomData<T>,
}

impl<T> ChainLearner<T> {
    pub fn new(bond_cap: usize, budget: ChainBudget, seed: u64) -> Self {
        Self { bond_cap, budget, seed, _scalar: PhantomData }
    }
}

impl<T: Real> Learner for ChainLearner<T> {
    type Hypothesis = ChainState<T>;
    type Error = ChainError;

    fn fit(&self, data: &TrainingSet, eta: f64) -> Result<ChainState<T>, ChainError> {
        learn_chain(data, self.bond_cap, eta, self.budget, self.seed)
    }

    fn predict(&self, hypothesis: &ChainState<T>, m: &Measurement) -> Result<f64, ChainError> {
        Ok(chain_expectation(hypothesis, m)?.as_f64())
    }
}
