//! Exhaustive fat-shattering dimension of a finite hypothesis class on a
//! finite measurement pool.
//!
//! A set `{E_1, …, E_k}` is γ-shattered when thresholds `α_i` exist such
//! that every pattern `B ⊆ [k]` is realized by a hypothesis `g` with
//! `g(E_i) ≥ α_i + γ` for `i ∈ B` and `g(E_i) ≤ α_i − γ` otherwise.
//!
//! Witness thresholds are searched over `α = v − γ` for observed values `v`.
//! This loses nothing: raising a valid `α_i` to `min{g(E_i) ≥ α_i + γ} − γ`
//! keeps the upper side unchanged and can only grow the lower side.

use std::sync::Arc;

use rayon::prelude::*;

use super::PacError;
use crate::circuit::{Circuit, Gate};
use crate::dense::Qubit;
use crate::eom::{eom_expectation, OntModel, Preparation};
use crate::measurement::Measurement;
use crate::mps::{chain_expectation, chain_from_product, ChainState};
use crate::stabilizer::StabilizerTableau;

/// Default largest pool searched exhaustively.
pub const DEFAULT_POOL_CAP: usize = 12;
/// Slack on threshold comparisons so that values sitting exactly on
/// `α ± γ` count as realized.
const COMPARE_SLACK: f64 = 1e-12;

type Eval = Arc<dyn Fn(usize, &Measurement) -> Result<f64, String> + Send + Sync>;

/// A finite family of functions from measurements to `[0, 1]`.
#[derive(Clone)]
pub struct FunctionClass {
    label: String,
    size: usize,
    eval: Eval,
}

impl std::fmt::Debug for FunctionClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionClass").field("label", &self.label).field("size", &self.size).finish()
    }
}

impl FunctionClass {
    pub fn new<F>(label: impl Into<String>, size: usize, eval: F) -> Self
    where
        F: Fn(usize, &Measurement) -> Result<f64, String> + Send + Sync + 'static,
    {
        Self { label: label.into(), size, eval: Arc::new(eval) }
    }

    /// Every stabilizer state on `n ≤ 3` lines.
    pub fn stabilizer(n: usize) -> Result<Self, PacError> {
        if n == 0 || n > 3 {
            return Err(PacError::OutOfRange(format!("stabilizer enumeration supports 1..=3 lines, got {n}")));
        }
        let states = StabilizerTableau::enumerate_all(n);
        Ok(Self::new(format!("stabilizer n={n}"), states.len(), move |h, m| {
            states[h].value(m).map_err(|e| e.to_string())
        }))
    }

    /// The given preparations of an ontological model.
    pub fn preparations(model: OntModel<f64>, preps: Vec<Preparation<f64>>) -> Self {
        let label = format!("preparations l={} ({} points)", model.lambda_size(), preps.len());
        Self::new(label, preps.len(), move |h, m| eom_expectation(&preps[h], &model, m).map_err(|e| e.to_string()))
    }

    /// Preparations on the simplex grid of mesh `1/denominator`.
    pub fn preparation_grid(model: OntModel<f64>, denominator: usize) -> Self {
        let preps = simplex_grid(model.lambda_size(), denominator);
        Self::preparations(model, preps)
    }

    /// Chain states on `n ≤ 3` lines with bond cap `L ≤ 2`: products of
    /// grid single-line states (polar angle in steps of π/4, azimuth in
    /// steps of π/2), followed by a CNOT on each subset of the cuts when
    /// `L = 2`.
    pub fn chains(n: usize, bond_cap: usize) -> Result<Self, PacError> {
        if n == 0 || n > 3 || bond_cap == 0 || bond_cap > 2 {
            return Err(PacError::OutOfRange("chain enumeration supports n <= 3 and L <= 2".into()));
        }
        let singles = bloch_grid();
        let mut layers: Vec<Circuit> = vec![Circuit::empty(n)];
        if bond_cap == 2 {
            for mask in 1..1u32 << (n - 1) {
                let gates = (0..n - 1).filter(|c| mask >> c & 1 == 1).map(|c| Gate::cnot(c, c + 1)).collect();
                layers.push(Circuit::new(n, gates).expect("adjacent gates"));
            }
        }
        let mut states: Vec<ChainState<f64>> = Vec::new();
        let total = singles.len().pow(n as u32);
        for code in 0..total {
            let inputs: Vec<Qubit<f64>> = (0..n).map(|q| singles[(code / singles.len().pow(q as u32)) % singles.len()]).collect();
            let base = chain_from_product(&inputs, bond_cap).map_err(|e| PacError::Evaluation(e.to_string()))?;
            for layer in &layers {
                states.push(base.apply_circuit(layer).map_err(|e| PacError::Evaluation(e.to_string()))?);
            }
        }
        Ok(Self::new(format!("chains n={n} L={bond_cap}"), states.len(), move |h, m| {
            chain_expectation(&states[h], m).map_err(|e| e.to_string())
        }))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn eval(&self, h: usize, m: &Measurement) -> Result<f64, PacError> {
        (self.eval)(h, m).map_err(PacError::Evaluation)
    }

    /// `values[j][h] = g_h(pool[j])`.
    fn table(&self, pool: &[Measurement]) -> Result<Vec<Vec<f64>>, PacError> {
        pool.iter().map(|m| (0..self.size).map(|h| self.eval(h, m)).collect()).collect()
    }
}

fn bloch_grid() -> Vec<Qubit<f64>> {
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    let mut out = vec![[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]];
    for t in 1..4 {
        let theta = t as f64 * FRAC_PI_4;
        for a in 0..4 {
            let phi = a as f64 * FRAC_PI_2;
            out.push([Complex64::new((theta / 2.0).cos(), 0.0), Complex64::from_polar((theta / 2.0).sin(), phi)]);
        }
    }
    out.push([Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
    out
}

/// All probability vectors of length `size` with entries in multiples of
/// `1/denominator`.
pub fn simplex_grid(size: usize, denominator: usize) -> Vec<Preparation<f64>> {
    fn rec(left: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in (0..=left).rev() {
            cur.push(v);
            rec(left - v, slots - 1, cur, out);
            cur.pop();
        }
    }
    if size == 0 || denominator == 0 {
        return Vec::new();
    }
    let mut raw = Vec::new();
    rec(denominator, size, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|c| Preparation::new(c.into_iter().map(|v| v as f64 / denominator as f64).collect()).expect("grid point"))
        .collect()
}

pub fn fat_shattering_estimate(
    class: &FunctionClass,
    pool: &[Measurement],
    gamma: f64,
    max_k: usize,
) -> Result<usize, PacError> {
    fat_shattering_estimate_capped(class, pool, gamma, max_k, DEFAULT_POOL_CAP)
}

pub fn fat_shattering_estimate_capped(
    class: &FunctionClass,
    pool: &[Measurement],
    gamma: f64,
    max_k: usize,
    cap: usize,
) -> Result<usize, PacError> {
    if pool.len() > cap {
        return Err(PacError::CapExceeded { pool: pool.len(), cap });
    }
    if max_k > pool.len() {
        return Err(PacError::OutOfRange(format!("max_k {max_k} exceeds the pool size {}", pool.len())));
    }
    if !(gamma > 0.0) {
        return Err(PacError::OutOfRange(format!("gamma must be positive, got {gamma}")));
    }
    let table = class.table(pool)?;
    // subsets of a shattered set are shattered, so stop at the first empty level
    let mut best = 0;
    for k in 1..=max_k {
        let subsets = combinations(pool.len(), k);
        if subsets.par_iter().any(|s| shattered(&table, s, gamma)) {
            best = k;
        } else {
            break;
        }
    }
    Ok(best)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Depth-first search over witness thresholds.
///
/// With the hypotheses split by the pattern on the coordinates fixed so far,
/// a threshold for a free coordinate must leave every class with members on
/// both sides, so `v` (the upper cut `α + γ`) lies in
/// `[max_P min_P + 2γ, min_P max_P]`. An empty interval prunes the node, and
/// the free coordinate with the fewest admissible cuts is branched on next.
fn shattered(table: &[Vec<f64>], subset: &[usize], gamma: f64) -> bool {
    let columns: Vec<&[f64]> = subset.iter().map(|&j| table[j].as_slice()).collect();
    let codes: Vec<Option<u32>> = vec![Some(0); columns[0].len()];
    search(&columns, gamma, 0, 0, &codes)
}

fn search(columns: &[&[f64]], gamma: f64, assigned: u32, depth: usize, codes: &[Option<u32>]) -> bool {
    let k = columns.len();
    if depth == k {
        return true;
    }
    let classes = 1usize << depth;
    let mut best: Option<(usize, Vec<f64>)> = None;
    for (j, column) in columns.iter().enumerate() {
        if assigned >> j & 1 == 1 {
            continue;
        }
        let mut mins = vec![f64::INFINITY; classes];
        let mut maxs = vec![f64::NEG_INFINITY; classes];
        for (c, &v) in codes.iter().zip(column.iter()) {
            if let Some(code) = *c {
                mins[code as usize] = mins[code as usize].min(v);
                maxs[code as usize] = maxs[code as usize].max(v);
            }
        }
        let lo = mins.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0 * gamma;
        let hi = maxs.iter().copied().fold(f64::INFINITY, f64::min);
        if lo > hi + COMPARE_SLACK {
            return false;
        }
        let mut cuts: Vec<f64> = codes
            .iter()
            .zip(column.iter())
            .filter(|(c, &v)| c.is_some() && v >= lo - COMPARE_SLACK && v <= hi + COMPARE_SLACK)
            .map(|(_, &v)| v)
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        cuts.dedup();
        if best.as_ref().is_none_or(|(_, b)| cuts.len() < b.len()) {
            best = Some((j, cuts));
        }
    }
    let Some((j, cuts)) = best else {
        return true;
    };
    let column = columns[j];
    let need = classes << 1;
    let mut seen = vec![false; need];
    for &top in cuts.iter().rev() {
        let floor = top - 2.0 * gamma;
        seen.iter_mut().for_each(|s| *s = false);
        let mut count = 0;
        let next: Vec<Option<u32>> = codes
            .iter()
            .zip(column.iter())
            .map(|(c, &v)| {
                let code = (*c)?;
                let bit = if v >= top - COMPARE_SLACK {
                    1
                } else if v <= floor + COMPARE_SLACK {
                    0
                } else {
                    return None;
                };
                let nc = code << 1 | bit;
                if !seen[nc as usize] {
                    seen[nc as usize] = true;
                    count += 1;
                }
                Some(nc)
            })
            .collect();
        if count == need && search(columns, gamma, assigned | 1 << j, depth + 1, &next) {
            return true;
        }
    }
    false
}
