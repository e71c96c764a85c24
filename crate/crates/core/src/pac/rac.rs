//! Random-access codes into an ontic space.
//!
//! If every bit of a uniformly random `k`-bit string can be read back with
//! success probability `p > ½` from an ontic state drawn from the string's
//! preparation, the mutual information between string and ontic state is at
//! least `(1 − H(p))·k` and at most `log₂ ℓ`, so `log₂ ℓ ≥ (1 − H(p))·k`.

use rayon::prelude::*;

use super::{binary_entropy, PacError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RacCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

pub fn rac_bound_check(k: usize, lambda_size: usize, p: f64) -> Result<RacCheck, PacError> {
    rac_bound_check_with_slack(k, lambda_size, p, 0.0)
}

/// `lhs = log₂ ℓ`, `rhs = (1 − H(p))·k`, satisfied when `lhs ≥ rhs − slack`.
pub fn rac_bound_check_with_slack(k: usize, lambda_size: usize, p: f64, slack: f64) -> Result<RacCheck, PacError> {
    if k == 0 || lambda_size == 0 {
        return Err(PacError::OutOfRange("k and the ontic space size must be positive".into()));
    }
    if !(p > 0.5 && p <= 1.0) {
        return Err(PacError::OutOfRange(format!("success probability {p} carries no information")));
    }
    let lhs = (lambda_size as f64).log2();
    let rhs = (1.0 - binary_entropy(p)) * k as f64;
    Ok(RacCheck { lhs, rhs, satisfied: lhs >= rhs - slack })
}

/// Outcome of the exhaustive search over deterministic encodings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RacSearch {
    /// Decoder tables examined, `(2^k)^ℓ`.
    pub decoders: u64,
    /// Best mean per-bit success over all encodings.
    pub best_success: f64,
    /// Smallest `lhs − rhs` over encodings with success above ½.
    pub worst_margin: f64,
    /// Whether every encoding with success above ½ satisfied the bound
    /// within `slack`.
    pub all_satisfied: bool,
}

/// Checks the bound for every deterministic encoding of `k`-bit strings
/// into `ℓ` ontic states with deterministic read-out.
///
/// A decoder assigns each ontic state a `k`-bit guess. For a fixed decoder
/// the encoder sending each string to an ontic state whose guess agrees on
/// the most bits maximizes the mean per-bit success `p̄`, and any encoding's
/// smallest per-bit success is at most its `p̄`; since `1 − H` increases on
/// `(½, 1]`, checking that encoder with `p̄` covers every encoder.
pub fn rac_exhaustive(k: usize, lambda_size: usize, slack: f64) -> Result<RacSearch, PacError> {
    if k == 0 || k > 6 || lambda_size == 0 || lambda_size > 6 {
        return Err(PacError::OutOfRange("exhaustive search supports 1 <= k, l <= 6".into()));
    }
    let words = 1u64 << k;
    let decoders = words
        .checked_pow(lambda_size as u32)
        .filter(|&d| d <= 1 << 26)
        .ok_or_else(|| PacError::OutOfRange("too many decoder tables".into()))?;
    let lhs = (lambda_size as f64).log2();
    let (best, worst) = (0..decoders)
        .into_par_iter()
        .map(|code| {
            let table: Vec<u64> = (0..lambda_size).map(|i| (code / words.pow(i as u32)) % words).collect();
            let agree: u64 = (0..words)
                .map(|y| table.iter().map(|&g| k as u64 - (g ^ y).count_ones() as u64).max().unwrap_or(0))
                .sum();
            let p = agree as f64 / (words * k as u64) as f64;
            let margin = if p > 0.5 { lhs - (1.0 - binary_entropy(p)) * k as f64 } else { f64::INFINITY };
            (p, margin)
        })
        .reduce(|| (0.0, f64::INFINITY), |a, b| (a.0.max(b.0), a.1.min(b.1)));
    Ok(RacSearch { decoders, best_success: best, worst_margin: worst, all_satisfied: worst >= -slack })
}
