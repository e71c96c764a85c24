//! Sample-complexity bounds, the binary entropy, random-access-code checks
//! and an exhaustive fat-shattering estimator.
//!
//! Logarithms inside the sample bounds are natural logarithms.

mod fat;
mod rac;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fat::{fat_shattering_estimate, fat_shattering_estimate_capped, simplex_grid, FunctionClass, DEFAULT_POOL_CAP};
pub use rac::{rac_bound_check, rac_bound_check_with_slack, rac_exhaustive, RacCheck, RacSearch};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PacError {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("the literal-sigma reading of the data-size bound is not usable")]
    LiteralSigmaRejected,
    #[error("pool of {pool} measurements exceeds the exhaustive cap {cap}")]
    CapExceeded { pool: usize, cap: usize },
    #[error("hypothesis evaluation failed: {0}")]
    Evaluation(String),
}

/// How to read the leading denominator of the Occam data-size bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasizeReading {
    #[default]
    GammaSquared,
    /// Taken verbatim the denominator names the hypothesis state; rejected.
    LiteralSigma,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccamParams {
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub c: f64,
    pub k: f64,
    #[serde(default)]
    pub reading: DatasizeReading,
}

impl Default for OccamParams {
    fn default() -> Self {
        Self { n: 1, epsilon: 0.1, delta: 0.05, gamma: 0.1, eta: 0.0, c: 1.0, k: 1.0, reading: DatasizeReading::GammaSquared }
    }
}

impl OccamParams {
    pub fn validate(&self) -> Result<(), PacError> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(PacError::OutOfRange(format!("{name} = {v} must lie in (0, 1)")))
            }
        };
        unit("epsilon", self.epsilon)?;
        unit("delta", self.delta)?;
        unit("gamma", self.gamma)?;
        if !(self.eta >= 0.0 && self.eta < self.gamma) {
            return Err(PacError::OutOfRange(format!("eta = {} must satisfy 0 <= eta < gamma", self.eta)));
        }
        if !(self.c > 0.0 && self.c.is_finite() && self.k > 0.0 && self.k.is_finite()) {
            return Err(PacError::OutOfRange("constants C and K must be positive".into()));
        }
        Ok(())
    }
}

/// `ceil(C/(γ²ε²) · (n/(γ²ε²) · ln²(1/(γε)) + ln(1/δ)))`.
pub fn occam_sample_bound(p: &OccamParams) -> Result<u64, PacError> {
    p.validate()?;
    if p.reading == DatasizeReading::LiteralSigma {
        return Err(PacError::LiteralSigmaRejected);
    }
    let ge2 = (p.gamma * p.epsilon).powi(2);
    let log_term = (1.0 / (p.gamma * p.epsilon)).ln();
    let inner = p.n as f64 / ge2 * log_term * log_term + (1.0 / p.delta).ln();
    to_count(p.c / ge2 * inner)
}

/// `ceil(K/ε · (F · ln²(F/((γ−η)ε)) + ln(1/δ)))` with `F = fat((γ−η)/8)`;
/// the first term vanishes when `F = 0`.
pub fn anthony_sample_bound<F: Fn(f64) -> u64>(p: &OccamParams, fat: F) -> Result<u64, PacError> {
    p.validate()?;
    let margin = p.gamma - p.eta;
    let f = fat(margin / 8.0) as f64;
    let fat_term = if f == 0.0 {
        0.0
    } else {
        let l = (f / (margin * p.epsilon)).ln();
        f * l * l
    };
    to_count(p.k / p.epsilon * (fat_term + (1.0 / p.delta).ln()))
}

fn to_count(v: f64) -> Result<u64, PacError> {
    if !v.is_finite() || v >= u64::MAX as f64 {
        return Err(PacError::OutOfRange(format!("bound {v} does not fit in a count")));
    }
    Ok(v.ceil() as u64)
}

/// `H(p) = −p log₂ p − (1−p) log₂(1−p)`, with `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}
