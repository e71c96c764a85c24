//! Seeded generalization experiments: draw a random true state, label
//! training and held-out measurements with the family simulator, fit, and
//! measure how often predictions miss by more than `ε`.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{random_bounded_circuit, random_clifford_circuit, TwoQubitFamily};
use crate::eom::{random_table_model, EomError, Preparation, PreparationLearner};
use crate::io::Calibration;
use crate::learner::Learner;
use crate::linalg::random_unitary;
use crate::measurement::{Measurement, MeasurementDistribution};
use crate::mps::{chain_from_product, ChainBudget, ChainError, ChainLearner};
use crate::pac::{occam_sample_bound, OccamParams, PacError};
use crate::rng::{derive_seed, rng_for};
use crate::stabilizer::{StabilizerError, StabilizerLearner, StabilizerTableau};
use crate::training::{Provenance, TrainingExample, TrainingSet};
use crate::CoreError;

pub const CSV_HEADER: &str = "trial,m_train,fit_status,max_train_residual,heldout_failure_rate,wall_time_ms";
pub const DEFAULT_HELDOUT: usize = 500;
/// Shot-noise estimates farther than this from 0, ½ and 1 are rejected for
/// stabilizer data.
pub const SNAP_REJECT: f64 = 0.15;

const TRIAL_TAG: u64 = 0x7472_6961_6c;
const TRUTH_TAG: u64 = 1;
const MEAS_TAG: u64 = 2;
const SHOT_TAG: u64 = 3;
const LEARN_TAG: u64 = 4;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Pac(#[from] PacError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Stabilizer,
    Chain,
    Eom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotNoise {
    pub shots: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainOptions {
    pub bond_cap: usize,
    pub restarts: usize,
    pub max_iters: usize,
    /// Gates in the ground-truth circuit; `4n` when absent.
    pub truth_gates: Option<usize>,
}

impl Default for ChainOptions {
    fn default() -> Self {
        let b = ChainBudget::default();
        Self { bond_cap: 2, restarts: b.restarts, max_iters: b.max_iters, truth_gates: None }
    }
}

fn default_heldout() -> usize {
    DEFAULT_HELDOUT
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    /// Qubit count, or the ontic space size `ℓ` for `eom`.
    pub n: usize,
    /// `pauli:<max_weight>` or `circuit:<gates>:<d>`; ignored by `eom`,
    /// which draws uniformly from its model's pool.
    #[serde(default)]
    pub distribution: Option<String>,
    pub m_train: usize,
    #[serde(default = "default_heldout")]
    pub m_heldout: usize,
    #[serde(default)]
    pub eta: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub shot_noise: Option<ShotNoise>,
    #[serde(default)]
    pub chain: ChainOptions,
    /// Pool size of the random `eom` model; `2ℓ` when absent.
    #[serde(default)]
    pub pool_size: Option<usize>,
    #[serde(default = "unit")]
    pub c: f64,
    #[serde(default = "unit")]
    pub k: f64,
    /// Appends a copy of the first training measurement with a conflicting value.
    #[serde(default)]
    pub inject_contradiction: bool,
    /// Records wall time per trial; off by default so reports are reproducible.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(family: Family, n: usize, m_train: usize) -> Self {
        Self {
            family,
            n,
            distribution: None,
            m_train,
            m_heldout: DEFAULT_HELDOUT,
            eta: 0.0,
            epsilon: 0.1,
            delta: 0.05,
            gamma: 0.1,
            trials: 1,
            master_seed: 0,
            shot_noise: None,
            chain: ChainOptions::default(),
            pool_size: None,
            c: 1.0,
            k: 1.0,
            inject_contradiction: false,
            timing: false,
        }
    }

    pub fn occam_params(&self) -> OccamParams {
        OccamParams {
            n: self.n,
            epsilon: self.epsilon,
            delta: self.delta,
            gamma: self.gamma,
            eta: self.eta,
            c: self.c,
            k: self.k,
            ..OccamParams::default()
        }
    }

    fn measurement_distribution(&self) -> Result<MeasurementDistribution, HarnessError> {
        let d = match &self.distribution {
            Some(s) => s.parse::<MeasurementDistribution>()?,
            None => MeasurementDistribution::UniformPauli { max_weight: self.n },
        };
        d.validate(self.n)?;
        if self.family == Family::Stabilizer && !matches!(d, MeasurementDistribution::UniformPauli { .. }) {
            return Err(HarnessError::Config("the stabilizer family needs Pauli measurements".into()));
        }
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n == 0 || self.m_train == 0 || self.m_heldout == 0 || self.trials == 0 {
            return Err(HarnessError::Config("n, m_train, m_heldout and trials must be at least 1".into()));
        }
        self.occam_params().validate()?;
        match self.family {
            Family::Eom => {
                if self.pool_size == Some(0) {
                    return Err(HarnessError::Config("pool_size must be at least 1".into()));
                }
            }
            Family::Chain => {
                if self.chain.bond_cap == 0 || self.chain.restarts == 0 {
                    return Err(HarnessError::Config("bond_cap and restarts must be at least 1".into()));
                }
                if !(self.eta > 0.0) {
                    return Err(HarnessError::Config("the chain family needs eta > 0".into()));
                }
                self.measurement_distribution()?;
            }
            Family::Stabilizer => {
                self.measurement_distribution()?;
            }
        }
        if self.shot_noise.is_some_and(|s| s.shots == 0) {
            return Err(HarnessError::Config("shot noise needs at least one shot".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub m_train: usize,
    /// `ok`, or the name of the learner error.
    pub fit_status: String,
    pub max_train_residual: Option<f64>,
    pub heldout_failure_rate: Option<f64>,
    pub wall_time_ms: u64,
}

impl TrialRow {
    pub fn fitted(&self) -> bool {
        self.fit_status == "ok"
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub fitted_trials: usize,
    /// Mean held-out failure rate over fitted trials.
    pub mean_failure_rate: Option<f64>,
    /// Binomial standard error of the pooled rate.
    pub standard_error: Option<f64>,
    /// Fraction of fitted trials whose failure rate is at most `δ`.
    pub within_delta: Option<f64>,
    /// `None` when the bound overflows a count.
    pub occam_m: Option<u64>,
    pub passes_delta: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<TrialRow>,
    pub aggregate: Aggregate,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    /// Per-trial rows under [`CSV_HEADER`]; failed fits leave the numeric
    /// columns empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.trial,
                r.m_train,
                r.fit_status,
                opt(r.max_train_residual),
                opt(r.heldout_failure_rate),
                r.wall_time_ms
            );
        }
        s
    }
}

type Oracle = Box<dyn Fn(&Measurement) -> f64 + Send + Sync>;

struct Truth {
    describe: String,
    oracle: Oracle,
    /// Draws a measurement from the trial's distribution.
    sampler: Box<dyn Fn(&mut rand_chacha::ChaCha8Rng) -> Measurement + Send + Sync>,
    learner: FamilyLearner,
}

enum FamilyLearner {
    Stabilizer,
    Chain(ChainLearner<f64>),
    Eom(PreparationLearner<f64>),
}

fn build_truth(cfg: &ExperimentConfig, seed: u64) -> Result<Truth, HarnessError> {
    let mut rng = rng_for(seed, TRUTH_TAG, 0);
    let n = cfg.n;
    match cfg.family {
        Family::Stabilizer => {
            let dist = cfg.measurement_distribution()?;
            let circuit = random_clifford_circuit(n, 5 * n, &mut rng);
            let t = StabilizerTableau::zero(n).apply_circuit(&circuit).expect("clifford circuit");
            Ok(Truth {
                describe: format!("stabilizer state of a {}-gate Clifford circuit", circuit.gates().len()),
                oracle: Box::new(move |m| t.value(m).expect("pauli measurement")),
                sampler: Box::new(move |r| dist.sample(n, r)),
                learner: FamilyLearner::Stabilizer,
            })
        }
        Family::Chain => {
            let dist = cfg.measurement_distribution()?;
            let opts = cfg.chain;
            let d = opts.bond_cap.ilog2() as usize;
            let inputs: Vec<_> = (0..n)
                .map(|_| {
                    let u = random_unitary(2, &mut rng);
                    [u[0], u[2]]
                })
                .collect();
            let circuit =
                random_bounded_circuit(n, opts.truth_gates.unwrap_or(4 * n), d, TwoQubitFamily::Controlled, &mut rng);
            let state = chain_from_product(&inputs, opts.bond_cap)
                .and_then(|s| s.apply_circuit(&circuit))
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let learner = ChainLearner::new(
                opts.bond_cap,
                ChainBudget { restarts: opts.restarts, max_iters: opts.max_iters },
                derive_seed(seed, LEARN_TAG, 0),
            );
            Ok(Truth {
                describe: format!("chain state, D = {d} controlled circuit on random product input"),
                oracle: Box::new(move |m| crate::mps::chain_expectation(&state, m).expect("bounded measurement")),
                sampler: Box::new(move |r| dist.sample(n, r)),
                learner: FamilyLearner::Chain(learner),
            })
        }
        Family::Eom => {
            let pool_size = cfg.pool_size.unwrap_or(2 * n);
            let mut qubits = 1;
            while 4f64.powi(qubits as i32) - 1.0 < pool_size as f64 {
                qubits += 1;
            }
            let model = random_table_model::<f64, _>(qubits, n, pool_size, false, &mut rng)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let q = Preparation::<f64>::random(n, &mut rng);
            let pool = model.pool().expect("tabulated").to_vec();
            let truth_model = model.clone();
            Ok(Truth {
                describe: format!("Dirichlet preparation over {n} ontic states, pool of {pool_size}"),
                oracle: Box::new(move |m| crate::eom::eom_expectation(&q, &truth_model, m).expect("pool measurement")),
                sampler: Box::new(move |r| pool[r.random_range(0..pool.len())].clone()),
                learner: FamilyLearner::Eom(PreparationLearner { model }),
            })
        }
    }
}

fn snap(v: f64) -> Option<f64> {
    let nearest = [0.0, 0.5, 1.0].into_iter().min_by(|a, b| (v - a).abs().total_cmp(&(v - b).abs())).expect("nonempty");
    ((v - nearest).abs() <= SNAP_REJECT).then_some(nearest)
}

fn stabilizer_status(e: &StabilizerError) -> &'static str {
    match e {
        StabilizerError::InconsistentData(_) => "InconsistentData",
        StabilizerError::CompletionFailed { .. } => "CompletionFailed",
        StabilizerError::OutOfAlphabet(_) => "OutOfAlphabet",
        _ => "Error",
    }
}

fn chain_status(e: &ChainError) -> &'static str {
    match e {
        ChainError::BudgetExhausted { .. } => "BudgetExhausted",
        ChainError::RankOverflow { .. } => "RankOverflow",
        _ => "Error",
    }
}

fn eom_status(e: &EomError) -> &'static str {
    match e {
        EomError::Infeasible { .. } => "Infeasible",
        _ => "Error",
    }
}

/// Residual and held-out failure rate for a fitted hypothesis.
fn score<L: Learner<Error = E>, E>(
    learner: &L,
    h: &L::Hypothesis,
    data: &TrainingSet,
    heldout: &[(Measurement, f64)],
    epsilon: f64,
) -> Result<(f64, f64), E> {
    let residual = learner.max_residual(h, data)?;
    let mut misses = 0usize;
    for (m, v) in heldout {
        if (learner.predict(h, m)? - v).abs() > epsilon {
            misses += 1;
        }
    }
    Ok((residual, misses as f64 / heldout.len() as f64))
}

fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialRow, HarnessError> {
    let start = Instant::now();
    let seed = derive_seed(cfg.master_seed, TRIAL_TAG, trial as u64);
    let truth = build_truth(cfg, seed)?;
    // separate streams: training sets are nested in m_train and the held-out set does not move
    let mut mrng = rng_for(seed, MEAS_TAG, 0);
    let train: Vec<Measurement> = (0..cfg.m_train).map(|_| (truth.sampler)(&mut mrng)).collect();
    let mut hrng = rng_for(seed, MEAS_TAG, 1);
    let heldout: Vec<(Measurement, f64)> = (0..cfg.m_heldout)
        .map(|_| {
            let m = (truth.sampler)(&mut hrng);
            let v = (truth.oracle)(&m);
            (m, v)
        })
        .collect();

    let mut values: Vec<f64> = train.iter().map(|m| (truth.oracle)(m)).collect();
    let mut rejected = false;
    if let Some(ShotNoise { shots }) = cfg.shot_noise {
        let mut srng = rng_for(seed, SHOT_TAG, 0);
        for v in values.iter_mut() {
            let hits = Binomial::new(shots, v.clamp(0.0, 1.0)).expect("probability in range").sample(&mut srng);
            *v = hits as f64 / shots as f64;
            if cfg.family == Family::Stabilizer {
                match snap(*v) {
                    Some(s) => *v = s,
                    None => rejected = true,
                }
            }
        }
    }
    let mut examples: Vec<TrainingExample> =
        train.iter().zip(&values).map(|(m, &v)| TrainingExample { measurement: m.clone(), value: v }).collect();
    if cfg.inject_contradiction {
        let first = examples[0].clone();
        let value = if first.value < 0.5 { 1.0 } else { 0.0 };
        examples.push(TrainingExample { measurement: first.measurement, value });
    }
    let m_train = examples.len();
    let provenance = Provenance {
        true_state: truth.describe.clone(),
        distribution: cfg.distribution.clone(),
        seed: Some(seed),
    };
    let data = TrainingSet::new(cfg.n_for_data(&truth), examples, provenance)?;

    let (status, residual, rate) = if rejected {
        ("ShotNoiseRejected".to_string(), None, None)
    } else {
        match &truth.learner {
            FamilyLearner::Stabilizer => {
                let l = StabilizerLearner;
                match l.fit(&data, cfg.eta).and_then(|h| score(&l, &h, &data, &heldout, cfg.epsilon)) {
                    Ok((r, f)) => ("ok".to_string(), Some(r), Some(f)),
                    Err(e) => (stabilizer_status(&e).to_string(), None, None),
                }
            }
            FamilyLearner::Chain(l) => match l.fit(&data, cfg.eta).and_then(|h| score(l, &h, &data, &heldout, cfg.epsilon)) {
                Ok((r, f)) => ("ok".to_string(), Some(r), Some(f)),
                Err(e) => (chain_status(&e).to_string(), None, None),
            },
            FamilyLearner::Eom(l) => match l.fit(&data, cfg.eta).and_then(|h| score(l, &h, &data, &heldout, cfg.epsilon)) {
                Ok((r, f)) => ("ok".to_string(), Some(r), Some(f)),
                Err(e) => (eom_status(&e).to_string(), None, None),
            },
        }
    };
    let wall_time_ms = if cfg.timing { start.elapsed().as_millis() as u64 } else { 0 };
    Ok(TrialRow { trial, m_train, fit_status: status, max_train_residual: residual, heldout_failure_rate: rate, wall_time_ms })
}

impl ExperimentConfig {
    fn n_for_data(&self, truth: &Truth) -> usize {
        match &truth.learner {
            FamilyLearner::Eom(l) => l.model.n(),
            _ => self.n,
        }
    }
}

/// Runs every trial (in parallel) and aggregates. Deterministic in
/// `master_seed` unless `timing` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let rows: Vec<TrialRow> =
        (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect::<Result<_, _>>()?;
    let rates: Vec<f64> = rows.iter().filter_map(|r| r.heldout_failure_rate).collect();
    let fitted = rates.len();
    let mean = (fitted > 0).then(|| rates.iter().sum::<f64>() / fitted as f64);
    let standard_error = mean.map(|p| (p * (1.0 - p) / (fitted * cfg.m_heldout) as f64).sqrt());
    let within_delta = (fitted > 0).then(|| rates.iter().filter(|&&r| r <= cfg.delta).count() as f64 / fitted as f64);
    let aggregate = Aggregate {
        fitted_trials: fitted,
        mean_failure_rate: mean,
        standard_error,
        within_delta,
        occam_m: occam_sample_bound(&cfg.occam_params()).ok(),
        passes_delta: mean.is_some_and(|p| p <= cfg.delta),
    };
    Ok(ExperimentReport { config: cfg.clone(), rows, aggregate })
}

/// Fraction of trial batches that must meet `δ` for the Occam check to pass.
pub const OCCAM_PASS_FRACTION: f64 = 0.9;

/// Whether experiments at `m_train` meet the end-to-end Occam check: every
/// trial is a batch and at least 90% of them keep the held-out failure rate
/// at or below `δ` (failed fits count against).
pub fn occam_check(cfg: &ExperimentConfig, m_train: usize) -> Result<bool, HarnessError> {
    let mut c = cfg.clone();
    c.m_train = m_train;
    let report = run_experiment(&c)?;
    let ok = report.rows.iter().filter(|r| r.heldout_failure_rate.is_some_and(|f| f <= cfg.delta)).count();
    Ok(ok as f64 >= OCCAM_PASS_FRACTION * report.rows.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub calibration: Calibration,
    /// Smallest training size that passed.
    pub m_pass: usize,
    /// Occam bound at `C = 1` for the reference parameters.
    pub m_unit: u64,
}

/// Binary search for the smallest `C` whose Occam bound makes the
/// end-to-end check pass on `cfg`, searching training sizes in
/// `1..=m_max`. The bound is linear in `C`, so `C = m_pass / m(C = 1)`.
pub fn calibrate_c(cfg: &ExperimentConfig, m_max: usize) -> Result<CalibrationResult, HarnessError> {
    if m_max == 0 {
        return Err(HarnessError::Config("m_max must be at least 1".into()));
    }
    if !occam_check(cfg, m_max)? {
        return Err(HarnessError::Config(format!("the Occam check fails even at m_train = {m_max}")));
    }
    let (mut lo, mut hi) = (0usize, m_max);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if occam_check(cfg, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut unit = cfg.occam_params();
    unit.c = 1.0;
    let m_unit = occam_sample_bound(&unit)?;
    let c = hi as f64 / m_unit as f64;
    let method = format!(
        "binary search over m_train in 1..={m_max} on the {:?} family (n = {}, {} trials, seed {}); smallest passing m_train = {hi}",
        cfg.family, cfg.n, cfg.trials, cfg.master_seed
    )
    .to_lowercase();
    Ok(CalibrationResult { calibration: Calibration { c, method }, m_pass: hi, m_unit })
}
