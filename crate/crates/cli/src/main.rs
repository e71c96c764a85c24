//! `simlearn` command-line front end.
//!
//! Exit codes: 0 success, 2 infeasible or inconsistent data, 3 bad input,
//! 4 cap exceeded, 1 anything else.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Deserialize;
use serde_json::json;

use simlearn::circuit::{random_bounded_circuit, random_clifford_circuit, TwoQubitFamily};
use simlearn::eom::{learn_preparation, random_table_model, EomError, OntModel};
use simlearn::harness::{calibrate_c, run_experiment, ExperimentConfig, HarnessError};
use simlearn::io::{self, BoundsReport, Calibration, Hypothesis, IoError};
use simlearn::linalg::random_unitary;
use simlearn::mps::{chain_expectation, chain_from_product, learn_chain, ChainBudget, ChainError};
use simlearn::pac::{anthony_sample_bound, fat_shattering_estimate, occam_sample_bound, FunctionClass, OccamParams, PacError};
use simlearn::rng::rng_for;
use simlearn::stabilizer::{learn_stabilizer, StabilizerError};
use simlearn::{
    make_training_set, sample_measurements, Circuit, CoreError, Measurement, MeasurementDistribution, Preparation,
    Provenance, StabilizerTableau, TrainingSet,
};

#[derive(Parser)]
#[command(name = "simlearn", version, about = "Learn classically simulable quantum states from measurement data")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output encoding; `experiment` defaults to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Stabilizer,
    Chain,
    Eom,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CircuitKind {
    Clifford,
    Controlled,
    Generic,
}

#[derive(Subcommand)]
enum Command {
    /// Random circuit file.
    GenCircuit {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        gates: usize,
        #[arg(long, value_enum, default_value = "clifford")]
        kind: CircuitKind,
        /// Largest gate count across any cut (controlled and generic kinds).
        #[arg(long, default_value_t = 2)]
        d_budget: usize,
    },
    /// Training set labelled by an exact simulator.
    GenTraining {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Qubit count; ignored with --truth or --model.
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// `pauli:<max_weight>` or `circuit:<gates>:<d>`; eom draws from its pool.
        #[arg(long)]
        dist: Option<String>,
        /// Circuit applied to |0…0⟩; a random ground truth otherwise.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        bond_cap: usize,
        /// eom model file.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Named state of the model; a random preparation otherwise.
        #[arg(long)]
        state: Option<String>,
        /// Ontic space size and pool size of a freshly drawn eom model.
        #[arg(long, default_value_t = 8)]
        lambda: usize,
        #[arg(long, default_value_t = 16)]
        pool: usize,
        /// Where to write a freshly drawn eom model.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Fit a hypothesis to a training set.
    Learn {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        bond_cap: usize,
        #[arg(long, default_value_t = ChainBudget::default().restarts)]
        restarts: usize,
        #[arg(long, default_value_t = ChainBudget::default().max_iters)]
        max_iters: usize,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Evaluate a hypothesis on measurements, one value per line.
    Predict {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long)]
        meas: PathBuf,
        /// Model for a preparation file that does not embed one.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run a generalization experiment.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Calibrate C by searching training sizes up to this bound instead.
        #[arg(long)]
        calibrate_max: Option<usize>,
    },
    /// Occam and Anthony–Bartlett sample bounds.
    Bounds {
        #[arg(long)]
        params: PathBuf,
    },
    /// Exhaustive fat-shattering estimate on a small pool.
    Fatdim {
        #[arg(long, value_enum)]
        class: FamilyArg,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        max_k: Option<usize>,
        /// meas/1 file; random Paulis (or the model's pool) otherwise.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        pool_size: usize,
        #[arg(long, default_value_t = 2)]
        bond_cap: usize,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Simplex grid denominator for eom preparations.
        #[arg(long, default_value_t = 16)]
        grid: usize,
    },
}

#[derive(Debug)]
struct BadInput(String);

impl std::fmt::Display for BadInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for BadInput {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    BadInput(msg.into()).into()
}

const INFEASIBLE: u8 = 2;
const BAD_INPUT: u8 = 3;
const CAP: u8 = 4;

fn core_code(e: &CoreError) -> u8 {
    match e {
        CoreError::OracleCap { .. } => CAP,
        _ => BAD_INPUT,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<BadInput>() || cause.is::<IoError>() || cause.is::<serde_json::Error>() || cause.is::<std::io::Error>() {
            return BAD_INPUT;
        }
        if let Some(e) = cause.downcast_ref::<StabilizerError>() {
            return match e {
                StabilizerError::InconsistentData(_)
                | StabilizerError::CompletionFailed { .. }
                | StabilizerError::OutOfAlphabet(_) => INFEASIBLE,
                StabilizerError::Core(c) => core_code(c),
                _ => BAD_INPUT,
            };
        }
        if let Some(e) = cause.downcast_ref::<ChainError>() {
            return match e {
                ChainError::BudgetExhausted { .. } => INFEASIBLE,
                ChainError::RankOverflow { .. } => CAP,
                ChainError::Core(c) => core_code(c),
                ChainError::Invalid(_) => BAD_INPUT,
            };
        }
        if let Some(e) = cause.downcast_ref::<EomError>() {
            return match e {
                EomError::Infeasible { .. } => INFEASIBLE,
                EomError::Core(c) => core_code(c),
                _ => BAD_INPUT,
            };
        }
        if let Some(e) = cause.downcast_ref::<PacError>() {
            return match e {
                PacError::CapExceeded { .. } => CAP,
                _ => BAD_INPUT,
            };
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return core_code(e);
        }
        if cause.is::<HarnessError>() {
            return BAD_INPUT;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_only(cli: &Cli, what: &str) -> Result<()> {
    if cli.format == Some(Format::Csv) {
        return Err(bad(format!("{what} has no csv encoding")));
    }
    Ok(())
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value");
    s.push('\n');
    s
}

/// `v` with 15 significant digits.
fn sig15(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{:.14}", v);
    }
    let decimals = (14 - v.abs().log10().floor() as i64).max(0) as usize;
    format!("{v:.decimals$}")
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenCircuit { n, gates, kind, d_budget } => {
            json_only(cli, "gen-circuit")?;
            if *n == 0 {
                return Err(bad("--n must be at least 1"));
            }
            let mut rng = rng_for(cli.seed, 0, 0);
            let c = match kind {
                CircuitKind::Clifford => random_clifford_circuit(*n, *gates, &mut rng),
                CircuitKind::Controlled => {
                    random_bounded_circuit(*n, *gates, *d_budget, TwoQubitFamily::Controlled, &mut rng)
                }
                CircuitKind::Generic => random_bounded_circuit(*n, *gates, *d_budget, TwoQubitFamily::Generic, &mut rng),
            };
            emit(cli, &io::circuit_to_json(&c))
        }
        Command::GenTraining { .. } => gen_training(cli),
        Command::Learn { .. } => learn(cli),
        Command::Predict { hyp, meas, model } => predict(cli, hyp, meas, model.as_deref()),
        Command::Experiment { config, calibrate_max } => experiment(cli, config, *calibrate_max),
        Command::Bounds { params } => bounds(cli, params),
        Command::Fatdim { .. } => fatdim(cli),
    }
}

fn read_model(path: Option<&Path>) -> Result<OntModel<f64>> {
    let path = path.ok_or_else(|| bad("the eom family needs --model"))?;
    Ok(io::model_from_json(&read(path)?)?)
}

fn gen_training(cli: &Cli) -> Result<()> {
    let Command::GenTraining { family, n, m, dist, truth, bond_cap, model, state, lambda, pool, model_out } = &cli.command
    else {
        unreachable!()
    };
    json_only(cli, "gen-training")?;
    if *m == 0 {
        return Err(bad("--m must be at least 1"));
    }
    let mut rng = rng_for(cli.seed, 1, 0);
    let circuit = match truth {
        Some(p) => Some(io::circuit_from_json(&read(p)?)?),
        None => None,
    };
    let n = circuit.as_ref().map_or(*n, Circuit::n);
    let spec = |n: usize| -> Result<(MeasurementDistribution, String)> {
        let s = dist.clone().unwrap_or_else(|| format!("pauli:{n}"));
        Ok((s.parse::<MeasurementDistribution>()?, s))
    };
    let data = match family {
        FamilyArg::Stabilizer => {
            if n == 0 {
                return Err(bad("--n must be at least 1"));
            }
            let (c, describe) = match circuit {
                Some(c) => (c, "stabilizer state of the given circuit on |0...0>".to_string()),
                None => {
                    let c = random_clifford_circuit(n, 5 * n, &mut rng);
                    let d = format!("stabilizer state of a random {}-gate Clifford circuit", c.gates().len());
                    (c, d)
                }
            };
            let t = StabilizerTableau::zero(n).apply_circuit(&c)?;
            let (d, s) = spec(n)?;
            let ms = sample_measurements(&d, n, *m, cli.seed)?;
            let prov = Provenance { true_state: describe, distribution: Some(s), seed: Some(cli.seed) };
            make_training_set::<StabilizerError, _>(n, |x| t.value(x), ms, prov)?
        }
        FamilyArg::Chain => {
            if n == 0 {
                return Err(bad("--n must be at least 1"));
            }
            let (state, describe) = match circuit {
                Some(c) => (
                    chain_from_product(&vec![simlearn::dense::qubit_zero(); n], *bond_cap)?.apply_circuit(&c)?,
                    "chain state of the given circuit on |0...0>".to_string(),
                ),
                None => {
                    let inputs: Vec<_> = (0..n)
                        .map(|_| {
                            let u = random_unitary(2, &mut rng);
                            [u[0], u[2]]
                        })
                        .collect();
                    let d = bond_cap.max(&1).ilog2() as usize;
                    let c = random_bounded_circuit(n, 4 * n, d, TwoQubitFamily::Controlled, &mut rng);
                    (
                        chain_from_product(&inputs, *bond_cap)?.apply_circuit(&c)?,
                        format!("chain state, D = {d} controlled circuit on random product input"),
                    )
                }
            };
            let (d, s) = spec(n)?;
            let ms = sample_measurements(&d, n, *m, cli.seed)?;
            let prov = Provenance { true_state: describe, distribution: Some(s), seed: Some(cli.seed) };
            make_training_set::<ChainError, _>(n, |x| chain_expectation(&state, x), ms, prov)?
        }
        FamilyArg::Eom => {
            let model = match model {
                Some(p) => io::model_from_json(&read(p)?)?,
                None => {
                    let mut qubits = 1;
                    while 4f64.powi(qubits) - 1.0 < *pool as f64 {
                        qubits += 1;
                    }
                    let fresh = random_table_model::<f64, _>(qubits as usize, *lambda, *pool, false, &mut rng)?;
                    let out = model_out.as_ref().ok_or_else(|| bad("a fresh eom model needs --model-out"))?;
                    fs::write(out, io::model_to_json(&fresh)?).with_context(|| format!("writing {}", out.display()))?;
                    fresh
                }
            };
            let (q, describe) = match state {
                Some(name) => (
                    model.state(name).cloned().ok_or_else(|| bad(format!("model has no state {name:?}")))?,
                    format!("model state {name:?}"),
                ),
                None => (Preparation::random(model.lambda_size(), &mut rng), "random Dirichlet preparation".to_string()),
            };
            let members = model.pool().ok_or_else(|| bad("model has no pool"))?;
            let ms: Vec<Measurement> = (0..*m).map(|_| members[rng.random_range(0..members.len())].clone()).collect();
            let prov = Provenance { true_state: describe, distribution: Some("pool".into()), seed: Some(cli.seed) };
            make_training_set::<EomError, _>(model.n(), |x| simlearn::eom::eom_expectation(&q, &model, x), ms, prov)?
        }
    };
    emit(cli, &io::training_to_json(&data))
}

fn learn(cli: &Cli) -> Result<()> {
    let Command::Learn { family, eta, input, bond_cap, restarts, max_iters, model } = &cli.command else {
        unreachable!()
    };
    json_only(cli, "learn")?;
    let data: TrainingSet = io::training_from_json(&read(input)?)?;
    let text = match family {
        FamilyArg::Stabilizer => io::tableau_to_json(&learn_stabilizer(&data)?),
        FamilyArg::Chain => {
            let budget = ChainBudget { restarts: *restarts, max_iters: *max_iters };
            io::chain_to_json(&learn_chain::<f64>(&data, *bond_cap, *eta, budget, cli.seed)?)
        }
        FamilyArg::Eom => {
            let model = read_model(model.as_deref())?;
            let q = learn_preparation(&model, &data, *eta)?;
            io::preparation_to_json(&q, Some(&model))?
        }
    };
    emit(cli, &text)
}

fn predict(cli: &Cli, hyp: &Path, meas: &Path, model: Option<&Path>) -> Result<()> {
    let h = io::hypothesis_from_json(&read(hyp)?)?;
    let ms = io::measurements_from_json(&read(meas)?)?;
    let mut values = Vec::with_capacity(ms.len());
    for m in &ms {
        let v = match &h {
            Hypothesis::Stabilizer(t) => t.value(m)?,
            Hypothesis::Chain(s) => chain_expectation(s, m)?,
            Hypothesis::Preparation { q, model: embedded } => {
                let model = match embedded {
                    Some(x) => x.clone(),
                    None => read_model(model)?,
                };
                simlearn::eom::eom_expectation(q, &model, m)?
            }
        };
        values.push(v);
    }
    let text = match cli.format {
        Some(Format::Json) => pretty(&json!({ "values": values })),
        _ => values.iter().map(|&v| sig15(v) + "\n").collect(),
    };
    emit(cli, &text)
}

fn experiment(cli: &Cli, config: &Path, calibrate_max: Option<usize>) -> Result<()> {
    let cfg: ExperimentConfig = serde_json::from_str(&read(config)?).context("parsing experiment config")?;
    if let Some(m_max) = calibrate_max {
        json_only(cli, "calibration")?;
        let r = calibrate_c(&cfg, m_max)?;
        return emit(cli, &pretty(&serde_json::to_value(&r)?));
    }
    let report = run_experiment(&cfg)?;
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(cli, &report.to_csv()),
        Format::Json => emit(cli, &pretty(&serde_json::to_value(&report)?)),
    }
}

/// `bounds --params` input: the Occam parameters, plus optionally a fixed
/// fat-shattering value and the provenance of `C`.
#[derive(Deserialize)]
struct BoundsRequest {
    #[serde(flatten)]
    params: OccamParams,
    /// `fat((γ−η)/8)`; `ceil(n / ((γ−η)/8)²)` when absent.
    fat: Option<u64>,
    method: Option<String>,
}

fn bounds(cli: &Cli, params: &Path) -> Result<()> {
    json_only(cli, "bounds")?;
    let req: BoundsRequest = serde_json::from_str(&read(params)?).context("parsing bound parameters")?;
    let p = req.params;
    let m_occam = occam_sample_bound(&p)?;
    let fat = |g: f64| req.fat.unwrap_or_else(|| (p.n as f64 / (g * g)).ceil() as u64);
    let m_anthony = anthony_sample_bound(&p, fat)?;
    let report = BoundsReport {
        params: p,
        fat: fat((p.gamma - p.eta) / 8.0),
        m_occam,
        m_anthony,
        calibration: Calibration { c: p.c, method: req.method.unwrap_or_else(|| "fixed".into()) },
    };
    emit(cli, &io::bounds_to_json(&report))
}

fn fatdim(cli: &Cli) -> Result<()> {
    let Command::Fatdim { class, n, gamma, max_k, pool, pool_size, bond_cap, model, grid } = &cli.command else {
        unreachable!()
    };
    json_only(cli, "fatdim")?;
    let (fc, default_pool) = match class {
        FamilyArg::Stabilizer => (FunctionClass::stabilizer(*n)?, None),
        FamilyArg::Chain => (FunctionClass::chains(*n, *bond_cap)?, None),
        FamilyArg::Eom => {
            let m = read_model(model.as_deref())?;
            let members = m.pool().map(<[Measurement]>::to_vec);
            if *grid == 0 {
                return Err(bad("--grid must be at least 1"));
            }
            (FunctionClass::preparation_grid(m, *grid), members)
        }
    };
    let pool: Vec<Measurement> = match (pool, default_pool) {
        (Some(p), _) => io::measurements_from_json(&read(p)?)?,
        (None, Some(members)) => members,
        (None, None) => {
            if *pool_size == 0 {
                return Err(bad("--pool-size must be at least 1"));
            }
            sample_measurements(&MeasurementDistribution::UniformPauli { max_weight: *n }, *n, *pool_size, cli.seed)?
        }
    };
    let k = max_k.unwrap_or(pool.len());
    let fat = fat_shattering_estimate(&fc, &pool, *gamma, k)?;
    let out = json!({
        "class": fc.label(),
        "hypotheses": fc.size(),
        "pool_size": pool.len(),
        "gamma": gamma,
        "max_k": k,
        "fat": fat,
    });
    emit(cli, &pretty(&out))
}
