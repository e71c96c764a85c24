//! Versioned JSON documents. Each carries a `format` tag (`"circuit/1"`,
//! `"meas/1"`, `"train/1"`, `"tableau/1"`, `"chain/1"`, `"eom/1"`,
//! `"prep/1"`, `"bounds/1"`).
//!
//! Floats are written in shortest round-trip form, so a parsed file
//! reproduces the stored doubles bit for bit.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::eom::{OntModel, Preparation, Response};
use crate::measurement::Measurement;
use crate::mps::{ChainState, Site};
use crate::pac::OccamParams;
use crate::pauli::PauliString;
use crate::stabilizer::StabilizerTableau;
use crate::training::{Provenance, TrainingExample, TrainingSet};

pub const CIRCUIT_FORMAT: &str = "circuit/1";
pub const MEAS_FORMAT: &str = "meas/1";
pub const TRAIN_FORMAT: &str = "train/1";
pub const TABLEAU_FORMAT: &str = "tableau/1";
pub const CHAIN_FORMAT: &str = "chain/1";
pub const EOM_FORMAT: &str = "eom/1";
pub const PREP_FORMAT: &str = "prep/1";
pub const BOUNDS_FORMAT: &str = "bounds/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("expected format {expected:?}, found {found:?}")]
    Format { expected: String, found: String },
    #[error("invalid document: {0}")]
    Invalid(String),
}

fn invalid(e: impl std::fmt::Display) -> IoError {
    IoError::Invalid(e.to_string())
}

#[derive(Serialize)]
struct Tagged<'a, B> {
    format: &'a str,
    #[serde(flatten)]
    body: &'a B,
}

fn write_doc<B: Serialize>(format: &str, body: &B) -> String {
    let mut s = serde_json::to_string_pretty(&Tagged { format, body }).expect("serializable document");
    s.push('\n');
    s
}

/// The `format` tag of a document, if it has one.
pub fn format_of(text: &str) -> Result<String, IoError> {
    let v: Value = serde_json::from_str(text)?;
    v.get("format")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| IoError::Invalid("missing \"format\" field".into()))
}

fn read_doc<B: DeserializeOwned>(format: &str, text: &str) -> Result<B, IoError> {
    let v: Value = serde_json::from_str(text)?;
    check_format(format, &v)?;
    Ok(serde_json::from_value(v)?)
}

fn check_format(expected: &str, v: &Value) -> Result<(), IoError> {
    let found = v.get("format").and_then(Value::as_str).unwrap_or("");
    if found != expected {
        return Err(IoError::Format { expected: expected.into(), found: found.into() });
    }
    Ok(())
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn unpair(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GateDoc {
    kind: String,
    targets: Vec<usize>,
    /// Row-major `[re, im]` entries, only for `U1` and `U2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CircuitDoc {
    n: usize,
    gates: Vec<GateDoc>,
}

impl CircuitDoc {
    fn from_circuit(c: &Circuit) -> Self {
        let gates = c
            .gates()
            .iter()
            .map(|g| GateDoc {
                kind: g.kind().name().to_owned(),
                targets: g.targets().to_vec(),
                matrix: match g.kind() {
                    GateKind::Unitary1(m) => Some(m.iter().copied().map(pair).collect()),
                    GateKind::Unitary2(m) => Some(m.iter().copied().map(pair).collect()),
                    _ => None,
                },
            })
            .collect();
        Self { n: c.n(), gates }
    }

    fn to_circuit(&self) -> Result<Circuit, IoError> {
        let gates = self.gates.iter().map(GateDoc::to_gate).collect::<Result<Vec<_>, _>>()?;
        Circuit::new(self.n, gates).map_err(invalid)
    }
}

impl GateDoc {
    fn to_gate(&self) -> Result<Gate, IoError> {
        let matrix = |len: usize| -> Result<Vec<Complex64>, IoError> {
            let m = self.matrix.as_ref().ok_or_else(|| invalid(format!("{} gate needs a matrix", self.kind)))?;
            if m.len() != len {
                return Err(invalid(format!("{} matrix needs {len} entries, got {}", self.kind, m.len())));
            }
            Ok(m.iter().copied().map(unpair).collect())
        };
        let kind = match self.kind.to_ascii_uppercase().as_str() {
            "H" => GateKind::H,
            "S" => GateKind::S,
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "CNOT" | "CX" => GateKind::Cnot,
            "CZ" => GateKind::Cz,
            "U1" => GateKind::Unitary1(Box::new(matrix(4)?.try_into().expect("length checked"))),
            "U2" => GateKind::Unitary2(Box::new(matrix(16)?.try_into().expect("length checked"))),
            other => return Err(invalid(format!("unknown gate kind {other:?}"))),
        };
        if self.matrix.is_some() && kind.is_clifford() {
            return Err(invalid(format!("{} gate takes no matrix", self.kind)));
        }
        Gate::new(kind, self.targets.clone()).map_err(invalid)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
enum MeasDoc {
    Pauli { pauli: String },
    Circuit { circuit: CircuitDoc, line: usize },
}

impl MeasDoc {
    fn from_measurement(m: &Measurement) -> Self {
        match m {
            Measurement::Pauli(p) => MeasDoc::Pauli { pauli: p.to_string() },
            Measurement::CircuitInduced { circuit, line } => {
                MeasDoc::Circuit { circuit: CircuitDoc::from_circuit(circuit), line: *line }
            }
        }
    }

    fn to_measurement(&self) -> Result<Measurement, IoError> {
        match self {
            MeasDoc::Pauli { pauli } => Ok(Measurement::Pauli(pauli.parse::<PauliString>().map_err(invalid)?)),
            MeasDoc::Circuit { circuit, line } => {
                Measurement::circuit_induced(circuit.to_circuit()?, *line).map_err(invalid)
            }
        }
    }
}

pub fn circuit_to_json(c: &Circuit) -> String {
    write_doc(CIRCUIT_FORMAT, &CircuitDoc::from_circuit(c))
}

pub fn circuit_from_json(text: &str) -> Result<Circuit, IoError> {
    read_doc::<CircuitDoc>(CIRCUIT_FORMAT, text)?.to_circuit()
}

pub fn measurement_to_json(m: &Measurement) -> String {
    write_doc(MEAS_FORMAT, &MeasDoc::from_measurement(m))
}

#[derive(Serialize, Deserialize)]
struct MeasListDoc {
    measurements: Vec<MeasDoc>,
}

/// A `meas/1` file holding a list under `measurements`.
pub fn measurements_to_json(ms: &[Measurement]) -> String {
    write_doc(MEAS_FORMAT, &MeasListDoc { measurements: ms.iter().map(MeasDoc::from_measurement).collect() })
}

/// Reads either a single measurement or a `measurements` list.
pub fn measurements_from_json(text: &str) -> Result<Vec<Measurement>, IoError> {
    let v: Value = serde_json::from_str(text)?;
    check_format(MEAS_FORMAT, &v)?;
    if v.get("measurements").is_some() {
        let doc: MeasListDoc = serde_json::from_value(v)?;
        doc.measurements.iter().map(MeasDoc::to_measurement).collect()
    } else {
        let doc: MeasDoc = serde_json::from_value(v)?;
        Ok(vec![doc.to_measurement()?])
    }
}

#[derive(Serialize, Deserialize)]
struct ExampleDoc {
    measurement: MeasDoc,
    value: f64,
}

#[derive(Default, Serialize, Deserialize)]
struct ProvenanceDoc {
    #[serde(default)]
    true_state: String,
    #[serde(default)]
    distribution: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct TrainDoc {
    n: usize,
    examples: Vec<ExampleDoc>,
    #[serde(default)]
    provenance: ProvenanceDoc,
}

pub fn training_to_json(t: &TrainingSet) -> String {
    let doc = TrainDoc {
        n: t.n(),
        examples: t
            .examples()
            .iter()
            .map(|ex| ExampleDoc { measurement: MeasDoc::from_measurement(&ex.measurement), value: ex.value })
            .collect(),
        provenance: ProvenanceDoc {
            true_state: t.provenance.true_state.clone(),
            distribution: t.provenance.distribution.clone(),
            seed: t.provenance.seed,
        },
    };
    write_doc(TRAIN_FORMAT, &doc)
}

pub fn training_from_json(text: &str) -> Result<TrainingSet, IoError> {
    let doc: TrainDoc = read_doc(TRAIN_FORMAT, text)?;
    let examples = doc
        .examples
        .iter()
        .map(|ex| TrainingExample::new(ex.measurement.to_measurement()?, ex.value).map_err(invalid))
        .collect::<Result<Vec<_>, _>>()?;
    let p = doc.provenance;
    TrainingSet::new(doc.n, examples, Provenance { true_state: p.true_state, distribution: p.distribution, seed: p.seed })
        .map_err(invalid)
}

#[derive(Serialize, Deserialize)]
struct GeneratorDoc {
    x_bits: Vec<u8>,
    z_bits: Vec<u8>,
    sign: i8,
}

#[derive(Serialize, Deserialize)]
struct TableauDoc {
    n: usize,
    generators: Vec<GeneratorDoc>,
}

fn bits_to_u8(b: &[bool]) -> Vec<u8> {
    b.iter().map(|&v| v as u8).collect()
}

fn u8_to_bits(b: &[u8]) -> Result<Vec<bool>, IoError> {
    b.iter()
        .map(|&v| match v {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(invalid(format!("bit value {other} is not 0 or 1"))),
        })
        .collect()
}

pub fn tableau_to_json(t: &StabilizerTableau) -> String {
    let generators = t
        .generators()
        .iter()
        .map(|g| GeneratorDoc { x_bits: bits_to_u8(g.x_bits()), z_bits: bits_to_u8(g.z_bits()), sign: g.sign() })
        .collect();
    write_doc(TABLEAU_FORMAT, &TableauDoc { n: t.n(), generators })
}

pub fn tableau_from_json(text: &str) -> Result<StabilizerTableau, IoError> {
    let doc: TableauDoc = read_doc(TABLEAU_FORMAT, text)?;
    let gens = doc
        .generators
        .iter()
        .map(|g| {
            let negative = match g.sign {
                1 => false,
                -1 => true,
                other => return Err(invalid(format!("sign {other} is not +1 or -1"))),
            };
            PauliString::new(u8_to_bits(&g.x_bits)?, u8_to_bits(&g.z_bits)?, negative).map_err(invalid)
        })
        .collect::<Result<Vec<_>, _>>()?;
    if gens.iter().any(|g| g.n() != doc.n) {
        return Err(invalid(format!("generators must act on {} qubits", doc.n)));
    }
    StabilizerTableau::new(doc.n, gens).map_err(invalid)
}

/// `sites[k][l][p][r] = [re, im]`.
#[derive(Serialize, Deserialize)]
struct ChainDoc {
    n: usize,
    #[serde(rename = "L")]
    bond_cap: usize,
    ranks: Vec<usize>,
    sites: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
}

pub fn chain_to_json(s: &ChainState<f64>) -> String {
    let sites = s
        .sites()
        .iter()
        .map(|site| {
            (0..site.left())
                .map(|l| (0..2).map(|p| (0..site.right()).map(|r| pair(site.at(l, p, r))).collect()).collect())
                .collect()
        })
        .collect();
    write_doc(CHAIN_FORMAT, &ChainDoc { n: s.n(), bond_cap: s.bond_cap(), ranks: s.bond_dims(), sites })
}

pub fn chain_from_json(text: &str) -> Result<ChainState<f64>, IoError> {
    let doc: ChainDoc = read_doc(CHAIN_FORMAT, text)?;
    if doc.sites.len() != doc.n || doc.ranks.len() + 1 != doc.n.max(1) {
        return Err(invalid(format!("chain of {} sites needs {} sites and {} ranks", doc.n, doc.n, doc.n.saturating_sub(1))));
    }
    let mut sites = Vec::with_capacity(doc.n);
    for (k, t) in doc.sites.iter().enumerate() {
        let left = t.len();
        let right = t.first().and_then(|p| p.first()).map_or(0, Vec::len);
        let want_left = if k == 0 { 1 } else { doc.ranks[k - 1] };
        let want_right = if k + 1 == doc.n { 1 } else { doc.ranks[k] };
        if left != want_left || right != want_right {
            return Err(invalid(format!("site {k} has shape ({left}, 2, {right}), ranks say ({want_left}, 2, {want_right})")));
        }
        let mut data = Vec::with_capacity(left * 2 * right);
        for row in t {
            if row.len() != 2 || row.iter().any(|v| v.len() != right) {
                return Err(invalid(format!("site {k} is ragged")));
            }
            data.extend(row.iter().flatten().copied().map(unpair));
        }
        sites.push(Site::new(left, right, data).map_err(invalid)?);
    }
    ChainState::from_sites(doc.bond_cap, sites).map_err(invalid)
}

#[derive(Serialize, Deserialize)]
struct EomDoc {
    n: usize,
    lambda_size: usize,
    pool: Vec<MeasDoc>,
    /// `response[λ][j] = f(λ, pool[j])`.
    response: Vec<Vec<f64>>,
    #[serde(default)]
    states: BTreeMap<String, Vec<f64>>,
}

impl EomDoc {
    fn from_model(model: &OntModel<f64>) -> Result<Self, IoError> {
        let Response::Table { pool, values } = model.response_kind() else {
            return Err(invalid("only tabulated response functions can be written"));
        };
        Ok(Self {
            n: model.n(),
            lambda_size: model.lambda_size(),
            pool: pool.iter().map(MeasDoc::from_measurement).collect(),
            response: values.clone(),
            states: model.states().iter().map(|(k, q)| (k.clone(), q.probs().to_vec())).collect(),
        })
    }

    fn to_model(&self) -> Result<OntModel<f64>, IoError> {
        let pool = self.pool.iter().map(MeasDoc::to_measurement).collect::<Result<Vec<_>, _>>()?;
        let mut model = OntModel::from_table_with_budget(self.n, self.lambda_size, pool, self.response.clone(), usize::MAX)
            .map_err(invalid)?;
        for (name, probs) in &self.states {
            model = model.with_state(name.clone(), Preparation::new(probs.clone()).map_err(invalid)?).map_err(invalid)?;
        }
        Ok(model)
    }
}

pub fn model_to_json(model: &OntModel<f64>) -> Result<String, IoError> {
    Ok(write_doc(EOM_FORMAT, &EomDoc::from_model(model)?))
}

pub fn model_from_json(text: &str) -> Result<OntModel<f64>, IoError> {
    read_doc::<EomDoc>(EOM_FORMAT, text)?.to_model()
}

#[derive(Serialize, Deserialize)]
struct PrepDoc {
    lambda_size: usize,
    probs: Vec<f64>,
    /// The model the preparation lives in, so the file predicts on its own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<EomDoc>,
}

pub fn preparation_to_json(q: &Preparation<f64>, model: Option<&OntModel<f64>>) -> Result<String, IoError> {
    let model = model.map(EomDoc::from_model).transpose()?;
    Ok(write_doc(PREP_FORMAT, &PrepDoc { lambda_size: q.len(), probs: q.probs().to_vec(), model }))
}

pub fn preparation_from_json(text: &str) -> Result<(Preparation<f64>, Option<OntModel<f64>>), IoError> {
    let doc: PrepDoc = read_doc(PREP_FORMAT, text)?;
    if doc.probs.len() != doc.lambda_size {
        return Err(invalid(format!("{} probabilities for lambda_size {}", doc.probs.len(), doc.lambda_size)));
    }
    let q = Preparation::new(doc.probs).map_err(invalid)?;
    let model = doc.model.as_ref().map(EomDoc::to_model).transpose()?;
    if let Some(m) = &model {
        if m.lambda_size() != q.len() {
            return Err(invalid("embedded model has a different ontic space size"));
        }
    }
    Ok((q, model))
}

/// Any learned hypothesis file.
#[derive(Clone, Debug)]
pub enum Hypothesis {
    Stabilizer(StabilizerTableau),
    Chain(ChainState<f64>),
    Preparation { q: Preparation<f64>, model: Option<OntModel<f64>> },
}

pub fn hypothesis_from_json(text: &str) -> Result<Hypothesis, IoError> {
    match format_of(text)?.as_str() {
        TABLEAU_FORMAT => Ok(Hypothesis::Stabilizer(tableau_from_json(text)?)),
        CHAIN_FORMAT => Ok(Hypothesis::Chain(chain_from_json(text)?)),
        PREP_FORMAT => {
            let (q, model) = preparation_from_json(text)?;
            Ok(Hypothesis::Preparation { q, model })
        }
        other => Err(IoError::Format { expected: "tableau/1, chain/1 or prep/1".into(), found: other.into() }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    #[serde(rename = "C")]
    pub c: f64,
    pub method: String,
}

/// Contents of a `bounds/1` report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub params: OccamParams,
    /// Value used for `fat((γ−η)/8)`.
    pub fat: u64,
    pub m_occam: u64,
    pub m_anthony: u64,
    pub calibration: Calibration,
}

pub fn bounds_to_json(r: &BoundsReport) -> String {
    write_doc(BOUNDS_FORMAT, r)
}

pub fn bounds_from_json(text: &str) -> Result<BoundsReport, IoError> {
    read_doc(BOUNDS_FORMAT, text)
}
