//! Learning a stabilizer state from exact Pauli data.
//!
//! 1. Each example is inverted into a constraint: value 1 forces `+P` into
//!    the stabilizer group, value 0 forces `-P`, value ½ forbids `±P`.
//! 2. Deterministic constraints are intersected by symplectic elimination
//!    with sign tracking.
//! 3. The group is completed to `n` generators greedily in Pauli order
//!    `I < X < Z < Y` (qubit 0 most significant), backtracking a bounded
//!    number of times when an unbiased constraint would become deterministic.

use super::gf2::{self, Bits, GroupBasis};
use super::{StabilizerError, StabilizerTableau};
use crate::pauli::PauliString;
use crate::training::{TrainingExample, TrainingSet};

/// Absolute tolerance for reading a training value as 0, ½ or 1.
pub const VALUE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// This signed Pauli stabilizes the state.
    Deterministic(PauliString),
    /// Neither sign of this Pauli stabilizes the state.
    Unbiased(PauliString),
}

/// Maps a value to the nearest of {0, ½, 1} if within `tol`.
pub fn classify_value(v: f64, tol: f64) -> Option<f64> {
    [0.0, 0.5, 1.0].into_iter().find(|t| (v - t).abs() <= tol)
}

pub fn invert_constraint(example: &TrainingExample) -> Result<Constraint, StabilizerError> {
    let p = example.measurement.as_pauli().ok_or(StabilizerError::NonPauliMeasurement)?;
    match classify_value(example.value, VALUE_TOLERANCE) {
        Some(v) if v == 1.0 => Ok(Constraint::Deterministic(p.clone())),
        Some(v) if v == 0.0 => Ok(Constraint::Deterministic(p.clone().negated())),
        Some(_) => Ok(Constraint::Unbiased(p.unsigned())),
        None => Err(StabilizerError::OutOfAlphabet(example.value)),
    }
}

/// The inverted training set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintSet {
    pub deterministic: Vec<PauliString>,
    pub unbiased: Vec<PauliString>,
}

impl ConstraintSet {
    pub fn from_training(data: &TrainingSet) -> Result<Self, StabilizerError> {
        let mut set = Self::default();
        for ex in data.examples() {
            match invert_constraint(ex)? {
                Constraint::Deterministic(p) => {
                    if let Some(prev) = set.deterministic.iter().find(|q| q.same_support_letters(&p)) {
                        if prev.is_negative() != p.is_negative() {
                            return Err(StabilizerError::InconsistentData(format!(
                                "{} is forced with both signs",
                                p.unsigned()
                            )));
                        }
                        continue;
                    }
                    set.deterministic.push(p);
                }
                Constraint::Unbiased(p) => {
                    if !set.unbiased.contains(&p) {
                        set.unbiased.push(p);
                    }
                }
            }
        }
        Ok(set)
    }
}

pub fn learn_stabilizer(data: &TrainingSet) -> Result<StabilizerTableau, StabilizerError> {
    let n = data.n();
    let constraints = ConstraintSet::from_training(data)?;

    let mut basis = GroupBasis::new(n);
    let mut generators: Vec<PauliString> = Vec::new();
    for c in &constraints.deterministic {
        if c.is_identity() {
            if c.is_negative() {
                return Err(StabilizerError::InconsistentData("-I cannot stabilize a state".into()));
            }
            continue;
        }
        if let Some(g) = generators.iter().find(|g| !g.commutes_with(c)) {
            return Err(StabilizerError::InconsistentData(format!("{c} and {g} anticommute")));
        }
        match basis.signed_member(c) {
            Some(element) if element.is_negative() != c.is_negative() => {
                return Err(StabilizerError::InconsistentData(format!(
                    "{c} contradicts the product {element} of other constraints"
                )));
            }
            Some(_) => {}
            None => {
                basis.insert(c);
                generators.push(c.clone());
            }
        }
    }

    for u in &constraints.unbiased {
        if u.is_identity() {
            return Err(StabilizerError::InconsistentData("the identity cannot have value 1/2".into()));
        }
        if generators.iter().all(|g| g.commutes_with(u)) && basis.signed_member(u).is_some() {
            return Err(StabilizerError::InconsistentData(format!(
                "{u} is unbiased but lies in the group fixed by the deterministic data"
            )));
        }
    }

    let completed = complete(n, generators, &constraints.unbiased)?;
    let tableau = StabilizerTableau::new(n, completed)?;
    for ex in data.examples() {
        let p = ex.measurement.as_pauli().ok_or(StabilizerError::NonPauliMeasurement)?;
        let want = classify_value(ex.value, VALUE_TOLERANCE).ok_or(StabilizerError::OutOfAlphabet(ex.value))?;
        if tableau.pauli_value(p)? != want {
            return Err(StabilizerError::CompletionFailed { violated: p.to_string() });
        }
    }
    Ok(tableau)
}

/// Quotient of the commutant of a generator set by the group it spans.
///
/// Every condition the completion checks is constant on cosets of the group,
/// and the smallest Pauli of a coset is its fully reduced representative, so
/// cosets are enumerated by their minima in increasing order.
struct CosetEnumerator {
    /// Commutant basis in reduced echelon form, most significant pivot first;
    /// coordinates of a member are its bits at the pivots.
    commutant: Vec<Bits>,
    /// Group coordinates (in commutant coefficients), reduced echelon form.
    group: Vec<Bits>,
    group_pivots: Vec<usize>,
    /// Coefficient positions not pivots of `group`, most significant first.
    free: Vec<usize>,
    /// Reduced coordinates of unbiased constraints inside the commutant.
    forbidden: Vec<(Bits, PauliString)>,
    next: u128,
}

impl CosetEnumerator {
    fn new(n: usize, generators: &[PauliString], unbiased: &[PauliString]) -> Self {
        let rows: Vec<Bits> = generators.iter().map(gf2::symplectic_dual).collect();
        let commutant = gf2::null_space(&rows, 2 * n);
        let commutant_pivots: Vec<usize> =
            commutant.iter().map(|v| v.iter().position(|&b| b).expect("nonzero")).collect();
        let d = commutant.len();
        let coords = move |v: &Bits| -> Bits { commutant_pivots.iter().map(|&p| v[p]).collect() };
        let gen_coords: Vec<Bits> = generators.iter().map(|g| coords(&gf2::sym_bits(g))).collect();
        let (group, group_pivots) = gf2::rref(gen_coords, d);
        let free: Vec<usize> = (0..d).filter(|i| !group_pivots.contains(i)).collect();
        let mut me = Self {
            commutant,
            group,
            group_pivots,
            free,
            forbidden: Vec::new(),
            next: 1,
        };
        for u in unbiased {
            if generators.iter().all(|g| g.commutes_with(u)) {
                let r = me.reduce(coords(&gf2::sym_bits(u)));
                me.forbidden.push((r, u.clone()));
            }
        }
        me
    }

    fn reduce(&self, mut c: Bits) -> Bits {
        for (row, &p) in self.group.iter().zip(&self.group_pivots) {
            if c[p] {
                gf2::xor_into(&mut c, row);
            }
        }
        c
    }

    fn exhausted(&self) -> bool {
        self.free.len() < 128 && self.next >> self.free.len() != 0
    }

    /// Next admissible coset minimum, or the unbiased constraint that killed
    /// the last rejected coset when none remain.
    fn next_candidate(&mut self) -> Result<PauliString, Option<PauliString>> {
        let mut last_block = None;
        while !self.exhausted() {
            let idx = self.next;
            self.next += 1;
            let k = self.free.len();
            let mut coeffs = vec![false; self.commutant.len()];
            for (bit, &pos) in self.free.iter().enumerate() {
                coeffs[pos] = (idx >> (k - 1 - bit)) & 1 == 1;
            }
            if let Some((_, u)) = self.forbidden.iter().find(|(r, _)| *r == coeffs) {
                last_block = Some(u.clone());
                continue;
            }
            let mut v = vec![false; self.commutant[0].len()];
            for (row, &c) in self.commutant.iter().zip(&coeffs) {
                if c {
                    gf2::xor_into(&mut v, row);
                }
            }
            return Ok(gf2::from_sym_bits(&v));
        }
        Err(last_block)
    }
}

/// Greedy lexicographic completion with at most `2n` re-completions.
fn complete(
    n: usize,
    mut generators: Vec<PauliString>,
    unbiased: &[PauliString],
) -> Result<Vec<PauliString>, StabilizerError> {
    let fixed = generators.len();
    let budget = 2 * n;
    let mut recompletions = 0;
    let mut stack: Vec<CosetEnumerator> = Vec::new();
    let mut blocker: Option<PauliString> = None;
    while generators.len() < n {
        if stack.len() + fixed == generators.len() {
            stack.push(CosetEnumerator::new(n, &generators, unbiased));
        }
        let level = stack.last_mut().expect("pushed above");
        match level.next_candidate() {
            Ok(c) => generators.push(c),
            Err(b) => {
                blocker = b.or(blocker);
                stack.pop();
                if generators.len() == fixed || recompletions == budget {
                    let violated = blocker.map(|u| u.to_string()).unwrap_or_else(|| "<none>".into());
                    return Err(StabilizerError::CompletionFailed { violated });
                }
                generators.pop();
                recompletions += 1;
            }
        }
    }
    Ok(generators)
}

/// The stabilizer learner (exact data, `η = 0`).
#[derive(Clone, Copy, Debug, Default)]
pub struct StabilizerLearner;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{random_clifford_circuit, Circuit, Gate};
    use crate::dense::{dense_expectation, dense_from_circuit, qubit_zero};
    use crate::measurement::{Measurement, MeasurementDistribution};
    use crate::pauli::Pauli;
    use crate::training::{make_training_set, Provenance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn train(n: usize, data: &[(&str, f64)]) -> TrainingSet {
        let ex = data
            .iter()
            .map(|(s, v)| TrainingExample::new(Measurement::Pauli(p(s)), *v).unwrap())
            .collect();
        TrainingSet::new(n, ex, Provenance::default()).unwrap()
    }

    #[test]
    fn invert_examples() {
        let ex = |s: &str, v| TrainingExample::new(Measurement::Pauli(p(s)), v).unwrap();
        assert_eq!(invert_constraint(&ex("ZI", 1.0)).unwrap(), Constraint::Deterministic(p("ZI")));
        assert_eq!(invert_constraint(&ex("XX", 0.0)).unwrap(), Constraint::Deterministic(p("-XX")));
        assert_eq!(invert_constraint(&ex("XZ", 0.5)).unwrap(), Constraint::Unbiased(p("XZ")));
        assert!(matches!(invert_constraint(&ex("ZI", 0.7)), Err(StabilizerError::OutOfAlphabet(_))));
    }

    #[test]
    fn learns_zero_state() {
        let t = learn_stabilizer(&train(2, &[("ZI", 1.0), ("IZ", 1.0)])).unwrap();
        assert_eq!(t, StabilizerTableau::zero(2));
    }

    #[test]
    fn learns_ghz_from_its_stabilizers() {
        let t = learn_stabilizer(&train(3, &[("XXX", 1.0), ("ZZI", 1.0), ("IZZ", 1.0)])).unwrap();
        assert_eq!(t.pauli_value(&p("XXX")).unwrap(), 1.0);
        assert_eq!(t.pauli_value(&p("ZII")).unwrap(), 0.5);
        let c = Circuit::new(3, vec![Gate::h(0), Gate::cnot(0, 1), Gate::cnot(1, 2)]).unwrap();
        let dense = dense_from_circuit::<f64>(&c, &[qubit_zero(); 3]).unwrap();
        for s in ["YYX", "-YXY", "ZIZ", "XII", "IYI"] {
            let want = dense_expectation(&dense, &Measurement::Pauli(p(s))).unwrap();
            assert!((t.pauli_value(&p(s)).unwrap() - want).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn contradictions_are_rejected() {
        assert!(matches!(
            learn_stabilizer(&train(1, &[("Z", 1.0), ("-Z", 1.0)])),
            Err(StabilizerError::InconsistentData(_))
        ));
        assert!(matches!(
            learn_stabilizer(&train(2, &[("XI", 1.0), ("ZI", 1.0)])),
            Err(StabilizerError::InconsistentData(_))
        ));
        // ZZ is implied by ZI and IZ with sign +
        assert!(matches!(
            learn_stabilizer(&train(2, &[("ZI", 1.0), ("IZ", 1.0), ("ZZ", 0.0)])),
            Err(StabilizerError::InconsistentData(_))
        ));
        assert!(matches!(
            learn_stabilizer(&train(2, &[("ZI", 1.0), ("IZ", 1.0), ("ZZ", 0.5)])),
            Err(StabilizerError::InconsistentData(_))
        ));
    }

    #[test]
    fn empty_data_completes_to_first_lexicographic_state() {
        // first commuting candidates: IX, then XI
        let t = learn_stabilizer(&train(2, &[])).unwrap();
        assert_eq!(t.generators(), &[p("IX"), p("XI")]);
    }

    #[test]
    fn unbiased_constraints_steer_completion() {
        // IX and XI are forbidden, so the completion must avoid both.
        let t = learn_stabilizer(&train(2, &[("IX", 0.5), ("XI", 0.5)])).unwrap();
        assert_eq!(t.pauli_value(&p("IX")).unwrap(), 0.5);
        assert_eq!(t.pauli_value(&p("XI")).unwrap(), 0.5);
    }

    #[test]
    fn single_qubit_all_unbiased_fails() {
        let err = learn_stabilizer(&train(1, &[("X", 0.5), ("Y", 0.5), ("Z", 0.5)])).unwrap_err();
        assert!(matches!(err, StabilizerError::CompletionFailed { .. }), "{err:?}");
    }

    fn brute_first_candidate(n: usize, gens: &[PauliString], unbiased: &[PauliString]) -> Option<PauliString> {
        let mut all: Vec<PauliString> = (0..4usize.pow(n as u32))
            .map(|mut code| {
                let mut letters = vec![Pauli::I; n];
                for q in (0..n).rev() {
                    letters[q] = [Pauli::I, Pauli::X, Pauli::Z, Pauli::Y][code % 4];
                    code /= 4;
                }
                PauliString::from_letters(&letters, false)
            })
            .collect();
        all.sort_by_key(|q| q.order_key());
        let mut span = GroupBasis::new(n);
        for g in gens {
            span.insert(g);
        }
        all.into_iter().find(|c| {
            if c.is_identity() || gens.iter().any(|g| !g.commutes_with(c)) || span.signed_member(c).is_some() {
                return false;
            }
            let mut with = span.clone();
            with.insert(c);
            unbiased.iter().all(|u| with.signed_member(u).is_none())
        })
    }

    #[test]
    fn coset_enumeration_matches_brute_force_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let n = rng.random_range(1..=3);
            let t = StabilizerTableau::zero(n).apply_circuit(&random_clifford_circuit(n, 12, &mut rng)).unwrap();
            let k = rng.random_range(0..n);
            let gens: Vec<PauliString> = t.generators()[..k].to_vec();
            let unbiased: Vec<PauliString> = (0..rng.random_range(0..4))
                .map(|_| {
                    let letters: Vec<Pauli> =
                        (0..n).map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..4)]).collect();
                    PauliString::from_letters(&letters, false)
                })
                .filter(|u| !u.is_identity())
                .collect();
            let mut span = GroupBasis::new(n);
            for g in &gens {
                span.insert(g);
            }
            if unbiased.iter().any(|u| gens.iter().all(|g| g.commutes_with(u)) && span.signed_member(u).is_some()) {
                continue;
            }
            let fast = CosetEnumerator::new(n, &gens, &unbiased).next_candidate().ok();
            assert_eq!(fast, brute_first_candidate(n, &gens, &unbiased), "gens {gens:?} unbiased {unbiased:?}");
        }
    }

    #[test]
    fn reproduces_training_values_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let dist = MeasurementDistribution::UniformPauli { max_weight: 5 };
        for _ in 0..40 {
            let n = 5;
            let truth = StabilizerTableau::zero(n).apply_circuit(&random_clifford_circuit(n, 25, &mut rng)).unwrap();
            let ms: Vec<Measurement> = (0..rng.random_range(0..30)).map(|_| dist.sample(n, &mut rng)).collect();
            let data =
                make_training_set::<StabilizerError, _>(n, |m| truth.value(m), ms, Provenance::default()).unwrap();
            let learned = learn_stabilizer(&data).unwrap();
            for ex in data.examples() {
                assert_eq!(learned.value(&ex.measurement).unwrap(), ex.value);
            }
        }
    }

    #[test]
    fn group_closure_on_learned_tableaux() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let n = 4;
            let truth = StabilizerTableau::zero(n).apply_circuit(&random_clifford_circuit(n, 20, &mut rng)).unwrap();
            let data = TrainingSet::new(
                n,
                truth.generators().iter().map(|g| TrainingExample::new(g.clone().into(), 1.0).unwrap()).collect(),
                Provenance::default(),
            )
            .unwrap();
            let t = learn_stabilizer(&data).unwrap();
            for a in t.generators() {
                for b in t.generators() {
                    let ab = a.mul_commuting(b);
                    if !ab.is_identity() {
                        assert_eq!(t.pauli_value(&ab).unwrap(), 1.0);
                    }
                }
            }
        }
    }
}
