//! Acceptance gate: runs the ten criteria and prints one PASS/FAIL line each.
//! Golden files are rewritten instead of compared when `SIMLEARN_BLESS=1`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simlearn::circuit::{random_bounded_circuit, random_clifford_circuit, TwoQubitFamily};
use simlearn::dense::{dense_expectation, dense_from_circuit, DenseState};
use simlearn::eom::{
    eom_expectation, eom_sample_estimate, learn_preparation, random_table_model, training_spans_pool, OntModel,
};
use simlearn::harness::{run_experiment, ExperimentConfig, Family};
use simlearn::io;
use simlearn::linalg::random_unitary;
use simlearn::mps::{chain_expectation, chain_from_product};
use simlearn::pac::{
    anthony_sample_bound, binary_entropy, fat_shattering_estimate, occam_sample_bound, rac_exhaustive, FunctionClass,
    OccamParams,
};
use simlearn::{
    sample_measurements, Circuit, Gate, Measurement, MeasurementDistribution, Pauli, PauliString, Preparation,
    Provenance, StabilizerTableau, TrainingExample, TrainingSet,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    check(t <= limit, || format!("took {:.1}s, limit {}s", t.as_secs_f64(), limit.as_secs()))
}

fn random_pauli(n: usize, rng: &mut ChaCha8Rng) -> PauliString {
    let letters: Vec<Pauli> = (0..n).map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..4)]).collect();
    PauliString::from_letters(&letters, rng.random_bool(0.5))
}

fn random_product(n: usize, rng: &mut ChaCha8Rng) -> Vec<[num_complex::Complex64; 2]> {
    (0..n)
        .map(|_| {
            let u = random_unitary(2, rng);
            [u[0], u[2]]
        })
        .collect()
}

fn stabilizer_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let gates = rng.random_range(0..=40);
        let c = random_clifford_circuit(n, gates, &mut rng);
        let t = StabilizerTableau::zero(n).apply_circuit(&c).map_err(|e| e.to_string())?;
        let psi: DenseState<f64> = dense_from_circuit(&c, &vec![simlearn::dense::qubit_zero(); n]).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let p = random_pauli(n, &mut rng);
            let a = t.pauli_value(&p).map_err(|e| e.to_string())?;
            let b = dense_expectation(&psi, &Measurement::Pauli(p)).map_err(|e| e.to_string())?;
            worst = worst.max((a - b).abs());
        }
    }
    check(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    within(start, Duration::from_secs(30))?;
    Ok(format!("4000 comparisons, max deviation {worst:.1e}"))
}

fn chain_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=10);
        let d = rng.random_range(0..=3);
        let inputs = random_product(n, &mut rng);
        let c = random_bounded_circuit(n, 6 * n, d, TwoQubitFamily::Controlled, &mut rng);
        let chain = chain_from_product(&inputs, 8).and_then(|s| s.apply_circuit(&c)).map_err(|e| e.to_string())?;
        let mut psi = DenseState::product(&inputs).map_err(|e| e.to_string())?;
        psi.apply_circuit(&c);
        let circuit_seed = rng.random();
        let paulis: Vec<Measurement> = (0..8).map(|_| Measurement::Pauli(random_pauli(n, &mut rng))).collect();
        let circuits = sample_measurements(
            &MeasurementDistribution::CircuitFamily { gate_count: 8, d_budget: 2 },
            n,
            4,
            circuit_seed,
        )
        .map_err(|e| e.to_string())?;
        for m in paulis.into_iter().chain(circuits) {
            let a = chain_expectation(&chain, &m).map_err(|e| e.to_string())?;
            let b = dense_expectation(&psi, &m).map_err(|e| e.to_string())?;
            worst = worst.max((a - b).abs());
            count += 1;
        }
    }
    check(worst <= 1e-8, || format!("max deviation {worst:e}"))?;
    within(start, Duration::from_secs(60))?;
    Ok(format!("{count} comparisons, max deviation {worst:.1e}"))
}

fn stabilizer_learning() -> Outcome {
    let start = Instant::now();
    let n = 8;
    let mut cfg = ExperimentConfig::new(Family::Stabilizer, n, 6 * n);
    cfg.trials = 50;
    cfg.m_heldout = 500;
    // values live in {0, ½, 1}, so any miss above ε = 0.25 is an exact disagreement
    cfg.epsilon = 0.25;
    cfg.master_seed = 303;
    let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let ok = report.rows.iter().filter(|r| r.fitted()).count();
    check(ok * 100 >= 95 * 50, || format!("{ok}/50 consistent fits"))?;
    let mut means = Vec::new();
    for m in [n, 2 * n, 4 * n, 8 * n] {
        cfg.m_train = m;
        let r = run_experiment(&cfg).map_err(|e| e.to_string())?;
        let fitted = r.rows.iter().filter(|r| r.fitted()).count();
        check(fitted == 50, || format!("m = {m}: only {fitted}/50 fits"))?;
        means.push(r.aggregate.mean_failure_rate.unwrap_or(1.0));
    }
    check(means.windows(2).all(|w| w[1] <= w[0]), || format!("disagreement not non-increasing: {means:?}"))?;
    // the expected decrease over this range is far below trial-to-trial noise, so report
    // how often the strict trend holds under other master seeds
    let mut holds = 0;
    for seed in 0..20 {
        cfg.master_seed = seed;
        let mut prev = f64::INFINITY;
        let mut monotone = true;
        for m in [n, 2 * n, 4 * n, 8 * n] {
            cfg.m_train = m;
            let mean = run_experiment(&cfg).map_err(|e| e.to_string())?.aggregate.mean_failure_rate.unwrap_or(1.0);
            monotone &= mean <= prev;
            prev = mean;
        }
        holds += monotone as usize;
    }
    within(start, Duration::from_secs(120))?;
    let shown: Vec<String> = means.iter().map(|v| format!("{v:.5}")).collect();
    Ok(format!(
        "{ok}/50 consistent at m = 6n; disagreement at n, 2n, 4n, 8n = [{}]; strict trend holds for {holds}/20 other seeds",
        shown.join(", ")
    ))
}

fn eom_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (l, m, heldout) = (20, 40, 500);
    let mut spanning = 0;
    let mut worst_residual: f64 = 0.0;
    let mut worst_heldout: f64 = 0.0;
    for _ in 0..50 {
        let model: OntModel<f64> = random_table_model(5, l, m + heldout, false, &mut rng).map_err(|e| e.to_string())?;
        let q = Preparation::random(l, &mut rng);
        let pool = model.pool().expect("table").to_vec();
        let examples = pool[..m]
            .iter()
            .map(|e| Ok(TrainingExample { measurement: e.clone(), value: eom_expectation(&q, &model, e)? }))
            .collect::<Result<Vec<_>, simlearn::eom::EomError>>()
            .map_err(|e| e.to_string())?;
        let data = TrainingSet::new(5, examples, Provenance::default()).map_err(|e| e.to_string())?;
        let fit = learn_preparation(&model, &data, 0.0).map_err(|e| e.to_string())?;
        for ex in data.examples() {
            let v = eom_expectation(&fit, &model, &ex.measurement).map_err(|e| e.to_string())?;
            worst_residual = worst_residual.max((v - ex.value).abs());
        }
        if training_spans_pool(&model, &data).map_err(|e| e.to_string())? {
            spanning += 1;
            for e in &pool[m..] {
                let a = eom_expectation(&fit, &model, e).map_err(|e| e.to_string())?;
                let b = eom_expectation(&q, &model, e).map_err(|e| e.to_string())?;
                worst_heldout = worst_heldout.max((a - b).abs());
            }
        }
    }
    check(worst_residual <= 1e-9, || format!("training residual {worst_residual:e}"))?;
    check(worst_heldout <= 1e-7, || format!("held-out error {worst_heldout:e}"))?;
    check(spanning > 0, || "no trial had spanning training rows".into())?;
    within(start, Duration::from_secs(30))?;
    Ok(format!(
        "{spanning}/50 rank-verified; max residual {worst_residual:.1e}, max held-out error {worst_heldout:.1e}"
    ))
}

fn chain_learning() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::new(Family::Chain, 6, 200);
    cfg.eta = 0.02;
    cfg.gamma = 0.1;
    cfg.epsilon = 0.1;
    cfg.m_heldout = 200;
    cfg.trials = 25;
    cfg.chain.bond_cap = 2;
    cfg.chain.restarts = 32;
    cfg.master_seed = 505;
    let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let good: Vec<_> = report.rows.iter().filter(|r| r.max_train_residual.is_some_and(|v| v <= 0.02)).collect();
    check(good.len() * 100 >= 80 * 25, || format!("{}/25 feasible fits", good.len()))?;
    let worst = good.iter().filter_map(|r| r.heldout_failure_rate).fold(0.0, f64::max);
    check(worst <= 0.1, || format!("a feasible fit missed by > 0.1 on {:.1}% of held-out", 100.0 * worst))?;
    within(start, Duration::from_secs(600))?;
    Ok(format!(
        "{}/25 feasible; worst held-out fraction with |error| > 0.1 is {:.3}",
        good.len(),
        worst
    ))
}

fn sampling_concentration() -> Outcome {
    let start = Instant::now();
    let mut close = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let l = rng.random_range(2..=12);
        let model: OntModel<f64> = random_table_model(2, l, 3, false, &mut rng).map_err(|e| e.to_string())?;
        let q = Preparation::random(l, &mut rng);
        let e = model.pool().expect("table")[rng.random_range(0..3)].clone();
        let exact = eom_expectation(&q, &model, &e).map_err(|e| e.to_string())?;
        let est = eom_sample_estimate(&q, &model, &e, 10_000, seed).map_err(|e| e.to_string())?;
        if (est - exact).abs() <= 0.05 {
            close += 1;
        }
    }
    check(close * 100 >= 95 * 200, || format!("{close}/200 within 0.05"))?;
    within(start, Duration::from_secs(60))?;
    Ok(format!("{close}/200 estimates within 0.05"))
}

fn params(n: usize, epsilon: f64, delta: f64, gamma: f64, eta: f64, c: f64, k: f64) -> OccamParams {
    OccamParams { n, epsilon, delta, gamma, eta, c, k, ..OccamParams::default() }
}

fn envelope_fat(n: usize) -> impl Fn(f64) -> u64 {
    move |g| (n as f64 / (g * g)).ceil() as u64
}

fn bounds() -> Outcome {
    // evaluated independently in 50-digit arithmetic
    let reference: [((usize, f64, f64, f64, f64, f64, f64), u64, u64); 5] = [
        ((8, 0.1, 0.05, 0.1, 0.03, 1.0, 1.0), 16_966_103_911, 285_118_945),
        ((4, 0.2, 0.1, 0.3, 0.07, 2.0, 0.5), 4_887_255, 1_618_032),
        ((16, 0.05, 0.01, 0.2, 0.13, 0.5, 3.0), 16_966_096_980, 4_019_795_722),
        ((1, 0.45, 0.3, 0.55, 0.21, 1.0, 1.0), 540, 82_672),
        ((32, 0.25, 0.001, 0.15, 0.02, 1.5, 2.0), 261_685_572, 221_974_950),
    ];
    for ((n, e, d, g, eta, c, k), occam, anthony) in reference {
        let p = params(n, e, d, g, eta, c, k);
        let o = occam_sample_bound(&p).map_err(|e| e.to_string())?;
        let a = anthony_sample_bound(&p, envelope_fat(n)).map_err(|e| e.to_string())?;
        check(o == occam && a == anthony, || format!("{p:?}: got ({o}, {a}), want ({occam}, {anthony})"))?;
    }
    let mut grid = Vec::new();
    for (a, n) in [2usize, 8, 32].into_iter().enumerate() {
        for (b, e) in [0.3, 0.1, 0.05].into_iter().enumerate() {
            for (c, d) in [0.2, 0.05, 0.01].into_iter().enumerate() {
                for (g_i, g) in [0.4, 0.2, 0.1].into_iter().enumerate() {
                    let p = params(n, e, d, g, 0.01, 1.0, 1.0);
                    let o = occam_sample_bound(&p).map_err(|e| e.to_string())?;
                    let an = anthony_sample_bound(&p, envelope_fat(n)).map_err(|e| e.to_string())?;
                    grid.push(([a, b, c, g_i], o, an));
                }
            }
        }
    }
    let mut comparisons = 0;
    for (ia, oa, aa) in &grid {
        for (ib, ob, ab) in &grid {
            if ia.iter().zip(ib).all(|(x, y)| x <= y) {
                check(oa <= ob && aa <= ab, || format!("monotonicity broken between {ia:?} and {ib:?}"))?;
                comparisons += 1;
            }
        }
    }
    Ok(format!("5 reference tuples exact; {comparisons} ordered pairs on the 3^4 grid monotone"))
}

fn pauli(s: &str) -> Measurement {
    Measurement::Pauli(s.parse().expect("pauli"))
}

fn fat_shattering() -> Outcome {
    let err = |e: simlearn::pac::PacError| e.to_string();
    let model = OntModel::from_table(1, 2, vec![pauli("Z"), pauli("X")], vec![vec![0.0, 0.5], vec![1.0, 0.5]])
        .map_err(|e| e.to_string())?;
    let deltas = vec![Preparation::delta(2, 0), Preparation::delta(2, 1)];
    let single = FunctionClass::preparations(model.clone(), vec![deltas[0].clone()]);
    let class = FunctionClass::preparations(model, deltas);
    let examples = [
        fat_shattering_estimate(&single, &[pauli("Z"), pauli("X")], 0.1, 2).map_err(err)?,
        fat_shattering_estimate(&class, &[pauli("Z")], 0.4, 1).map_err(err)?,
        fat_shattering_estimate(&class, &[pauli("Z"), pauli("X")], 0.4, 2).map_err(err)?,
    ];
    check(examples == [0, 1, 1], || format!("worked examples gave {examples:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for _ in 0..20 {
        let l = rng.random_range(2..=4);
        let model: OntModel<f64> = random_table_model(2, l, 4, rng.random_bool(0.5), &mut rng).map_err(|e| e.to_string())?;
        let pool = model.pool().expect("table").to_vec();
        let class = FunctionClass::preparation_grid(model, 8);
        let mut last = usize::MAX;
        for g in [0.05, 0.1, 0.2, 0.3, 0.45] {
            let k = fat_shattering_estimate(&class, &pool, g, pool.len()).map_err(err)?;
            check(k <= last, || format!("estimate rose from {last} to {k} at gamma = {g}"))?;
            last = k;
        }
    }
    let mut envelope = Vec::new();
    for l in 2..=6 {
        let model: OntModel<f64> = random_table_model(2, l, 6, false, &mut rng).map_err(|e| e.to_string())?;
        let pool = model.pool().expect("table").to_vec();
        let denominator = if l <= 4 { 16 } else { 8 };
        let class = FunctionClass::preparation_grid(model, denominator);
        let k = fat_shattering_estimate(&class, &pool, 0.2, pool.len()).map_err(err)?;
        let cap = (l as f64 / 0.04).ceil() as usize;
        check(k <= cap, || format!("l = {l}: estimate {k} above envelope {cap}"))?;
        envelope.push(k);
    }
    Ok(format!("worked examples [0, 1, 1]; 20 classes gamma-monotone; fat at gamma 0.2 for l = 2..6: {envelope:?}"))
}

/// Largest mean per-bit success of the weakest bit over every deterministic
/// encoding of `k`-bit strings into `l` ontic states, each decoded by
/// per-state majority. Encodings are enumerated up to relabeling of the
/// ontic states (restricted growth strings).
fn brute_rac(k: usize, l: usize) -> f64 {
    struct Search {
        k: usize,
        l: usize,
        words: usize,
        counts: Vec<[u32; 8]>,
        sizes: Vec<u32>,
        best: u32,
    }
    impl Search {
        fn leaf(&mut self) {
            let mut weakest = u32::MAX;
            for i in 0..self.k {
                let s: u32 = (0..self.l).map(|j| self.counts[j][i].max(self.sizes[j] - self.counts[j][i])).sum();
                weakest = weakest.min(s);
            }
            self.best = self.best.max(weakest);
        }
        fn rec(&mut self, x: usize, used: usize) {
            if x == self.words {
                self.leaf();
                return;
            }
            for j in 0..(used + 1).min(self.l) {
                self.sizes[j] += 1;
                for i in 0..self.k {
                    self.counts[j][i] += (x >> i & 1) as u32;
                }
                self.rec(x + 1, used.max(j + 1));
                self.sizes[j] -= 1;
                for i in 0..self.k {
                    self.counts[j][i] -= (x >> i & 1) as u32;
                }
            }
        }
    }
    let mut s = Search { k, l, words: 1 << k, counts: vec![[0; 8]; l], sizes: vec![0; l], best: 0 };
    s.rec(0, 0);
    s.best as f64 / (1u32 << k) as f64
}

fn rac() -> Outcome {
    let start = Instant::now();
    let mut table = Vec::new();
    for k in 1..=4 {
        for l in 1..=4 {
            let p = brute_rac(k, l);
            let lhs = (l as f64).log2();
            let rhs = (1.0 - binary_entropy(p)) * k as f64;
            check(lhs >= rhs - 1e-9, || format!("k = {k}, l = {l}: log2 l = {lhs} < {rhs} at p = {p}"))?;
            let dominance = rac_exhaustive(k, l, 1e-9).map_err(|e| e.to_string())?;
            check(dominance.all_satisfied, || format!("dominance search fails at k = {k}, l = {l}"))?;
            check(dominance.best_success >= p - 1e-12, || {
                format!("dominance search best {} below brute force {p} at k = {k}, l = {l}", dominance.best_success)
            })?;
            table.push(format!("{k}/{l}:{p:.3}"));
        }
    }
    Ok(format!("best per-bit success (k/l:p) {}; {:.1}s", table.join(" "), start.elapsed().as_secs_f64()))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_simlearn")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Runs the binary in `dir`, returning (exit code, stdout).
fn run(dir: &Path, args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(bin()).args(args).current_dir(dir).output().map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn golden(name: &str, bytes: &[u8], bless: bool) -> Result<(), String> {
    let path = golden_dir().join(name);
    if bless {
        std::fs::create_dir_all(golden_dir()).map_err(|e| e.to_string())?;
        return std::fs::write(&path, bytes).map_err(|e| e.to_string());
    }
    let want = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    check(want == bytes, || format!("{name} differs from its golden file"))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), String> {
    std::fs::write(dir.join(name), text).map_err(|e| e.to_string())
}

/// Hand-built objects with exactly representable values.
fn library_goldens(bless: bool) -> Result<(), String> {
    let ghz = Circuit::new(3, vec![Gate::h(0), Gate::cnot(0, 1), Gate::cnot(1, 2)]).map_err(|e| e.to_string())?;
    golden("ghz.circuit.json", io::circuit_to_json(&ghz).as_bytes(), bless)?;
    let half = num_complex::Complex64::new(0.5, 0.0);
    let phase = num_complex::Complex64::new(0.5, 0.5);
    let mut mixed = Circuit::new(2, vec![Gate::s(1), Gate::cz(0, 1)]).map_err(|e| e.to_string())?;
    mixed
        .push(Gate::unitary1(0, [phase, phase.conj(), phase.conj(), phase]).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let ms = vec![pauli("-XYZ"), Measurement::circuit_induced(mixed, 1).map_err(|e| e.to_string())?];
    golden("list.meas.json", io::measurements_to_json(&ms).as_bytes(), bless)?;
    let t = StabilizerTableau::new(3, ["+XXX", "+ZZI", "-IZZ"].iter().map(|s| s.parse().expect("pauli")).collect())
        .map_err(|e| e.to_string())?;
    golden("ghz.tableau.json", io::tableau_to_json(&t).as_bytes(), bless)?;
    let one = num_complex::Complex64::new(1.0, 0.0);
    let zero = num_complex::Complex64::new(0.0, 0.0);
    let chain = chain_from_product(&[[one, zero], [half, num_complex::Complex64::new(0.0, -0.75f64.sqrt())]], 2)
        .map_err(|e| e.to_string())?;
    golden("product.chain.json", io::chain_to_json(&chain).as_bytes(), bless)?;
    let model = OntModel::from_table(1, 2, vec![pauli("Z"), pauli("X")], vec![vec![1.0, 0.5], vec![0.0, 0.5]])
        .and_then(|m| m.with_state("zero", Preparation::delta(2, 0)))
        .map_err(|e| e.to_string())?;
    golden("bit.eom.json", io::model_to_json(&model).map_err(|e| e.to_string())?.as_bytes(), bless)?;
    let q = Preparation::new(vec![0.75, 0.25]).map_err(|e| e.to_string())?;
    golden("bit.prep.json", io::preparation_to_json(&q, Some(&model)).map_err(|e| e.to_string())?.as_bytes(), bless)?;
    Ok(())
}

fn reproducibility() -> Outcome {
    let bless = std::env::var("SIMLEARN_BLESS").is_ok_and(|v| v == "1");
    library_goldens(bless)?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    write(d, "ghz.json", &std::fs::read_to_string(golden_dir().join("ghz.circuit.json")).map_err(|e| e.to_string())?)?;
    write(d, "xxx.json", "{\"format\":\"meas/1\",\"variant\":\"pauli\",\"pauli\":\"XXX\"}\n")?;
    write(d, "bounds.json", "{\"n\":8,\"epsilon\":0.1,\"delta\":0.05,\"gamma\":0.2,\"eta\":0.05,\"c\":1,\"k\":1}\n")?;
    write(
        d,
        "cfg.json",
        "{\"family\":\"stabilizer\",\"n\":4,\"m_train\":12,\"m_heldout\":50,\"epsilon\":0.25,\"delta\":0.1,\"gamma\":0.2,\"trials\":4,\"master_seed\":9}\n",
    )?;
    write(
        d,
        "small.json",
        "{\"format\":\"train/1\",\"n\":2,\"examples\":[{\"measurement\":{\"variant\":\"pauli\",\"pauli\":\"ZI\"},\"value\":1.0},{\"measurement\":{\"variant\":\"pauli\",\"pauli\":\"IZ\"},\"value\":1.0},{\"measurement\":{\"variant\":\"pauli\",\"pauli\":\"XX\"},\"value\":0.5}]}\n",
    )?;
    std::fs::copy(golden_dir().join("bit.eom.json"), d.join("bit.json")).map_err(|e| e.to_string())?;
    std::fs::copy(golden_dir().join("ghz.tableau.json"), d.join("hyp.json")).map_err(|e| e.to_string())?;

    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("gen-circuit.circuit.json", vec!["--seed", "7", "gen-circuit", "--n", "4", "--gates", "12"]),
        ("gen-training.train.json", vec!["--seed", "7", "gen-training", "--family", "stabilizer", "--truth", "ghz.json", "--m", "6"]),
        ("gen-training-eom.train.json", vec!["--seed", "7", "gen-training", "--family", "eom", "--model", "bit.json", "--state", "zero", "--m", "4"]),
        ("learn.tableau.json", vec!["--seed", "7", "learn", "--family", "stabilizer", "--in", "train.json"]),
        ("learn-chain.chain.json", vec!["--seed", "7", "learn", "--family", "chain", "--eta", "0.01", "--in", "small.json", "--restarts", "2"]),
        ("predict.txt", vec!["predict", "--hyp", "hyp.json", "--meas", "xxx.json"]),
        ("experiment.csv", vec!["--seed", "7", "experiment", "--config", "cfg.json"]),
        ("bounds.json", vec!["bounds", "--params", "bounds.json"]),
        ("fatdim.json", vec!["--seed", "7", "fatdim", "--class", "stabilizer", "--n", "2", "--gamma", "0.2", "--pool-size", "5"]),
    ];
    let mut files = 0;
    for (name, args) in &commands {
        // inputs some later commands depend on
        if *name == "learn.tableau.json" {
            let (_, t) = run(d, &["--seed", "7", "gen-training", "--family", "stabilizer", "--truth", "ghz.json", "--m", "12"])?;
            std::fs::write(d.join("train.json"), t).map_err(|e| e.to_string())?;
        }
        let (c1, a) = run(d, args)?;
        let (c2, b) = run(d, args)?;
        check(c1 == 0 && c2 == 0, || format!("{name}: exit codes {c1}, {c2}"))?;
        check(a == b, || format!("{name}: outputs differ between runs"))?;
        if *name == "predict.txt" {
            check(a == b"1.00000000000000\n", || format!("GHZ XXX predicted {:?}", String::from_utf8_lossy(&a)))?;
        }
        // learned chains are floating-point fits; reproducibility is checked, not a golden file
        if *name != "learn-chain.chain.json" {
            golden(name, &a, bless)?;
            files += 1;
        }
    }
    let (code, out) = run(d, &["--seed", "7", "--out", "o.csv", "experiment", "--config", "cfg.json"])?;
    check(code == 0 && out.is_empty(), || "--out still wrote to stdout".into())?;
    let written = std::fs::read(d.join("o.csv")).map_err(|e| e.to_string())?;
    golden("experiment.csv", &written, bless)?;
    Ok(format!(
        "{} commands byte-identical across runs; {} golden files match",
        commands.len(),
        files + 7
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence (stabilizer)", stabilizer_oracle),
        ("oracle equivalence (chain)", chain_oracle),
        ("stabilizer learning end-to-end", stabilizer_learning),
        ("EOM learning exactness", eom_exactness),
        ("chain learning feasibility", chain_learning),
        ("sampling estimator concentration", sampling_concentration),
        ("bounds", bounds),
        ("fat-shattering estimator", fat_shattering),
        ("random-access-code bound", rac),
        ("reproducibility", reproducibility),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    let mut err = std::io::stderr();
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let line = match &outcome {
            Ok(msg) => format!("PASS {:>2} {name} ({secs:.1}s): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                format!("FAIL {:>2} {name} ({secs:.1}s): {msg}", i + 1)
            }
        };
        let _ = writeln!(err, "{line}");
    }
    if failed > 0 {
        let _ = writeln!(err, "{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
