use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simlearn::eom::{random_table_model, OntModel, Preparation};
use simlearn::pac::{
    anthony_sample_bound, binary_entropy, fat_shattering_estimate, occam_sample_bound, rac_exhaustive,
    FunctionClass, OccamParams, PacError,
};
use simlearn::{Measurement, PauliString};

fn pauli(s: &str) -> Measurement {
    Measurement::Pauli(s.parse::<PauliString>().unwrap())
}

fn params(n: usize, epsilon: f64, delta: f64, gamma: f64, eta: f64, c: f64, k: f64) -> OccamParams {
    OccamParams { n, epsilon, delta, gamma, eta, c, k, ..OccamParams::default() }
}

fn envelope_fat(n: usize) -> impl Fn(f64) -> u64 {
    move |g| (n as f64 / (g * g)).ceil() as u64
}

// Reference values evaluated independently in 50-digit arithmetic.
const FROZEN: [((usize, f64, f64, f64, f64, f64, f64), u64, u64); 5] = [
    ((8, 0.1, 0.05, 0.1, 0.03, 1.0, 1.0), 16_966_103_911, 285_118_945),
    ((4, 0.2, 0.1, 0.3, 0.07, 2.0, 0.5), 4_887_255, 1_618_032),
    ((16, 0.05, 0.01, 0.2, 0.13, 0.5, 3.0), 16_966_096_980, 4_019_795_722),
    ((1, 0.45, 0.3, 0.55, 0.21, 1.0, 1.0), 540, 82_672),
    ((32, 0.25, 0.001, 0.15, 0.02, 1.5, 2.0), 261_685_572, 221_974_950),
];

#[test]
fn bounds_match_reference_values() {
    for ((n, e, d, g, eta, c, k), occam, anthony) in FROZEN {
        let p = params(n, e, d, g, eta, c, k);
        assert_eq!(occam_sample_bound(&p).unwrap(), occam);
        assert_eq!(anthony_sample_bound(&p, envelope_fat(n)).unwrap(), anthony);
    }
    assert_eq!(occam_sample_bound(&params(8, 0.1, 0.05, 0.1, 0.0, 1.0, 1.0)).unwrap(), 16_966_103_911);
    assert_eq!(anthony_sample_bound(&params(8, 0.1, 0.05, 0.2, 0.05, 1.0, 1.0), envelope_fat(8)).unwrap(), 46_094_142);
}

#[test]
fn bound_examples() {
    let base = params(8, 0.1, 0.05, 0.1, 0.0, 1.0, 1.0);
    let halved = OccamParams { delta: 0.025, ..base };
    assert!(occam_sample_bound(&halved).unwrap() > occam_sample_bound(&base).unwrap());

    let p = params(8, 0.1, 0.05, 0.2, 0.05, 1.0, 1.0);
    assert_eq!(anthony_sample_bound(&p, |_| 0).unwrap(), ((1.0 / 0.1) * (1.0f64 / 0.05).ln()).ceil() as u64);
    let p2 = OccamParams { k: 2.0, ..p };
    let (a, b) = (anthony_sample_bound(&p, envelope_fat(8)).unwrap(), anthony_sample_bound(&p2, envelope_fat(8)).unwrap());
    assert!(b == 2 * a || b == 2 * a - 1, "{a} {b}");
    assert!(matches!(
        anthony_sample_bound(&OccamParams { eta: 0.2, ..p }, envelope_fat(8)),
        Err(PacError::OutOfRange(_))
    ));
}

#[test]
fn n_proportional_term_scales_linearly() {
    // with δ → 1 the log(1/δ) term vanishes up to rounding, leaving only the n-term
    let p = params(8, 0.1, 0.999_999_999_999, 0.1, 0.0, 1.0, 1.0);
    let q = OccamParams { n: 16, ..p };
    let (a, b) = (occam_sample_bound(&p).unwrap() as f64, occam_sample_bound(&q).unwrap() as f64);
    assert!((b / a - 2.0).abs() < 1e-9);
}

/// Pairwise comparisons over a 3⁴ grid in (n, ε, δ, γ).
#[test]
fn bounds_are_monotone_on_grid() {
    let ns = [2usize, 8, 32];
    let es = [0.3, 0.1, 0.05];
    let ds = [0.2, 0.05, 0.01];
    let gs = [0.4, 0.2, 0.1];
    let mut grid = Vec::new();
    for (a, &n) in ns.iter().enumerate() {
        for (b, &e) in es.iter().enumerate() {
            for (c, &d) in ds.iter().enumerate() {
                for (g_i, &g) in gs.iter().enumerate() {
                    let p = params(n, e, d, g, 0.01, 1.0, 1.0);
                    let occam = occam_sample_bound(&p).unwrap();
                    let anthony = anthony_sample_bound(&p, envelope_fat(n)).unwrap();
                    grid.push(([a, b, c, g_i], occam, anthony));
                }
            }
        }
    }
    assert_eq!(grid.len(), 81);
    let mut comparisons = 0;
    for (ia, oa, aa) in &grid {
        for (ib, ob, ab) in &grid {
            // index order is "harder" along every axis
            if ia.iter().zip(ib).all(|(x, y)| x <= y) {
                assert!(oa <= ob && aa <= ab, "{ia:?} vs {ib:?}");
                comparisons += 1;
            }
        }
    }
    assert!(comparisons > 81);
    for c in [0.5, 1.0, 2.0] {
        let lo = params(4, 0.1, 0.1, 0.2, 0.0, c, c);
        let hi = OccamParams { c: 2.0 * c, k: 2.0 * c, ..lo };
        assert!(occam_sample_bound(&lo).unwrap() < occam_sample_bound(&hi).unwrap());
        assert!(anthony_sample_bound(&lo, envelope_fat(4)).unwrap() < anthony_sample_bound(&hi, envelope_fat(4)).unwrap());
    }
    let p = params(4, 0.1, 0.1, 0.2, 0.0, 1.0, 1.0);
    assert!(anthony_sample_bound(&p, |_| 10).unwrap() < anthony_sample_bound(&p, |_| 20).unwrap());
    let tighter = OccamParams { eta: 0.1, ..p };
    assert!(anthony_sample_bound(&p, envelope_fat(4)).unwrap() < anthony_sample_bound(&tighter, envelope_fat(4)).unwrap());
}

#[test]
fn entropy_is_symmetric_and_concave() {
    for i in 0..=1000 {
        let p = i as f64 / 1000.0;
        assert!((binary_entropy(p) - binary_entropy(1.0 - p)).abs() < 1e-12);
        for j in i..=1000 {
            let q = j as f64 / 1000.0;
            let mid = binary_entropy((p + q) / 2.0);
            assert!(mid >= (binary_entropy(p) + binary_entropy(q)) / 2.0 - 1e-12);
        }
    }
}

#[test]
fn exhaustive_rac_small() {
    let s = rac_exhaustive(2, 2, 1e-9).unwrap();
    assert_eq!(s.decoders, 16);
    assert!(s.all_satisfied);
    // two ontic states carry one bit perfectly and leave the other at ½
    assert!((s.best_success - 0.75).abs() < 1e-12);
}

fn delta_class() -> (OntModel<f64>, Vec<Preparation<f64>>) {
    let model =
        OntModel::from_table(1, 2, vec![pauli("Z"), pauli("X")], vec![vec![0.0, 0.5], vec![1.0, 0.5]]).unwrap();
    (model, vec![Preparation::delta(2, 0), Preparation::delta(2, 1)])
}

#[test]
fn fat_examples() {
    let (model, preps) = delta_class();
    let single = FunctionClass::preparations(model.clone(), vec![preps[0].clone()]);
    for g in [0.01, 0.1, 0.4] {
        assert_eq!(fat_shattering_estimate(&single, &[pauli("Z"), pauli("X")], g, 2).unwrap(), 0);
    }
    let class = FunctionClass::preparations(model, preps);
    assert_eq!(fat_shattering_estimate(&class, &[pauli("Z")], 0.4, 1).unwrap(), 1);
    assert_eq!(fat_shattering_estimate(&class, &[pauli("Z"), pauli("X")], 0.4, 2).unwrap(), 1);
    // values 0 and 1 cannot straddle a threshold by more than ½
    assert_eq!(fat_shattering_estimate(&class, &[pauli("Z")], 0.51, 1).unwrap(), 0);
}

#[test]
fn fat_errors() {
    let (model, preps) = delta_class();
    let class = FunctionClass::preparations(model, preps);
    let pool: Vec<Measurement> = (0..13).map(|_| pauli("Z")).collect();
    assert!(matches!(fat_shattering_estimate(&class, &pool, 0.1, 1), Err(PacError::CapExceeded { .. })));
    assert!(fat_shattering_estimate(&class, &[pauli("Z")], 0.1, 2).is_err());
}

/// Direct search over every combination of thresholds drawn from midpoints
/// of consecutive distinct values and the values shifted by ±γ.
fn brute_fat(values: &[Vec<f64>], gamma: f64, max_k: usize) -> usize {
    let pool = values[0].len();
    let mut best = 0;
    for mask in 1u32..1 << pool {
        let subset: Vec<usize> = (0..pool).filter(|j| mask >> j & 1 == 1).collect();
        if subset.len() > max_k || subset.len() <= best {
            continue;
        }
        let grids: Vec<Vec<f64>> = subset
            .iter()
            .map(|&j| {
                let mut v: Vec<f64> = values.iter().map(|h| h[j]).collect();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v.dedup();
                let mut g: Vec<f64> = v.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
                g.extend(v.iter().flat_map(|x| [x - gamma, x + gamma]));
                g
            })
            .collect();
        let k = subset.len();
        let mut idx = vec![0usize; k];
        'outer: loop {
            let alphas: Vec<f64> = idx.iter().zip(&grids).map(|(&i, g)| g[i]).collect();
            let mut seen = vec![false; 1 << k];
            for h in values {
                let mut code = 0usize;
                let mut ok = true;
                for (t, &j) in subset.iter().enumerate() {
                    if h[j] >= alphas[t] + gamma - 1e-12 {
                        code |= 1 << t;
                    } else if h[j] > alphas[t] - gamma + 1e-12 {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    seen[code] = true;
                }
            }
            if seen.iter().all(|&s| s) {
                best = k;
                break;
            }
            for t in 0..k {
                idx[t] += 1;
                if idx[t] < grids[t].len() {
                    continue 'outer;
                }
                idx[t] = 0;
            }
            break;
        }
    }
    best
}

#[test]
fn fat_estimate_matches_direct_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..60 {
        let hyps = rng.random_range(1..12);
        let pool = rng.random_range(1..5);
        let steps = rng.random_range(2..6);
        let values: Vec<Vec<f64>> = (0..hyps)
            .map(|_| (0..pool).map(|_| rng.random_range(0..=steps) as f64 / steps as f64).collect())
            .collect();
        let table = values.clone();
        let ms: Vec<Measurement> = (0..pool).map(|j| pauli(&["Z", "X", "Y", "-Z"][j])).collect();
        let lookup = ms.clone();
        let class = FunctionClass::new("table", hyps, move |h, m| {
            Ok(table[h][lookup.iter().position(|x| x == m).unwrap()])
        });
        for gamma in [0.05, 0.125, 0.2, 0.3] {
            assert_eq!(
                fat_shattering_estimate(&class, &ms, gamma, pool).unwrap(),
                brute_fat(&values, gamma, pool),
                "values {values:?} gamma {gamma}"
            );
        }
    }
}

#[test]
fn fat_properties_on_random_eom_classes() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let l = rng.random_range(2..=4);
        let model = random_table_model::<f64, _>(2, l, 5, rng.random_bool(0.5), &mut rng).unwrap();
        let pool = model.pool().unwrap().to_vec();
        let class = FunctionClass::preparation_grid(model, 8);
        let mut last = usize::MAX;
        for gamma in [0.02, 0.05, 0.1, 0.2, 0.3, 0.45] {
            let k = fat_shattering_estimate(&class, &pool, gamma, pool.len()).unwrap();
            assert!(k <= last);
            assert!(k <= pool.len());
            last = k;
        }
        let small = fat_shattering_estimate(&class, &pool[..3], 0.1, 3).unwrap();
        let big = fat_shattering_estimate(&class, &pool, 0.1, 5).unwrap();
        assert!(small <= big);
    }
}

#[test]
fn stabilizer_and_chain_classes() {
    let stab = FunctionClass::stabilizer(1).unwrap();
    assert_eq!(stab.size(), 6);
    let pool = [pauli("X"), pauli("Y"), pauli("Z")];
    // single Pauli expectations take values {0, ½, 1}
    assert_eq!(fat_shattering_estimate(&stab, &pool, 0.25, 3).unwrap(), brute_class(&stab, &pool, 0.25));
    assert_eq!(fat_shattering_estimate(&stab, &pool, 0.26, 3).unwrap(), 1);

    let chains = FunctionClass::chains(2, 2).unwrap();
    let pool = [pauli("ZI"), pauli("IZ"), pauli("XX")];
    let k = fat_shattering_estimate(&chains, &pool, 0.2, 3).unwrap();
    assert_eq!(k, brute_class(&chains, &pool, 0.2));
}

fn brute_class(class: &FunctionClass, pool: &[Measurement], gamma: f64) -> usize {
    let values: Vec<Vec<f64>> =
        (0..class.size()).map(|h| pool.iter().map(|m| class.eval(h, m).unwrap()).collect()).collect();
    brute_fat(&values, gamma, pool.len())
}

mod properties {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};

    fn sizes(p: &OccamParams) -> (u64, u64) {
        (occam_sample_bound(p).unwrap(), anthony_sample_bound(p, envelope_fat(p.n)).unwrap())
    }

    proptest! {
        #[test]
        fn bounds_move_the_right_way(
            n in 1usize..64,
            epsilon in 0.05f64..0.5,
            delta in 0.01f64..0.5,
            eta in 0.0f64..0.1,
            gap in 0.05f64..0.4,
            c in 0.5f64..3.0,
            k in 0.5f64..3.0,
        ) {
            let base = params(n, epsilon, delta, eta + gap, eta, c, k);
            let (o, a) = sizes(&base);
            let (o2, a2) = sizes(&OccamParams { delta: delta / 2.0, ..base.clone() });
            prop_assert!(o2 > o && a2 >= a);
            let (o2, a2) = sizes(&OccamParams { epsilon: epsilon / 2.0, ..base.clone() });
            prop_assert!(o2 >= o && a2 >= a);
            let (o2, a2) = sizes(&OccamParams { n: 2 * n, ..base.clone() });
            prop_assert!(o2 >= o && a2 >= a);
            let (o2, _) = sizes(&OccamParams { c: 2.0 * c, k: 2.0 * k, ..base.clone() });
            prop_assert!(o2 >= o);
            let (o2, a2) = sizes(&OccamParams { gamma: eta + 2.0 * gap, ..base });
            prop_assert!(o2 <= o && a2 <= a);
        }

        #[test]
        fn entropy_symmetry(p in 0.0f64..=1.0) {
            prop_assert!((binary_entropy(p) - binary_entropy(1.0 - p)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&binary_entropy(p)));
        }
    }
}
