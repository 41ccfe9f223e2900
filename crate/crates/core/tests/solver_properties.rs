mod common;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use hjline::bruteforce::{find_mono_line_naive, Caps};
use hjline::certificate::{verify_certificate, verify_line, LineVerdict};
use hjline::oracle::{letter_vectors, make_oracle, ColourId, ColourOracle, ColourTable, OracleError};
use hjline::solver::{build_v, Side, Solver};
use hjline::word::extend_simple;
use hjline::{block_structure, find_line, with_memo_and_counting, CountingOracle, HjError, Mode, Word};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Well-mixed colouring used to exercise the solver beyond the builtin oracles.
struct MixOracle {
    r: u32,
    seed: u64,
}

impl ColourOracle for MixOracle {
    fn r(&self) -> u32 {
        self.r
    }
    fn spec(&self) -> &str {
        "mix"
    }
    fn colour(&mut self, word: &Word) -> Result<ColourId, OracleError> {
        let mut h = DefaultHasher::new();
        self.seed.hash(&mut h);
        word.hash(&mut h);
        let mut z = h.finish();
        // splitmix finaliser
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        Ok((z % self.r as u64) as ColourId)
    }
}

fn mix(r: u32, seed: u64) -> CountingOracle {
    with_memo_and_counting(Box::new(MixOracle { r, seed }))
}

#[test]
fn mixed_oracle_certificates_verify() {
    for mode in [Mode::Paper, Mode::Minimal] {
        let bs = block_structure(2, mode, None).unwrap();
        for seed in 0..50 {
            let mut oracle = mix(2, seed);
            let cert = find_line(&bs, &mut oracle, 0).unwrap();
            let mut replay = MixOracle { r: 2, seed };
            let report = verify_certificate(&cert, &mut replay);
            assert!(report.passed(), "{mode} seed {seed}\n{report}");
            assert!(cert.stats.unique <= if mode == Mode::Paper { 500 } else { 200 });
        }
    }
}

#[test]
fn mixed_oracle_r3_minimal() {
    let bs = block_structure(3, Mode::Minimal, None).unwrap();
    for seed in 0..4 {
        let mut oracle = CountingOracle::with_budget(Box::new(MixOracle { r: 3, seed }), 100_000_000);
        let cert = find_line(&bs, &mut oracle, 0).unwrap();
        let report = verify_certificate(&cert, &mut MixOracle { r: 3, seed });
        assert!(report.passed(), "seed {seed}\n{report}");
    }
}

/// After solve_level(j, w) the two-word property holds for every ℓ > j
/// relative to w, not just at the top level.
#[test]
fn conclusion_property_at_inner_levels() {
    let bs = block_structure(3, Mode::Minimal, None).unwrap();
    for spec in ["hash:3", "count", "hash:8"] {
        let mut oracle = with_memo_and_counting(make_oracle(spec, 3).unwrap());
        let mut check = make_oracle(spec, 3).unwrap();
        let mut solver = Solver::new(&bs, &mut oracle, 0).unwrap();
        for q in [0, 5, 1_000_000_000] {
            let w = extend_simple(&Word::empty(), q, bs.block_size(1)).unwrap();
            let out = solver.solve_level(1, &w).unwrap();
            for ell in 2..=3 {
                for letters in letter_vectors(3 - ell) {
                    let v1 = build_v(&bs, &w, &out.pair_table, ell, Side::First, &letters).unwrap();
                    let v2 = build_v(&bs, &w, &out.pair_table, ell, Side::Second, &letters).unwrap();
                    assert_eq!(check.colour(&v1).unwrap(), check.colour(&v2).unwrap(), "{spec} q={q} ℓ={ell}");
                }
            }
        }
    }
}

#[test]
fn solver_is_memoized_by_word() {
    let bs = block_structure(2, Mode::Paper, None).unwrap();
    let mut oracle = with_memo_and_counting(make_oracle("hash:2", 2).unwrap());
    let mut solver = Solver::new(&bs, &mut oracle, 0).unwrap();
    let first = solver.solve_level(0, &Word::empty()).unwrap();
    let before = solver.oracle().stats();
    let again = solver.solve_level(0, &Word::empty()).unwrap();
    assert_eq!(first, again);
    assert_eq!(solver.oracle().stats(), before);
}

#[test]
fn certificates_are_byte_identical_across_runs() {
    let bs = block_structure(3, Mode::Minimal, None).unwrap();
    let run = || {
        let mut o = with_memo_and_counting(make_oracle("hash:5", 3).unwrap());
        find_line(&bs, &mut o, 0).unwrap().to_json()
    };
    assert_eq!(run(), run());
}

#[test]
fn mutation_suite_on_r3_certificate() {
    let bs = block_structure(3, Mode::Minimal, None).unwrap();
    let run = common::run_and_verify(&bs, "hash:0").unwrap();
    assert!(run.report.passed());
    for m in common::mutations() {
        let mut cert = run.cert.clone();
        (m.apply)(&mut cert);
        let mut oracle = make_oracle("hash:0", 3).unwrap();
        let report = verify_certificate(&cert, oracle.as_mut());
        assert!(report.failed_ids().contains(&m.check), "{}: {:?}", m.name, report.failed_ids());
    }
}

#[test]
fn line_points_match_chain() {
    let bs = block_structure(2, Mode::Paper, None).unwrap();
    for seed in 0..20 {
        let spec = format!("hash:{seed}");
        let run = common::run_and_verify(&bs, &spec).unwrap();
        let cert = &run.cert;
        let (q1, q2) = cert.final_collision;
        let pairs = cert.pairs().unwrap();
        assert_eq!(cert.line.point(hjline::Symbol::One), hjline::solver::final_word(&bs, &pairs, q2).unwrap());
        assert_eq!(cert.line.point(hjline::Symbol::Three), hjline::solver::final_word(&bs, &pairs, q1).unwrap());
        assert_eq!(cert.line.point(hjline::Symbol::Two), cert.chain.last().unwrap().to);
        let conclusions = cert.chain.iter().filter(|s| s.ell.is_some()).count();
        assert_eq!(conclusions, q2 - q1);
    }
}

/// Solver lines checked against the brute-force path on small custom cubes.
#[test]
fn table_oracle_agrees_with_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let bs = block_structure(2, Mode::Custom, Some(&[5, 2])).unwrap();
    let caps = Caps::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut solved, mut no_collision) = (0, 0);
    for i in 0..60 {
        let colours = (0..3usize.pow(7)).map(|_| rng.gen_range(0..2)).collect();
        let table = ColourTable::new(3, 7, 2, colours).unwrap();
        let path = dir.path().join(format!("t{i}.txt"));
        table.write(&path).unwrap();
        let spec = format!("table:{}", path.display());
        let mut oracle = with_memo_and_counting(make_oracle(&spec, 2).unwrap());
        match find_line(&bs, &mut oracle, 0) {
            Ok(cert) => {
                solved += 1;
                let mut replay = make_oracle(&spec, 2).unwrap();
                assert!(verify_certificate(&cert, replay.as_mut()).passed());
                let pattern = common::line_to_pattern(&cert);
                let idx = pattern.point_indices();
                let brute_mono = idx.iter().all(|&k| table.colours[k] == table.colours[idx[0]]);
                let verdict = verify_line(&cert.line, replay.as_mut()).unwrap();
                assert_eq!(brute_mono, matches!(verdict, LineVerdict::Monochromatic(_)));
                assert!(brute_mono);
                assert!(find_mono_line_naive(&table, &caps).unwrap().is_some());
            }
            Err(HjError::NoCollision { .. }) => no_collision += 1,
            Err(e) => panic!("unexpected error {e}"),
        }
    }
    assert!(solved > 10, "solved {solved}, no collision {no_collision}");
}

#[test]
fn undersized_custom_mode_may_report_no_collision() {
    let bs = block_structure(2, Mode::Custom, Some(&[2, 2])).unwrap();
    let mut outcomes = (0, 0);
    for seed in 0..40 {
        let mut o = with_memo_and_counting(make_oracle(&format!("hash:{seed}"), 2).unwrap());
        match find_line(&bs, &mut o, 0) {
            Ok(cert) => {
                let mut replay = make_oracle(&cert.oracle, 2).unwrap();
                assert!(verify_certificate(&cert, replay.as_mut()).passed());
                outcomes.0 += 1;
            }
            Err(HjError::NoCollision { .. }) => outcomes.1 += 1,
            Err(e) => panic!("{e}"),
        }
    }
    assert_eq!(outcomes.0 + outcomes.1, 40);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn r2_hash_runs_verify(seed in any::<u64>(), minimal in any::<bool>()) {
        let mode = if minimal { Mode::Minimal } else { Mode::Paper };
        let bs = block_structure(2, mode, None).unwrap();
        let spec = format!("hash:{seed}");
        let run = common::run_and_verify(&bs, &spec).unwrap();
        prop_assert!(run.report.passed());
        let (_, bad) = common::conclusion_violations(&run.cert, &spec).unwrap();
        prop_assert_eq!(bad, 0);
    }
}
