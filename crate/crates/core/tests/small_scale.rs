mod common;

use std::collections::BTreeSet;

use semiclass::classify::{classify, ClassifyConfig};
use semiclass::equivalence::{brute_force_matrix_equiv, matrix_code_equivalent};
use semiclass::CodeParams;

use common::{code_of, enumerate_spread_sets, key_of, orbits};

fn check(q: u32, n: usize, s: u32, expected_classes: usize) {
    let params = CodeParams::new(q, n, s).unwrap();
    let en = enumerate_spread_sets(&params);
    let orbit = orbits(&params, &en);
    let n_orbits = orbit.iter().copied().max().map_or(0, |m| m + 1);
    assert_eq!(n_orbits, expected_classes);

    let state = classify(q, n, s, ClassifyConfig::default()).unwrap();
    let reps = state.representatives().unwrap();
    assert_eq!(reps.len(), n_orbits);

    // one representative per orbit
    let rep_orbits: BTreeSet<usize> = reps.iter().map(|r| orbit[en.index[&key_of(&r.code)]]).collect();
    assert_eq!(rep_orbits.len(), n_orbits);

    // the brute-force decider agrees with orbit membership
    for (i, elems) in en.spaces.iter().enumerate().step_by((en.spaces.len() / 40).max(1)) {
        let c = code_of(&params, elems);
        for r in &reps {
            let same = orbit[i] == orbit[en.index[&key_of(&r.code)]];
            assert_eq!(brute_force_matrix_equiv(&c, &r.code).unwrap(), same);
            assert_eq!(matrix_code_equivalent(&c, &r.code).unwrap().is_some(), same);
        }
    }
}

#[test]
fn classes_at_2_2_1_match_orbits() {
    check(2, 2, 1, 1);
}

#[test]
fn classes_at_2_2_2_match_orbits() {
    check(2, 2, 2, 2);
}

#[test]
fn every_enumerated_space_is_a_spread_set() {
    let params = CodeParams::new(2, 2, 2).unwrap();
    let en = enumerate_spread_sets(&params);
    assert!(!en.spaces.is_empty());
    for elems in &en.spaces {
        let c = code_of(&params, elems);
        assert_eq!(c.dim(), 4);
        assert!(c.is_semifield_code());
    }
}
