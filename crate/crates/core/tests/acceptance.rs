//! Acceptance suite: one pass/fail line per criterion.

use nonexpansive::acceptance::{self, CRITERIA};

fn check(id: u32) {
    let start = std::time::Instant::now();
    let result = acceptance::run(id).expect("known criterion");
    println!("{result} ({:.2?})", start.elapsed());
    assert!(result.passed, "criterion {id} failed: {}", result.detail);
}

#[test]
fn criterion_01_banach_regime() {
    check(1);
}

#[test]
fn criterion_02_weakened_condition_regime() {
    check(2);
}

#[test]
fn criterion_03_boundary_nonexpansive_case() {
    check(3);
}

#[test]
fn criterion_04_fixed_point_beyond_picard() {
    check(4);
}

#[test]
fn criterion_05_monotonicity_of_residual() {
    check(5);
}

#[test]
fn criterion_06_minty_dominance() {
    check(6);
}

#[test]
fn criterion_07_kkm_covering_and_intersection() {
    check(7);
}

#[test]
fn criterion_08_invariant_ball_radius() {
    check(8);
}

#[test]
fn criterion_09_oracle_equivalence() {
    check(9);
}

#[test]
fn criterion_10_geometry_invariants() {
    check(10);
}

#[test]
fn every_criterion_has_a_test() {
    let ids: Vec<u32> = CRITERIA.iter().map(|c| c.0).collect();
    assert_eq!(ids, (1..=10).collect::<Vec<_>>());
}
