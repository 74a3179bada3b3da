mod common;

use common::{across_checks, around_checks, crossing_checks, distance_checks, Check};

fn assert_all(checks: Vec<Check>) {
    assert!(!checks.is_empty());
    for c in &checks {
        assert!(c.vertices <= 81, "{}: {} vertices", c.label, c.vertices);
        assert!(c.ok, "{}: {}", c.label, c.detail);
    }
}

#[test]
fn distance_matches_path_enumeration() {
    assert_all(distance_checks(11, 60));
}

#[test]
fn crossing_matches_path_enumeration() {
    assert_all(crossing_checks(12, 30));
}

#[test]
fn across_matches_path_enumeration() {
    assert_all(across_checks(13, 30));
}

#[test]
fn around_matches_cycle_enumeration() {
    assert_all(around_checks(14, 30));
}
