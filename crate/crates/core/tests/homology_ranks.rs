//! Rank bookkeeping checked against direct tower counting and hand-worked
//! attachment histories.

mod common;

use reeb_bypass::chord_diagrams::parallel_diagram;
use reeb_bypass::homology_ranks::{
    after_bypass_ranks, attachment_identity, attachment_result, block_identity_check,
    c5_torus_ranks, parallel_torus_ranks, sigma_split, thickened_surface_ranks,
    validate_positions,
};
use reeb_bypass::Error;

use common::tower_counts;

fn ranks(report: &reeb_bypass::homology_ranks::RankReport) -> (usize, usize) {
    (report.n_plus.unwrap(), report.n_minus.unwrap())
}

/// All position lists valid for an initial parallel n-diagram: subsets of
/// 1..=n-3 with pairwise separation at least 3, enumerated directly.
fn valid_position_lists(n: usize) -> Vec<Vec<usize>> {
    fn extend(from: usize, limit: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for k in from..=limit {
            acc.push(k);
            out.push(acc.clone());
            extend(k + 3, limit, acc, out);
            acc.pop();
        }
    }
    let mut out = vec![Vec::new()];
    if n >= 4 {
        let mut acc = Vec::new();
        extend(1, n - 3, &mut acc, &mut out);
    }
    out
}

#[test]
fn parallel_ranks_follow_the_alternating_tower_count() {
    for n in 1..=10usize {
        let report = parallel_torus_ranks(n, 3).unwrap();
        let (p, m) = ranks(&report);
        let expect_p = (n - 1).div_ceil(2);
        assert_eq!((p, m), (expect_p, n - 1 - expect_p), "n={n}");
        assert_eq!(p + m, n - 1, "n={n} total");
        assert_eq!((p, m), tower_counts(n, &[]), "n={n} oracle");
    }
    assert!(parallel_torus_ranks(0, 3).is_err());
    assert!(parallel_torus_ranks(3, 0).is_err());
}

#[test]
fn census_formula_agrees_with_parallel_ranks() {
    for n in 1..=8usize {
        let d = parallel_diagram(n).unwrap();
        let from_census = c5_torus_ranks(&d, 2).unwrap();
        let from_count = parallel_torus_ranks(n, 2).unwrap();
        assert_eq!(ranks(&from_census), ranks(&from_count), "n={n}");
    }
    // three chords leave two surviving families, one of each orientation
    let three = c5_torus_ranks(&parallel_diagram(3).unwrap(), 1).unwrap();
    assert_eq!(ranks(&three), (1, 1));
    assert_eq!(three.total_primitives(), 2);
}

#[test]
fn census_formula_tracks_tower_removal_over_every_attachment_history() {
    for n in 1..=8usize {
        for positions in valid_position_lists(n) {
            let diagram = attachment_result(n, &positions).unwrap();
            assert_eq!(diagram.n, n - positions.len(), "chord count n={n} {positions:?}");
            let report = c5_torus_ranks(&diagram, 1).unwrap();
            assert_eq!(
                ranks(&report),
                tower_counts(n, &positions),
                "ranks after attaching at {positions:?} on parallel {n}"
            );
            let identity = attachment_identity(n, &positions).unwrap();
            assert!(
                identity.pass,
                "identity failed at {positions:?} on parallel {n}: {identity:?}"
            );
            assert_eq!(identity.margin_plus, 0, "{positions:?} on {n}");
            assert_eq!(identity.margin_minus, 0, "{positions:?} on {n}");
        }
    }
}

#[test]
fn the_fishbone_history_is_pinned_by_hand() {
    // parallel 4, one attachment at position 1: the middle chords band
    // together, every surviving component is boundary-parallel
    let diagram = attachment_result(4, &[1]).unwrap();
    assert_eq!(diagram.matching, vec![(0, 5), (1, 2), (3, 4)]);
    let report = c5_torus_ranks(&diagram, 1).unwrap();
    assert_eq!(ranks(&report), (2, 0));
    assert_eq!(tower_counts(4, &[1]), (2, 0));
    let (plus, minus) = sigma_split(&[1]);
    assert!(plus.is_empty());
    assert_eq!(minus, vec![1]);
    let identity = block_identity_check(&diagram, &plus, &minus).unwrap();
    assert!(identity.pass, "{identity:?}");
}

#[test]
fn misdeclared_histories_fail_the_identity() {
    // the diagram really came from an odd attachment; claiming an even one
    // of the same size must break the balance
    let diagram = attachment_result(7, &[1]).unwrap();
    let honest = block_identity_check(&diagram, &[], &[1]).unwrap();
    assert!(honest.pass, "{honest:?}");
    let dishonest = block_identity_check(&diagram, &[2], &[]).unwrap();
    assert!(!dishonest.pass, "{dishonest:?}");
    // parity screens reject mislabeled splits outright
    assert!(block_identity_check(&diagram, &[1], &[]).is_err());
    assert!(block_identity_check(&diagram, &[], &[2]).is_err());
}

#[test]
fn position_validation_enforces_range_and_separation() {
    assert_eq!(validate_positions(8, &[4, 1]).unwrap(), vec![1, 4]);
    assert!(matches!(
        validate_positions(8, &[0]),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        validate_positions(8, &[6]),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        validate_positions(8, &[1, 3]),
        Err(Error::Precondition(_))
    ));
    assert!(validate_positions(4, &[1]).is_ok());
    assert!(validate_positions(3, &[1]).is_err(), "no room below n=4");
}

#[test]
fn neighbourhood_reports_drop_exactly_one_tower_after_a_bypass() {
    let before = thickened_surface_ranks(4, 3).unwrap();
    let after = after_bypass_ranks(4, 3).unwrap();
    assert_eq!(before.classes.len(), 5);
    assert_eq!(after.classes.len(), 4);
    assert!(before.classes.iter().any(|c| c.class == "Gamma_0"));
    assert!(after.classes.iter().all(|c| c.class != "Gamma_0"));
    assert_eq!(before.total_primitives(), 5);
    assert_eq!(after.total_primitives(), 4);
    let parsed: serde_json::Value = serde_json::from_str(&before.to_json().unwrap()).unwrap();
    assert_eq!(parsed["provenance"], "invariant thickened surface");
}
