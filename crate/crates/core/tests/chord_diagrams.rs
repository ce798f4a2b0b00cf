//! Diagram enumeration, attachment moves, and region censuses checked
//! against brute-force matching enumeration and direct combinatorics.

mod common;

use std::collections::BTreeSet;

use reeb_bypass::chord_diagrams::{
    arc_spanning_chords, attach_bypass, enumerate_diagrams, parallel_diagram, region_census,
    with_marked_gap, ArcSpec, AttachOutcome, ChordDiagram, Rejection,
};

use common::{bigon_count_direct, catalan, noncrossing_matchings_bruteforce};

#[test]
fn diagram_counts_follow_the_catalan_numbers() {
    for n in 1..=8usize {
        let diagrams = enumerate_diagrams(n).unwrap();
        assert_eq!(diagrams.len(), catalan(n), "count at n={n}");
        let distinct: BTreeSet<Vec<(usize, usize)>> =
            diagrams.iter().map(|d| d.matching.clone()).collect();
        assert_eq!(distinct.len(), diagrams.len(), "duplicates at n={n}");
    }
    assert!(enumerate_diagrams(0).is_err());
    assert!(enumerate_diagrams(11).is_err());
}

#[test]
fn enumeration_agrees_with_filtered_perfect_matchings() {
    // the oracle enumerates all (2n-1)!! matchings and filters; feasible n<=5
    for n in 1..=5usize {
        let got: BTreeSet<Vec<(usize, usize)>> = enumerate_diagrams(n)
            .unwrap()
            .into_iter()
            .map(|d| d.matching)
            .collect();
        let expected: BTreeSet<Vec<(usize, usize)>> =
            noncrossing_matchings_bruteforce(n).into_iter().collect();
        assert_eq!(got, expected, "matching sets differ at n={n}");
    }
}

#[test]
fn diagrams_validate_and_round_trip_through_json() {
    for n in 1..=4usize {
        for d in enumerate_diagrams(n).unwrap() {
            d.validate().unwrap();
            let back = ChordDiagram::from_json(&d.to_json().unwrap()).unwrap();
            assert_eq!(back.n, d.n);
            assert_eq!(back.matching, d.matching);
            assert_eq!(back.base_sign, d.base_sign);
        }
    }
}

#[test]
fn census_bigons_are_chords_with_adjacent_endpoints() {
    // one chord alone bounds a bigon on both sides
    let single = parallel_diagram(1).unwrap();
    let census = region_census(&single).unwrap();
    assert_eq!(census.regions.iter().filter(|r| r.is_bigon).count(), 2);

    for n in 2..=5usize {
        for d in enumerate_diagrams(n).unwrap() {
            let census = region_census(&d).unwrap();
            let bigons = census.regions.iter().filter(|r| r.is_bigon).count();
            assert_eq!(
                bigons,
                bigon_count_direct(n, &d.matching),
                "bigons of {:?}",
                d.matching
            );
            // n chords cut the disc into n + 1 regions, all of them discs
            assert_eq!(
                census.chi_plus + census.chi_minus,
                (n + 1) as i64,
                "region count of {:?}",
                d.matching
            );
        }
    }
}

#[test]
fn parallel_census_alternates_signs_from_the_marked_gap() {
    for n in 1..=8usize {
        let d = parallel_diagram(n).unwrap();
        let census = region_census(&d).unwrap();
        assert_eq!(census.chi_plus, ((n + 1) as i64 + 1) / 2, "n={n} plus");
        assert_eq!(census.chi_minus, ((n + 1) as i64) / 2, "n={n} minus");
    }
}

#[test]
fn remarking_a_gap_rotates_labels_but_keeps_every_region_sign() {
    // moving the mark is a rotation of the disc: totals must not move
    for n in 1..=6usize {
        let d = parallel_diagram(n).unwrap();
        let census = region_census(&d).unwrap();
        for gap in 0..2 * n {
            let remarked = with_marked_gap(&d, gap).unwrap();
            let census_r = region_census(&remarked).unwrap();
            assert_eq!(census_r.chi_plus, census.chi_plus, "n={n} gap {gap}");
            assert_eq!(census_r.chi_minus, census.chi_minus, "n={n} gap {gap}");
        }
    }
    // one case by hand: marking the first nested gap of the two-chord
    // nest rotates it into the side-by-side diagram with a negative base
    let d = parallel_diagram(2).unwrap();
    let remarked = with_marked_gap(&d, 0).unwrap();
    assert_eq!(remarked.matching, vec![(0, 1), (2, 3)]);
    assert_eq!(remarked.base_sign, -1);
}

#[test]
fn attaching_along_the_innermost_arc_peels_parallel_diagrams() {
    for n in (2..=10usize).rev() {
        let d = parallel_diagram(n).unwrap();
        let arc = arc_spanning_chords(&d, n - 2, n - 1).unwrap();
        assert_eq!(arc.start, n - 2, "arc position at n={n}");
        match attach_bypass(&d, arc).unwrap() {
            AttachOutcome::Attached {
                diagram,
                boundary_before,
                boundary_after,
            } => {
                let expected = parallel_diagram(n - 1).unwrap();
                assert_eq!(diagram.matching, expected.matching, "reduction at n={n}");
                assert_eq!(diagram.n, n - 1);
                assert_eq!(boundary_before, 2 * n, "boundary before at n={n}");
                assert_eq!(boundary_after, 2 * (n - 1), "boundary after at n={n}");
            }
            other => panic!("attachment at n={n} was refused: {other:?}"),
        }
    }
    // the last chord cannot be removed without closing a contractible curve
    let d = parallel_diagram(1).unwrap();
    for start in 0..2 {
        assert_eq!(
            attach_bypass(&d, ArcSpec { start }).unwrap(),
            AttachOutcome::Rejected(Rejection::Overtwisted),
            "start {start}"
        );
    }
}

#[test]
fn every_arc_on_small_diagrams_attaches_or_is_overtwisted() {
    for n in 2..=4usize {
        let smaller: BTreeSet<Vec<(usize, usize)>> =
            noncrossing_matchings_bruteforce(n - 1).into_iter().collect();
        for d in enumerate_diagrams(n).unwrap() {
            // partner table rebuilt directly from the matching
            let m = 2 * n;
            let mut pt = vec![0usize; m];
            for &(a, b) in &d.matching {
                pt[a] = b;
                pt[b] = a;
            }
            for start in 0..m {
                let outcome = attach_bypass(&d, ArcSpec { start }).unwrap();
                if pt[start] == (start + 1) % m {
                    assert_eq!(
                        outcome,
                        AttachOutcome::Rejected(Rejection::Overtwisted),
                        "{:?} start {start}",
                        d.matching
                    );
                    continue;
                }
                match outcome {
                    AttachOutcome::Attached {
                        diagram,
                        boundary_before,
                        boundary_after,
                    } => {
                        assert_eq!(boundary_before, 2 * n);
                        assert_eq!(boundary_after, 2 * (n - 1));
                        assert!(
                            smaller.contains(&diagram.matching),
                            "{:?} start {start} produced a crossing diagram {:?}",
                            d.matching,
                            diagram.matching
                        );
                        // chords not touching the arc survive, relabeled past
                        // the two deleted points
                        let r = (start + 1) % m;
                        let q = (start + 2) % m;
                        let shift =
                            |x: usize| x - [r, q].iter().filter(|&&t| t < x).count();
                        for &(a, b) in &d.matching {
                            if [a, b].iter().any(|&e| e == start || e == r || e == q) {
                                continue;
                            }
                            let carried = (shift(a).min(shift(b)), shift(a).max(shift(b)));
                            assert!(
                                diagram.matching.contains(&carried),
                                "{:?} start {start} lost chord ({a}, {b})",
                                d.matching
                            );
                        }
                    }
                    AttachOutcome::Rejected(r) => {
                        panic!("{:?} start {start} rejected as {r:?}", d.matching)
                    }
                }
            }
        }
    }
}

#[test]
fn arc_lookups_reject_nonsense() {
    let d = parallel_diagram(3).unwrap();
    assert!(arc_spanning_chords(&d, 0, 0).is_err(), "equal chords");
    assert!(arc_spanning_chords(&d, 0, 3).is_err(), "chord out of range");
    // chords 0 and 2 are separated by chord 1 everywhere on the boundary
    assert!(arc_spanning_chords(&d, 0, 2).is_err(), "non-adjacent chords");
    assert!(
        attach_bypass(&d, ArcSpec { start: 6 }).is_err(),
        "arc start out of range"
    );
    assert!(
        ChordDiagram::new(2, vec![(0, 2), (1, 3)], 1).is_err(),
        "crossing matching"
    );
    assert!(
        ChordDiagram::new(2, vec![(0, 1), (2, 3)], 0).is_err(),
        "sign must be +1 or -1"
    );
}
