//! Chord diagrams on the disc: non-crossing perfect matchings of labeled
//! boundary points, the bypass annihilation move, region censuses with signs,
//! and the cut-pair conditions feeding the torus rank formulas.
//!
//! Boundary points are labeled 0..2n-1 counterclockwise. Gap `i` is the
//! boundary interval between points `i` and `i+1` (mod 2n); gap `2n-1` is the
//! marked interval and `base_sign` is the sign of the region containing it.
//! Diagrams are classified relative to the labeled boundary, so rotated
//! diagrams are distinct.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Non-crossing perfect matching of 2n labeled boundary points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChordDiagram {
    /// Number of chords.
    pub n: usize,
    /// Chord endpoints as pairs (a, b) with a < b, sorted by first endpoint.
    pub matching: Vec<(usize, usize)>,
    /// Sign of the region containing the marked gap; +1 or -1.
    pub base_sign: i8,
}

impl ChordDiagram {
    /// Builds a diagram from an arbitrary endpoint pairing, canonicalizing
    /// the pair order before validation.
    pub fn new(n: usize, matching: Vec<(usize, usize)>, base_sign: i8) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = matching
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        pairs.sort_unstable();
        let d = ChordDiagram {
            n,
            matching: pairs,
            base_sign,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ChordDiagram = serde_json::from_str(text)?;
        ChordDiagram::new(raw.n, raw.matching, raw.base_sign)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks canonical order, full point coverage, the non-crossing
    /// condition, and the base sign.
    pub fn validate(&self) -> Result<()> {
        if self.base_sign != 1 && self.base_sign != -1 {
            return Err(Error::Format(format!(
                "base_sign must be +1 or -1, got {}",
                self.base_sign
            )));
        }
        if self.matching.len() != self.n {
            return Err(Error::Format(format!(
                "expected {} chords, found {}",
                self.n,
                self.matching.len()
            )));
        }
        let m = 2 * self.n;
        let mut seen = vec![false; m];
        for &(a, b) in &self.matching {
            if a >= b {
                return Err(Error::Format(format!("chord ({a}, {b}) not in canonical order")));
            }
            if b >= m {
                return Err(Error::Format(format!("point {b} out of range for {m} points")));
            }
            for x in [a, b] {
                if seen[x] {
                    return Err(Error::Format(format!("point {x} appears in two chords")));
                }
                seen[x] = true;
            }
        }
        if self.matching.windows(2).any(|w| w[0].0 > w[1].0) {
            return Err(Error::Format("chords not sorted by first endpoint".into()));
        }
        for (i, &(a, b)) in self.matching.iter().enumerate() {
            for &(c, d) in &self.matching[i + 1..] {
                if a < c && c < b && b < d {
                    return Err(Error::Format(format!(
                        "chords ({a}, {b}) and ({c}, {d}) cross"
                    )));
                }
            }
        }
        Ok(())
    }

    /// partner[i] is the point matched with point i. Assumes a valid diagram.
    pub fn partners(&self) -> Vec<usize> {
        let mut pt = vec![0usize; 2 * self.n];
        for &(a, b) in &self.matching {
            pt[a] = b;
            pt[b] = a;
        }
        pt
    }

    /// chord_of[i] is the index into `matching` of the chord containing
    /// point i. Assumes a valid diagram.
    pub fn chord_of(&self) -> Vec<usize> {
        let mut owner = vec![0usize; 2 * self.n];
        for (k, &(a, b)) in self.matching.iter().enumerate() {
            owner[a] = k;
            owner[b] = k;
        }
        owner
    }
}

/// Nested diagram with chords (i, 2n-1-i): 2n parallel longitudinal dividing
/// curves on the solid torus, cut open along a meridian.
pub fn parallel_diagram(n: usize) -> Result<ChordDiagram> {
    if n == 0 {
        return Err(Error::Parameter("parallel diagram needs n >= 1".into()));
    }
    let matching = (0..n).map(|i| (i, 2 * n - 1 - i)).collect();
    ChordDiagram::new(n, matching, 1)
}

/// All non-crossing perfect matchings of 2n labeled points, in a fixed
/// deterministic order; the count is the n-th Catalan number.
pub fn enumerate_diagrams(n: usize) -> Result<Vec<ChordDiagram>> {
    if !(1..=10).contains(&n) {
        return Err(Error::Parameter(format!("diagram size n={n} outside 1..=10")));
    }
    fn matchings(points: &[usize]) -> Vec<Vec<(usize, usize)>> {
        if points.is_empty() {
            return vec![Vec::new()];
        }
        let a = points[0];
        let mut out = Vec::new();
        for k in 0..points.len() / 2 {
            // the first point pairs at an odd offset so both sides stay even
            let b = points[2 * k + 1];
            let inner = matchings(&points[1..2 * k + 1]);
            let outer = matchings(&points[2 * k + 2..]);
            for mi in &inner {
                for mo in &outer {
                    let mut m = vec![(a, b)];
                    m.extend_from_slice(mi);
                    m.extend_from_slice(mo);
                    out.push(m);
                }
            }
        }
        out
    }
    let points: Vec<usize> = (0..2 * n).collect();
    matchings(&points)
        .into_iter()
        .map(|m| ChordDiagram::new(n, m, 1))
        .collect()
}

/// The attaching arc: a boundary interval covering the three consecutive
/// points start, start+1, start+2 (mod 2n), so it meets the dividing set in
/// exactly three points, with its ends on the chords at start and start+2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcSpec {
    pub start: usize,
}

/// Degenerate attachments: a move that undoes itself, or one that closes a
/// dividing curve into a contractible loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rejection {
    Trivial,
    Overtwisted,
}

/// Result of a bypass attachment: the reduced diagram together with the
/// boundary dividing-curve counts, or a flagged rejection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AttachOutcome {
    Attached {
        diagram: ChordDiagram,
        boundary_before: usize,
        boundary_after: usize,
    },
    Rejected(Rejection),
}

/// Performs the annihilation move along `arc`: the two chords ending at the
/// arc's slots are glued into one, the chord at the far slot is rerouted to
/// the near end, and the two consumed points are deleted.
pub fn attach_bypass(d: &ChordDiagram, arc: ArcSpec) -> Result<AttachOutcome> {
    d.validate()?;
    let m = 2 * d.n;
    if m == 0 {
        return Err(Error::Parameter("cannot attach to an empty diagram".into()));
    }
    if arc.start >= m {
        return Err(Error::Parameter(format!(
            "arc start {} out of range for {m} points",
            arc.start
        )));
    }
    let pt = d.partners();
    let p = arc.start;
    let r = (p + 1) % m;
    let q = (p + 2) % m;
    if pt[p] == r {
        // the arc's end chord is also its interior chord: gluing closes the
        // curve into a contractible dividing component
        return Ok(AttachOutcome::Rejected(Rejection::Overtwisted));
    }
    if pt[p] == q {
        // both arc ends on one chord: the move reproduces the diagram
        return Ok(AttachOutcome::Rejected(Rejection::Trivial));
    }
    let a = pt[p];
    let b = pt[r];
    let mut joined: Vec<(usize, usize)> = Vec::with_capacity(d.n - 1);
    if b == q {
        // the interior chord ends the arc: it is consumed whole and the
        // chord at p survives unchanged
        let drop = (r.min(q), r.max(q));
        joined.extend(d.matching.iter().copied().filter(|&c| c != drop));
    } else {
        let c = pt[q];
        for &(x, y) in &d.matching {
            if [x, y].iter().any(|&e| e == p || e == r || e == q) {
                continue;
            }
            joined.push((x, y));
        }
        joined.push((a.min(b), a.max(b)));
        joined.push((p.min(c), p.max(c)));
    }
    // delete points r and q and close the gaps in the labeling
    let shift = |x: usize| x - [r, q].iter().filter(|&&t| t < x).count();
    let relabeled: Vec<(usize, usize)> = joined
        .iter()
        .map(|&(x, y)| (shift(x), shift(y)))
        .collect();
    let diagram = ChordDiagram::new(d.n - 1, relabeled, d.base_sign).map_err(|e| {
        Error::Certification(format!("bypass attachment produced an invalid diagram: {e}"))
    })?;
    Ok(AttachOutcome::Attached {
        diagram,
        boundary_before: 2 * d.n,
        boundary_after: 2 * (d.n - 1),
    })
}

/// Finds the attaching arc joining two chords given by their indices into
/// `matching`: the lowest pair of consecutive boundary points owned by
/// exactly those two chords.
pub fn arc_spanning_chords(d: &ChordDiagram, i: usize, j: usize) -> Result<ArcSpec> {
    d.validate()?;
    if i == j || i >= d.n || j >= d.n {
        return Err(Error::Parameter(format!(
            "chord indices ({i}, {j}) invalid for a diagram with {} chords",
            d.n
        )));
    }
    let owner = d.chord_of();
    let m = 2 * d.n;
    for p in 0..m {
        let pair = [owner[p], owner[(p + 1) % m]];
        if pair == [i, j] || pair == [j, i] {
            return Ok(ArcSpec { start: p });
        }
    }
    Err(Error::Parameter(format!(
        "chords {i} and {j} have no adjacent endpoints"
    )))
}

/// One complementary region of the chords in the disc.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub sign: i8,
    /// Boundary gaps belonging to the region.
    pub gaps: Vec<usize>,
    /// Indices of the chords bounding the region.
    pub chords: Vec<usize>,
    pub is_bigon: bool,
    pub is_extremal: bool,
}

/// Signed region decomposition of the disc cut along all chords.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCensus {
    pub regions: Vec<Region>,
    pub chi_plus: i64,
    pub chi_minus: i64,
}

struct RawRegions {
    gaps: Vec<Vec<usize>>,
    chords: Vec<Vec<usize>>,
    signs: Vec<i8>,
    region_of_gap: Vec<usize>,
}

/// Two gaps lie in the same region exactly when the same set of chords
/// separates each from the marked gap; crossing one chord flips the sign.
fn raw_regions(d: &ChordDiagram) -> RawRegions {
    let m = 2 * d.n;
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for g in 0..m {
        let key: Vec<usize> = d
            .matching
            .iter()
            .enumerate()
            .filter(|&(_, &(a, b))| a <= g && g < b)
            .map(|(k, _)| k)
            .collect();
        groups.entry(key).or_default().push(g);
    }
    let mut items: Vec<(Vec<usize>, Vec<usize>)> = groups.into_iter().collect();
    items.sort_by_key(|(key, gaps)| (key.len(), gaps[0]));
    let mut region_of_gap = vec![0usize; m];
    for (rid, (_, gaps)) in items.iter().enumerate() {
        for &g in gaps {
            region_of_gap[g] = rid;
        }
    }
    let signs: Vec<i8> = items
        .iter()
        .map(|(key, _)| {
            if key.len() % 2 == 0 {
                d.base_sign
            } else {
                -d.base_sign
            }
        })
        .collect();
    // a chord borders the region just inside its first endpoint and the one
    // just outside its second endpoint
    let mut chords: Vec<Vec<usize>> = vec![Vec::new(); items.len()];
    for (cid, &(a, b)) in d.matching.iter().enumerate() {
        chords[region_of_gap[a]].push(cid);
        chords[region_of_gap[b]].push(cid);
    }
    RawRegions {
        gaps: items.iter().map(|(_, gaps)| gaps.clone()).collect(),
        chords,
        signs,
        region_of_gap,
    }
}

/// Cutting the boundary at two bigon gaps splits it into the intervals I1
/// and I2; the interval chords must be pairwise separated by the chords
/// crossing the cut, or two dividing components share a complementary region.
fn cut_pair_violation(d: &ChordDiagram, g1: usize, g2: usize) -> Option<String> {
    let m = 2 * d.n;
    let pos = |x: usize| (x + m - (g1 + 1)) % m;
    let split = g2 - g1;
    let mut interval: Vec<((usize, usize), (usize, usize))> = Vec::new();
    let mut crossing: Vec<(usize, usize)> = Vec::new();
    for &(a, b) in &d.matching {
        let (pa, pb) = (pos(a), pos(b));
        let span = (pa.min(pb), pa.max(pb));
        if (pa < split) == (pb < split) {
            interval.push((span, (a, b)));
        } else {
            crossing.push(span);
        }
    }
    for (i, &((a, b), orig1)) in interval.iter().enumerate() {
        for &((c, e), orig2) in &interval[i + 1..] {
            let separated = crossing
                .iter()
                .any(|&(u, v)| (u < a && b < v) != (u < c && e < v));
            if !separated {
                return Some(format!(
                    "chords ({}, {}) and ({}, {}) share a complementary region",
                    orig1.0, orig1.1, orig2.0, orig2.1
                ));
            }
        }
    }
    None
}

/// A cut certified by `check_c4_c5`: two bigon gaps and the boundary-point
/// intervals they separate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutWitness {
    pub gaps: (usize, usize),
    pub i1: Vec<usize>,
    pub i2: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct C4C5Report {
    pub pass: bool,
    pub witness: Option<CutWitness>,
    pub reason: Option<String>,
}

/// Searches for a boundary cut through two bigons such that every
/// complementary region of the cut annulus contains exactly one dividing
/// component. Scans bigon-gap pairs in lexicographic order and returns the
/// first witness.
pub fn check_c4_c5(d: &ChordDiagram) -> Result<C4C5Report> {
    d.validate()?;
    if d.n == 0 {
        return Err(Error::Parameter("empty diagram".into()));
    }
    let raw = raw_regions(d);
    let m = 2 * d.n;
    let bigon_gaps: Vec<usize> = (0..m)
        .filter(|&g| raw.chords[raw.region_of_gap[g]].len() == 1)
        .collect();
    if bigon_gaps.len() < 2 {
        return Ok(C4C5Report {
            pass: false,
            witness: None,
            reason: Some("fewer than two bigon gaps to cut through".into()),
        });
    }
    let mut first_fail: Option<String> = None;
    for (k, &g1) in bigon_gaps.iter().enumerate() {
        for &g2 in &bigon_gaps[k + 1..] {
            match cut_pair_violation(d, g1, g2) {
                None => {
                    let i1: Vec<usize> = (g1 + 1..=g2).collect();
                    let i2: Vec<usize> = (g2 + 1..m).chain(0..=g1).collect();
                    return Ok(C4C5Report {
                        pass: true,
                        witness: Some(CutWitness { gaps: (g1, g2), i1, i2 }),
                        reason: None,
                    });
                }
                Some(why) => {
                    first_fail.get_or_insert(format!("cut ({g1}, {g2}): {why}"));
                }
            }
        }
    }
    let detail = first_fail.expect("at least one pair was scanned");
    Ok(C4C5Report {
        pass: false,
        witness: None,
        reason: Some(format!(
            "no bigon cut pair separates the dividing components; first failure: {detail}"
        )),
    })
}

/// Region decomposition with signs, bigon flags, and extremal flags taken
/// from the first cut witness when one exists.
pub fn region_census(d: &ChordDiagram) -> Result<RegionCensus> {
    d.validate()?;
    if d.n == 0 {
        return Err(Error::Parameter("empty diagram".into()));
    }
    let raw = raw_regions(d);
    let report = check_c4_c5(d)?;
    let extremal: Vec<usize> = report
        .witness
        .map(|w| vec![raw.region_of_gap[w.gaps.0], raw.region_of_gap[w.gaps.1]])
        .unwrap_or_default();
    let mut regions = Vec::with_capacity(raw.signs.len());
    let (mut chi_plus, mut chi_minus) = (0i64, 0i64);
    for rid in 0..raw.signs.len() {
        if raw.signs[rid] > 0 {
            chi_plus += 1;
        } else {
            chi_minus += 1;
        }
        regions.push(Region {
            sign: raw.signs[rid],
            gaps: raw.gaps[rid].clone(),
            chords: raw.chords[rid].clone(),
            is_bigon: raw.chords[rid].len() == 1,
            is_extremal: extremal.contains(&rid),
        });
    }
    Ok(RegionCensus {
        regions,
        chi_plus,
        chi_minus,
    })
}

/// Relabels boundary points so that `gap` becomes the marked gap, carrying
/// the region signs along: the new base sign is the sign of the region that
/// contained `gap` before relabeling.
pub fn with_marked_gap(d: &ChordDiagram, gap: usize) -> Result<ChordDiagram> {
    d.validate()?;
    let m = 2 * d.n;
    if gap >= m {
        return Err(Error::Parameter(format!(
            "gap {gap} out of range for {m} points"
        )));
    }
    let raw = raw_regions(d);
    let new_sign = raw.signs[raw.region_of_gap[gap]];
    let rot = (gap + 1) % m;
    let matching = d
        .matching
        .iter()
        .map(|&(a, b)| ((a + m - rot) % m, (b + m - rot) % m))
        .collect();
    ChordDiagram::new(d.n, matching, new_sign)
}
