//! Closed-form generator counts for the surviving orbit families, and the
//! block identity tying a diagram census to its attachment history.
//!
//! Everything here is combinatorial: the surviving families all have
//! vanishing differential, so ranks are generator counts. No chain-level
//! linear algebra is performed.

use serde::Serialize;

use crate::chord_diagrams::{
    attach_bypass, check_c4_c5, parallel_diagram, region_census, ArcSpec, AttachOutcome,
    ChordDiagram, RegionCensus,
};
use crate::error::{Error, Result};

/// One homotopy-class family of generators. `degrees` lists the degree of
/// the level-l generators for l = 1..=cap; the families reported by this
/// module are even hyperbolic, so every level sits in degree 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassReport {
    pub class: String,
    pub primitive_count: usize,
    pub degrees: Vec<i64>,
}

/// Rank summary: per-class generator families plus the longitudinal totals
/// when the classes split by orientation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankReport {
    pub provenance: String,
    pub classes: Vec<ClassReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_plus: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_minus: Option<usize>,
}

impl RankReport {
    /// Total primitive generator count across all classes.
    pub fn total_primitives(&self) -> usize {
        self.classes.iter().map(|c| c.primitive_count).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn require_cap(cap: usize) -> Result<()> {
    if cap == 0 {
        return Err(Error::Parameter("multiples cap must be at least 1".into()));
    }
    Ok(())
}

/// Ranks for an invariant neighbourhood of a convex surface whose dividing
/// set has components Gamma_0..Gamma_n: one even hyperbolic family per
/// component, all multiples surviving.
pub fn thickened_surface_ranks(n: usize, cap: usize) -> Result<RankReport> {
    require_cap(cap)?;
    let classes = (0..=n)
        .map(|k| ClassReport {
            class: format!("Gamma_{k}"),
            primitive_count: 1,
            degrees: vec![0; cap],
        })
        .collect();
    Ok(RankReport {
        provenance: "invariant thickened surface".into(),
        classes,
        n_plus: None,
        n_minus: None,
    })
}

/// Ranks after one bypass attachment along an arc whose interior crosses
/// Gamma_0: the Gamma_0 tower disappears, everything else survives.
pub fn after_bypass_ranks(n: usize, cap: usize) -> Result<RankReport> {
    require_cap(cap)?;
    if n == 0 {
        return Err(Error::Parameter(
            "the attaching arc needs three distinct components, so n >= 1".into(),
        ));
    }
    let classes = (1..=n)
        .map(|k| ClassReport {
            class: format!("Gamma_{k}"),
            primitive_count: 1,
            degrees: vec![0; cap],
        })
        .collect();
    Ok(RankReport {
        provenance: "thickened surface after one bypass".into(),
        classes,
        n_plus: None,
        n_minus: None,
    })
}

fn longitude_report(provenance: &str, n_plus: usize, n_minus: usize, cap: usize) -> RankReport {
    let classes = vec![
        ClassReport {
            class: "longitude_plus".into(),
            primitive_count: n_plus,
            degrees: vec![0; cap],
        },
        ClassReport {
            class: "longitude_minus".into(),
            primitive_count: n_minus,
            degrees: vec![0; cap],
        },
    ];
    RankReport {
        provenance: provenance.into(),
        classes,
        n_plus: Some(n_plus),
        n_minus: Some(n_minus),
    }
}

/// Ranks for the solid torus whose meridian disc carries the parallel
/// n-chord diagram: n-1 even hyperbolic families, alternating orientation
/// starting positive.
pub fn parallel_torus_ranks(n: usize, cap: usize) -> Result<RankReport> {
    require_cap(cap)?;
    if n == 0 {
        return Err(Error::Parameter(
            "a meridian disc needs at least one dividing chord".into(),
        ));
    }
    let n_plus = n.saturating_sub(1).div_ceil(2);
    let n_minus = n - 1 - n_plus;
    Ok(longitude_report("parallel solid torus", n_plus, n_minus, cap))
}

fn census_with_marked_minus(d: &ChordDiagram) -> Result<RegionCensus> {
    let flipped = ChordDiagram::new(d.n, d.matching.clone(), -1)?;
    region_census(&flipped)
}

struct BigonCounts {
    plus: i64,
    minus: i64,
    plus_ext: i64,
    minus_ext: i64,
}

fn bigon_counts(census: &RegionCensus) -> BigonCounts {
    let mut counts = BigonCounts { plus: 0, minus: 0, plus_ext: 0, minus_ext: 0 };
    for region in census.regions.iter().filter(|r| r.is_bigon) {
        if region.sign > 0 {
            counts.plus += 1;
            if region.is_extremal {
                counts.plus_ext += 1;
            }
        } else {
            counts.minus += 1;
            if region.is_extremal {
                counts.minus_ext += 1;
            }
        }
    }
    counts
}

/// Longitudinal ranks read off a meridian-disc diagram through the census
/// formula: n_pm = chi(S_pm) + #{non-extremal bigons of the other sign}
/// - #{bigons of the same sign}. The census is evaluated with the marked
/// region negative regardless of the diagram's display sign.
pub fn c5_torus_ranks(d: &ChordDiagram, cap: usize) -> Result<RankReport> {
    require_cap(cap)?;
    let report = check_c4_c5(d)?;
    if !report.pass {
        return Err(Error::Precondition(format!(
            "the diagram fails the cut-pair conditions: {}",
            report.reason.unwrap_or_else(|| "no witness".into())
        )));
    }
    let census = census_with_marked_minus(d)?;
    let bigons = bigon_counts(&census);
    let n_plus = census.chi_plus + (bigons.minus - bigons.minus_ext) - bigons.plus;
    let n_minus = census.chi_minus + (bigons.plus - bigons.plus_ext) - bigons.minus;
    if n_plus < 0 || n_minus < 0 {
        return Err(Error::Certification(format!(
            "census formula produced a negative rank ({n_plus}, {n_minus})"
        )));
    }
    Ok(longitude_report(
        "meridian census formula",
        n_plus as usize,
        n_minus as usize,
        cap,
    ))
}

/// Validates an attachment position list against the initial parallel size
/// `n`: each position k must satisfy 1 <= k <= n-3 (the attaching arc spans
/// [(k-1)pi, (k+1)pi] and must stay inside the chart), positions must be
/// distinct, and consecutive positions must differ by at least 3 so the
/// arcs are disjoint and non-adjacent. Returns the positions sorted.
pub fn validate_positions(n: usize, positions: &[usize]) -> Result<Vec<usize>> {
    let mut sorted = positions.to_vec();
    sorted.sort_unstable();
    for &k in &sorted {
        if k < 1 || k + 3 > n {
            return Err(Error::Precondition(format!(
                "attachment position {k} outside the chart range 1..={} for a parallel \
                 {n}-chord diagram",
                n.saturating_sub(3)
            )));
        }
    }
    for w in sorted.windows(2) {
        if w[1] - w[0] < 3 {
            return Err(Error::Precondition(format!(
                "attachment positions {} and {} overlap: separation must be at least 3",
                w[0], w[1]
            )));
        }
    }
    Ok(sorted)
}

/// Splits attachment positions by parity: even positions feed the positive
/// longitude classes, odd positions the negative ones.
pub fn sigma_split(positions: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut plus: Vec<usize> = positions.iter().copied().filter(|k| k % 2 == 0).collect();
    let mut minus: Vec<usize> = positions.iter().copied().filter(|k| k % 2 == 1).collect();
    plus.sort_unstable();
    minus.sort_unstable();
    (plus, minus)
}

/// Applies the bypass attachments at the given positions to the parallel
/// n-chord diagram, banding the two chords across each position on the top
/// face. Attachments are performed in descending position order; with the
/// validity constraints the arcs are disjoint, so the order is immaterial.
pub fn attachment_result(n: usize, positions: &[usize]) -> Result<ChordDiagram> {
    let sorted = validate_positions(n, positions)?;
    let mut diagram = parallel_diagram(n)?;
    for &k in sorted.iter().rev() {
        let start = 2 * diagram.n - 2 - k;
        match attach_bypass(&diagram, ArcSpec { start })? {
            AttachOutcome::Attached { diagram: next, .. } => diagram = next,
            AttachOutcome::Rejected(r) => {
                return Err(Error::Certification(format!(
                    "attachment at position {k} was rejected ({r:?}) on a parallel diagram"
                )));
            }
        }
    }
    Ok(diagram)
}

/// Both sides of the block identity, evaluated at level l = 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockIdentity {
    pub pass: bool,
    pub lhs_plus: i64,
    pub rhs_plus: i64,
    pub lhs_minus: i64,
    pub rhs_minus: i64,
    pub margin_plus: i64,
    pub margin_minus: i64,
}

/// Checks the block identity
///
/// dim E_pm + #sigma_pm + #{pm extremal bigons} = chi(S_pm) + #sigma_mp
///
/// on the final diagram `d` of an attachment history with even positions
/// `sigma_plus` and odd positions `sigma_minus` on an initially parallel
/// diagram of size N = d.n + |sigma_plus| + |sigma_minus|. The surviving
/// block dimensions are dim E_plus = ceil((N-1)/2) - #sigma_plus and
/// dim E_minus = floor((N-1)/2) - #sigma_minus.
pub fn block_identity_check(
    d: &ChordDiagram,
    sigma_plus: &[usize],
    sigma_minus: &[usize],
) -> Result<BlockIdentity> {
    if sigma_plus.iter().any(|k| k % 2 != 0) {
        return Err(Error::Precondition(
            "sigma_plus must contain even positions only".into(),
        ));
    }
    if sigma_minus.iter().any(|k| k % 2 != 1) {
        return Err(Error::Precondition(
            "sigma_minus must contain odd positions only".into(),
        ));
    }
    let n_initial = d.n + sigma_plus.len() + sigma_minus.len();
    let mut all: Vec<usize> = sigma_plus.iter().chain(sigma_minus.iter()).copied().collect();
    all.sort_unstable();
    all.dedup();
    if all.len() != sigma_plus.len() + sigma_minus.len() {
        return Err(Error::Precondition("attachment positions must be distinct".into()));
    }
    validate_positions(n_initial, &all)?;

    let report = check_c4_c5(d)?;
    if !report.pass {
        return Err(Error::Precondition(format!(
            "the final diagram fails the cut-pair conditions: {}",
            report.reason.unwrap_or_else(|| "no witness".into())
        )));
    }
    let census = census_with_marked_minus(d)?;
    let bigons = bigon_counts(&census);

    let evens = (n_initial.saturating_sub(1)).div_ceil(2) as i64;
    let odds = (n_initial.saturating_sub(1)) as i64 - evens;
    let dim_plus = evens - sigma_plus.len() as i64;
    let dim_minus = odds - sigma_minus.len() as i64;

    let lhs_plus = dim_plus + sigma_plus.len() as i64 + bigons.plus_ext;
    let rhs_plus = census.chi_plus + sigma_minus.len() as i64;
    let lhs_minus = dim_minus + sigma_minus.len() as i64 + bigons.minus_ext;
    let rhs_minus = census.chi_minus + sigma_plus.len() as i64;
    Ok(BlockIdentity {
        pass: lhs_plus == rhs_plus && lhs_minus == rhs_minus,
        lhs_plus,
        rhs_plus,
        lhs_minus,
        rhs_minus,
        margin_plus: lhs_plus - rhs_plus,
        margin_minus: lhs_minus - rhs_minus,
    })
}

/// Convenience wrapper: performs the attachments and checks the identity
/// in one call.
pub fn attachment_identity(n: usize, positions: &[usize]) -> Result<BlockIdentity> {
    let diagram = attachment_result(n, positions)?;
    let (plus, minus) = sigma_split(positions);
    block_identity_check(&diagram, &plus, &minus)
}
