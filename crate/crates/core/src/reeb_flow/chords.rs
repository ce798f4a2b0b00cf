//! Reeb chord search along dividing-set arcs on the boundary surface.
//!
//! Chords are found by shooting: grid points on the arc are flowed forward
//! until they either return to the boundary surface (upward crossing of
//! y = y_s), leave the chart, or run out of time. Returns that land back on
//! an arc piece, at the right z modulo the period, are polished by
//! bracketed root finding in the start parameter.

use super::{first_return, FlowSettings, ReturnOutcome, Section, SectionPlane};
use crate::model_geometry::{ChartPoint, ContactModel};
use crate::{Error, Result};
use rayon::prelude::*;
use serde_json::json;
use std::f64::consts::TAU;

/// One straight piece of a dividing-set arc on the surface y = y_s, at a
/// fixed z level. `letter` names the chord family ending on this piece.
#[derive(Clone, Copy, Debug)]
pub struct ArcPiece {
    pub x_lo: f64,
    pub x_hi: f64,
    pub z: f64,
    pub letter: char,
}

/// An arc configuration: one or more pieces, with an optional exclusion
/// radius around x = 0 (the tangency locus) for starts.
#[derive(Clone, Debug)]
pub struct SurfaceArc {
    pub pieces: Vec<ArcPiece>,
    pub exclusion_radius: Option<f64>,
}

/// The boundary arc of the three-component configuration: a single piece
/// crossing the full chart at z = 0.
pub fn three_component_arc(model: &ContactModel) -> SurfaceArc {
    SurfaceArc {
        pieces: vec![ArcPiece {
            x_lo: model.chart.x_min,
            x_hi: model.chart.x_max,
            z: 0.0,
            letter: 'c',
        }],
        exclusion_radius: None,
    }
}

fn two_component(model: &ContactModel, z1: f64) -> SurfaceArc {
    SurfaceArc {
        pieces: vec![
            ArcPiece {
                x_lo: model.chart.x_min,
                x_hi: model.chart.x_max,
                z: 0.0,
                letter: 'c',
            },
            ArcPiece {
                x_lo: 0.0,
                x_hi: model.chart.x_max,
                z: z1,
                letter: 'd',
            },
        ],
        exclusion_radius: None,
    }
}

/// Two-component configuration with the second component inside the closed
/// z-window (trivial bypass): default z1 = 0.05.
pub fn trivial_bypass_arc(model: &ContactModel, z1: Option<f64>) -> SurfaceArc {
    two_component(model, z1.unwrap_or(0.05))
}

/// Two-component configuration with the second component beyond the window
/// (overtwisted bypass): default z1 = pi.
pub fn overtwisted_arc(model: &ContactModel, z1: Option<f64>) -> SurfaceArc {
    two_component(model, z1.unwrap_or(std::f64::consts::PI))
}

/// A Reeb chord between arc points. `start` is the inward endpoint, `end`
/// the outward one (z stored as the real lift at the landing);
/// `transversality_margin` is the sine of the angle between the flowed arc
/// and the target arc at the endpoint.
#[derive(Clone, Debug)]
pub struct TransverseChord {
    pub label: String,
    pub start: ChartPoint,
    pub end: ChartPoint,
    pub period: f64,
    pub winding: i32,
    pub transversality_margin: f64,
}

/// Result of a chord search, with the grid-doubling audit trail.
#[derive(Clone, Debug)]
pub struct ChordSearch {
    pub chords: Vec<TransverseChord>,
    pub grid_used: usize,
    pub stabilized: bool,
    pub runs: Vec<(usize, usize)>,
}

impl ChordSearch {
    pub fn to_json(&self) -> String {
        let chords: Vec<_> = self
            .chords
            .iter()
            .map(|c| {
                json!({
                    "label": c.label,
                    "start": [c.start.x, c.start.y, c.start.z],
                    "end": [c.end.x, c.end.y, c.end.z],
                    "period": c.period,
                    "winding": c.winding,
                    "margin": c.transversality_margin,
                })
            })
            .collect();
        serde_json::to_string_pretty(&json!({ "chords": chords })).unwrap()
    }
}

struct Shot {
    t: f64,
    x: f64,
    z: f64,
}

fn shoot(
    model: &ContactModel,
    piece: &ArcPiece,
    s: f64,
    k_bound: f64,
    settings: &FlowSettings,
) -> Option<Shot> {
    let section = Section {
        plane: SectionPlane::Y,
        value: model.chart.y_s,
        direction: 1,
    };
    let mut local = *settings;
    local.max_time = k_bound;
    let p0 = ChartPoint::new(s, model.chart.y_s, piece.z);
    match first_return(model, p0, &section, &local) {
        Ok(ReturnOutcome::Hit { t, point }) => Some(Shot {
            t,
            x: point.x,
            z: point.z,
        }),
        Ok(_) => None,
        Err(_) => None,
    }
}

/// Finds all transverse Reeb chords with period below `k_bound` whose
/// endpoints lie on the arc, by grid shooting with doubling until the chord
/// census stabilizes twice in a row.
pub fn find_chords(
    model: &ContactModel,
    arc: &SurfaceArc,
    k_bound: f64,
    grid_n: usize,
    settings: &FlowSettings,
) -> Result<ChordSearch> {
    if arc.pieces.is_empty() {
        return Err(Error::Parameter("arc has no pieces".into()));
    }
    if !(k_bound > 0.0) {
        return Err(Error::Parameter("time bound must be positive".into()));
    }
    if grid_n < 8 {
        return Err(Error::Parameter("grid must have at least 8 points".into()));
    }

    let mut runs = Vec::new();
    let mut grid = grid_n;
    let mut last: Option<Vec<TransverseChord>> = None;
    let mut stable_repeats = 0usize;

    for _ in 0..6 {
        let chords = census(model, arc, k_bound, grid, settings)?;
        runs.push((grid, chords.len()));
        if let Some(prev) = &last {
            let same = prev.len() == chords.len()
                && prev
                    .iter()
                    .zip(chords.iter())
                    .all(|(a, b)| a.label == b.label && (a.start.x - b.start.x).abs() < 1e-6);
            if same {
                stable_repeats += 1;
            } else {
                stable_repeats = 0;
            }
        }
        last = Some(chords);
        if stable_repeats >= 2 {
            return Ok(ChordSearch {
                chords: last.unwrap(),
                grid_used: grid,
                stabilized: true,
                runs,
            });
        }
        grid *= 2;
    }
    Ok(ChordSearch {
        chords: last.unwrap(),
        grid_used: grid / 2,
        stabilized: false,
        runs,
    })
}

fn census(
    model: &ContactModel,
    arc: &SurfaceArc,
    k_bound: f64,
    grid: usize,
    settings: &FlowSettings,
) -> Result<Vec<TransverseChord>> {
    let mut found: Vec<TransverseChord> = Vec::new();

    for piece in &arc.pieces {
        // Sample the start parameter (half-offset grid keeps endpoints off
        // the chart faces).
        let span = piece.x_hi - piece.x_lo;
        let s_grid: Vec<f64> = (0..grid)
            .map(|i| piece.x_lo + span * (i as f64 + 0.5) / grid as f64)
            .filter(|s| s.abs() > 1e-4)
            .filter(|s| arc.exclusion_radius.map_or(true, |r| s.abs() >= r))
            .collect();

        let shots: Vec<Option<Shot>> = s_grid
            .par_iter()
            .map(|&s| shoot(model, piece, s, k_bound, settings))
            .collect();
        let mut samples: Vec<(f64, Option<Shot>)> = s_grid.into_iter().zip(shots).collect();

        // Returning starts accumulate against boundaries where the flight
        // time blows up, and the winding grows without bound there; a
        // uniform grid resolves only the first few levels. Bisect every
        // valid/invalid boundary down to rounding so the brackets reach all
        // windings admissible under the time budget.
        let mut extras: Vec<(f64, Option<Shot>)> = Vec::new();
        for w in samples.windows(2) {
            let ((s0, shot0), (s1, shot1)) = (&w[0], &w[1]);
            if shot0.is_some() == shot1.is_some() {
                continue;
            }
            let (mut s_bad, mut s_good) = if shot0.is_some() {
                (*s1, *s0)
            } else {
                (*s0, *s1)
            };
            while (s_good - s_bad).abs() > 1e-13 {
                let sm = 0.5 * (s_bad + s_good);
                if sm.abs() < 1e-4 {
                    break;
                }
                match shoot(model, piece, sm, k_bound, settings) {
                    Some(shot) => {
                        extras.push((sm, Some(shot)));
                        s_good = sm;
                    }
                    None => s_bad = sm,
                }
            }
        }
        samples.extend(extras);
        samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        for w in samples.windows(2) {
            let ((sa, shot_a), (sb, shot_b)) = (&w[0], &w[1]);
            let (sa, sb) = (*sa, *sb);
            // Do not bracket across the excluded tangency gap.
            if sa < 0.0 && sb > 0.0 {
                continue;
            }
            let (Some(shot_a), Some(shot_b)) = (shot_a, shot_b) else {
                continue;
            };
            for target in &arc.pieces {
                // Landing z values that correspond to this target piece:
                // z = piece.z + base + 2 pi w with base in [0, 2 pi).
                let base = (target.z - piece.z).rem_euclid(TAU);
                let lo = shot_a.z.min(shot_b.z);
                let hi = shot_a.z.max(shot_b.z);
                let w_min = ((lo - piece.z - base) / TAU).ceil() as i64;
                let w_max = ((hi - piece.z - base) / TAU).floor() as i64;
                for wind in w_min..=w_max {
                    let target_z = piece.z + base + TAU * wind as f64;
                    if target_z <= piece.z + 1e-9 {
                        continue; // the flow only advances z
                    }
                    if let Some(chord) = refine_root(
                        model, piece, target, sa, sb, shot_a, shot_b, target_z, k_bound,
                        settings,
                    ) {
                        found.push(chord);
                    }
                }
            }
        }
    }

    // Deduplicate roots found from both sides of a bracket or in overlapping
    // windows: same family and winding within the merge radius.
    let merge_radius = 10.0 * settings.event_tol;
    found.sort_by(|a, b| {
        (a.label.as_str(), a.start.x)
            .partial_cmp(&(b.label.as_str(), b.start.x))
            .unwrap()
    });
    let mut merged: Vec<TransverseChord> = Vec::new();
    for c in found {
        let dup = merged.iter().any(|m| {
            m.label == c.label
                && (m.start.x - c.start.x).abs() < merge_radius.max(1e-7)
                && (m.start.z - c.start.z).abs() < 1e-9
        });
        if !dup {
            merged.push(c);
        }
    }
    merged.sort_by(|a, b| {
        (a.label.chars().next().unwrap(), a.winding, a.period)
            .partial_cmp(&(b.label.chars().next().unwrap(), b.winding, b.period))
            .unwrap()
    });
    Ok(merged)
}

#[allow(clippy::too_many_arguments)]
fn refine_root(
    model: &ContactModel,
    piece: &ArcPiece,
    target: &ArcPiece,
    mut sa: f64,
    mut sb: f64,
    shot_a: &Shot,
    shot_b: &Shot,
    target_z: f64,
    k_bound: f64,
    settings: &FlowSettings,
) -> Option<TransverseChord> {
    let mut ga = shot_a.z - target_z;
    let gb = shot_b.z - target_z;
    if ga == 0.0 {
        ga = -1e-300; // count an exact grid hit as belonging to this bracket
    }
    if ga * gb > 0.0 {
        return None;
    }
    let mut best: Option<Shot> = None;
    let mut s_root = sa;
    for _ in 0..80 {
        if (sb - sa).abs() < 1e-13 {
            break;
        }
        let sm = 0.5 * (sa + sb);
        let Some(shot) = shoot(model, piece, sm, k_bound, settings) else {
            // The midpoint escaped: shrink toward the side that still lands.
            // Tighten from the b side first; if both persist failing the
            // bracket is abandoned.
            sb = sm;
            continue;
        };
        let gm = shot.z - target_z;
        if gm.abs() < 10.0 * settings.event_tol && (sb - sa).abs() < 1e-9 {
            s_root = sm;
            best = Some(shot);
            break;
        }
        if (ga <= 0.0) == (gm <= 0.0) {
            sa = sm;
            ga = gm;
        } else {
            sb = sm;
        }
        s_root = sm;
        best = Some(shot);
    }
    let landing = best?;
    if (landing.z - target_z).abs() > 1e-6 {
        return None; // did not converge to the requested landing level
    }
    // Landing must be on the target piece in x.
    if landing.x < target.x_lo - 1e-6 || landing.x > target.x_hi + 1e-6 {
        return None;
    }

    // Transversality margin: slope of the flowed arc against the target arc.
    let ds = 1e-7;
    let left = shoot(model, piece, s_root - ds, k_bound, settings);
    let right = shoot(model, piece, s_root + ds, k_bound, settings);
    let margin = match (left, right) {
        (Some(l), Some(r)) => {
            let dx = (r.x - l.x) / (2.0 * ds);
            let dz = (r.z - l.z) / (2.0 * ds);
            dz.abs() / dx.hypot(dz).max(1e-300)
        }
        _ => f64::NAN,
    };

    let winding = ((landing.z - piece.z) / TAU + 0.1).floor() as i32;
    Some(TransverseChord {
        label: format!("{}{}", target.letter, winding),
        start: ChartPoint::new(s_root, model.chart.y_s, piece.z),
        end: ChartPoint::new(landing.x, model.chart.y_s, landing.z),
        period: landing.t,
        winding,
        transversality_margin: margin,
    })
}
