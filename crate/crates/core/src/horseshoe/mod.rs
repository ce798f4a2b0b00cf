//! Rectangles, cone fields, and sampled certification of horseshoe return
//! maps on the section plane.
//!
//! The section carries coordinates (x, z). The strip system is fixed:
//!
//! * `R`: six strips [k pi/2 + lambda, (k+1) pi/2 - lambda] x [-z_max, z_max]
//!   for k = -1..=4;
//! * `Q`: three thin strips of width lambda around x = 0, pi, 2 pi;
//! * `X` and `Y`: the staircase regions between them that admit entry to and
//!   exit from the attachment region.
//!
//! A section map model is a list of labeled partial maps (branches), each
//! with domain and image rectangles, an evaluator, and a return-time field.
//! Certification is sampling-based: every condition reports a worst-case
//! margin, and a certificate passes when all margins are positive.

pub mod fixed_points;
pub mod synthetic;

pub use fixed_points::{
    chord_letters, compose_word_map, enumerate_words, fixed_point_table, table_to_csv,
    unique_fixed_point, unique_fixed_point_seeded, FixedPointOutcome, SectionMap, WordFixedPoint,
    WordMap,
};
pub use synthetic::{q_lambda_escape, synthetic_bypass_map, DriftReport};

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const FD_STEP: f64 = 1e-6;

/// Index of the wide strip containing `x`, if any (k in -1..=4).
pub fn r_strip(x: f64, lambda: f64) -> Option<i32> {
    (-1..=4).find(|&k| {
        let lo = k as f64 * PI / 2.0 + lambda;
        let hi = (k + 1) as f64 * PI / 2.0 - lambda;
        (lo..=hi).contains(&x)
    })
}

/// Worst-case slack of (x, z) inside the strip region R; negative outside.
pub fn r_margin(x: f64, z: f64, lambda: f64, z_max: f64) -> f64 {
    let xm = (-1..=4)
        .map(|k| {
            let lo = k as f64 * PI / 2.0 + lambda;
            let hi = (k + 1) as f64 * PI / 2.0 - lambda;
            (x - lo).min(hi - x)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    xm.min(z_max - z.abs())
}

/// Index of the thin strip containing `x`, if any (k in 0..=2).
pub fn q_strip(x: f64, lambda: f64) -> Option<i32> {
    (0..=2).find(|&k| (x - k as f64 * PI).abs() <= lambda / 2.0)
}

/// Worst-case slack of (x, z) inside the thin-strip region Q.
pub fn q_margin(x: f64, z: f64, lambda: f64, z_max: f64) -> f64 {
    let xm = (0..=2)
        .map(|k| lambda / 2.0 - (x - k as f64 * PI).abs())
        .fold(f64::NEG_INFINITY, f64::max);
    xm.min(z_max - z.abs())
}

/// Slack inside the entry staircase X: [0, pi/4] with z < 0, the full band
/// [pi/4, 3 pi/4], and [3 pi/4, pi] with z > 0. The region is exactly the
/// union of two overlapping boxes, which keeps margins honest at the seams.
pub fn x_margin(x: f64, z: f64, z_max: f64) -> f64 {
    let lower = [x, 3.0 * PI / 4.0 - x, -z, z + z_max]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let upper = [x - PI / 4.0, PI - x, z, z_max - z]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    lower.max(upper)
}

/// Slack inside the exit staircase Y (the X staircase shifted by pi).
pub fn y_margin(x: f64, z: f64, z_max: f64) -> f64 {
    x_margin(x - PI, z, z_max)
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.5 * (a + b)];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Axis-aligned box on the section plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: f64,
    pub x1: f64,
    pub z0: f64,
    pub z1: f64,
}

impl BBox {
    pub fn new(x0: f64, x1: f64, z0: f64, z1: f64) -> Self {
        BBox { x0, x1, z0, z1 }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (self.x0..=self.x1).contains(&p[0]) && (self.z0..=self.z1).contains(&p[1])
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.x0 + self.x1), 0.5 * (self.z0 + self.z1)]
    }

    pub fn grid(&self, n: usize) -> Vec<[f64; 2]> {
        let xs = linspace(self.x0, self.x1, n);
        let zs = linspace(self.z0, self.z1, n);
        xs.iter()
            .flat_map(|&x| zs.iter().map(move |&z| [x, z]))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiberKind {
    Horizontal,
    Vertical,
}

/// Curvilinear rectangle: four boundary polylines with a transfinite
/// (Coons) interior, plus the distinguished fiber direction.
///
/// `bottom` and `top` run with the first parameter s, `left` and `right`
/// with the second parameter t; corners must match up.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Rect {
    pub bottom: Vec<[f64; 2]>,
    pub top: Vec<[f64; 2]>,
    pub left: Vec<[f64; 2]>,
    pub right: Vec<[f64; 2]>,
    pub fiber_kind: FiberKind,
}

fn polyline_point(poly: &[[f64; 2]], u: f64) -> [f64; 2] {
    let n = poly.len();
    if n == 1 {
        return poly[0];
    }
    let s = u.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = (s.floor() as usize).min(n - 2);
    let f = s - i as f64;
    [
        poly[i][0] + f * (poly[i + 1][0] - poly[i][0]),
        poly[i][1] + f * (poly[i + 1][1] - poly[i][1]),
    ]
}

impl Rect {
    pub fn axis_aligned(b: BBox, fiber_kind: FiberKind) -> Self {
        Rect {
            bottom: vec![[b.x0, b.z0], [b.x1, b.z0]],
            top: vec![[b.x0, b.z1], [b.x1, b.z1]],
            left: vec![[b.x0, b.z0], [b.x0, b.z1]],
            right: vec![[b.x1, b.z0], [b.x1, b.z1]],
            fiber_kind,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, poly) in [
            ("bottom", &self.bottom),
            ("top", &self.top),
            ("left", &self.left),
            ("right", &self.right),
        ] {
            if poly.is_empty() {
                return Err(Error::Format(format!("rectangle edge {name} is empty")));
            }
            if poly.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Format(format!(
                    "rectangle edge {name} has non-finite points"
                )));
            }
        }
        let close = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]) < 1e-9;
        let b0 = self.bottom[0];
        let b1 = *self.bottom.last().unwrap();
        let t0 = self.top[0];
        let t1 = *self.top.last().unwrap();
        if !(close(b0, self.left[0])
            && close(b1, self.right[0])
            && close(t0, *self.left.last().unwrap())
            && close(t1, *self.right.last().unwrap()))
        {
            return Err(Error::Format("rectangle corners do not match".into()));
        }
        Ok(())
    }

    /// Coons-patch interpolation of the interior.
    pub fn eval(&self, s: f64, t: f64) -> [f64; 2] {
        let b = polyline_point(&self.bottom, s);
        let tp = polyline_point(&self.top, s);
        let l = polyline_point(&self.left, t);
        let r = polyline_point(&self.right, t);
        let c00 = self.bottom[0];
        let c10 = *self.bottom.last().unwrap();
        let c01 = self.top[0];
        let c11 = *self.top.last().unwrap();
        let mut p = [0.0f64; 2];
        for i in 0..2 {
            p[i] = (1.0 - t) * b[i] + t * tp[i] + (1.0 - s) * l[i] + s * r[i]
                - ((1.0 - s) * (1.0 - t) * c00[i]
                    + s * (1.0 - t) * c10[i]
                    + s * t * c11[i]
                    + (1.0 - s) * t * c01[i]);
        }
        p
    }

    /// Points along the distinguished fiber through parameter value `c`.
    pub fn fiber(&self, c: f64, samples: usize) -> Vec<[f64; 2]> {
        linspace(0.0, 1.0, samples.max(2))
            .into_iter()
            .map(|u| match self.fiber_kind {
                FiberKind::Horizontal => self.eval(u, c),
                FiberKind::Vertical => self.eval(c, u),
            })
            .collect()
    }

    /// Unit tangent of the fiber with the given kind at (s, t).
    pub fn fiber_tangent(&self, s: f64, t: f64, kind: FiberKind) -> [f64; 2] {
        let h = 1e-5;
        let (p, q) = match kind {
            FiberKind::Horizontal => (
                self.eval((s - h).max(0.0), t),
                self.eval((s + h).min(1.0), t),
            ),
            FiberKind::Vertical => (
                self.eval(s, (t - h).max(0.0)),
                self.eval(s, (t + h).min(1.0)),
            ),
        };
        let v = [q[0] - p[0], q[1] - p[1]];
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    }

    pub fn bbox(&self) -> BBox {
        let mut b = BBox::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for poly in [&self.bottom, &self.top, &self.left, &self.right] {
            for p in poly {
                b.x0 = b.x0.min(p[0]);
                b.x1 = b.x1.max(p[0]);
                b.z0 = b.z0.min(p[1]);
                b.z1 = b.z1.max(p[1]);
            }
        }
        b
    }

    fn boundary_polygon(&self) -> Vec<[f64; 2]> {
        let mut poly: Vec<[f64; 2]> = Vec::new();
        poly.extend(self.bottom.iter());
        poly.extend(self.right.iter().skip(1));
        poly.extend(self.top.iter().rev().skip(1));
        poly.extend(self.left.iter().rev().skip(1));
        poly
    }

    /// Even-odd containment test against the boundary polygon.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let poly = self.boundary_polygon();
        let n = poly.len();
        let mut inside = false;
        let eps = 1e-12;
        for i in 0..n {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            if (a[1] > p[1] + eps) != (b[1] > p[1] + eps) {
                let xc = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < xc {
                    inside = !inside;
                }
            }
        }
        // points exactly on the boundary count as inside
        inside || {
            let bb = self.bbox();
            let pad = 1e-9 * (1.0 + bb.x1.abs().max(bb.z1.abs()));
            BBox::new(bb.x0 - pad, bb.x1 + pad, bb.z0 - pad, bb.z1 + pad).contains(p)
                && self.is_axis_aligned()
        }
    }

    fn is_axis_aligned(&self) -> bool {
        self.bottom.len() == 2
            && self.top.len() == 2
            && (self.bottom[0][1] - self.bottom[1][1]).abs() < 1e-12
            && (self.top[0][1] - self.top[1][1]).abs() < 1e-12
            && (self.left[0][0] - self.left[1][0]).abs() < 1e-12
            && (self.right[0][0] - self.right[1][0]).abs() < 1e-12
    }

    /// Interior sample grid, pulled back through the patch parametrization.
    pub fn sample_grid(&self, n: usize) -> Vec<[f64; 2]> {
        let us = linspace(0.0, 1.0, n.max(2));
        us.iter()
            .flat_map(|&s| us.iter().map(move |&t| self.eval(s, t)))
            .collect()
    }
}

/// Direction data for a cone: a fixed angle or a polyline of directions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ConeCenter {
    Fixed(f64),
    Along(Vec<[f64; 2]>),
}

/// An aperture around a center line: w lies inside when
/// |<w, v>| < nu |<w, u>| for the orthonormal frame (u, v) of the center.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeSpec {
    pub center: ConeCenter,
    pub half_width: f64,
}

impl ConeSpec {
    pub fn fixed(angle: f64, half_width: f64) -> Self {
        ConeSpec {
            center: ConeCenter::Fixed(angle),
            half_width,
        }
    }

    pub fn horizontal(half_width: f64) -> Self {
        Self::fixed(0.0, half_width)
    }

    pub fn vertical(half_width: f64) -> Self {
        Self::fixed(PI / 2.0, half_width)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) {
            return Err(Error::Parameter(format!(
                "cone half-width must be positive, got {}",
                self.half_width
            )));
        }
        Ok(())
    }

    /// Unit center direction near the point `p`.
    pub fn direction_at(&self, p: [f64; 2]) -> [f64; 2] {
        match &self.center {
            ConeCenter::Fixed(a) => [a.cos(), a.sin()],
            ConeCenter::Along(poly) => {
                let mut best = (f64::INFINITY, [1.0, 0.0]);
                for w in poly.windows(2) {
                    let mid = [0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1])];
                    let d2 = (p[0] - mid[0]).powi(2) + (p[1] - mid[1]).powi(2);
                    if d2 < best.0 {
                        let v = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
                        let n = v[0].hypot(v[1]);
                        best = (d2, [v[0] / n, v[1] / n]);
                    }
                }
                best.1
            }
        }
    }

    /// Normalized slack of `w` inside the cone at `p`: positive inside.
    pub fn margin(&self, p: [f64; 2], w: [f64; 2]) -> f64 {
        let u = self.direction_at(p);
        let v = [-u[1], u[0]];
        let wu = (w[0] * u[0] + w[1] * u[1]).abs();
        let wv = (w[0] * v[0] + w[1] * v[1]).abs();
        let norm = w[0].hypot(w[1]);
        (self.half_width * wu - wv) / norm.max(1e-300)
    }

    pub fn contains(&self, p: [f64; 2], w: [f64; 2]) -> bool {
        self.margin(p, w) > 0.0
    }

    /// Unit rays spanning the closure of the cone at `p`.
    pub fn rays(&self, p: [f64; 2], m: usize) -> Vec<[f64; 2]> {
        let u = self.direction_at(p);
        let v = [-u[1], u[0]];
        linspace(-1.0, 1.0, m.max(3))
            .into_iter()
            .map(|t| {
                let w = [
                    u[0] + t * self.half_width * v[0],
                    u[1] + t * self.half_width * v[1],
                ];
                let n = w[0].hypot(w[1]);
                [w[0] / n, w[1] / n]
            })
            .collect()
    }
}

/// Which structural family a branch belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchRole {
    /// Thin-strip component of the boundary-manifold map (drifting).
    SurfaceDrift,
    /// Reeb-chord component of the boundary-manifold map.
    Chord,
    /// Thin-strip component of the attachment map (drifting).
    BypassDrift,
    /// Wide-strip component of the attachment map.
    Bypass,
}

type MapFn = Box<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;
type TimeFn = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type DiffFn = Box<dyn Fn(f64, f64) -> Matrix2<f64> + Send + Sync>;

/// One labeled partial map of the section.
pub struct Branch {
    pub label: String,
    pub role: BranchRole,
    pub dom: Rect,
    pub im: Rect,
    eval: MapFn,
    inverse: Option<MapFn>,
    differential: Option<DiffFn>,
    time: TimeFn,
    /// Nominal return time of the underlying chord, when there is one.
    pub chord_action: Option<f64>,
    /// Half-turn grading carried by the branch letter.
    pub mu_tilde: i64,
    /// Angle of the core segment in the domain, when declared.
    pub d1_angle: Option<f64>,
    /// Angle of the core segment in the image, when declared.
    pub d2_angle: Option<f64>,
    /// Thin-strip index for drift branches.
    pub q_index: Option<i32>,
}

impl std::fmt::Debug for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Branch")
            .field("label", &self.label)
            .field("role", &self.role)
            .field("dom", &self.dom.bbox())
            .field("im", &self.im.bbox())
            .finish_non_exhaustive()
    }
}

impl Branch {
    pub fn new(
        label: impl Into<String>,
        role: BranchRole,
        dom: Rect,
        im: Rect,
        eval: MapFn,
        time: TimeFn,
    ) -> Self {
        Branch {
            label: label.into(),
            role,
            dom,
            im,
            eval,
            inverse: None,
            differential: None,
            time,
            chord_action: None,
            mu_tilde: 0,
            d1_angle: None,
            d2_angle: None,
            q_index: None,
        }
    }

    pub fn with_inverse(mut self, inverse: MapFn) -> Self {
        self.inverse = Some(inverse);
        self
    }

    pub fn with_differential(mut self, differential: DiffFn) -> Self {
        self.differential = Some(differential);
        self
    }

    pub fn with_chord(mut self, action: f64, mu_tilde: i64) -> Self {
        self.chord_action = Some(action);
        self.mu_tilde = mu_tilde;
        self
    }

    pub fn with_segments(mut self, d1_angle: f64, d2_angle: f64) -> Self {
        self.d1_angle = Some(d1_angle);
        self.d2_angle = Some(d2_angle);
        self
    }

    pub fn with_q_index(mut self, k: i32) -> Self {
        self.q_index = Some(k);
        self
    }

    pub fn eval_raw(&self, x: f64, z: f64) -> Result<[f64; 2]> {
        let p = (self.eval)(x, z);
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "branch {} evaluator returned a non-finite value at ({x}, {z})",
                self.label
            )));
        }
        Ok(p)
    }

    /// Applies the branch when (x, z) lies in its domain rectangle.
    pub fn apply(&self, x: f64, z: f64) -> Option<([f64; 2], f64)> {
        if !self.dom.contains([x, z]) {
            return None;
        }
        let p = (self.eval)(x, z);
        if p.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some((p, (self.time)(x, z)))
    }

    /// Applies the inverse when (x, z) lies in the image rectangle.
    pub fn apply_inverse(&self, x: f64, z: f64) -> Option<[f64; 2]> {
        let inv = self.inverse.as_ref()?;
        if !self.im.contains([x, z]) {
            return None;
        }
        let p = inv(x, z);
        if p.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(p)
    }

    /// Differential at (x, z): analytic when present, else central
    /// differences of the evaluator.
    pub fn diff_at(&self, x: f64, z: f64) -> Matrix2<f64> {
        if let Some(d) = &self.differential {
            return d(x, z);
        }
        let h = FD_STEP;
        let fx1 = (self.eval)(x + h, z);
        let fx0 = (self.eval)(x - h, z);
        let fz1 = (self.eval)(x, z + h);
        let fz0 = (self.eval)(x, z - h);
        Matrix2::new(
            (fx1[0] - fx0[0]) / (2.0 * h),
            (fz1[0] - fz0[0]) / (2.0 * h),
            (fx1[1] - fx0[1]) / (2.0 * h),
            (fz1[1] - fz0[1]) / (2.0 * h),
        )
    }

    pub fn time_at(&self, x: f64, z: f64) -> f64 {
        (self.time)(x, z)
    }
}

/// Immutable collection of section branches with the ambient strip scale.
pub struct SectionMapModel {
    pub label: String,
    pub lambda: f64,
    pub z_max: f64,
    pub branches: Vec<Branch>,
    /// Declared construction parameters, for self-checks and reports.
    pub params: BTreeMap<String, f64>,
}

impl std::fmt::Debug for SectionMapModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SectionMapModel")
            .field("label", &self.label)
            .field("lambda", &self.lambda)
            .field("z_max", &self.z_max)
            .field("branches", &self.branches)
            .finish_non_exhaustive()
    }
}

impl SectionMapModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < PI / 8.0) {
            return Err(Error::Parameter(format!(
                "lambda must lie in (0, pi/8), got {}",
                self.lambda
            )));
        }
        if !(self.z_max > 0.0) {
            return Err(Error::Parameter("z_max must be positive".into()));
        }
        for b in &self.branches {
            b.dom.validate()?;
            b.im.validate()?;
        }
        Ok(())
    }

    pub fn branch(&self, label: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.label == label)
    }

    pub fn branches_with_role(&self, role: BranchRole) -> Vec<&Branch> {
        self.branches.iter().filter(|b| b.role == role).collect()
    }

    /// The chord branch named by a single letter, e.g. 'a' -> "psi_a".
    pub fn letter_branch(&self, letter: char) -> Result<&Branch> {
        let label = format!("psi_{letter}");
        self.branches
            .iter()
            .find(|b| b.role == BranchRole::Chord && b.label == label)
            .ok_or_else(|| Error::UnknownLetter(letter.to_string()))
    }

    /// Applies the attachment map: the unique wide-strip branch whose
    /// domain contains the point.
    pub fn apply_bypass(&self, p: [f64; 2]) -> Option<(&Branch, [f64; 2], f64)> {
        for b in &self.branches {
            if b.role == BranchRole::Bypass {
                if let Some((q, t)) = b.apply(p[0], p[1]) {
                    return Some((b, q, t));
                }
            }
        }
        None
    }

    /// Drift branch of the given role covering thin strip `k`.
    pub fn drift_branch(&self, role: BranchRole, k: i32) -> Option<&Branch> {
        self.branches
            .iter()
            .find(|b| b.role == role && b.q_index == Some(k))
    }
}

/// One certified condition: pass flag plus the worst-case margin found.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub pass: bool,
    pub margin: f64,
}

/// Named condition reports; passes when every margin is positive.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperbolicCertificate {
    pub conditions: BTreeMap<String, ConditionReport>,
    pub sample_n: usize,
}

impl HyperbolicCertificate {
    pub fn new(sample_n: usize) -> Self {
        HyperbolicCertificate {
            conditions: BTreeMap::new(),
            sample_n,
        }
    }

    pub fn passed(&self) -> bool {
        !self.conditions.is_empty() && self.conditions.values().all(|c| c.pass)
    }

    pub fn record(&mut self, name: &str, margin: f64) {
        let entry = self
            .conditions
            .entry(name.to_string())
            .or_insert(ConditionReport {
                pass: true,
                margin: f64::MAX,
            });
        entry.margin = entry.margin.min(margin);
        entry.pass = entry.margin > 0.0;
    }

    /// Serializes as a map condition -> {pass, margin}.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.conditions)?)
    }

    pub fn worst(&self) -> Option<(&str, f64)> {
        self.conditions
            .iter()
            .min_by(|a, b| a.1.margin.total_cmp(&b.1.margin))
            .map(|(k, v)| (k.as_str(), v.margin))
    }
}

fn min_over<F>(points: &[[f64; 2]], f: F) -> f64
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    points
        .par_iter()
        .map(|&p| f(p))
        .reduce(|| f64::INFINITY, f64::min)
}

fn injectivity_margin(branch: &Branch, n: usize) -> f64 {
    let pts = branch.dom.sample_grid(n);
    let images: Vec<[f64; 2]> = pts.iter().map(|p| (branch.eval)(p[0], p[1])).collect();
    let mut worst = f64::INFINITY;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let dp = (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]);
            if dp < 1e-12 {
                continue;
            }
            let di = (images[i][0] - images[j][0]).hypot(images[i][1] - images[j][1]);
            worst = worst.min(di / dp);
        }
    }
    worst
}

fn box_separation(a: BBox, b: BBox) -> f64 {
    let dx = (b.x0 - a.x1).max(a.x0 - b.x1);
    let dz = (b.z0 - a.z1).max(a.z0 - b.z1);
    dx.max(dz)
}

fn drift_conditions(
    cert: &mut HyperbolicCertificate,
    branches: &[&Branch],
    prefix: &str,
    lambda: f64,
    z_max: f64,
    n: usize,
) -> Result<()> {
    for b in branches {
        let k = b.q_index.ok_or_else(|| {
            Error::Precondition(format!("drift branch {} lacks a strip index", b.label))
        })?;
        let center = k as f64 * PI;
        let pts = b.dom.sample_grid(n);
        for p in &pts {
            b.eval_raw(p[0], p[1])?;
        }
        cert.record(
            &format!("{prefix}_domain_in_q"),
            min_over(&pts, |p| q_margin(p[0], p[1], lambda, z_max)),
        );
        cert.record(
            &format!("{prefix}_image_in_q"),
            min_over(&pts, |p| {
                let q = (b.eval)(p[0], p[1]);
                q_margin(q[0], q[1], lambda, z_max)
            }),
        );
        cert.record(
            &format!("{prefix}_x_confined"),
            min_over(&pts, |p| {
                let q = (b.eval)(p[0], p[1]);
                lambda / 2.0 - (q[0] - center).abs()
            }),
        );
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        cert.record(
            &format!("{prefix}_z_monotone"),
            min_over(&pts, |p| {
                let q = (b.eval)(p[0], p[1]);
                sign * (q[1] - p[1])
            }),
        );
    }
    Ok(())
}

/// Certifies the decomposition of the boundary-manifold map: thin-strip
/// drift confinement and monotonicity, chord rectangles inside the wide
/// strips, fiber reversal, branch injectivity, and pairwise disjoint
/// domains. All checks are sampled on an n-by-n grid per rectangle.
pub fn verify_k_hyperbolic(
    map: &SectionMapModel,
    lambda: f64,
    sample_n: usize,
) -> Result<HyperbolicCertificate> {
    if !(lambda > 0.0 && lambda < PI / 8.0) {
        return Err(Error::Parameter(format!(
            "lambda must lie in (0, pi/8), got {lambda}"
        )));
    }
    if sample_n < 2 {
        return Err(Error::Parameter("sample_n must be at least 2".into()));
    }
    map.validate()?;
    let mut cert = HyperbolicCertificate::new(sample_n);
    let z_max = map.z_max;

    let drift = map.branches_with_role(BranchRole::SurfaceDrift);
    drift_conditions(&mut cert, &drift, "psi0", lambda, z_max, sample_n)?;

    for b in map.branches_with_role(BranchRole::Chord) {
        let dom_pts = b.dom.sample_grid(sample_n);
        let im_pts = b.im.sample_grid(sample_n);
        for p in &dom_pts {
            b.eval_raw(p[0], p[1])?;
        }
        cert.record(
            "psi_rect_in_r",
            min_over(&dom_pts, |p| r_margin(p[0], p[1], lambda, z_max)).min(min_over(
                &im_pts,
                |p| r_margin(p[0], p[1], lambda, z_max),
            )),
        );
        // reversal: horizontal directions must come out steeper than flat,
        // through the map and through its inverse differential
        cert.record(
            "psi_fibre_reversal",
            min_over(&dom_pts, |p| {
                let j = b.diff_at(p[0], p[1]);
                let w = [j[(0, 0)], j[(1, 0)]];
                let norm = w[0].hypot(w[1]).max(1e-300);
                let forward = (w[1].abs() - w[0].abs()) / norm;
                match j.try_inverse() {
                    Some(ji) => {
                        let wi = [ji[(0, 0)], ji[(1, 0)]];
                        let ni = wi[0].hypot(wi[1]).max(1e-300);
                        forward.min((wi[1].abs() - wi[0].abs()) / ni)
                    }
                    None => f64::NEG_INFINITY,
                }
            }),
        );
    }

    let surface: Vec<&Branch> = map
        .branches
        .iter()
        .filter(|b| matches!(b.role, BranchRole::SurfaceDrift | BranchRole::Chord))
        .collect();
    for b in &surface {
        cert.record("branch_injectivity", injectivity_margin(b, 12));
    }
    for i in 0..surface.len() {
        for j in (i + 1)..surface.len() {
            cert.record(
                "domains_disjoint",
                box_separation(surface[i].dom.bbox(), surface[j].dom.bbox()),
            );
        }
    }
    Ok(cert)
}

/// Domination parameters: the boundary-manifold form (mu, nu, tau) or the
/// attachment form (nu, tau, A, eta).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Omega {
    Surface { mu: f64, nu: f64, tau: f64 },
    Bypass { nu: f64, tau: f64, cone_a: f64, eta: f64 },
}

const RAY_COUNT: usize = 9;

/// Certifies the quantitative cone and return-time bounds on top of the
/// structural decomposition.
///
/// With `Omega::Surface`, chord branches must map the flat cone into the
/// aperture around their core segments (both ways) and keep return times
/// within tau of the nominal chord action. With `Omega::Bypass`, wide-strip
/// branches must flatten the steep cone both ways, stretch it by at least
/// 1/eta both ways, keep return times below 8 tau, and the drift components
/// must satisfy the thin-strip confinement.
pub fn verify_dominated(map: &SectionMapModel, omega: Omega) -> Result<HyperbolicCertificate> {
    map.validate()?;
    let sample_n = 24;
    let z_max = map.z_max;
    let mut cert = HyperbolicCertificate::new(sample_n);
    match omega {
        Omega::Surface { mu, nu, tau } => {
            if !(mu > 0.0 && nu > 0.0 && tau > 0.0) {
                return Err(Error::Parameter(
                    "surface domination parameters must be positive".into(),
                ));
            }
            let base = verify_k_hyperbolic(map, map.lambda, sample_n)?;
            if !base.passed() {
                let (name, margin) = base.worst().unwrap_or(("empty", f64::NAN));
                return Err(Error::Precondition(format!(
                    "structural certificate failed before domination: {name} margin {margin:.3e}"
                )));
            }
            let cone_h = ConeSpec::horizontal(nu);
            for b in map.branches_with_role(BranchRole::Chord) {
                let (d1, d2) = match (b.d1_angle, b.d2_angle) {
                    (Some(d1), Some(d2)) => (d1, d2),
                    _ => {
                        return Err(Error::Precondition(format!(
                            "chord branch {} lacks core segment angles",
                            b.label
                        )))
                    }
                };
                let action = b.chord_action.ok_or_else(|| {
                    Error::Precondition(format!(
                        "chord branch {} lacks a nominal action",
                        b.label
                    ))
                })?;
                let cone_d1_nu = ConeSpec::fixed(d1, nu);
                let cone_d2_nu = ConeSpec::fixed(d2, nu);
                let cone_d1_mu = ConeSpec::fixed(d1, mu);
                let cone_d2_mu = ConeSpec::fixed(d2, mu);
                let dom_pts = b.dom.sample_grid(sample_n);

                let us = linspace(0.0, 1.0, sample_n);
                let mut fiber_margin = f64::INFINITY;
                for &s in &us {
                    for &t in &us {
                        let td = b.dom.fiber_tangent(s, t, FiberKind::Vertical);
                        fiber_margin = fiber_margin.min(cone_d1_nu.margin(b.dom.eval(s, t), td));
                        let ti = b.im.fiber_tangent(s, t, FiberKind::Vertical);
                        fiber_margin = fiber_margin.min(cone_d2_nu.margin(b.im.eval(s, t), ti));
                    }
                }
                cert.record("d_fibre_cones", fiber_margin);

                cert.record(
                    "cone_h_into_d2",
                    min_over(&dom_pts, |p| {
                        let j = b.diff_at(p[0], p[1]);
                        cone_h
                            .rays(p, RAY_COUNT)
                            .into_iter()
                            .map(|v| {
                                let w = j * nalgebra::Vector2::new(v[0], v[1]);
                                cone_d2_mu.margin(p, [w[0], w[1]])
                            })
                            .fold(f64::INFINITY, f64::min)
                    }),
                );
                cert.record(
                    "cone_h_into_d1",
                    min_over(&dom_pts, |p| {
                        let j = b.diff_at(p[0], p[1]);
                        match j.try_inverse() {
                            Some(ji) => cone_h
                                .rays(p, RAY_COUNT)
                                .into_iter()
                                .map(|v| {
                                    let w = ji * nalgebra::Vector2::new(v[0], v[1]);
                                    cone_d1_mu.margin(p, [w[0], w[1]])
                                })
                                .fold(f64::INFINITY, f64::min),
                            None => f64::NEG_INFINITY,
                        }
                    }),
                );
                cert.record(
                    "return_time_window",
                    min_over(&dom_pts, |p| tau - (b.time_at(p[0], p[1]) - action).abs()),
                );
            }
        }
        Omega::Bypass { nu, tau, cone_a, eta } => {
            if !(nu > 0.0 && tau > 0.0 && cone_a > 0.0 && eta > 0.0) {
                return Err(Error::Parameter(
                    "bypass domination parameters must be positive".into(),
                ));
            }
            let cone_v = ConeSpec::vertical(cone_a);
            let cone_h = ConeSpec::horizontal(nu);
            for b in map.branches_with_role(BranchRole::Bypass) {
                let dom_pts = b.dom.sample_grid(sample_n);
                for p in &dom_pts {
                    b.eval_raw(p[0], p[1])?;
                }
                cert.record(
                    "phi_dom_in_x",
                    min_over(&dom_pts, |p| x_margin(p[0], p[1], z_max)),
                );
                cert.record(
                    "phi_im_in_y",
                    min_over(&dom_pts, |p| {
                        let q = (b.eval)(p[0], p[1]);
                        y_margin(q[0], q[1], z_max)
                    }),
                );
                let cone_work = |p: [f64; 2]| -> [f64; 4] {
                    let j = b.diff_at(p[0], p[1]);
                    let ji = j.try_inverse();
                    let mut fwd_cone = f64::INFINITY;
                    let mut inv_cone = f64::INFINITY;
                    let mut fwd_stretch = f64::INFINITY;
                    let mut inv_stretch = f64::INFINITY;
                    for v in cone_v.rays(p, RAY_COUNT) {
                        let w = j * nalgebra::Vector2::new(v[0], v[1]);
                        fwd_cone = fwd_cone.min(cone_h.margin(p, [w[0], w[1]]));
                        fwd_stretch = fwd_stretch.min(w.norm() - 1.0 / eta);
                        match &ji {
                            Some(m) => {
                                let wi = m * nalgebra::Vector2::new(v[0], v[1]);
                                inv_cone = inv_cone.min(cone_h.margin(p, [wi[0], wi[1]]));
                                inv_stretch = inv_stretch.min(wi.norm() - 1.0 / eta);
                            }
                            None => {
                                inv_cone = f64::NEG_INFINITY;
                                inv_stretch = f64::NEG_INFINITY;
                            }
                        }
                    }
                    [fwd_cone, inv_cone, fwd_stretch, inv_stretch]
                };
                let worst = dom_pts
                    .par_iter()
                    .map(|&p| cone_work(p))
                    .reduce(
                        || [f64::INFINITY; 4],
                        |a, b| [a[0].min(b[0]), a[1].min(b[1]), a[2].min(b[2]), a[3].min(b[3])],
                    );
                cert.record("phi_cone_v_to_h", worst[0]);
                cert.record("phi_cone_v_to_h_inverse", worst[1]);
                cert.record("phi_expansion", worst[2]);
                cert.record("phi_expansion_inverse", worst[3]);
                cert.record(
                    "phi_return_bound",
                    min_over(&dom_pts, |p| 8.0 * tau - b.time_at(p[0], p[1])),
                );
                cert.record(
                    "phi_fibre_reversal",
                    min_over(&dom_pts, |p| {
                        let j = b.diff_at(p[0], p[1]);
                        let w = [j[(0, 1)], j[(1, 1)]];
                        let norm = w[0].hypot(w[1]).max(1e-300);
                        let forward = (w[0].abs() - w[1].abs()) / norm;
                        match j.try_inverse() {
                            Some(ji) => {
                                let wi = [ji[(0, 1)], ji[(1, 1)]];
                                let ni = wi[0].hypot(wi[1]).max(1e-300);
                                forward.min((wi[0].abs() - wi[1].abs()) / ni)
                            }
                            None => f64::NEG_INFINITY,
                        }
                    }),
                );
            }
            let drift = map.branches_with_role(BranchRole::BypassDrift);
            drift_conditions(&mut cert, &drift, "phi0", map.lambda, z_max, sample_n)?;
            for b in &drift {
                let pts = b.dom.sample_grid(sample_n);
                cert.record(
                    "phi_return_bound",
                    min_over(&pts, |p| 8.0 * tau - b.time_at(p[0], p[1])),
                );
            }
            let bypass: Vec<&Branch> = map
                .branches
                .iter()
                .filter(|b| matches!(b.role, BranchRole::BypassDrift | BranchRole::Bypass))
                .collect();
            for i in 0..bypass.len() {
                for j in (i + 1)..bypass.len() {
                    cert.record(
                        "domains_disjoint",
                        box_separation(bypass[i].dom.bbox(), bypass[j].dom.bbox()),
                    );
                }
            }
        }
    }
    if cert.conditions.is_empty() {
        return Err(Error::Precondition(
            "no branches matched the requested domination check".into(),
        ));
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band(x0: f64, x1: f64, z0: f64, z1: f64, kind: FiberKind) -> Rect {
        Rect::axis_aligned(BBox::new(x0, x1, z0, z1), kind)
    }

    #[test]
    fn strip_membership_and_margins() {
        let l = 0.3;
        assert_eq!(r_strip(1.0, l), Some(0));
        assert_eq!(r_strip(0.1, l), None);
        assert_eq!(q_strip(0.1, l), Some(0));
        assert_eq!(q_strip(PI + 0.1, l), Some(1));
        assert_eq!(q_strip(1.0, l), None);
        assert!(r_margin(1.0, 0.0, l, 0.2) > 0.0);
        assert!(r_margin(0.1, 0.0, l, 0.2) < 0.0);
        assert!(q_margin(0.05, 0.1, l, 0.2) > 0.0);
        assert!(x_margin(0.5, -0.1, 0.2) > 0.0);
        assert!(x_margin(0.5, 0.1, 0.2) < 0.0);
        assert!(x_margin(1.0, 0.1, 0.2) > 0.0);
        assert!(y_margin(1.0 + PI, 0.1, 0.2) > 0.0);
    }

    #[test]
    fn coons_patch_reproduces_axis_aligned_boxes() {
        let r = band(1.0, 2.0, -0.1, 0.3, FiberKind::Horizontal);
        r.validate().unwrap();
        let c00 = r.eval(0.0, 0.0);
        assert!((c00[0] - 1.0).abs() < 1e-12 && (c00[1] + 0.1).abs() < 1e-12);
        let c11 = r.eval(1.0, 1.0);
        assert!((c11[0] - 2.0).abs() < 1e-12 && (c11[1] - 0.3).abs() < 1e-12);
        let mid = r.eval(0.5, 0.5);
        assert!((mid[0] - 1.5).abs() < 1e-12 && (mid[1] - 0.1).abs() < 1e-12);
        assert!(r.contains([1.5, 0.0]));
        assert!(!r.contains([2.5, 0.0]));
        let tangent = r.fiber_tangent(0.5, 0.5, FiberKind::Vertical);
        assert!(tangent[0].abs() < 1e-9 && tangent[1].abs() > 0.99);
        let fiber = r.fiber(0.5, 3);
        assert_eq!(fiber.len(), 3);
        assert!((fiber[0][1] - fiber[2][1]).abs() < 1e-12);
    }

    #[test]
    fn cone_membership_matches_the_frame_inequality() {
        let c = ConeSpec::vertical(0.2);
        assert!(c.contains([0.0, 0.0], [0.1, 1.0]));
        assert!(!c.contains([0.0, 0.0], [0.3, 1.0]));
        let rays = c.rays([0.0, 0.0], 5);
        assert_eq!(rays.len(), 5);
        for w in rays {
            assert!(c.margin([0.0, 0.0], w) > -1e-9);
        }
        let along = ConeSpec {
            center: ConeCenter::Along(vec![[0.0, -0.2], [0.0, 0.2]]),
            half_width: 0.1,
        };
        assert!(along.contains([0.0, 0.0], [0.05, 1.0]));
    }

    fn antidiagonal_chord(x_dom: f64, x_im: f64, b: f64, c: f64, t0: f64) -> Branch {
        let dom = band(x_dom - 0.15, x_dom + 0.15, -0.19, 0.19, FiberKind::Horizontal);
        let im = band(x_im - 0.16, x_im + 0.16, -0.19, 0.19, FiberKind::Horizontal);
        Branch::new(
            "psi_a",
            BranchRole::Chord,
            dom,
            im,
            Box::new(move |x, z| [x_im + b * z, c * (x - x_dom)]),
            Box::new(move |_, _| t0),
        )
        .with_inverse(Box::new(move |x, z| [x_dom + z / c, (x - x_im) / b]))
        .with_differential(Box::new(move |_, _| Matrix2::new(0.0, b, c, 0.0)))
        .with_chord(t0, 1)
        .with_segments(PI / 2.0, PI / 2.0)
    }

    fn one_chord_model() -> SectionMapModel {
        let xc_im = 0.5 * (0.3 + PI / 2.0 - 0.3);
        let xc_dom = 0.5 * ((PI / 2.0 + 0.3) + (PI - 0.3));
        SectionMapModel {
            label: "one chord".into(),
            lambda: 0.3,
            z_max: 0.2,
            branches: vec![antidiagonal_chord(xc_dom, xc_im, 0.8, 1.25, 1.0)],
            params: BTreeMap::new(),
        }
    }

    #[test]
    fn a_single_reversing_branch_is_certified() {
        let model = one_chord_model();
        let cert = verify_k_hyperbolic(&model, 0.3, 16).unwrap();
        assert!(cert.passed(), "{:?}", cert.conditions);
        assert!(!cert.conditions.contains_key("psi0_domain_in_q"));
        let json = cert.to_json().unwrap();
        assert!(json.contains("psi_fibre_reversal"));
        assert!(json.contains("margin"));
    }

    #[test]
    fn drift_across_strips_fails_confinement() {
        let dom = band(PI - 0.14, PI + 0.14, -0.16, 0.19, FiberKind::Horizontal);
        let im = band(-0.14, 0.14, -0.19, 0.16, FiberKind::Horizontal);
        let bad = Branch::new(
            "psi0_k1",
            BranchRole::SurfaceDrift,
            dom,
            im,
            Box::new(|x, z| [x - PI, z - 0.03]),
            Box::new(|_, _| 0.5),
        )
        .with_q_index(1);
        let model = SectionMapModel {
            label: "bad drift".into(),
            lambda: 0.3,
            z_max: 0.2,
            branches: vec![bad],
            params: BTreeMap::new(),
        };
        let cert = verify_k_hyperbolic(&model, 0.3, 12).unwrap();
        assert!(!cert.passed());
        assert!(!cert.conditions["psi0_x_confined"].pass);
        // the drift itself is fine, only the confinement is broken
        assert!(cert.conditions["psi0_z_monotone"].pass);
    }

    fn affine_bypass_branch(sigma: f64) -> SectionMapModel {
        // domain in the all-z part of the entry staircase, image in the
        // all-z part of the exit staircase
        let (xl_d, zb_d) = (2.0, -0.10);
        let wx = 0.2;
        let h = wx / sigma;
        let (xl_i, zb_i) = (3.95, -0.09);
        let dom = band(xl_d, xl_d + wx, zb_d, zb_d + h, FiberKind::Vertical);
        let im = band(xl_i, xl_i + sigma * h, zb_i, zb_i + wx / sigma, FiberKind::Vertical);
        let branch = Branch::new(
            "phi00",
            BranchRole::Bypass,
            dom,
            im,
            Box::new(move |x, z| [xl_i + sigma * (z - zb_d), zb_i + (x - xl_d) / sigma]),
            Box::new(|_, _| 1.0),
        )
        .with_differential(Box::new(move |_, _| {
            Matrix2::new(0.0, sigma, 1.0 / sigma, 0.0)
        }));
        SectionMapModel {
            label: format!("affine sigma {sigma}"),
            lambda: 0.3,
            z_max: 0.2,
            branches: vec![branch],
            params: BTreeMap::new(),
        }
    }

    #[test]
    fn strong_shear_passes_bypass_domination() {
        let model = affine_bypass_branch(5.0);
        let omega = Omega::Bypass {
            nu: 0.3,
            tau: 1.0,
            cone_a: 0.3,
            eta: 0.3,
        };
        let cert = verify_dominated(&model, omega).unwrap();
        assert!(cert.passed(), "{:?}", cert.conditions);
        assert!(cert.conditions["phi_expansion"].margin > 1.0);
    }

    #[test]
    fn weak_shear_fails_the_expansion_margin() {
        let model = affine_bypass_branch(1.01);
        let omega = Omega::Bypass {
            nu: 0.3,
            tau: 1.0,
            cone_a: 0.3,
            eta: 0.3,
        };
        let cert = verify_dominated(&model, omega).unwrap();
        assert!(!cert.passed());
        assert!(!cert.conditions["phi_expansion"].pass);
        assert!(cert.conditions["phi_expansion"].margin < 0.0);
    }

    #[test]
    fn constant_return_time_passes_any_tau() {
        let model = one_chord_model();
        for tau in [0.05, 0.5, 2.0] {
            let cert = verify_dominated(
                &model,
                Omega::Surface {
                    mu: 0.2,
                    nu: 0.2,
                    tau,
                },
            )
            .unwrap();
            assert!(
                cert.conditions["return_time_window"].pass,
                "tau = {tau}: {:?}",
                cert.conditions["return_time_window"]
            );
            assert!((cert.conditions["return_time_window"].margin - tau).abs() < 1e-9);
        }
    }

    #[test]
    fn surface_domination_passes_for_the_mild_antidiagonal() {
        let model = one_chord_model();
        let cert = verify_dominated(
            &model,
            Omega::Surface {
                mu: 0.2,
                nu: 0.2,
                tau: 0.5,
            },
        )
        .unwrap();
        assert!(cert.passed(), "{:?}", cert.conditions);
    }
}
