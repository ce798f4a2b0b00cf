//! Periodic points of the composed section maps, one per cyclic word.
//!
//! A word w = w_1 ... w_k names the composition (psi_{w_k} o Phi) o ... o
//! (psi_{w_1} o Phi), where Phi is the wide-strip part of the attachment
//! map. Fixed points are found by damped Newton iteration after a sampled
//! cone-and-stretch certificate establishes uniqueness; exactly affine maps
//! fall back to a direct linear-algebra certificate.

use std::collections::BTreeSet;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

use super::{
    linspace, r_strip, BBox, Branch, BranchRole, ConeSpec, HyperbolicCertificate,
    SectionMapModel, FD_STEP,
};

/// A partial self-map of the section with return times.
pub trait SectionMap: Sync {
    fn eval(&self, p: [f64; 2]) -> Option<[f64; 2]>;

    fn eval_with_time(&self, p: [f64; 2]) -> Option<([f64; 2], f64)> {
        self.eval(p).map(|q| (q, 0.0))
    }

    fn differential(&self, p: [f64; 2]) -> Option<Matrix2<f64>> {
        let h = FD_STEP;
        let xp = self.eval([p[0] + h, p[1]])?;
        let xm = self.eval([p[0] - h, p[1]])?;
        let zp = self.eval([p[0], p[1] + h])?;
        let zm = self.eval([p[0], p[1] - h])?;
        Some(Matrix2::new(
            (xp[0] - xm[0]) / (2.0 * h),
            (zp[0] - zm[0]) / (2.0 * h),
            (xp[1] - xm[1]) / (2.0 * h),
            (zp[1] - zm[1]) / (2.0 * h),
        ))
    }

    fn search_region(&self) -> BBox;

    fn domain_samples(&self, n: usize) -> Vec<[f64; 2]> {
        self.search_region()
            .grid(n)
            .into_iter()
            .filter(|&p| self.eval(p).is_some())
            .collect()
    }
}

/// The composition named by a word, over an attachment model `phi` and a
/// boundary-manifold model `psi` (the two may be the same model).
pub struct WordMap<'m> {
    pub word: String,
    phi: &'m SectionMapModel,
    psi: &'m SectionMapModel,
}

impl std::fmt::Debug for WordMap<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WordMap")
            .field("word", &self.word)
            .finish_non_exhaustive()
    }
}

/// Validates the letters and builds the composition lazily.
pub fn compose_word_map<'m>(
    phi: &'m SectionMapModel,
    psi: &'m SectionMapModel,
    word: &str,
) -> Result<WordMap<'m>> {
    for ch in word.chars() {
        psi.letter_branch(ch)?;
    }
    Ok(WordMap {
        word: word.to_string(),
        phi,
        psi,
    })
}

impl<'m> WordMap<'m> {
    fn walk(&self, p: [f64; 2]) -> Option<(Vec<(&'m Branch, [f64; 2])>, [f64; 2], f64)> {
        let mut cur = p;
        let mut total = 0.0;
        let mut steps: Vec<(&Branch, [f64; 2])> = Vec::new();
        if self.word.is_empty() {
            // the empty word acts as the identity on the wide strips
            return if r_strip(cur[0], self.psi.lambda).is_some()
                && cur[1].abs() <= self.psi.z_max
            {
                Some((steps, cur, 0.0))
            } else {
                None
            };
        }
        for ch in self.word.chars() {
            let (b, q, t) = self.phi.apply_bypass(cur)?;
            steps.push((b, cur));
            cur = q;
            total += t;
            let br = self.psi.letter_branch(ch).ok()?;
            let (q2, t2) = br.apply(cur[0], cur[1])?;
            steps.push((br, cur));
            cur = q2;
            total += t2;
        }
        Some((steps, cur, total))
    }

    pub fn eval(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        self.walk(p).map(|(_, q, _)| q)
    }

    pub fn eval_with_time(&self, p: [f64; 2]) -> Option<([f64; 2], f64)> {
        self.walk(p).map(|(_, q, t)| (q, t))
    }

    /// Chain-rule differential along the realized branch sequence.
    pub fn differential(&self, p: [f64; 2]) -> Option<Matrix2<f64>> {
        let (steps, _, _) = self.walk(p)?;
        let mut j = Matrix2::identity();
        for (b, at) in steps {
            j = b.diff_at(at[0], at[1]) * j;
        }
        Some(j)
    }

    /// Applies only the first `prefix` letters.
    pub fn partial_shift(&self, p: [f64; 2], prefix: usize) -> Option<[f64; 2]> {
        let mut cur = p;
        for ch in self.word.chars().take(prefix) {
            let (_, q, _) = self.phi.apply_bypass(cur)?;
            cur = q;
            let (q2, _) = self.psi.letter_branch(ch).ok()?.apply(cur[0], cur[1])?;
            cur = q2;
        }
        Some(cur)
    }

    /// Sum of the nominal chord actions along the word.
    pub fn action(&self) -> f64 {
        self.word
            .chars()
            .filter_map(|ch| self.psi.letter_branch(ch).ok())
            .filter_map(|b| b.chord_action)
            .sum()
    }

    /// Sum of the half-turn gradings along the word.
    pub fn cz_index(&self) -> i64 {
        self.word
            .chars()
            .filter_map(|ch| self.psi.letter_branch(ch).ok())
            .map(|b| b.mu_tilde)
            .sum()
    }

    /// Number of branch applications the walk completes before leaving a
    /// domain, capped at twice the word length.
    fn walk_depth(&self, p: [f64; 2]) -> usize {
        let mut cur = p;
        let mut d = 0;
        for ch in self.word.chars() {
            match self.phi.apply_bypass(cur) {
                Some((_, q, _)) => {
                    cur = q;
                    d += 1;
                }
                None => return d,
            }
            match self
                .psi
                .letter_branch(ch)
                .ok()
                .and_then(|b| b.apply(cur[0], cur[1]))
            {
                Some((q, _)) => {
                    cur = q;
                    d += 1;
                }
                None => return d,
            }
        }
        d
    }

    /// Nested bracketing of the feasible heights over one x column. The
    /// expanding direction makes the full-word domain a sliver whose width
    /// shrinks geometrically with the word length, so each extra step of
    /// feasibility is re-bracketed by a fresh scan of the current interval.
    fn column_feasible_z(&self, x: f64, z_lo: f64, z_hi: f64) -> Option<(f64, f64)> {
        const SCAN: usize = 96;
        let target = 2 * self.word.chars().count();
        let mut lo = z_lo;
        let mut hi = z_hi;
        let mut need = 1;
        while need <= target {
            let mut found: Option<(f64, f64)> = None;
            for z in linspace(lo, hi, SCAN) {
                if self.walk_depth([x, z]) >= need {
                    found = Some(match found {
                        None => (z, z),
                        Some((a, _)) => (a, z),
                    });
                }
            }
            let (a, b) = found?;
            let pad = (hi - lo) / (SCAN - 1) as f64;
            lo = (a - pad).max(z_lo);
            hi = (b + pad).min(z_hi);
            need += 1;
        }
        Some((lo, hi))
    }

    pub fn domain_samples(&self, n: usize) -> Vec<[f64; 2]> {
        if self.word.is_empty() {
            return SectionMap::domain_samples(self, n);
        }
        let mut out = Vec::new();
        for b in self.phi.branches_with_role(BranchRole::Bypass) {
            let bb = b.dom.bbox();
            for x in linspace(bb.x0, bb.x1, n.max(2)) {
                if let Some((lo, hi)) = self.column_feasible_z(x, bb.z0, bb.z1) {
                    for z in linspace(lo, hi, 5) {
                        if self.eval([x, z]).is_some() {
                            out.push([x, z]);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn is_empty(&self, n: usize) -> bool {
        self.domain_samples(n).is_empty()
    }
}

impl SectionMap for WordMap<'_> {
    fn eval(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        WordMap::eval(self, p)
    }

    fn eval_with_time(&self, p: [f64; 2]) -> Option<([f64; 2], f64)> {
        WordMap::eval_with_time(self, p)
    }

    fn differential(&self, p: [f64; 2]) -> Option<Matrix2<f64>> {
        WordMap::differential(self, p)
    }

    fn search_region(&self) -> BBox {
        let mut b = BBox::new(
            f64::INFINITY,
            f64::NEG_INFINITY,
            -self.psi.z_max,
            self.psi.z_max,
        );
        let boxes: Vec<BBox> = if self.word.is_empty() {
            (-1..=4)
                .map(|k| {
                    BBox::new(
                        k as f64 * std::f64::consts::PI / 2.0 + self.psi.lambda,
                        (k + 1) as f64 * std::f64::consts::PI / 2.0 - self.psi.lambda,
                        -self.psi.z_max,
                        self.psi.z_max,
                    )
                })
                .collect()
        } else {
            self.phi
                .branches_with_role(BranchRole::Bypass)
                .iter()
                .map(|br| br.dom.bbox())
                .collect()
        };
        for bb in boxes {
            b.x0 = b.x0.min(bb.x0);
            b.x1 = b.x1.max(bb.x1);
            b.z0 = b.z0.min(bb.z0);
            b.z1 = b.z1.max(bb.z1);
        }
        b
    }

    fn domain_samples(&self, n: usize) -> Vec<[f64; 2]> {
        if self.word.is_empty() {
            return self
                .search_region()
                .grid(n)
                .into_iter()
                .filter(|&p| WordMap::eval(self, p).is_some())
                .collect();
        }
        WordMap::domain_samples(self, n)
    }
}

fn canonical_rotation(word: &[char]) -> String {
    let n = word.len();
    (0..n)
        .map(|r| word.iter().cycle().skip(r).take(n).collect::<String>())
        .min()
        .unwrap_or_default()
}

/// Cyclic words with total action strictly below the bound, one canonical
/// representative per rotation class, sorted by (action, word).
pub fn enumerate_words(letters: &[(char, f64)], k_bound: f64) -> Result<Vec<String>> {
    if letters.is_empty() {
        return Err(Error::Parameter("the letter alphabet is empty".into()));
    }
    if !(k_bound > 0.0 && k_bound.is_finite()) {
        return Err(Error::Parameter(format!(
            "the action bound must be positive and finite, got {k_bound}"
        )));
    }
    let mut letters: Vec<(char, f64)> = letters.to_vec();
    letters.sort_by_key(|e| e.0);
    for w in letters.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::Parameter(format!("duplicate letter {}", w[0].0)));
        }
    }
    let min_action = letters
        .iter()
        .map(|&(ch, t)| {
            if t > 0.0 {
                Ok(t)
            } else {
                Err(Error::Parameter(format!(
                    "letter {ch} has non-positive action {t}"
                )))
            }
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if k_bound / min_action > 20.0 {
        return Err(Error::Parameter(format!(
            "the bound {k_bound} admits words longer than 20 letters; refusing the exhaustive scan"
        )));
    }

    let mut classes: BTreeSet<String> = BTreeSet::new();
    let mut stack: Vec<char> = Vec::new();
    fn dfs(
        letters: &[(char, f64)],
        bound: f64,
        acc: f64,
        stack: &mut Vec<char>,
        classes: &mut BTreeSet<String>,
    ) {
        for &(ch, t) in letters {
            if acc + t < bound {
                stack.push(ch);
                classes.insert(canonical_rotation(stack));
                dfs(letters, bound, acc + t, stack, classes);
                stack.pop();
            }
        }
    }
    dfs(&letters, k_bound, 0.0, &mut stack, &mut classes);

    let action_of = |w: &str| -> f64 {
        w.chars()
            .map(|c| letters.iter().find(|e| e.0 == c).map(|e| e.1).unwrap_or(0.0))
            .sum()
    };
    let mut out: Vec<String> = classes.into_iter().collect();
    out.sort_by(|a, b| {
        action_of(a)
            .total_cmp(&action_of(b))
            .then_with(|| a.cmp(b))
    });
    Ok(out)
}

/// Letter alphabet read off the chord branches of a model.
pub fn chord_letters(model: &SectionMapModel) -> Result<Vec<(char, f64)>> {
    let mut v: Vec<(char, f64)> = Vec::new();
    for b in model.branches_with_role(BranchRole::Chord) {
        let tail = b.label.strip_prefix("psi_").ok_or_else(|| {
            Error::Format(format!(
                "chord branch label {} is not of the form psi_<letter>",
                b.label
            ))
        })?;
        let mut chars = tail.chars();
        let ch = match (chars.next(), chars.next()) {
            (Some(c), None) => c,
            _ => {
                return Err(Error::Format(format!(
                    "chord branch label {} does not end in a single letter",
                    b.label
                )))
            }
        };
        let action = b.chord_action.ok_or_else(|| {
            Error::Precondition(format!("chord branch {} lacks a nominal action", b.label))
        })?;
        v.push((ch, action));
    }
    v.sort_by_key(|e| e.0);
    for w in v.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::Format(format!(
                "two chord branches share the letter {}",
                w[0].0
            )));
        }
    }
    Ok(v)
}

/// Result of a certified fixed-point search.
#[derive(Clone, Debug, Serialize)]
pub struct FixedPointOutcome {
    pub point: [f64; 2],
    pub period: Option<f64>,
    pub residual: f64,
    pub newton_iterations: usize,
    pub used_fallback: bool,
    pub certificate: HyperbolicCertificate,
}

fn residual_at(map: &dyn SectionMap, p: [f64; 2]) -> Option<f64> {
    let f = map.eval(p)?;
    Some((f[0] - p[0]).hypot(f[1] - p[1]))
}

/// Convergence test for a candidate fixed point. Deep composites stretch by
/// the product of the branch expansions, so their residual floor is that
/// factor times the rounding of the coordinates; the raw residual alone
/// would reject points that are exact to the last representable digit. A
/// candidate is accepted when the residual is small outright, or when the
/// Newton correction it implies is below coordinate resolution.
fn location_converged(map: &dyn SectionMap, p: [f64; 2]) -> bool {
    let Some(f) = map.eval(p) else {
        return false;
    };
    let r = Vector2::new(f[0] - p[0], f[1] - p[1]);
    let scale = 1.0 + p[0].hypot(p[1]);
    if r.norm() < 1e-9 {
        return true;
    }
    let Some(j) = map.differential(p) else {
        return false;
    };
    let Some(mi) = (j - Matrix2::identity()).try_inverse() else {
        return false;
    };
    (mi * r).norm() < 1e-10 * scale
}

fn newton_from(map: &dyn SectionMap, seed: [f64; 2], max_iter: usize) -> Option<([f64; 2], usize)> {
    let mut p = seed;
    for it in 0..max_iter {
        let f = map.eval(p)?;
        let r = Vector2::new(f[0] - p[0], f[1] - p[1]);
        if r.norm() < 1e-13 * (1.0 + p[0].hypot(p[1])) {
            return Some((p, it));
        }
        let j = map.differential(p)?;
        let m = j - Matrix2::identity();
        let d = m.try_inverse()? * r;
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..30 {
            let cand = [p[0] - scale * d[0], p[1] - scale * d[1]];
            if map.eval(cand).is_some() {
                p = cand;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    Some((p, max_iter))
}

/// Bisection on the one-dimensional graph transform: for each height z the
/// horizontal coordinate is relaxed to its fixed value, then the height
/// equation is solved by sign change.
fn graph_transform_fallback(map: &dyn SectionMap, seed: [f64; 2]) -> Option<[f64; 2]> {
    let region = map.search_region();
    let x_fix = |z: f64| -> Option<f64> {
        let mut x = seed[0];
        for _ in 0..120 {
            let nx = map.eval([x, z])?[0];
            if (nx - x).abs() < 1e-14 {
                return Some(nx);
            }
            x = nx;
        }
        Some(x)
    };
    let g = |z: f64| -> Option<f64> {
        let x = x_fix(z)?;
        Some(map.eval([x, z])?[1] - z)
    };
    let zs = linspace(region.z0, region.z1, 400);
    let vals: Vec<(usize, f64, f64)> = zs
        .iter()
        .enumerate()
        .filter_map(|(i, &z)| g(z).map(|gv| (i, z, gv)))
        .collect();
    let mut bracket: Option<(f64, f64, f64)> = None;
    for w in vals.windows(2) {
        let (i0, z0, g0) = w[0];
        let (i1, z1, g1) = w[1];
        if i1 == i0 + 1 && g0 * g1 <= 0.0 {
            let dist = (0.5 * (z0 + z1) - seed[1]).abs();
            if bracket.map_or(true, |b| b.2 > dist) {
                bracket = Some((z0, z1, dist));
            }
        }
    }
    let (mut lo, mut hi, _) = bracket?;
    let mut glo = g(lo)?;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if glo * gm <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            glo = gm;
        }
    }
    let z = 0.5 * (lo + hi);
    Some([x_fix(z)?, z])
}

fn certify_map(
    map: &dyn SectionMap,
    cone_a: f64,
    cone_nu: f64,
    expansion: f64,
    samples: &[[f64; 2]],
) -> Result<HyperbolicCertificate> {
    let mut cert = HyperbolicCertificate::new(samples.len());
    let cone_v = ConeSpec::vertical(cone_a);
    let cone_h = ConeSpec::horizontal(cone_nu);
    let jacs: Vec<([f64; 2], Matrix2<f64>)> = samples
        .par_iter()
        .filter_map(|&p| map.differential(p).map(|j| (p, j)))
        .collect();
    if jacs.is_empty() {
        return Err(Error::Numerical(
            "no differentials could be evaluated on the sampled domain".into(),
        ));
    }
    let worst = jacs
        .par_iter()
        .map(|&(p, j)| {
            let ji = j.try_inverse();
            let mut m = [f64::INFINITY; 5];
            for v in cone_v.rays(p, 9) {
                let w = j * Vector2::new(v[0], v[1]);
                m[0] = m[0].min(cone_v.margin(p, [w[0], w[1]]));
                m[2] = m[2].min(w.norm() - expansion);
            }
            for v in cone_h.rays(p, 9) {
                match &ji {
                    Some(mi) => {
                        let w = mi * Vector2::new(v[0], v[1]);
                        m[1] = m[1].min(cone_h.margin(p, [w[0], w[1]]));
                        m[3] = m[3].min(w.norm() - expansion);
                    }
                    None => {
                        m[1] = f64::NEG_INFINITY;
                        m[3] = f64::NEG_INFINITY;
                    }
                }
            }
            m[4] = 1.0 - (j[(0, 0)].abs() + j[(0, 1)].abs());
            m
        })
        .reduce(
            || [f64::INFINITY; 5],
            |a, b| {
                [
                    a[0].min(b[0]),
                    a[1].min(b[1]),
                    a[2].min(b[2]),
                    a[3].min(b[3]),
                    a[4].min(b[4]),
                ]
            },
        );
    cert.record("cone_v_invariant", worst[0]);
    cert.record("cone_h_inverse_invariant", worst[1]);
    cert.record("stretch_vertical", worst[2]);
    cert.record("stretch_horizontal_inverse", worst[3]);
    cert.record("graph_transform_contraction", worst[4]);
    Ok(cert)
}

fn affine_certificate(
    map: &dyn SectionMap,
    samples: &[[f64; 2]],
) -> Result<Option<HyperbolicCertificate>> {
    let jacs: Vec<Matrix2<f64>> = samples
        .iter()
        .filter_map(|&p| map.differential(p))
        .collect();
    if jacs.is_empty() {
        return Ok(None);
    }
    let j0 = jacs[0];
    let deviation = jacs
        .iter()
        .map(|j| (j - j0).abs().max())
        .fold(0.0f64, f64::max);
    if deviation > 1e-9 {
        return Ok(None);
    }
    let unit = (j0 - Matrix2::identity()).determinant().abs();
    let mut cert = HyperbolicCertificate::new(samples.len());
    cert.record("affine_unique", unit - 1e-9);
    if unit <= 1e-9 {
        return Err(Error::Degenerate(format!(
            "the sampled differential is constant with det(J - I) = {unit:.3e}; \
             the fixed set need not be a single point"
        )));
    }
    Ok(Some(cert))
}

fn fixed_point_inner(
    map: &dyn SectionMap,
    cone_a: f64,
    cone_nu: f64,
    expansion: f64,
    seed: Option<[f64; 2]>,
) -> Result<FixedPointOutcome> {
    if !(expansion > 2.0) {
        return Err(Error::Parameter(format!(
            "the stretch factor must exceed 2, got {expansion}"
        )));
    }
    if !(cone_a > 0.0 && cone_nu > 0.0) {
        return Err(Error::Parameter(
            "cone apertures must be positive".into(),
        ));
    }
    let samples = map.domain_samples(48);
    if samples.is_empty() {
        return Err(Error::Precondition(
            "the map has empty domain; no fixed point to certify".into(),
        ));
    }
    let cone_cert = certify_map(map, cone_a, cone_nu, expansion, &samples)?;
    let certificate = if cone_cert.passed() {
        cone_cert
    } else {
        match affine_certificate(map, &samples)? {
            Some(mut affine) => {
                for (k, v) in &cone_cert.conditions {
                    affine.conditions.insert(format!("sampled_{k}"), *v);
                }
                affine
            }
            None => {
                let (name, margin) = cone_cert.worst().unwrap_or(("empty", f64::NAN));
                return Err(Error::Precondition(format!(
                    "cone certification failed ({name} margin {margin:.3e}) and the map is not affine"
                )));
            }
        }
    };

    let mut ranked: Vec<([f64; 2], f64)> = samples
        .iter()
        .filter_map(|&p| residual_at(map, p).map(|r| (p, r)))
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    // the caller's seed is tried first; ranked samples cover the other
    // domain components, since a seed may sit in one that the map never
    // returns to
    let mut seeds: Vec<[f64; 2]> = Vec::new();
    if let Some(s) = seed {
        seeds.push(s);
    }
    for (p, _) in &ranked {
        if seeds
            .iter()
            .all(|q| (q[0] - p[0]).hypot(q[1] - p[1]) > 0.25)
        {
            seeds.push(*p);
        }
        if seeds.len() >= 5 {
            break;
        }
    }

    let mut converged: Vec<([f64; 2], usize)> = Vec::new();
    for s in &seeds {
        if let Some((p, it)) = newton_from(map, *s, 60) {
            if location_converged(map, p) {
                converged.push((p, it));
            }
        }
    }
    let mut used_fallback = false;
    if converged.is_empty() {
        let start = seeds.first().copied().unwrap_or(ranked[0].0);
        let p = graph_transform_fallback(map, start).ok_or_else(|| {
            Error::Numerical("the fixed point search failed to converge".into())
        })?;
        let (p, it) = newton_from(map, p, 20).unwrap_or((p, 20));
        if !location_converged(map, p) {
            return Err(Error::Numerical(
                "the fixed point search failed to converge".into(),
            ));
        }
        used_fallback = true;
        converged.push((p, it));
    }
    for i in 1..converged.len() {
        let a = converged[0].0;
        let b = converged[i].0;
        if (a[0] - b[0]).hypot(a[1] - b[1]) > 1e-7 {
            return Err(Error::Numerical(format!(
                "seeds converged to distinct fixed points ({:?} and {:?})",
                a, b
            )));
        }
    }
    let (point, newton_iterations) = converged[0];
    let residual = residual_at(map, point).unwrap_or(f64::NAN);
    let period = map.eval_with_time(point).map(|(_, t)| t);
    Ok(FixedPointOutcome {
        point,
        period,
        residual,
        newton_iterations,
        used_fallback,
        certificate,
    })
}

/// Certifies uniqueness and locates the fixed point of a section map.
///
/// The cone pair (vertical aperture `cone_a`, horizontal aperture
/// `cone_nu`) must be preserved with stretch at least `expansion > 2` in
/// both directions; exactly affine maps with det(J - I) away from zero are
/// accepted directly. Seeds are chosen from the sampled domain and all
/// converged runs must agree.
pub fn unique_fixed_point(
    map: &dyn SectionMap,
    cone_a: f64,
    cone_nu: f64,
    expansion: f64,
) -> Result<FixedPointOutcome> {
    fixed_point_inner(map, cone_a, cone_nu, expansion, None)
}

/// Same as [`unique_fixed_point`] but starting Newton from a caller seed.
pub fn unique_fixed_point_seeded(
    map: &dyn SectionMap,
    cone_a: f64,
    cone_nu: f64,
    expansion: f64,
    seed: [f64; 2],
) -> Result<FixedPointOutcome> {
    fixed_point_inner(map, cone_a, cone_nu, expansion, Some(seed))
}

/// One row of the periodic-orbit table.
#[derive(Clone, Debug, Serialize)]
pub struct WordFixedPoint {
    pub word: String,
    pub x: f64,
    pub z: f64,
    pub period: f64,
    pub cz_index: i64,
    pub action: f64,
    pub window: (f64, f64),
    pub window_ok: bool,
    pub newton_iterations: usize,
}

/// Fixed points of every admissible cyclic word below the action bound.
pub fn fixed_point_table(
    phi: &SectionMapModel,
    psi: &SectionMapModel,
    k_bound: f64,
    cone_a: f64,
    cone_nu: f64,
    expansion: f64,
) -> Result<Vec<WordFixedPoint>> {
    let letters = chord_letters(psi)?;
    if letters.is_empty() {
        return Err(Error::Precondition(
            "the boundary model has no chord branches".into(),
        ));
    }
    let tau = psi.params.get("tau").copied().unwrap_or(1.0);
    let words = enumerate_words(&letters, k_bound)?;
    words
        .par_iter()
        .map(|w| {
            let wm = compose_word_map(phi, psi, w)?;
            let out = unique_fixed_point(&wm, cone_a, cone_nu, expansion)?;
            let period = out.period.unwrap_or(f64::NAN);
            let k = w.chars().count() as f64;
            let action = wm.action();
            let window = (action - 9.0 * k * tau, action + 9.0 * k * tau);
            Ok(WordFixedPoint {
                word: w.clone(),
                x: out.point[0],
                z: out.point[1],
                period,
                cz_index: wm.cz_index(),
                action,
                window,
                window_ok: period > window.0 && period < window.1,
                newton_iterations: out.newton_iterations,
            })
        })
        .collect()
}

/// Serializes the table with columns word,x,z,period,cz_index.
pub fn table_to_csv(rows: &[WordFixedPoint]) -> String {
    let mut out = String::from("word,x,z,period,cz_index\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.12},{:.12},{:.12},{}\n",
            r.word, r.x, r.z, r.period, r.cz_index
        ));
    }
    out
}
