//! A hand-built section map with the full branch structure: four wide-strip
//! attachment branches, two chord branches, and drifting thin-strip
//! components for both maps. Branch maps are exactly affine (so every
//! certificate margin is reproducible); only the return-time fields carry a
//! smooth wobble.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::Serialize;

use crate::error::{Error, Result};

use super::{
    q_margin, q_strip, BBox, Branch, BranchRole, FiberKind, Rect, SectionMapModel,
};

const Z_MAX: f64 = 0.2;

fn strip(k: i32, lambda: f64) -> (f64, f64) {
    (
        k as f64 * PI / 2.0 + lambda,
        (k + 1) as f64 * PI / 2.0 - lambda,
    )
}

/// Affine branch sending the domain box to the image box with the two
/// coordinates exchanged: x_out depends on z_in and vice versa.
fn antidiag_branch(
    label: &str,
    role: BranchRole,
    dom: BBox,
    im: BBox,
    dom_kind: FiberKind,
    im_kind: FiberKind,
    time: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
) -> Branch {
    let cx = (im.x1 - im.x0) / (dom.z1 - dom.z0);
    let cz = (im.z1 - im.z0) / (dom.x1 - dom.x0);
    let (dx0, dz0, ix0, iz0) = (dom.x0, dom.z0, im.x0, im.z0);
    Branch::new(
        label,
        role,
        Rect::axis_aligned(dom, dom_kind),
        Rect::axis_aligned(im, im_kind),
        Box::new(move |x, z| [ix0 + cx * (z - dz0), iz0 + cz * (x - dx0)]),
        time,
    )
    .with_inverse(Box::new(move |x, z| {
        [dx0 + (z - iz0) / cz, dz0 + (x - ix0) / cx]
    }))
    .with_differential(Box::new(move |_, _| Matrix2::new(0.0, cx, cz, 0.0)))
}

/// Thin-strip drift component around x = k pi: contracts x toward the
/// center and pushes z up on even strips, down on odd ones.
fn drift_branch(
    label: &str,
    role: BranchRole,
    k: i32,
    rho: f64,
    drift: f64,
    lambda: f64,
    time: f64,
) -> Branch {
    let center = k as f64 * PI;
    let eps_q = lambda / 100.0;
    let delta = 0.005;
    let signed = if k % 2 == 0 { drift } else { -drift };
    let (dz0, dz1) = if k % 2 == 0 {
        (-Z_MAX + delta, Z_MAX - delta - drift)
    } else {
        (-Z_MAX + delta + drift, Z_MAX - delta)
    };
    let half = lambda / 2.0 - eps_q;
    let dom = BBox::new(center - half, center + half, dz0, dz1);
    let im = BBox::new(
        center - rho * half,
        center + rho * half,
        dz0 + signed,
        dz1 + signed,
    );
    Branch::new(
        label,
        role,
        Rect::axis_aligned(dom, FiberKind::Horizontal),
        Rect::axis_aligned(im, FiberKind::Horizontal),
        Box::new(move |x, z| [center + rho * (x - center), z + signed]),
        Box::new(move |_, _| time),
    )
    .with_inverse(Box::new(move |x, z| {
        [center + (x - center) / rho, z - signed]
    }))
    .with_differential(Box::new(move |_, _| Matrix2::new(rho, 0.0, 0.0, 1.0)))
    .with_q_index(k)
}

/// Builds the synthetic attachment-and-return model.
///
/// All five parameters are required to be positive, with `lambda < pi/8`,
/// `eta < 1`, and `cone_a > nu`. The attachment slabs are sized so that the
/// shear exceeds the cone and stretch thresholds with a fixed ratio,
/// whatever the parameters.
pub fn synthetic_bypass_map(
    lambda: f64,
    nu: f64,
    tau: f64,
    cone_a: f64,
    eta: f64,
) -> Result<SectionMapModel> {
    for (name, v) in [
        ("lambda", lambda),
        ("nu", nu),
        ("tau", tau),
        ("cone_a", cone_a),
        ("eta", eta),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Parameter(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    if lambda >= PI / 8.0 {
        return Err(Error::Parameter(format!(
            "lambda must be below pi/8, got {lambda}"
        )));
    }
    if eta >= 1.0 {
        return Err(Error::Parameter(format!(
            "eta must be below 1 so that 1/eta expands, got {eta}"
        )));
    }
    if cone_a <= nu {
        return Err(Error::Parameter(format!(
            "cone_a must exceed nu, got cone_a = {cone_a}, nu = {nu}"
        )));
    }

    let w = PI / 2.0 - 2.0 * lambda;
    // slab height: keeps the shear w/h above both the stretch threshold
    // sqrt(1 + A^2)/eta and the cone threshold sqrt(A/nu), with margin
    let h = [
        0.04,
        0.45 * w * eta / (1.0 + cone_a * cone_a).sqrt(),
        0.9 * w * (nu / cone_a).sqrt(),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);

    let s: Vec<(f64, f64)> = (0..4).map(|k| strip(k, lambda)).collect();
    let slab = |k: usize, base: f64| BBox::new(s[k].0, s[k].1, base, base + h);

    let phi_time = move |x: f64, z: f64| tau * (1.75 + 0.25 * (2.0 * x + 3.0 * z).sin());
    let mut branches = Vec::new();
    // entry slabs sit below zero in strip 0 and above zero in strip 1;
    // exit slabs mirror this in strips 2 and 3
    let placements = [
        ("phi_00", 0usize, -0.16, 2usize, -0.16),
        ("phi_01", 0, -0.08, 3, 0.02),
        ("phi_10", 1, 0.02, 2, -0.08),
        ("phi_11", 1, 0.10, 3, 0.10),
    ];
    for (label, kd, zd, ki, zi) in placements {
        branches.push(antidiag_branch(
            label,
            BranchRole::Bypass,
            slab(kd, zd),
            slab(ki, zi),
            FiberKind::Vertical,
            FiberKind::Vertical,
            Box::new(phi_time),
        ));
    }

    let eps_x = 0.005;
    let eps_z = 0.004;
    let band_half = 0.8 * Z_MAX - eps_x;
    let chord_slope_x = 0.8;
    let chord_slope_z = 1.25;
    for (label, kd, ki, nominal) in [("psi_a", 2usize, 0usize, 1.0), ("psi_b", 3, 1, 1.3)] {
        let xc_d = 0.5 * (s[kd].0 + s[kd].1);
        let xc_i = 0.5 * (s[ki].0 + s[ki].1);
        let dom = BBox::new(xc_d - band_half, xc_d + band_half, -Z_MAX + eps_z, Z_MAX - eps_z);
        let im = BBox::new(
            xc_i - chord_slope_x * (Z_MAX - eps_z),
            xc_i + chord_slope_x * (Z_MAX - eps_z),
            -chord_slope_z * band_half,
            chord_slope_z * band_half,
        );
        let wobble = 0.3 * tau.min(1.0);
        branches.push(
            antidiag_branch(
                label,
                BranchRole::Chord,
                dom,
                im,
                FiberKind::Horizontal,
                FiberKind::Horizontal,
                Box::new(move |x, z| nominal + wobble * (x + z).sin()),
            )
            .with_chord(nominal, 1)
            .with_segments(PI / 2.0, PI / 2.0),
        );
    }

    for k in 0..=2 {
        branches.push(drift_branch(
            &format!("psi0_q{k}"),
            BranchRole::SurfaceDrift,
            k,
            0.8,
            0.03,
            lambda,
            0.4,
        ));
        branches.push(drift_branch(
            &format!("phi0_q{k}"),
            BranchRole::BypassDrift,
            k,
            0.85,
            0.025,
            lambda,
            0.5 * tau,
        ));
    }

    let mut params = BTreeMap::new();
    params.insert("lambda".into(), lambda);
    params.insert("nu".into(), nu);
    params.insert("tau".into(), tau);
    params.insert("cone_a".into(), cone_a);
    params.insert("eta".into(), eta);
    params.insert("slab_height".into(), h);
    params.insert("T_a".into(), 1.0);
    params.insert("T_b".into(), 1.3);

    let model = SectionMapModel {
        label: format!("synthetic bypass (lambda = {lambda})"),
        lambda,
        z_max: Z_MAX,
        branches,
        params,
    };
    model.validate()?;
    Ok(model)
}

/// One drift chain out of the thin strips.
#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub start: [f64; 2],
    pub strip: i32,
    pub forward: bool,
    pub increasing: bool,
    pub z_sequence: Vec<f64>,
    pub exit_iteration: usize,
    pub monotone: bool,
    pub violation: Option<String>,
}

/// Follows a point of the thin strips through the alternating drift
/// components until the chain leaves their domains, checking that z moves
/// strictly monotonically. Points with the drift pointing against the exit
/// direction are followed backwards.
pub fn q_lambda_escape(
    map: &SectionMapModel,
    p: [f64; 2],
    max_iter: usize,
) -> Result<DriftReport> {
    let strip = q_strip(p[0], map.lambda).ok_or_else(|| {
        Error::Precondition(format!(
            "start point ({}, {}) lies outside the thin strips",
            p[0], p[1]
        ))
    })?;
    if q_margin(p[0], p[1], map.lambda, map.z_max) < 0.0 {
        return Err(Error::Precondition(format!(
            "start point ({}, {}) lies outside the thin strips",
            p[0], p[1]
        )));
    }
    let k_even = strip.rem_euclid(2) == 0;
    let backward = if p[1] >= 0.0 { !k_even } else { k_even };
    let increasing = k_even ^ backward;

    let mut cur = p;
    let mut zs = vec![p[1]];
    let mut monotone = true;
    let mut violation = None;
    let mut steps = 0usize;
    while steps < max_iter {
        let role = match (backward, steps % 2) {
            (false, 0) => BranchRole::BypassDrift,
            (false, _) => BranchRole::SurfaceDrift,
            (true, 0) => BranchRole::SurfaceDrift,
            (true, _) => BranchRole::BypassDrift,
        };
        let branch = match map.drift_branch(role, strip) {
            Some(b) => b,
            None => break,
        };
        let next = if backward {
            branch.apply_inverse(cur[0], cur[1])
        } else {
            branch.apply(cur[0], cur[1]).map(|(q, _)| q)
        };
        let next = match next {
            Some(q) => q,
            None => break,
        };
        let dz = next[1] - cur[1];
        let ok = if increasing { dz > 0.0 } else { dz < 0.0 };
        if !ok {
            monotone = false;
            violation = Some(format!(
                "z moved from {} to {} against the exit direction at step {}",
                cur[1], next[1], steps
            ));
            break;
        }
        cur = next;
        zs.push(next[1]);
        steps += 1;
    }
    if steps == max_iter {
        violation = Some(format!("no exit within {max_iter} drift steps"));
    }
    Ok(DriftReport {
        start: p,
        strip,
        forward: !backward,
        increasing,
        z_sequence: zs,
        exit_iteration: steps,
        monotone,
        violation,
    })
}
