//! Explicit contact forms on product charts and their Reeb fields.
//!
//! Every model is a one-form
//!
//! ```text
//! alpha = G(x, y) dx + F(x) dy + P(x, y, z) cos(x) dz
//! ```
//!
//! on a chart box, with coefficient field `W = (G, F, P cos x)`. The Reeb
//! field is `R = curl W / (W . curl W)` and the scalar `W . curl W` is the
//! contact volume density; positivity of that density on the chart is the
//! contact condition.

pub mod profiles;

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};

pub use profiles::{shear_ramp, smooth_step, wrap_angle, BumpProfile, Jet, ProfileFamily};

/// A point in a model chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ChartPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        ChartPoint { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        ChartPoint {
            x: a[0],
            y: a[1],
            z: a[2],
        }
    }
}

/// Chart bounds. `y_s` records the y-level of the boundary surface carrying
/// dividing-set arcs; `z_periodic` marks a circle-valued z of circumference
/// 2 pi (the z bound is then ignored by containment checks and trajectories
/// track the real lift of z). The optional `n` and `eta` carry the window
/// count and the boundary margin of solid-torus charts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub y_s: f64,
    pub z_max: f64,
    pub z_periodic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl ChartBox {
    const TOL: f64 = 1e-9;

    pub fn contains(&self, p: ChartPoint) -> bool {
        let in_x = p.x >= self.x_min - Self::TOL && p.x <= self.x_max + Self::TOL;
        let in_y = p.y >= self.y_min - Self::TOL && p.y <= self.y_max + Self::TOL;
        let in_z = self.z_periodic || p.z.abs() <= self.z_max + Self::TOL;
        in_x && in_y && in_z
    }
}

/// The model variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "Standard")]
    Standard,
    #[serde(rename = "ThickenedPerturbed_alpha_p")]
    ThickenedPerturbedAlphaP,
    #[serde(rename = "BypassAdapted_alpha_b")]
    BypassAdaptedAlphaB,
    #[serde(rename = "SolidTorus_alpha")]
    SolidTorusAlpha,
    #[serde(rename = "SolidTorus_alpha_p")]
    SolidTorusAlphaP,
    #[serde(rename = "SolidTorus_alpha_b")]
    SolidTorusAlphaB,
}

/// A contact model: variant, chart box, and named profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactModel {
    pub variant: Variant,
    #[serde(rename = "box")]
    pub chart: ChartBox,
    pub profiles: BTreeMap<String, BumpProfile>,
}

/// Coefficient field W and its matrix of first partials at a point;
/// `dw[i][j]` is the partial of `W_i` in the j-th coordinate.
#[derive(Clone, Copy, Debug)]
pub struct FormJet {
    pub w: [f64; 3],
    pub dw: [[f64; 3]; 3],
}

impl FormJet {
    pub fn curl(&self) -> [f64; 3] {
        [
            self.dw[2][1] - self.dw[1][2],
            self.dw[0][2] - self.dw[2][0],
            self.dw[1][0] - self.dw[0][1],
        ]
    }

    /// Contact volume density W . curl W.
    pub fn volume(&self) -> f64 {
        let c = self.curl();
        self.w[0] * c[0] + self.w[1] * c[1] + self.w[2] * c[2]
    }
}

fn thickened_box() -> ChartBox {
    ChartBox {
        x_min: -3.0 * FRAC_PI_4,
        x_max: 3.0 * FRAC_PI_4,
        y_min: -1.0,
        y_max: 1.0,
        y_s: 1.0,
        z_max: PI,
        z_periodic: true,
        n: None,
        eta: None,
    }
}

impl ContactModel {
    /// alpha = sin(x) dy + cos(x) dz on [-pi, pi] x [-1, 1] x S^1.
    pub fn standard() -> Self {
        ContactModel {
            variant: Variant::Standard,
            chart: ChartBox {
                x_min: -PI,
                x_max: PI,
                y_min: -1.0,
                y_max: 1.0,
                y_s: 1.0,
                z_max: PI,
                z_periodic: true,
                n: None,
                eta: None,
            },
            profiles: BTreeMap::new(),
        }
    }

    /// alpha_p = f(x) dy + (1 + k(x) l(y)) cos(x) dz: the perturbation that
    /// opens a hyperbolic annulus around the x = 0 divide.
    pub fn thickened_perturbed() -> Self {
        let mut profiles = BTreeMap::new();
        profiles.insert("f".to_string(), BumpProfile::slope_f());
        profiles.insert("k".to_string(), BumpProfile::cutoff_k());
        profiles.insert("l".to_string(), BumpProfile::convex_l());
        ContactModel {
            variant: Variant::ThickenedPerturbedAlphaP,
            chart: thickened_box(),
            profiles,
        }
    }

    /// alpha_b = f(x) dy + (1 + k(x) l(y) m(z)) cos(x) dz: the z-window in m
    /// reopens travel corridors so Reeb chords can wind in z.
    pub fn bypass_adapted() -> Self {
        let mut model = Self::thickened_perturbed();
        model.variant = Variant::BypassAdaptedAlphaB;
        model
            .profiles
            .insert("m".to_string(), BumpProfile::cutoff_m());
        model
    }

    /// Solid-torus chart with n window slots: alpha = g(x,y) dx + f(x) dy
    /// + cos(x) dz on [-pi + eta, n pi - eta] x [-1, 1] x S^1.
    pub fn solid_torus(n: u32, eta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("solid torus needs n >= 1".into()));
        }
        if !(eta > 0.0 && eta < FRAC_PI_4) {
            return Err(Error::Parameter(format!(
                "eta = {eta} outside (0, pi/4)"
            )));
        }
        let mut profiles = BTreeMap::new();
        profiles.insert("f".to_string(), BumpProfile::slope_f());
        profiles.insert("g".to_string(), BumpProfile::shear_g());
        Ok(ContactModel {
            variant: Variant::SolidTorusAlpha,
            chart: ChartBox {
                x_min: -PI + eta,
                x_max: n as f64 * PI - eta,
                y_min: -1.0,
                y_max: 1.0,
                y_s: 1.0,
                z_max: PI,
                z_periodic: true,
                n: Some(n),
                eta: Some(eta),
            },
            profiles,
        })
    }

    /// Solid torus with the hyperbolic perturbation repeated in each of the
    /// n windows at x = 0, pi, ..., (n-1) pi.
    pub fn solid_torus_perturbed(n: u32, eta: f64) -> Result<Self> {
        let mut model = Self::solid_torus(n, eta)?;
        model.variant = Variant::SolidTorusAlphaP;
        model
            .profiles
            .insert("k".to_string(), BumpProfile::cutoff_k());
        model
            .profiles
            .insert("l".to_string(), BumpProfile::convex_l());
        Ok(model)
    }

    /// Solid torus with both the window perturbation and the z-window.
    pub fn solid_torus_bypass(n: u32, eta: f64) -> Result<Self> {
        let mut model = Self::solid_torus_perturbed(n, eta)?;
        model.variant = Variant::SolidTorusAlphaB;
        model
            .profiles
            .insert("m".to_string(), BumpProfile::cutoff_m());
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chart.x_min < self.chart.x_max && self.chart.y_min < self.chart.y_max) {
            return Err(Error::Parameter("chart box is empty".into()));
        }
        for profile in self.profiles.values() {
            profile.validate()?;
        }
        for role in self.required_roles() {
            if !self.profiles.contains_key(*role) {
                return Err(Error::Parameter(format!(
                    "variant {:?} needs a '{role}' profile",
                    self.variant
                )));
            }
        }
        Ok(())
    }

    fn required_roles(&self) -> &'static [&'static str] {
        match self.variant {
            Variant::Standard => &[],
            Variant::ThickenedPerturbedAlphaP => &["f", "k", "l"],
            Variant::BypassAdaptedAlphaB => &["f", "k", "l", "m"],
            Variant::SolidTorusAlpha => &["f"],
            Variant::SolidTorusAlphaP => &["f", "k", "l"],
            Variant::SolidTorusAlphaB => &["f", "k", "l", "m"],
        }
    }

    fn profile(&self, role: &str) -> &BumpProfile {
        &self.profiles[role]
    }

    fn check_chart(&self, p: ChartPoint) -> Result<()> {
        if self.chart.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfChart {
                x: p.x,
                y: p.y,
                z: p.z,
            })
        }
    }

    /// F(x) with derivatives.
    fn slope(&self, x: f64) -> Jet {
        match self.variant {
            Variant::Standard => Jet {
                value: x.sin(),
                d1: x.cos(),
                d2: -x.sin(),
            },
            _ => self.profile("f").eval(x),
        }
    }

    /// The window sum: k(x) for thickened charts, sum of k(x - j pi) over
    /// the chart windows for solid tori.
    fn window(&self, x: f64) -> Jet {
        let k = self.profile("k");
        match self.variant {
            Variant::SolidTorusAlphaP | Variant::SolidTorusAlphaB => {
                let n = self.chart.n.unwrap_or(1);
                let mut acc = Jet::ZERO;
                for j in 0..n {
                    acc = acc.add(k.eval(x - j as f64 * PI));
                }
                acc
            }
            _ => k.eval(x),
        }
    }

    /// The z-window product over the roles "m", "m2", "m3", ...
    fn z_window(&self, z: f64) -> Jet {
        let mut acc = Jet::ONE;
        for (role, profile) in &self.profiles {
            if role == "m" || (role.starts_with('m') && role[1..].parse::<u32>().is_ok()) {
                acc = acc.mul(profile.eval(z));
            }
        }
        acc
    }

    /// P(x, y, z) and its three partials, as (value, [px, py, pz]).
    fn coefficient_p(&self, p: ChartPoint) -> (f64, [f64; 3]) {
        match self.variant {
            Variant::Standard | Variant::SolidTorusAlpha => (1.0, [0.0, 0.0, 0.0]),
            Variant::ThickenedPerturbedAlphaP | Variant::SolidTorusAlphaP => {
                let k = self.window(p.x);
                let l = self.profile("l").eval(p.y);
                (
                    1.0 + k.value * l.value,
                    [k.d1 * l.value, k.value * l.d1, 0.0],
                )
            }
            Variant::BypassAdaptedAlphaB | Variant::SolidTorusAlphaB => {
                let k = self.window(p.x);
                let l = self.profile("l").eval(p.y);
                let m = self.z_window(p.z);
                (
                    1.0 + k.value * l.value * m.value,
                    [
                        k.d1 * l.value * m.value,
                        k.value * l.d1 * m.value,
                        k.value * l.value * m.d1,
                    ],
                )
            }
        }
    }

    /// G(x, y) and its partials (gx, gy).
    fn coefficient_g(&self, p: ChartPoint) -> (f64, f64, f64) {
        match self.variant {
            Variant::SolidTorusAlpha | Variant::SolidTorusAlphaP | Variant::SolidTorusAlphaB => {
                match self.profiles.get("g") {
                    Some(g) => {
                        let bump = g.eval(p.x);
                        let ramp = shear_ramp(p.y);
                        (
                            bump.value * ramp.value,
                            bump.d1 * ramp.value,
                            bump.value * ramp.d1,
                        )
                    }
                    None => (0.0, 0.0, 0.0),
                }
            }
            _ => (0.0, 0.0, 0.0),
        }
    }

    /// The coefficient field and its first partials.
    pub fn form_jet(&self, p: ChartPoint) -> Result<FormJet> {
        self.check_chart(p)?;
        Ok(self.form_jet_extended(p))
    }

    /// Like [`ContactModel::form_jet`] but without the chart containment
    /// check: the defining formulas are globally smooth, and the integrator
    /// enforces containment through its chart-exit events instead.
    pub fn form_jet_extended(&self, p: ChartPoint) -> FormJet {
        let f = self.slope(p.x);
        let (pv, pd) = self.coefficient_p(p);
        let (g, gx, gy) = self.coefficient_g(p);
        let (sx, cx) = p.x.sin_cos();
        FormJet {
            w: [g, f.value, pv * cx],
            dw: [
                [gx, gy, 0.0],
                [f.d1, 0.0, 0.0],
                [pd[0] * cx - pv * sx, pd[1] * cx, pd[2] * cx],
            ],
        }
    }

    /// Reeb field without the chart check; see
    /// [`ContactModel::form_jet_extended`].
    pub fn reeb_field_extended(&self, p: ChartPoint) -> Result<[f64; 3]> {
        let jet = self.form_jet_extended(p);
        let vol = jet.volume();
        if vol.abs() < 1e-12 {
            return Err(Error::SingularForm {
                value: vol,
                x: p.x,
                y: p.y,
                z: p.z,
            });
        }
        let c = jet.curl();
        Ok([c[0] / vol, c[1] / vol, c[2] / vol])
    }

    /// Coefficients of alpha at p, as the covector (W_x, W_y, W_z).
    pub fn evaluate_form(&self, p: ChartPoint) -> Result<[f64; 3]> {
        Ok(self.form_jet(p)?.w)
    }

    /// Pairing alpha_p(v).
    pub fn alpha(&self, p: ChartPoint, v: [f64; 3]) -> Result<f64> {
        let w = self.evaluate_form(p)?;
        Ok(w[0] * v[0] + w[1] * v[1] + w[2] * v[2])
    }

    /// d(alpha)_p(u, v) = curl W . (u x v).
    pub fn dalpha(&self, p: ChartPoint, u: [f64; 3], v: [f64; 3]) -> Result<f64> {
        let c = self.form_jet(p)?.curl();
        let cross = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        Ok(c[0] * cross[0] + c[1] * cross[1] + c[2] * cross[2])
    }

    /// Contact volume density W . curl W at p.
    pub fn contact_volume(&self, p: ChartPoint) -> Result<f64> {
        Ok(self.form_jet(p)?.volume())
    }

    /// The Reeb field R = curl W / (W . curl W).
    pub fn reeb_field(&self, p: ChartPoint) -> Result<[f64; 3]> {
        let jet = self.form_jet(p)?;
        let vol = jet.volume();
        if vol.abs() < 1e-12 {
            return Err(Error::SingularForm {
                value: vol,
                x: p.x,
                y: p.y,
                z: p.z,
            });
        }
        let c = jet.curl();
        Ok([c[0] / vol, c[1] / vol, c[2] / vol])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ContactModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

/// Residuals of the structural identities, measured with finite differences
/// of the coefficient field (independent of the closed-form partials).
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ContactResiduals {
    /// |alpha(R) - 1| with the closed-form Reeb vector.
    pub alpha_r: f64,
    /// Euclidean norm of i_R d(alpha) with d(alpha) from finite differences.
    pub ir_dalpha: f64,
    /// Max abs difference between closed-form and finite-difference curl.
    pub curl_mismatch: f64,
}

/// Verifies alpha(R) = 1 and i_R d(alpha) = 0 at a point by second-order
/// central differences of W, and cross-checks the closed-form curl.
pub fn verify_point(model: &ContactModel, p: ChartPoint) -> Result<ContactResiduals> {
    let h = 1e-6;
    let jet = model.form_jet(p)?;
    let r = model.reeb_field(p)?;

    let w_at = |dx: f64, dy: f64, dz: f64| -> Result<[f64; 3]> {
        model.evaluate_form(ChartPoint::new(p.x + dx, p.y + dy, p.z + dz))
    };
    // dw_fd[i][j] = d W_i / d x_j
    let mut dw_fd = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut hi = [0.0; 3];
        let mut lo = [0.0; 3];
        hi[j] = h;
        lo[j] = -h;
        let (a, b) = (w_at(hi[0], hi[1], hi[2])?, w_at(lo[0], lo[1], lo[2])?);
        for i in 0..3 {
            dw_fd[i][j] = (a[i] - b[i]) / (2.0 * h);
        }
    }
    let curl_fd = [
        dw_fd[2][1] - dw_fd[1][2],
        dw_fd[0][2] - dw_fd[2][0],
        dw_fd[1][0] - dw_fd[0][1],
    ];
    let curl_cf = jet.curl();
    let curl_mismatch = (0..3)
        .map(|i| (curl_fd[i] - curl_cf[i]).abs())
        .fold(0.0, f64::max);

    let alpha_r = (jet.w[0] * r[0] + jet.w[1] * r[1] + jet.w[2] * r[2] - 1.0).abs();

    // i_R d(alpha) on the coordinate basis, with the finite-difference curl:
    // d(alpha)(R, e_j) = curl . (R x e_j).
    let mut ir = [0.0; 3];
    for (j, e) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        .iter()
        .enumerate()
    {
        let cross = [
            r[1] * e[2] - r[2] * e[1],
            r[2] * e[0] - r[0] * e[2],
            r[0] * e[1] - r[1] * e[0],
        ];
        ir[j] = curl_fd[0] * cross[0] + curl_fd[1] * cross[1] + curl_fd[2] * cross[2];
    }
    let ir_dalpha = (ir[0] * ir[0] + ir[1] * ir[1] + ir[2] * ir[2]).sqrt();

    Ok(ContactResiduals {
        alpha_r,
        ir_dalpha,
        curl_mismatch,
    })
}

/// Report of a grid sweep of the contact condition over the chart.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContactReport {
    pub grid: usize,
    pub min_volume: f64,
    pub max_alpha_r: f64,
    pub max_ir_dalpha: f64,
    pub max_curl_mismatch: f64,
}

/// Sweeps an n^3 grid over the chart (z over a full period when periodic),
/// erroring on any non-positive contact volume. Interior-only in y to avoid
/// differencing across the chart boundary.
pub fn verify_grid(model: &ContactModel, n: usize) -> Result<ContactReport> {
    model.validate()?;
    let chart = &model.chart;
    let margin = 2e-6;
    let lin = |lo: f64, hi: f64, i: usize| {
        lo + (hi - lo) * (i as f64 + 0.5) / n as f64
    };
    let mut report = ContactReport {
        grid: n,
        min_volume: f64::INFINITY,
        max_alpha_r: 0.0,
        max_ir_dalpha: 0.0,
        max_curl_mismatch: 0.0,
    };
    for i in 0..n {
        let x = lin(chart.x_min + margin, chart.x_max - margin, i);
        for j in 0..n {
            let y = lin(chart.y_min + margin, chart.y_max - margin, j);
            for k in 0..n {
                let z = if chart.z_periodic {
                    lin(-PI, PI, k)
                } else {
                    lin(-chart.z_max + margin, chart.z_max - margin, k)
                };
                let p = ChartPoint::new(x, y, z);
                let vol = model.contact_volume(p)?;
                if vol <= 0.0 {
                    return Err(Error::NotContact {
                        x,
                        y,
                        z,
                        volume: vol,
                    });
                }
                let res = verify_point(model, p)?;
                report.min_volume = report.min_volume.min(vol);
                report.max_alpha_r = report.max_alpha_r.max(res.alpha_r);
                report.max_ir_dalpha = report.max_ir_dalpha.max(res.ir_dalpha);
                report.max_curl_mismatch = report.max_curl_mismatch.max(res.curl_mismatch);
            }
        }
    }
    Ok(report)
}
