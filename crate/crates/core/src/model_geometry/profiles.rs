//! One-dimensional bump profiles with exact first and second derivatives.
//!
//! Every profile is assembled from the standard smooth step
//! `s(t) = sigma(t) / (sigma(t) + sigma(1 - t))` with `sigma(t) = exp(-1/t)`
//! for positive `t`, so all pieces glue infinitely smoothly and every plateau
//! is exact (not merely approximate) on its stated interval.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Value together with first and second derivative at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const ZERO: Jet = Jet {
        value: 0.0,
        d1: 0.0,
        d2: 0.0,
    };

    pub const ONE: Jet = Jet {
        value: 1.0,
        d1: 0.0,
        d2: 0.0,
    };

    pub fn constant(value: f64) -> Jet {
        Jet {
            value,
            d1: 0.0,
            d2: 0.0,
        }
    }

    pub fn scale(self, a: f64) -> Jet {
        Jet {
            value: a * self.value,
            d1: a * self.d1,
            d2: a * self.d2,
        }
    }

    pub fn add(self, other: Jet) -> Jet {
        Jet {
            value: self.value + other.value,
            d1: self.d1 + other.d1,
            d2: self.d2 + other.d2,
        }
    }

    /// Product rule for jets in the same variable.
    pub fn mul(self, other: Jet) -> Jet {
        Jet {
            value: self.value * other.value,
            d1: self.d1 * other.value + self.value * other.d1,
            d2: self.d2 * other.value + 2.0 * self.d1 * other.d1 + self.value * other.d2,
        }
    }

    /// Reparametrize by an affine change of variable u = a*x + b.
    pub fn chain_affine(self, a: f64) -> Jet {
        Jet {
            value: self.value,
            d1: self.d1 * a,
            d2: self.d2 * a * a,
        }
    }
}

fn sigma_jet(t: f64) -> Jet {
    if t <= 0.0 {
        return Jet::ZERO;
    }
    let v = (-1.0 / t).exp();
    if v == 0.0 {
        return Jet::ZERO;
    }
    Jet {
        value: v,
        d1: v / (t * t),
        d2: v * (1.0 - 2.0 * t) / (t * t * t * t),
    }
}

/// Smooth step: 0 for t <= 0, 1 for t >= 1, strictly increasing in between,
/// with all derivatives vanishing at both ends.
pub fn smooth_step(t: f64) -> Jet {
    if t <= 0.0 {
        return Jet::ZERO;
    }
    if t >= 1.0 {
        return Jet::ONE;
    }
    let n = sigma_jet(t);
    let m = sigma_jet(1.0 - t);
    // d/dt sigma(1-t) = -sigma'(1-t), and so on.
    let d = Jet {
        value: n.value + m.value,
        d1: n.d1 - m.d1,
        d2: n.d2 + m.d2,
    };
    let dv = d.value;
    let num1 = n.d1 * d.value - n.value * d.d1;
    let s1 = num1 / (dv * dv);
    let num2 = n.d2 * d.value - n.value * d.d2;
    let s2 = num2 / (dv * dv) - 2.0 * d.d1 * num1 / (dv * dv * dv);
    Jet {
        value: n.value / dv,
        d1: s1,
        d2: s2,
    }
}

/// Reduce an angle to (-pi, pi].
pub fn wrap_angle(u: f64) -> f64 {
    let mut w = u.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Shape families available to the contact models.
///
/// * `cutoff_k`: plateau of height 1 around the center, vanishing beyond the
///   support radius;
/// * `convex_l`: `amplitude * (cosh(support * (u - center)) - 1)`; `support`
///   is the exponential rate, `plateau` is unused;
/// * `cutoff_m`: 2-pi-periodic inverted window, 0 within the plateau radius
///   of the center, 1 beyond the support radius;
/// * `slope_f`: 2-pi-antiperiodic slope profile equal to `sin` within
///   `plateau` of every multiple of pi and locked to the alternating values
///   `(-1)^k` on `[k pi + support, (k+1) pi - support]`;
/// * `shear_g`: plateau bump like `cutoff_k` scaled by `amplitude`; the
///   containing model multiplies it by a fixed ramp in the second variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileFamily {
    CutoffK,
    ConvexL,
    CutoffM,
    SlopeF,
    ShearG,
}

/// A configured profile. The interpretation of the four parameters depends
/// on the family; see [`ProfileFamily`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub family: ProfileFamily,
    pub center: f64,
    pub plateau: f64,
    pub support: f64,
    pub amplitude: f64,
}

impl BumpProfile {
    pub fn cutoff_k() -> Self {
        BumpProfile {
            family: ProfileFamily::CutoffK,
            center: 0.0,
            plateau: 0.39,
            support: 0.7,
            amplitude: 1.0,
        }
    }

    pub fn convex_l() -> Self {
        BumpProfile {
            family: ProfileFamily::ConvexL,
            center: 0.0,
            plateau: 0.0,
            support: 2.0,
            amplitude: 0.01,
        }
    }

    pub fn cutoff_m() -> Self {
        BumpProfile {
            family: ProfileFamily::CutoffM,
            center: 0.0,
            plateau: 0.101,
            support: 0.25,
            amplitude: 1.0,
        }
    }

    pub fn slope_f() -> Self {
        BumpProfile {
            family: ProfileFamily::SlopeF,
            center: 0.0,
            plateau: 0.45,
            support: std::f64::consts::FRAC_PI_4,
            amplitude: 1.0,
        }
    }

    pub fn shear_g() -> Self {
        BumpProfile {
            family: ProfileFamily::ShearG,
            center: -3.0 * std::f64::consts::FRAC_PI_4,
            plateau: 0.2,
            support: 0.5,
            amplitude: 0.05,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = match self.family {
            ProfileFamily::CutoffK | ProfileFamily::ShearG => {
                self.plateau > 0.0 && self.support > self.plateau
            }
            ProfileFamily::ConvexL => self.support > 0.0,
            ProfileFamily::CutoffM => {
                self.plateau > 0.0 && self.support > self.plateau && self.support < PI
            }
            ProfileFamily::SlopeF => {
                self.plateau > 0.0 && self.support > self.plateau && self.support <= 2.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Parameter(format!(
                "profile {:?} has inconsistent plateau/support ({}, {})",
                self.family, self.plateau, self.support
            )))
        }
    }

    /// Evaluate with exact derivatives in the profile variable.
    pub fn eval(&self, u: f64) -> Jet {
        match self.family {
            ProfileFamily::CutoffK | ProfileFamily::ShearG => self.eval_plateau_bump(u),
            ProfileFamily::ConvexL => {
                let w = self.support * (u - self.center);
                Jet {
                    value: self.amplitude * (w.cosh() - 1.0),
                    d1: self.amplitude * self.support * w.sinh(),
                    d2: self.amplitude * self.support * self.support * w.cosh(),
                }
            }
            ProfileFamily::CutoffM => {
                let w = wrap_angle(u - self.center);
                let a = w.abs();
                if a <= self.plateau {
                    return Jet::ZERO;
                }
                if a >= self.support {
                    return Jet::constant(self.amplitude);
                }
                let r = 1.0 / (self.support - self.plateau);
                let s = smooth_step((a - self.plateau) * r);
                let sign = if w >= 0.0 { 1.0 } else { -1.0 };
                s.chain_affine(sign * r).scale(self.amplitude)
            }
            ProfileFamily::SlopeF => self.eval_slope(u),
        }
    }

    fn eval_plateau_bump(&self, u: f64) -> Jet {
        let w = u - self.center;
        let a = w.abs();
        if a <= self.plateau {
            return Jet::constant(self.amplitude);
        }
        if a >= self.support {
            return Jet::ZERO;
        }
        let r = 1.0 / (self.support - self.plateau);
        let s = smooth_step((self.support - a) * r);
        let sign = if w >= 0.0 { 1.0 } else { -1.0 };
        s.chain_affine(-sign * r).scale(self.amplitude)
    }

    fn eval_slope(&self, u: f64) -> Jet {
        let k = (u / PI).round();
        let v = u - k * PI;
        let sign = if (k as i64).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        let h = self.slope_half(v.abs());
        let jet = if v >= 0.0 {
            h
        } else {
            Jet {
                value: -h.value,
                d1: h.d1,
                d2: -h.d2,
            }
        };
        jet.scale(sign * self.amplitude)
    }

    /// The odd building block on [0, pi/2]: sin on [0, plateau], 1 beyond
    /// `support`, a convex blend `sin + s * (1 - sin)` in between.
    fn slope_half(&self, v: f64) -> Jet {
        let (a, b) = (self.plateau, self.support);
        if v <= a {
            return Jet {
                value: v.sin(),
                d1: v.cos(),
                d2: -v.sin(),
            };
        }
        if v >= b {
            return Jet::ONE;
        }
        let r = 1.0 / (b - a);
        let s = smooth_step((v - a) * r);
        let (sv, cv) = (v.sin(), v.cos());
        Jet {
            value: sv + s.value * (1.0 - sv),
            d1: cv * (1.0 - s.value) + r * s.d1 * (1.0 - sv),
            d2: -sv * (1.0 - s.value) - 2.0 * r * s.d1 * cv + r * r * s.d2 * (1.0 - sv),
        }
    }
}

/// The fixed ramp used by shear terms: 0 for y <= 0, 1 for y >= 1/2.
pub fn shear_ramp(y: f64) -> Jet {
    smooth_step(2.0 * y).chain_affine(2.0)
}
