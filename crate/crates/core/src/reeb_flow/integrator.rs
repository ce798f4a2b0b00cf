//! Adaptive Dormand-Prince 5(4) integrator with dense-output event
//! localization.
//!
//! Events are scalar functions of the state; crossings are bracketed on a
//! cubic Hermite interpolant of each accepted step, then polished by
//! re-integrating from the step start so the reported crossing agrees with
//! the integrator's own solution to the requested tolerance.

use crate::{Error, Result};
use nalgebra::SVector;

#[derive(Clone, Copy, Debug)]
pub struct StepperSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub event_tol: f64,
}

/// A scalar event. `direction` restricts crossings (+1 rising, -1 falling,
/// 0 both); `terminal` stops the integration at the first crossing;
/// crossings before `min_time` are ignored.
pub struct EventSpec<'a, const N: usize> {
    pub g: Box<dyn Fn(f64, &SVector<f64, N>) -> f64 + Sync + 'a>,
    pub direction: i8,
    pub terminal: bool,
    pub min_time: f64,
}

#[derive(Clone, Debug)]
pub struct EventHit<const N: usize> {
    pub event: usize,
    pub t: f64,
    pub y: SVector<f64, N>,
    pub direction: i8,
}

#[derive(Debug)]
pub struct IntegrationOutput<const N: usize> {
    pub samples: Vec<(f64, SVector<f64, N>)>,
    pub hits: Vec<EventHit<N>>,
    /// Set when a terminal event stopped the run early.
    pub terminal: Option<EventHit<N>>,
}

const MAX_STEPS: usize = 4_000_000;

struct Dopri;

impl Dopri {
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    // Difference between the 5th-order weights and the embedded 4th-order
    // weights, applied to k1..k7 for the error estimate.
    const E: [f64; 7] = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];
}

struct Step<const N: usize> {
    t0: f64,
    h: f64,
    y0: SVector<f64, N>,
    y1: SVector<f64, N>,
    f0: SVector<f64, N>,
    f1: SVector<f64, N>,
}

impl<const N: usize> Step<N> {
    /// Cubic Hermite interpolation on the step, theta in [0, 1].
    fn interp(&self, theta: f64) -> SVector<f64, N> {
        let h = self.h;
        let t2 = theta * theta;
        let t3 = t2 * theta;
        self.y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + self.f0 * (h * (t3 - 2.0 * t2 + theta))
            + self.y1 * (-2.0 * t3 + 3.0 * t2)
            + self.f1 * (h * (t3 - t2))
    }
}

pub struct Integrator<'a, const N: usize> {
    pub rhs: Box<dyn Fn(f64, &SVector<f64, N>) -> Result<SVector<f64, N>> + Sync + 'a>,
    pub settings: StepperSettings,
}

impl<'a, const N: usize> Integrator<'a, N> {
    /// Single Dormand-Prince step; returns (y1, f1, error_norm). `f0` must be
    /// rhs(t0, y0).
    fn rk_step(
        &self,
        t0: f64,
        y0: &SVector<f64, N>,
        f0: &SVector<f64, N>,
        h: f64,
    ) -> Result<(SVector<f64, N>, SVector<f64, N>, f64)> {
        let mut k: [SVector<f64, N>; 7] = [SVector::zeros(); 7];
        k[0] = *f0;
        for stage in 0..6 {
            let mut y = *y0;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                let a = Dopri::A[stage][j];
                if a != 0.0 {
                    y += kj * (a * h);
                }
            }
            k[stage + 1] = (self.rhs)(t0 + Dopri::C[stage] * h, &y)?;
        }
        // 5th-order solution: the row of A used for stage 7 equals b.
        let mut y1 = *y0;
        for (j, kj) in k.iter().enumerate().take(6) {
            let b = Dopri::A[5][j];
            if b != 0.0 {
                y1 += kj * (b * h);
            }
        }
        // k7 = f(t0 + h, y1) was already computed as the last stage.
        let f1 = k[6];
        let mut err_vec: SVector<f64, N> = SVector::zeros();
        for (j, kj) in k.iter().enumerate() {
            if Dopri::E[j] != 0.0 {
                err_vec += kj * (Dopri::E[j] * h);
            }
        }
        let mut err: f64 = 0.0;
        for i in 0..N {
            let sc = self.settings.abs_tol
                + self.settings.rel_tol * y0[i].abs().max(y1[i].abs());
            let e = err_vec[i] / sc;
            err += e * e;
        }
        Ok((y1, f1, (err / N as f64).sqrt()))
    }

    /// Re-integrates from (t0, y0) to `t_target` with full error control and
    /// no event processing. Used to polish event crossings.
    fn advance_to(
        &self,
        t0: f64,
        y0: &SVector<f64, N>,
        t_target: f64,
    ) -> Result<SVector<f64, N>> {
        if (t_target - t0).abs() < 1e-300 {
            return Ok(*y0);
        }
        let mut t = t0;
        let mut y = *y0;
        let mut f = (self.rhs)(t, &y)?;
        let mut h = (t_target - t).min(self.settings.max_step);
        let mut steps = 0usize;
        while t < t_target {
            h = h.min(t_target - t).min(self.settings.max_step);
            let (y1, f1, err) = self.rk_step(t, &y, &f, h)?;
            if err <= 1.0 {
                t += h;
                y = y1;
                f = f1;
            }
            let factor = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            h *= factor;
            if h < self.settings.min_step {
                return Err(Error::StepUnderflow { t, step: h });
            }
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::Numerical("step budget exhausted".into()));
            }
        }
        Ok(y)
    }

    /// Refines a bracketed crossing of event `g` inside an accepted step to
    /// `event_tol` in time, by bisection against re-integrated states.
    fn polish_crossing(
        &self,
        step: &Step<N>,
        g: &dyn Fn(f64, &SVector<f64, N>) -> f64,
        mut ta: f64,
        mut tb: f64,
    ) -> Result<(f64, SVector<f64, N>)> {
        let mut ga = g(ta, &self.advance_to(step.t0, &step.y0, ta)?);
        for _ in 0..128 {
            if (tb - ta).abs() <= self.settings.event_tol {
                break;
            }
            let tm = 0.5 * (ta + tb);
            let ym = self.advance_to(step.t0, &step.y0, tm)?;
            let gm = g(tm, &ym);
            if (ga <= 0.0) == (gm <= 0.0) {
                ta = tm;
                ga = gm;
            } else {
                tb = tm;
            }
        }
        let t_star = 0.5 * (ta + tb);
        let y_star = self.advance_to(step.t0, &step.y0, t_star)?;
        Ok((t_star, y_star))
    }

    /// Integrates to `t_final`, recording every accepted step, locating all
    /// event crossings, and stopping at the first terminal one.
    pub fn run(
        &self,
        y0: SVector<f64, N>,
        t_final: f64,
        events: &[EventSpec<N>],
    ) -> Result<IntegrationOutput<N>> {
        let mut out = IntegrationOutput {
            samples: vec![(0.0, y0)],
            hits: Vec::new(),
            terminal: None,
        };
        let mut t = 0.0_f64;
        let mut y = y0;
        let mut f = (self.rhs)(t, &y)?;

        // A terminal event that already sits at zero and moves in its firing
        // direction counts as an immediate hit (a start on the chart
        // boundary heading out).
        for (idx, ev) in events.iter().enumerate() {
            if !ev.terminal || ev.min_time > 0.0 {
                continue;
            }
            let g0 = (ev.g)(0.0, &y);
            if g0.abs() < 1e-12 {
                let probe = 1e-8_f64.min(t_final * 0.5);
                if probe <= 0.0 {
                    continue;
                }
                let yp = y + f * probe;
                let gp = (ev.g)(probe, &yp);
                let fires = match ev.direction {
                    1 => gp > 1e-14,
                    -1 => gp < -1e-14,
                    _ => gp.abs() > 1e-14,
                };
                if fires {
                    let hit = EventHit {
                        event: idx,
                        t: 0.0,
                        y,
                        direction: if gp > 0.0 { 1 } else { -1 },
                    };
                    out.hits.push(hit.clone());
                    out.terminal = Some(hit);
                    return Ok(out);
                }
            }
        }

        let mut h = self.settings.max_step.min(t_final).min(1e-2).max(1e-6);
        let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(0.0, &y)).collect();
        let mut steps = 0usize;

        while t < t_final {
            h = h.min(t_final - t).min(self.settings.max_step);
            let (y1, f1, err) = self.rk_step(t, &y, &f, h)?;
            if err > 1.0 {
                h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                if h < self.settings.min_step {
                    return Err(Error::StepUnderflow { t, step: h });
                }
                steps += 1;
                if steps > MAX_STEPS {
                    return Err(Error::Numerical("step budget exhausted".into()));
                }
                continue;
            }

            let step = Step {
                t0: t,
                h,
                y0: y,
                y1,
                f0: f,
                f1,
            };

            // Scan for crossings on a subdivision of the Hermite interpolant.
            const SUBS: usize = 8;
            let mut first: Option<(f64, usize, i8)> = None;
            for (idx, ev) in events.iter().enumerate() {
                let mut ga = g_prev[idx];
                let mut tha = 0.0_f64;
                for s in 1..=SUBS {
                    let th = s as f64 / SUBS as f64;
                    let ys = if s == SUBS { step.y1 } else { step.interp(th) };
                    let gb = (ev.g)(t + th * h, &ys);
                    let crossed = match ev.direction {
                        1 => ga < 0.0 && gb >= 0.0,
                        -1 => ga > 0.0 && gb <= 0.0,
                        _ => (ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0),
                    };
                    if crossed {
                        let t_lo = t + tha * h;
                        let t_hi = t + th * h;
                        if t_hi >= ev.min_time {
                            let dir = if gb >= ga { 1 } else { -1 };
                            // Keep the earliest bracket start among events.
                            if first.map_or(true, |(tf, _, _)| t_lo < tf) {
                                first = Some((t_lo, idx, dir));
                            }
                            break;
                        }
                    }
                    ga = gb;
                    tha = th;
                }
            }

            if let Some((_, idx, dir)) = first {
                // Re-bracket precisely for this event over the whole step and
                // polish. Other events crossing later in the same step are
                // picked up after restarting from the hit when non-terminal.
                let ev = &events[idx];
                let mut tha = 0.0_f64;
                let mut ga = g_prev[idx];
                let mut bracket = None;
                for s in 1..=SUBS {
                    let th = s as f64 / SUBS as f64;
                    let ys = if s == SUBS { step.y1 } else { step.interp(th) };
                    let gb = (ev.g)(t + th * h, &ys);
                    let crossed = match ev.direction {
                        1 => ga < 0.0 && gb >= 0.0,
                        -1 => ga > 0.0 && gb <= 0.0,
                        _ => (ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0),
                    };
                    if crossed && t + th * h >= ev.min_time {
                        bracket = Some((t + tha * h, t + th * h));
                        break;
                    }
                    ga = gb;
                    tha = th;
                }
                let (ta, tb) = bracket.expect("bracket vanished on rescan");
                let (t_star, y_star) =
                    self.polish_crossing(&step, &ev.g, ta, tb)?;

                // Tangency guard: the event function must move through zero
                // at a resolvable rate.
                let dt = (self.settings.event_tol * 100.0).max(1e-9);
                let before = self.advance_to(step.t0, &step.y0, (t_star - dt).max(t), )?;
                let g_before = (ev.g)(t_star - dt, &before);
                let slope = (0.0 - g_before) / dt;
                if slope.abs() < 1e-7 {
                    return Err(Error::TangentCrossing {
                        t: t_star,
                        derivative: slope,
                    });
                }

                let hit = EventHit {
                    event: idx,
                    t: t_star,
                    y: y_star,
                    direction: dir,
                };
                out.hits.push(hit.clone());
                if ev.terminal {
                    out.samples.push((t_star, y_star));
                    out.terminal = Some(hit);
                    return Ok(out);
                }
                // Restart just past the crossing so the same zero is not
                // detected twice.
                let t_resume = t_star + self.settings.event_tol.max(1e-12);
                let y_resume = self.advance_to(step.t0, &step.y0, t_resume)?;
                out.samples.push((t_star, y_star));
                t = t_resume;
                y = y_resume;
                f = (self.rhs)(t, &y)?;
                for (gi, ev2) in events.iter().enumerate() {
                    g_prev[gi] = (ev2.g)(t, &y);
                }
                steps += 1;
                if steps > MAX_STEPS {
                    return Err(Error::Numerical("step budget exhausted".into()));
                }
                continue;
            }

            // Accept the step.
            t += h;
            y = step.y1;
            f = step.f1;
            out.samples.push((t, y));
            for (gi, ev2) in events.iter().enumerate() {
                g_prev[gi] = (ev2.g)(t, &y);
            }
            let factor = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            h = (h * factor).min(self.settings.max_step);
            if h < self.settings.min_step {
                return Err(Error::StepUnderflow { t, step: h });
            }
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::Numerical("step budget exhausted".into()));
            }
        }
        Ok(out)
    }
}
