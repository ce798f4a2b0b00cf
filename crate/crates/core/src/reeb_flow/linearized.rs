//! Linearized Reeb flow restricted to the contact plane field.
//!
//! The 3x3 variational solution is integrated alongside the base point and
//! read off against a moving symplectic frame of the kernel of the form,
//! producing a path of 2x2 matrices with determinant one.

use super::FlowSettings;
use crate::cz_index::SymplecticPath;
use crate::model_geometry::{ChartPoint, ContactModel};
use crate::reeb_flow::chords::TransverseChord;
use crate::reeb_flow::integrator::Integrator;
use crate::{Error, Result};
use nalgebra::{Matrix2, Matrix3, SVector, Vector3};

/// How the symplectic 2-frame along the trajectory is chosen.
#[derive(Clone, Copy, Debug)]
pub enum FrameSpec {
    /// Project the chart axes onto the plane field and orthonormalize.
    GramSchmidt,
    /// Gram-Schmidt composed with a rotation advancing by `half_turns` half
    /// revolutions over the full flight, matching a frame dragged through
    /// the boundary collar.
    CollarTwist { half_turns: i32 },
}

struct Frame {
    e1: Vector3<f64>,
    e2: Vector3<f64>,
    curl: Vector3<f64>,
}

fn dalpha(curl: &Vector3<f64>, u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    curl.dot(&u.cross(v))
}

fn frame_at(model: &ContactModel, p: ChartPoint, t: f64) -> Result<Frame> {
    let jet = model.form_jet_extended(p);
    let w = Vector3::new(jet.w[0], jet.w[1], jet.w[2]);
    let c = jet.curl();
    let curl = Vector3::new(c[0], c[1], c[2]);
    let vol = w.dot(&curl);
    if vol.abs() < 1e-12 {
        return Err(Error::FrameDegenerate { t });
    }
    let r = curl / vol;

    let project = |v: Vector3<f64>| v - w.dot(&v) * r;
    let e1 = project(Vector3::x());
    let n1 = e1.norm();
    if n1 < 1e-9 {
        return Err(Error::FrameDegenerate { t });
    }
    let e1 = e1 / n1;
    let mut e2 = project(Vector3::y());
    e2 -= e2.dot(&e1) * e1;
    let n2 = e2.norm();
    if n2 < 1e-9 {
        return Err(Error::FrameDegenerate { t });
    }
    let e2 = e2 / n2;
    let pairing = dalpha(&curl, &e1, &e2);
    if pairing.abs() < 1e-12 {
        return Err(Error::FrameDegenerate { t });
    }
    Ok(Frame {
        e1,
        e2: e2 / pairing,
        curl,
    })
}

fn reeb_jacobian(model: &ContactModel, p: ChartPoint) -> Result<Matrix3<f64>> {
    let h = 1e-6;
    let mut j = Matrix3::zeros();
    for k in 0..3 {
        let mut hi = p.to_array();
        let mut lo = p.to_array();
        hi[k] += h;
        lo[k] -= h;
        let rhi = model.reeb_field_extended(ChartPoint::from_array(hi))?;
        let rlo = model.reeb_field_extended(ChartPoint::from_array(lo))?;
        for i in 0..3 {
            j[(i, k)] = (rhi[i] - rlo[i]) / (2.0 * h);
        }
    }
    Ok(j)
}

fn rot2(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Integrates the flow and its differential from `p0` for time `t_final`
/// and returns the plane-field restriction in the chosen frame.
pub fn linearized_flow(
    model: &ContactModel,
    p0: ChartPoint,
    t_final: f64,
    frame: FrameSpec,
    settings: &FlowSettings,
) -> Result<SymplecticPath> {
    if !(t_final > 0.0) {
        return Err(Error::Parameter("flight time must be positive".into()));
    }
    let integrator = Integrator::<12> {
        rhs: Box::new(move |_t, state: &SVector<f64, 12>| {
            let p = ChartPoint::new(state[0], state[1], state[2]);
            let r = model.reeb_field_extended(p)?;
            let j = reeb_jacobian(model, p)?;
            let mut m = Matrix3::zeros();
            for i in 0..3 {
                for k in 0..3 {
                    m[(i, k)] = state[3 + 3 * i + k];
                }
            }
            let dm = j * m;
            let mut out = SVector::<f64, 12>::zeros();
            out[0] = r[0];
            out[1] = r[1];
            out[2] = r[2];
            for i in 0..3 {
                for k in 0..3 {
                    out[3 + 3 * i + k] = dm[(i, k)];
                }
            }
            Ok(out)
        }),
        settings: settings.stepper(),
    };

    let mut y0 = SVector::<f64, 12>::zeros();
    y0[0] = p0.x;
    y0[1] = p0.y;
    y0[2] = p0.z;
    y0[3] = 1.0;
    y0[7] = 1.0;
    y0[11] = 1.0;

    let out = integrator.run(y0, t_final, &[])?;

    let base = frame_at(model, p0, 0.0)?;
    let twist = match frame {
        FrameSpec::GramSchmidt => 0.0,
        FrameSpec::CollarTwist { half_turns } => {
            half_turns as f64 * std::f64::consts::PI / t_final
        }
    };

    let mut samples = Vec::with_capacity(out.samples.len());
    for (t, state) in &out.samples {
        let p = ChartPoint::new(state[0], state[1], state[2]);
        let fr = frame_at(model, p, *t)?;
        let mut m3 = Matrix3::zeros();
        for i in 0..3 {
            for k in 0..3 {
                m3[(i, k)] = state[3 + 3 * i + k];
            }
        }
        let v1 = m3 * base.e1;
        let v2 = m3 * base.e2;
        // Components in the moving frame; the pairing with the area form
        // discards any drift along the flow direction.
        let m2 = Matrix2::new(
            dalpha(&fr.curl, &v1, &fr.e2),
            dalpha(&fr.curl, &v2, &fr.e2),
            -dalpha(&fr.curl, &v1, &fr.e1),
            -dalpha(&fr.curl, &v2, &fr.e1),
        );
        let det = m2.determinant();
        let drift = (det - 1.0).abs();
        if drift > 1e-6 {
            return Err(Error::DeterminantDrift { t: *t, drift });
        }
        let m2 = rot2(twist * t) * (m2 / det.sqrt());
        samples.push((*t, m2));
    }
    // The flight time itself is the last sample; the integrator always ends
    // exactly at t_final.
    SymplecticPath::new(samples)
}

/// Index of a chord in the collar framing: chords ending on the spanning
/// component are framed with one extra half-turn, chords ending on the
/// short component with none.
pub fn chord_mu_tilde(
    model: &ContactModel,
    chord: &TransverseChord,
    settings: &FlowSettings,
) -> Result<i64> {
    let half_turns = if chord.label.starts_with('c') { 1 } else { 0 };
    let path = linearized_flow(
        model,
        chord.start,
        chord.period,
        FrameSpec::CollarTwist { half_turns },
        settings,
    )?;
    crate::cz_index::mu_tilde(&path)
}
