//! Reeb flow integration, section returns, chord search, and linearized
//! flows on the contact models.

mod chords;
mod integrator;
mod linearized;

pub use chords::{
    find_chords, overtwisted_arc, three_component_arc, trivial_bypass_arc, ArcPiece, ChordSearch,
    SurfaceArc, TransverseChord,
};
pub use integrator::{EventHit, EventSpec, IntegrationOutput, Integrator, StepperSettings};
pub use linearized::{chord_mu_tilde, linearized_flow, FrameSpec};

use crate::model_geometry::{ChartPoint, ContactModel};
use crate::{Error, Result};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Numerical settings for flow integration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FlowSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_time: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub event_tol: f64,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_time: 200.0,
            max_step: 0.1,
            min_step: 1e-13,
            event_tol: 1e-9,
        }
    }
}

impl FlowSettings {
    pub(crate) fn stepper(&self) -> StepperSettings {
        StepperSettings {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_step: self.max_step,
            min_step: self.min_step,
            event_tol: self.event_tol,
        }
    }
}

/// Coordinate plane used for section events.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionPlane {
    X,
    Y,
    Z,
}

/// A coordinate section `plane = value` with a crossing direction filter
/// (+1 rising, -1 falling, 0 both). For periodic z, the value refers to the
/// real lift of z carried by the trajectory.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Section {
    pub plane: SectionPlane,
    pub value: f64,
    pub direction: i8,
}

impl Section {
    fn coord(&self, p: &Vector3<f64>) -> f64 {
        match self.plane {
            SectionPlane::X => p[0],
            SectionPlane::Y => p[1],
            SectionPlane::Z => p[2],
        }
    }
}

/// Chart face through which a trajectory left the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitFace {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub point: ChartPoint,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SectionHit {
    pub section: usize,
    pub t: f64,
    pub point: ChartPoint,
    pub direction: i8,
}

/// Integrated trajectory with localized section crossings. `z` is carried
/// as a real lift on periodic charts.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub hits: Vec<SectionHit>,
    pub exit: Option<(f64, ChartPoint, ExitFace)>,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,z\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.t, s.point.x, s.point.y, s.point.z
            ));
        }
        out
    }
}

fn pt(v: &Vector3<f64>) -> ChartPoint {
    ChartPoint::new(v[0], v[1], v[2])
}

/// Builds terminal chart-exit events for the model faces. On periodic
/// charts z is unbounded.
fn face_events<'m>(model: &'m ContactModel) -> Vec<(EventSpec<'m, 3>, ExitFace)> {
    let chart = &model.chart;
    let mut events: Vec<(EventSpec<3>, ExitFace)> = Vec::new();
    let faces: Vec<(f64, i8, usize, ExitFace)> = {
        let mut f = vec![
            (chart.x_min, -1, 0, ExitFace::XMin),
            (chart.x_max, 1, 0, ExitFace::XMax),
            (chart.y_min, -1, 1, ExitFace::YMin),
            (chart.y_max, 1, 1, ExitFace::YMax),
        ];
        if !chart.z_periodic {
            f.push((-chart.z_max, -1, 2, ExitFace::ZMin));
            f.push((chart.z_max, 1, 2, ExitFace::ZMax));
        }
        f
    };
    for (value, dir, coord, face) in faces {
        events.push((
            EventSpec {
                g: Box::new(move |_t, y: &Vector3<f64>| {
                    if dir > 0 {
                        y[coord] - value
                    } else {
                        value - y[coord]
                    }
                }),
                direction: 1,
                terminal: true,
                min_time: 0.0,
            },
            face,
        ));
    }
    events
}

/// Integrates the Reeb flow from `p0` for time `t_final`, localizing every
/// crossing of the given sections and stopping at the chart boundary.
pub fn integrate(
    model: &ContactModel,
    p0: ChartPoint,
    t_final: f64,
    sections: &[Section],
    settings: &FlowSettings,
) -> Result<Trajectory> {
    if !model.chart.contains(p0) {
        return Err(Error::OutOfChart {
            x: p0.x,
            y: p0.y,
            z: p0.z,
        });
    }
    let integrator = Integrator::<3> {
        rhs: Box::new(move |_t, y: &Vector3<f64>| {
            let r = model.reeb_field_extended(pt(y))?;
            Ok(Vector3::new(r[0], r[1], r[2]))
        }),
        settings: settings.stepper(),
    };
    let mut events: Vec<EventSpec<3>> = Vec::new();
    for s in sections {
        let sec = *s;
        events.push(EventSpec {
            g: Box::new(move |_t, y: &Vector3<f64>| sec.coord(y) - sec.value),
            direction: sec.direction,
            terminal: false,
            min_time: 0.0,
        });
    }
    let n_sections = events.len();
    let faces = face_events(model);
    let face_tags: Vec<ExitFace> = faces.iter().map(|(_, f)| *f).collect();
    events.extend(faces.into_iter().map(|(e, _)| e));

    let y0 = Vector3::new(p0.x, p0.y, p0.z);
    let out = integrator.run(y0, t_final.min(settings.max_time), &events)?;

    let mut trajectory = Trajectory {
        samples: out
            .samples
            .iter()
            .map(|(t, y)| TrajectorySample { t: *t, point: pt(y) })
            .collect(),
        hits: Vec::new(),
        exit: None,
    };
    for hit in &out.hits {
        if hit.event < n_sections {
            trajectory.hits.push(SectionHit {
                section: hit.event,
                t: hit.t,
                point: pt(&hit.y),
                direction: hit.direction,
            });
        }
    }
    if let Some(term) = &out.terminal {
        if term.event >= n_sections {
            trajectory.exit = Some((term.t, pt(&term.y), face_tags[term.event - n_sections]));
        }
    }
    Ok(trajectory)
}

/// Outcome of a first-return computation.
#[derive(Clone, Copy, Debug)]
pub enum ReturnOutcome {
    /// The section was crossed in the requested direction.
    Hit { t: f64, point: ChartPoint },
    /// The trajectory left the chart first.
    Escape {
        t: f64,
        point: ChartPoint,
        face: ExitFace,
    },
    /// Neither happened within the time budget.
    Timeout { t: f64, point: ChartPoint },
}

/// First crossing of `section` after leaving it (crossings before
/// `1e-9` are ignored so a start on the section does not refire). Tangential
/// crossings are reported as errors.
pub fn first_return(
    model: &ContactModel,
    p0: ChartPoint,
    section: &Section,
    settings: &FlowSettings,
) -> Result<ReturnOutcome> {
    if !model.chart.contains(p0) {
        return Err(Error::OutOfChart {
            x: p0.x,
            y: p0.y,
            z: p0.z,
        });
    }
    let integrator = Integrator::<3> {
        rhs: Box::new(move |_t, y: &Vector3<f64>| {
            let r = model.reeb_field_extended(pt(y))?;
            Ok(Vector3::new(r[0], r[1], r[2]))
        }),
        settings: settings.stepper(),
    };
    let sec = *section;
    let mut events: Vec<EventSpec<3>> = vec![EventSpec {
        g: Box::new(move |_t, y: &Vector3<f64>| sec.coord(y) - sec.value),
        direction: sec.direction,
        terminal: true,
        min_time: 1e-9,
    }];
    let faces = face_events(model);
    let face_tags: Vec<ExitFace> = faces.iter().map(|(_, f)| *f).collect();
    events.extend(faces.into_iter().map(|(e, _)| e));

    let y0 = Vector3::new(p0.x, p0.y, p0.z);
    let out = integrator.run(y0, settings.max_time, &events)?;
    match out.terminal {
        Some(hit) if hit.event == 0 => Ok(ReturnOutcome::Hit {
            t: hit.t,
            point: pt(&hit.y),
        }),
        Some(hit) => Ok(ReturnOutcome::Escape {
            t: hit.t,
            point: pt(&hit.y),
            face: face_tags[hit.event - 1],
        }),
        None => {
            let (t, y) = *out.samples.last().unwrap();
            Ok(ReturnOutcome::Timeout { t, point: pt(&y) })
        }
    }
}
