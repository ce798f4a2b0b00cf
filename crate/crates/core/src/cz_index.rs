//! Conley-Zehnder indices of paths of symplectic 2x2 matrices.
//!
//! A path starting at the identity and ending away from trace 2 gets an
//! integer index by extending it to a normal form (a stretch for even
//! parity, minus a stretch for odd) and counting half-turns of the
//! rotation part of the polar decomposition along the way. The extension
//! is built explicitly and its winding is measured, so a wrong branch
//! choice shows up as a residual instead of a silent off-by-two.

use crate::{Error, Result};
use nalgebra::{Matrix2, SymmetricEigen};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// A sampled path t -> M(t) in Sp(2, R), starting at the identity.
#[derive(Clone, Debug)]
pub struct SymplecticPath {
    pub samples: Vec<(f64, Matrix2<f64>)>,
}

impl SymplecticPath {
    /// Validates sampling order, the identity start, and det = 1 throughout.
    pub fn new(samples: Vec<(f64, Matrix2<f64>)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Precondition(
                "a symplectic path needs at least two samples".into(),
            ));
        }
        let (t0, m0) = &samples[0];
        if (m0 - Matrix2::identity()).norm() > 1e-6 {
            return Err(Error::Precondition(
                "path must start at the identity".into(),
            ));
        }
        let mut prev_t = *t0;
        for (i, (t, m)) in samples.iter().enumerate() {
            if i > 0 && *t <= prev_t {
                return Err(Error::Precondition(format!(
                    "sample times must increase (index {i})"
                )));
            }
            prev_t = *t;
            let det = m.determinant();
            if (det - 1.0).abs() > 1e-6 {
                return Err(Error::Precondition(format!(
                    "determinant drifted to {det} at t = {t}"
                )));
            }
        }
        Ok(SymplecticPath { samples })
    }

    pub fn end_matrix(&self) -> Matrix2<f64> {
        self.samples.last().unwrap().1
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().unwrap().0
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,m11,m12,m21,m22\n");
        for (t, m) in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                t,
                m[(0, 0)],
                m[(0, 1)],
                m[(1, 0)],
                m[(1, 1)]
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (ln == 0 && line.starts_with('t')) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Format(format!(
                    "line {}: expected 5 fields, got {}",
                    ln + 1,
                    fields.len()
                )));
            }
            let mut v = [0.0_f64; 5];
            for (k, f) in fields.iter().enumerate() {
                v[k] = f
                    .parse()
                    .map_err(|_| Error::Format(format!("line {}: bad number {f:?}", ln + 1)))?;
            }
            samples.push((v[0], Matrix2::new(v[1], v[2], v[3], v[4])));
        }
        SymplecticPath::new(samples)
    }
}

/// Angle of the rotation part of the polar decomposition M = R(theta) S.
pub fn rotation_angle(m: &Matrix2<f64>) -> f64 {
    (m[(1, 0)] - m[(0, 1)]).atan2(m[(0, 0)] + m[(1, 1)])
}

/// Argument of the image of the first basis vector.
pub fn e1_angle(m: &Matrix2<f64>) -> f64 {
    m[(1, 0)].atan2(m[(0, 0)])
}

fn wrap_pi(mut d: f64) -> f64 {
    while d > PI {
        d -= TAU;
    }
    while d <= -PI {
        d += TAU;
    }
    d
}

/// Unwraps an angle functional along the path. Consecutive samples must stay
/// within a quarter turn of each other; larger jumps mean the sampling is
/// too coarse to track the winding.
pub fn unwrap_angles(
    path: &SymplecticPath,
    angle: impl Fn(&Matrix2<f64>) -> f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(path.samples.len());
    let mut prev = angle(&path.samples[0].1);
    let mut acc = prev;
    out.push(acc);
    for (i, (_, m)) in path.samples.iter().enumerate().skip(1) {
        let raw = angle(m);
        let d = wrap_pi(raw - prev);
        if d.abs() >= FRAC_PI_2 {
            return Err(Error::AngleResolution { index: i, step: d });
        }
        acc += d;
        out.push(acc);
        prev = raw;
    }
    Ok(out)
}

struct Polar {
    theta: f64,
    s: Matrix2<f64>,
    lambda: f64,
    q: Matrix2<f64>,
}

fn polar_parts(m: &Matrix2<f64>) -> Result<Polar> {
    let a = m.transpose() * m;
    let eig = SymmetricEigen::new(a);
    let (w0, w1) = (eig.eigenvalues[0], eig.eigenvalues[1]);
    if w0 <= 0.0 || w1 <= 0.0 {
        return Err(Error::Degenerate("polar factor is singular".into()));
    }
    let (big, small, vbig, vsmall) = if w0 >= w1 {
        (w0.sqrt(), w1.sqrt(), eig.eigenvectors.column(0), eig.eigenvectors.column(1))
    } else {
        (w1.sqrt(), w0.sqrt(), eig.eigenvectors.column(1), eig.eigenvectors.column(0))
    };
    let mut q = Matrix2::from_columns(&[vbig.into_owned(), vsmall.into_owned()]);
    if q.determinant() < 0.0 {
        q.set_column(1, &(-q.column(1)));
    }
    let s = q * Matrix2::new(big, 0.0, 0.0, small) * q.transpose();
    Ok(Polar {
        theta: rotation_angle(m),
        s,
        lambda: big,
        q,
    })
}

fn rot(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

const LEG: usize = 256;

/// Path from `m` to a normal form, staying inside the nondegenerate part of
/// the group, starting exactly at `m`.
fn canonical_extension(m: &Matrix2<f64>) -> Result<Vec<Matrix2<f64>>> {
    let tr = m.trace();
    let p = polar_parts(m)?;
    let mut path = Vec::with_capacity(3 * LEG + 3);

    let rotate_leg = |path: &mut Vec<Matrix2<f64>>, from: &Matrix2<f64>, delta: f64| {
        for k in 1..=LEG {
            path.push(rot(delta * k as f64 / LEG as f64) * from);
        }
    };

    if tr > 2.0 {
        // Rotate the polar angle to the nearest even half-turn; the trace
        // stays above 2 because it is (tr S) cos(theta) along the way.
        let target = (p.theta / TAU).round() * TAU;
        rotate_leg(&mut path, m, target - p.theta);
        // Stretch the symmetric factor onto diag(2, 1/2) and undo the
        // eigenbasis; everything here is symmetric, so no winding.
        let phi0 = p.q[(1, 0)].atan2(p.q[(0, 0)]);
        for k in 1..=LEG {
            let u = k as f64 / LEG as f64;
            let lam = p.lambda.powf(1.0 - u) * 2.0_f64.powf(u);
            path.push(p.q * Matrix2::new(lam, 0.0, 0.0, 1.0 / lam) * p.q.transpose());
        }
        for k in 1..=LEG {
            let u = k as f64 / LEG as f64;
            let r = rot(phi0 * (1.0 - u));
            path.push(r * Matrix2::new(2.0, 0.0, 0.0, 0.5) * r.transpose());
        }
    } else if tr <= -2.0 {
        // Mirror image: rotate to the nearest odd half-turn (trace stays at
        // or below -2), then relax the symmetric factor to reach -I.
        let target = ((p.theta - PI) / TAU).round() * TAU + PI;
        rotate_leg(&mut path, m, target - p.theta);
        for k in 1..=LEG {
            let u = k as f64 / LEG as f64;
            let lam = p.lambda.powf(1.0 - u);
            path.push(-(p.q * Matrix2::new(lam, 0.0, 0.0, 1.0 / lam) * p.q.transpose()));
        }
    } else {
        // Elliptic: relax the symmetric factor first (the trace scales
        // toward 2 cos(theta) without crossing 2), leaving a pure rotation,
        // then turn it to the odd half-turn inside its gap between even
        // ones.
        let s_inv = p
            .s
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("polar factor is singular".into()))?;
        for k in 1..=LEG {
            let u = k as f64 / LEG as f64;
            let lam = p.lambda.powf(1.0 - u);
            let su = p.q * Matrix2::new(lam, 0.0, 0.0, 1.0 / lam) * p.q.transpose();
            path.push(m * s_inv * su);
        }
        let rot_end = rot(p.theta);
        let target = (p.theta / TAU).floor() * TAU + PI;
        for k in 1..=LEG {
            path.push(rot(p.theta + (target - p.theta) * k as f64 / LEG as f64));
        }
        // Overwrite the stretched tail start with the exact rotation to
        // avoid a spurious jump from numerical polar error.
        let idx = path.len() - LEG;
        path[idx - 1] = rot_end;
    }
    Ok(path)
}

/// Conley-Zehnder index of a nondegenerate path: the winding of the polar
/// rotation angle over the path plus its canonical extension, in half-turns.
pub fn conley_zehnder(path: &SymplecticPath) -> Result<i64> {
    let angles = unwrap_angles(path, rotation_angle)?;
    let m_end = path.end_matrix();
    let tr = m_end.trace();
    if (tr - 2.0).abs() <= 1e-8 {
        return Err(Error::Degenerate(format!(
            "endpoint trace {tr} is degenerate"
        )));
    }
    let mut acc = *angles.last().unwrap();
    let mut prev = rotation_angle(&m_end);
    for m in canonical_extension(&m_end)? {
        let raw = rotation_angle(&m);
        let d = wrap_pi(raw - prev);
        if d.abs() >= FRAC_PI_2 {
            return Err(Error::Numerical(
                "canonical extension moved too fast".into(),
            ));
        }
        acc += d;
        prev = raw;
    }
    let mu_f = acc / PI;
    let mu = mu_f.round();
    if (mu_f - mu).abs() > 0.01 {
        return Err(Error::Numerical(format!(
            "canonical extension left residual {:.3e}",
            (mu_f - mu).abs()
        )));
    }
    let mu = mu as i64;
    let even = tr > 2.0;
    if (mu.rem_euclid(2) == 0) != even {
        return Err(Error::Numerical(
            "index parity disagrees with the endpoint trace".into(),
        ));
    }
    Ok(mu)
}

/// Chord-style index: the number of completed half-turns of the image of
/// the first frame vector, so theta in (pi k, pi (k+1)] maps to k.
pub fn mu_tilde(path: &SymplecticPath) -> Result<i64> {
    let angles = unwrap_angles(path, e1_angle)?;
    let theta = *angles.last().unwrap();
    let near = (theta / PI).round();
    if (theta - near * PI).abs() < 1e-9 {
        eprintln!(
            "warning: frame angle {theta:.12} sits on a half-turn boundary; \
             the index is sensitive to perturbation"
        );
    }
    Ok((theta / PI).ceil() as i64 - 1)
}

/// Linear type of a symplectic matrix away from the degenerate traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixClass {
    PositiveHyperbolic,
    NegativeHyperbolic,
    Elliptic,
    Degenerate,
}

pub fn classify(m: &Matrix2<f64>) -> Result<MatrixClass> {
    if (m.determinant() - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "determinant {} is not 1",
            m.determinant()
        )));
    }
    let tr = m.trace();
    if (tr.abs() - 2.0).abs() < 1e-9 {
        return Ok(MatrixClass::Degenerate);
    }
    Ok(if tr > 2.0 {
        MatrixClass::PositiveHyperbolic
    } else if tr < -2.0 {
        MatrixClass::NegativeHyperbolic
    } else {
        MatrixClass::Elliptic
    })
}

/// An iterate is bad when the underlying simple orbit has odd index and the
/// multiplicity is even; everything else is good.
pub fn is_good(root_index: i64, multiplicity: usize) -> bool {
    !(root_index.rem_euclid(2) == 1 && multiplicity % 2 == 0)
}

/// Sum of per-letter indices over a word.
pub fn word_index(
    word: &str,
    letter_index: &std::collections::BTreeMap<char, i64>,
) -> Result<i64> {
    let mut total = 0;
    for ch in word.chars() {
        total += letter_index
            .get(&ch)
            .copied()
            .ok_or_else(|| Error::UnknownLetter(ch.to_string()))?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation_path(theta_end: f64, n: usize) -> SymplecticPath {
        let samples = (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                (t, rot(theta_end * t))
            })
            .collect();
        SymplecticPath::new(samples).unwrap()
    }

    #[test]
    fn rotations_count_half_turns() {
        assert_eq!(conley_zehnder(&rotation_path(PI + 0.3, 400)).unwrap(), 1);
        assert_eq!(conley_zehnder(&rotation_path(TAU + 0.5, 400)).unwrap(), 3);
        assert_eq!(conley_zehnder(&rotation_path(-0.4, 400)).unwrap(), -1);
        assert_eq!(
            conley_zehnder(&rotation_path(2.0 * TAU + 3.0, 900)).unwrap(),
            5
        );
    }

    #[test]
    fn pure_stretch_has_index_zero() {
        let samples: Vec<_> = (0..=200)
            .map(|k| {
                let t = k as f64 / 200.0;
                (t, Matrix2::new((0.8 * t).exp(), 0.0, 0.0, (-0.8 * t).exp()))
            })
            .collect();
        let path = SymplecticPath::new(samples).unwrap();
        assert_eq!(conley_zehnder(&path).unwrap(), 0);
    }

    #[test]
    fn negative_stretch_is_odd() {
        // Rotate by pi while stretching: ends at -diag(e^a, e^-a).
        let samples: Vec<_> = (0..=400)
            .map(|k| {
                let t = k as f64 / 400.0;
                let d = Matrix2::new((0.6 * t).exp(), 0.0, 0.0, (-0.6 * t).exp());
                (t, rot(PI * t) * d)
            })
            .collect();
        let path = SymplecticPath::new(samples).unwrap();
        assert_eq!(conley_zehnder(&path).unwrap(), 1);
        assert_eq!(
            classify(&path.end_matrix()).unwrap(),
            MatrixClass::NegativeHyperbolic
        );
    }

    #[test]
    fn shear_endpoint_is_degenerate() {
        let samples: Vec<_> = (0..=100)
            .map(|k| {
                let t = k as f64 / 100.0;
                (t, Matrix2::new(1.0, t, 0.0, 1.0))
            })
            .collect();
        let path = SymplecticPath::new(samples).unwrap();
        assert!(matches!(
            conley_zehnder(&path),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn coarse_sampling_is_rejected() {
        let path = rotation_path(3.0 * TAU, 8);
        assert!(matches!(
            conley_zehnder(&path),
            Err(Error::AngleResolution { .. })
        ));
    }

    #[test]
    fn half_turn_counter_brackets() {
        assert_eq!(mu_tilde(&rotation_path(1.2, 100)).unwrap(), 0);
        assert_eq!(mu_tilde(&rotation_path(3.3, 200)).unwrap(), 1);
        assert_eq!(mu_tilde(&rotation_path(PI, 100)).unwrap(), 0);
        assert_eq!(mu_tilde(&rotation_path(PI + 1e-6, 100)).unwrap(), 1);
    }

    #[test]
    fn classification_table() {
        assert_eq!(
            classify(&Matrix2::new(3.0, 0.0, 0.0, 1.0 / 3.0)).unwrap(),
            MatrixClass::PositiveHyperbolic
        );
        assert_eq!(
            classify(&rot(1.0)).unwrap(),
            MatrixClass::Elliptic
        );
        assert_eq!(
            classify(&Matrix2::new(1.0, 1.0, 0.0, 1.0)).unwrap(),
            MatrixClass::Degenerate
        );
        assert!(classify(&Matrix2::new(2.0, 0.0, 0.0, 2.0)).is_err());
    }

    #[test]
    fn good_and_bad_iterates() {
        assert!(is_good(1, 1));
        assert!(!is_good(1, 2));
        assert!(is_good(0, 2));
        assert!(is_good(2, 4));
        assert!(!is_good(-1, 6));
        assert!(is_good(-1, 3));
    }

    #[test]
    fn word_index_sums_letters() {
        let mut table = std::collections::BTreeMap::new();
        table.insert('a', 1);
        table.insert('b', 3);
        assert_eq!(word_index("aab", &table).unwrap(), 5);
        assert!(matches!(
            word_index("abc", &table),
            Err(Error::UnknownLetter(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let path = rotation_path(2.5, 50);
        let text = path.to_csv();
        let back = SymplecticPath::from_csv(&text).unwrap();
        assert_eq!(back.samples.len(), path.samples.len());
        for ((t0, m0), (t1, m1)) in path.samples.iter().zip(back.samples.iter()) {
            assert!((t0 - t1).abs() < 1e-15);
            assert!((m0 - m1).norm() < 1e-12);
        }
    }
}
