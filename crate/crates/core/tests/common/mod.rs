//! Independent cross-check implementations used by the integration tests.
//!
//! Everything in this module is deliberately written against raw data
//! (sample slices, integer tuples, closures) rather than library types, and
//! uses different algorithms than the library where feasible, so that a bug
//! in the library cannot silently cancel against a bug in the checks.

#![allow(dead_code)]

pub type Mat2 = [[f64; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn mat_det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn mat_tr(a: &Mat2) -> f64 {
    a[0][0] + a[1][1]
}

/// omega(u, v) = u_x v_y - u_y v_x.
pub fn omega(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

// ---------------------------------------------------------------------------
// Conley-Zehnder index via the crossing formula.
//
// For a path M(t) with M(0) = Id and det(M(1) - Id) != 0, the index equals
//   1/2 sig(Q_0) + sum over interior crossings of sign(Q_t),
// where a crossing is a time with tr M(t) = 2, Q_t(v) = omega(v, M'(t) v)
// restricted to ker(M(t) - Id), and Q_0 is the full quadratic form at t = 0.
// ---------------------------------------------------------------------------

/// Computes the index from dense samples `(t, M)`. Returns `None` when the
/// data is too degenerate to trust (tangential crossing, singular initial
/// form, crossing too close to an endpoint); callers should discard such
/// paths rather than assert on them.
pub fn cz_index_crossing_oracle(samples: &[(f64, Mat2)]) -> Option<i64> {
    assert!(samples.len() >= 64, "oracle needs dense samples");
    let g = |m: &Mat2| 2.0 - mat_tr(m);

    // Endpoint nondegeneracy: det(M - I) = 2 - tr M on Sp(2).
    if g(&samples.last().unwrap().1).abs() < 1e-6 {
        return None;
    }

    // Derivative of M at sample i by central differences.
    let deriv = |i: usize| -> Mat2 {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(samples.len() - 1);
        let dt = samples[hi].0 - samples[lo].0;
        let (a, b) = (&samples[lo].1, &samples[hi].1);
        [
            [(b[0][0] - a[0][0]) / dt, (b[0][1] - a[0][1]) / dt],
            [(b[1][0] - a[1][0]) / dt, (b[1][1] - a[1][1]) / dt],
        ]
    };

    // Initial form Q_0(v) = omega(v, M'(0) v); require it definite.
    let d0 = deriv(0);
    // Q_0 as a symmetric matrix: q(v) = v^T S v with
    // S = 1/2 (J0^T D + D^T J0) where omega(u,w) = u^T J0 w, J0 = [[0,1],[-1,0]].
    let j0 = [[0.0, 1.0], [-1.0, 0.0]];
    let jd = mat_mul(&j0, &d0);
    let s0 = [
        [jd[0][0], 0.5 * (jd[0][1] + jd[1][0])],
        [0.5 * (jd[0][1] + jd[1][0]), jd[1][1]],
    ];
    let det_s0 = mat_det(&s0);
    if det_s0.abs() < 1e-4 {
        return None; // indefinite-or-singular start: reject
    }
    let half_sig0: i64 = if det_s0 > 0.0 {
        if s0[0][0] + s0[1][1] > 0.0 {
            1
        } else {
            -1
        }
    } else {
        0
    };

    // Interior crossings: sign changes of g between consecutive samples.
    let mut total = half_sig0;
    let n = samples.len();
    for i in 1..n - 1 {
        let (t0, ref m0) = samples[i];
        let (t1, ref m1) = samples[i + 1];
        let (g0, g1) = (g(m0), g(m1));
        if g0 == 0.0 && i > 0 {
            return None; // exact hit on a sample: ambiguous bracketing
        }
        if g0 * g1 < 0.0 {
            // Locate the crossing by linear interpolation, then take the
            // nearest sample's kernel vector and derivative.
            let frac = g0 / (g0 - g1);
            let idx = if frac < 0.5 { i } else { i + 1 };
            if idx + 2 >= n || idx < 2 {
                return None;
            }
            let _ = t0 + frac * (t1 - t0);
            let m = &samples[idx].1;
            // ker(M - I): one row of (M - I) gives the normal; kernel vector
            // is its 90-degree rotation. Pick the larger row for stability.
            let r0 = [m[0][0] - 1.0, m[0][1]];
            let r1 = [m[1][0], m[1][1] - 1.0];
            let row = if r0[0].hypot(r0[1]) >= r1[0].hypot(r1[1]) {
                r0
            } else {
                r1
            };
            let norm = row[0].hypot(row[1]);
            if norm < 1e-9 {
                return None; // M close to Id in the interior: reject
            }
            let v = [-row[1] / norm, row[0] / norm];
            let d = deriv(idx);
            let dv = [
                d[0][0] * v[0] + d[0][1] * v[1],
                d[1][0] * v[0] + d[1][1] * v[1],
            ];
            let q = omega(v, dv);
            if q.abs() < 1e-4 {
                return None; // tangential crossing: reject
            }
            total += if q > 0.0 { 1 } else { -1 };
        }
    }
    Some(total)
}

/// Unwrapped argument of the first column of M along the samples, starting
/// at zero. Used to cross-check rotation-angle bookkeeping.
pub fn unwrapped_e1_angle(samples: &[(f64, Mat2)]) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut prev_raw = 0.0_f64;
    let mut acc = 0.0_f64;
    for (i, (_, m)) in samples.iter().enumerate() {
        let raw = m[1][0].atan2(m[0][0]);
        if i == 0 {
            prev_raw = raw;
            acc = 0.0;
        } else {
            let mut d = raw - prev_raw;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            acc += d;
            prev_raw = raw;
        }
        out.push(acc);
    }
    out
}

// ---------------------------------------------------------------------------
// Cyclic words / necklaces over composition alphabets.
// ---------------------------------------------------------------------------

/// All compositions of `l` into positive parts, via the 2^(l-1) gap masks.
pub fn compositions(l: usize) -> Vec<Vec<usize>> {
    assert!(l >= 1);
    let mut out = Vec::new();
    for mask in 0..(1u64 << (l - 1)) {
        let mut parts = Vec::new();
        let mut cur = 1usize;
        for bit in 0..(l - 1) {
            if mask & (1 << bit) != 0 {
                parts.push(cur);
                cur = 1;
            } else {
                cur += 1;
            }
        }
        parts.push(cur);
        out.push(parts);
    }
    out
}

/// Least rotation of a sequence (plain quadratic scan; inputs are tiny).
pub fn least_rotation<T: Ord + Clone>(seq: &[T]) -> Vec<T> {
    let n = seq.len();
    let mut best: Option<Vec<T>> = None;
    for s in 0..n {
        let rot: Vec<T> = (0..n).map(|i| seq[(s + i) % n].clone()).collect();
        if best.as_ref().map_or(true, |b| rot < *b) {
            best = Some(rot);
        }
    }
    best.unwrap()
}

/// Number of compositions of `l` up to cyclic rotation, by brute force.
pub fn cyclic_composition_count_bruteforce(l: usize) -> usize {
    let mut seen = std::collections::BTreeSet::new();
    for c in compositions(l) {
        seen.insert(least_rotation(&c));
    }
    seen.len()
}

/// Same count through the divisor formula (1/l) sum_{d | l} phi(l/d) (2^d - 1).
pub fn cyclic_composition_count_formula(l: usize) -> usize {
    fn phi(mut n: usize) -> usize {
        let mut result = n;
        let mut p = 2;
        while p * p <= n {
            if n % p == 0 {
                while n % p == 0 {
                    n /= p;
                }
                result -= result / p;
            }
            p += 1;
        }
        if n > 1 {
            result -= result / n;
        }
        result
    }
    let mut total = 0usize;
    for d in 1..=l {
        if l % d == 0 {
            total += phi(l / d) * ((1usize << d) - 1);
        }
    }
    total / l
}

/// Multiplicity of a cyclic sequence: largest m such that the sequence is a
/// repeated block of length l/m.
pub fn cyclic_multiplicity<T: PartialEq>(seq: &[T]) -> usize {
    let n = seq.len();
    for p in 1..=n {
        if n % p == 0 && (0..n).all(|i| seq[i] == seq[i % p]) {
            return n / p;
        }
    }
    1
}

/// Euler characteristic of the weight-l block, counted directly: one even
/// generator for the l-fold cover of the base orbit, plus (-1)^{parts} for
/// every good cyclic composition of l. Each part contributes one half-turn
/// regardless of its weight, so the index of a composition is its number of
/// parts, and a composition is bad exactly when it is an even multiple of a
/// block with an odd number of parts.
pub fn euler_block_bruteforce(l: usize) -> i64 {
    let mut chi: i64 = 1; // the covering orbit, even index
    let mut seen = std::collections::BTreeSet::new();
    for c in compositions(l) {
        let canon = least_rotation(&c);
        if !seen.insert(canon.clone()) {
            continue;
        }
        let m = cyclic_multiplicity(&canon);
        let root_len = canon.len() / m;
        let good = !(root_len % 2 == 1 && m % 2 == 0);
        if good {
            chi += if canon.len() % 2 == 0 { 1 } else { -1 };
        }
    }
    chi
}

// ---------------------------------------------------------------------------
// Non-crossing perfect matchings.
// ---------------------------------------------------------------------------

/// All perfect matchings of 2n points, then filtered for non-crossing.
/// Kept deliberately naive (double factorial enumeration).
pub fn noncrossing_matchings_bruteforce(n: usize) -> Vec<Vec<(usize, usize)>> {
    fn all_matchings(points: &[usize]) -> Vec<Vec<(usize, usize)>> {
        if points.is_empty() {
            return vec![Vec::new()];
        }
        let a = points[0];
        let mut out = Vec::new();
        for i in 1..points.len() {
            let b = points[i];
            let rest: Vec<usize> = points[1..]
                .iter()
                .copied()
                .filter(|&p| p != b)
                .collect();
            for mut sub in all_matchings(&rest) {
                sub.push((a, b));
                out.push(sub);
            }
        }
        out
    }
    let points: Vec<usize> = (0..2 * n).collect();
    let mut keep = Vec::new();
    for mut m in all_matchings(&points) {
        m.sort();
        let crossing = m.iter().any(|&(a, b)| {
            m.iter()
                .any(|&(c, d)| a < c && c < b && b < d)
        });
        if !crossing {
            keep.push(m);
        }
    }
    keep.sort();
    keep
}

pub fn catalan(n: usize) -> usize {
    // binom(2n, n) / (n + 1), exact in u128 for the sizes used here.
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for k in 0..n {
        num *= (2 * n - k) as u128;
        den *= (k + 1) as u128;
    }
    (num / den / (n as u128 + 1)) as usize
}

/// Bigons of a non-crossing matching, characterised directly: a bigon region
/// corresponds to a chord joining cyclically adjacent points.
pub fn bigon_count_direct(n: usize, matching: &[(usize, usize)]) -> usize {
    matching
        .iter()
        .filter(|&&(a, b)| b == a + 1 || (a == 0 && b == 2 * n - 1))
        .count()
}

// ---------------------------------------------------------------------------
// Rank bookkeeping for parallel dividing sets, counted from the tower list.
// ---------------------------------------------------------------------------

/// Counts (even, odd) positions among towers 0..n-2 surviving after removing
/// the listed positions.
pub fn tower_counts(n: usize, removed: &[usize]) -> (usize, usize) {
    let mut even = 0;
    let mut odd = 0;
    for k in 0..n.saturating_sub(1) {
        if removed.contains(&k) {
            continue;
        }
        if k % 2 == 0 {
            even += 1;
        } else {
            odd += 1;
        }
    }
    (even, odd)
}

// ---------------------------------------------------------------------------
// Contact-condition spot checks by high-order finite differences.
// ---------------------------------------------------------------------------

/// Fourth-order central difference of a scalar function.
pub fn fd4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Given the coefficient field w of a one-form (w_x dx + w_y dy + w_z dz)
/// as a closure, evaluates alpha(r) and |i_r d(alpha)| at a point for a given
/// vector field value r, using only finite differences of w.
pub fn contact_residuals(
    w: &dyn Fn([f64; 3]) -> [f64; 3],
    p: [f64; 3],
    r: [f64; 3],
) -> (f64, f64) {
    let h = 1e-5;
    let comp = |i: usize, q: [f64; 3]| w(q)[i];
    let dd = |i: usize, j: usize| {
        // d w_i / d x_j at p
        fd4(
            |s| {
                let mut q = p;
                q[j] = s;
                comp(i, q)
            },
            p[j],
            h,
        )
    };
    let wp = w(p);
    let pairing = wp[0] * r[0] + wp[1] * r[1] + wp[2] * r[2];
    // d(alpha)(u, v) = sum_{i<j} (d_i w_j - d_j w_i) (u_i v_j - u_j v_i)
    let c01 = dd(1, 0) - dd(0, 1);
    let c02 = dd(2, 0) - dd(0, 2);
    let c12 = dd(2, 1) - dd(1, 2);
    // i_r d(alpha) evaluated on basis vectors
    let on_x = -(c01 * r[1] + c02 * r[2]);
    let on_y = c01 * r[0] - c12 * r[2];
    let on_z = c02 * r[0] + c12 * r[1];
    let norm = (on_x * on_x + on_y * on_y + on_z * on_z).sqrt();
    (pairing, norm)
}

// ---------------------------------------------------------------------------
// Black-box affine probing for section maps.
// ---------------------------------------------------------------------------

/// Recovers (A, b) of an affine planar map by probing it at three points
/// around `c`, then returns the fixed point of the map, if the linear part
/// has no eigenvalue 1.
pub fn affine_fixed_point_probe(
    f: &dyn Fn([f64; 2]) -> [f64; 2],
    c: [f64; 2],
    h: f64,
) -> Option<[f64; 2]> {
    let f0 = f(c);
    let fx = f([c[0] + h, c[1]]);
    let fz = f([c[0], c[1] + h]);
    let a = [
        [(fx[0] - f0[0]) / h, (fz[0] - f0[0]) / h],
        [(fx[1] - f0[1]) / h, (fz[1] - f0[1]) / h],
    ];
    // b = f(c) - A c
    let b = [
        f0[0] - a[0][0] * c[0] - a[0][1] * c[1],
        f0[1] - a[1][0] * c[0] - a[1][1] * c[1],
    ];
    // Solve (I - A) p = b.
    let m = [[1.0 - a[0][0], -a[0][1]], [-a[1][0], 1.0 - a[1][1]]];
    let det = mat_det(&m);
    if det.abs() < 1e-12 {
        return None;
    }
    Some([
        (b[0] * m[1][1] - b[1] * m[0][1]) / det,
        (b[1] * m[0][0] - b[0] * m[1][0]) / det,
    ])
}

// ---------------------------------------------------------------------------
// Deterministic light-weight RNG (splitmix64) so oracle-side sampling does
// not depend on external crates.
// ---------------------------------------------------------------------------

pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

// ---------------------------------------------------------------------------
// Sample generation for symplectic paths: fine RK4 on M' = J S(t) M with a
// trigonometric symmetric coefficient curve S(t). Returns dense samples.
// ---------------------------------------------------------------------------

#[derive(Clone)]
pub struct TrigSymCurve {
    // S(t) = [[a(t), b(t)], [b(t), c(t)]] with each entry c0 + c1 cos(w t + p)
    pub coeffs: [[f64; 3]; 3], // rows: a, b, c; columns: c0, c1, phase
    pub freq: f64,
}

impl TrigSymCurve {
    pub fn eval(&self, t: f64) -> Mat2 {
        let ent = |r: usize| {
            self.coeffs[r][0] + self.coeffs[r][1] * (self.freq * t + self.coeffs[r][2]).cos()
        };
        let (a, b, c) = (ent(0), ent(1), ent(2));
        [[a, b], [b, c]]
    }

    pub fn random(rng: &mut SplitMix64, definite_start: bool) -> Self {
        let mut coeffs = [[0.0; 3]; 3];
        for r in 0..3 {
            coeffs[r][0] = rng.range(-1.5, 1.5);
            coeffs[r][1] = rng.range(-1.5, 1.5);
            coeffs[r][2] = rng.range(0.0, std::f64::consts::TAU);
        }
        if definite_start {
            // Dominant definite diagonal at t = 0 (sign chosen at random).
            let sign = if rng.next_f64() < 0.5 { 1.0 } else { -1.0 };
            let bump = rng.range(2.5, 4.0) * sign;
            let b0 = coeffs[1][0] + coeffs[1][1] * coeffs[1][2].cos();
            coeffs[0][0] += bump + b0.abs() * sign;
            coeffs[2][0] += bump + b0.abs() * sign;
        }
        Self {
            coeffs,
            freq: rng.range(0.5, 2.5),
        }
    }
}

/// Integrates M' = J S(t) M, J the quarter turn, with RK4 at `steps` steps
/// over [0, t_end], recording every state.
pub fn integrate_symplectic_path(curve: &TrigSymCurve, t_end: f64, steps: usize) -> Vec<(f64, Mat2)> {
    let j = [[0.0, -1.0], [1.0, 0.0]];
    let rhs = |t: f64, m: &Mat2| -> Mat2 { mat_mul(&mat_mul(&j, &curve.eval(t)), m) };
    let add = |a: &Mat2, b: &Mat2, s: f64| -> Mat2 {
        [
            [a[0][0] + s * b[0][0], a[0][1] + s * b[0][1]],
            [a[1][0] + s * b[1][0], a[1][1] + s * b[1][1]],
        ]
    };
    let mut m: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
    let mut out = vec![(0.0, m)];
    let h = t_end / steps as f64;
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = rhs(t, &m);
        let k2 = rhs(t + 0.5 * h, &add(&m, &k1, 0.5 * h));
        let k3 = rhs(t + 0.5 * h, &add(&m, &k2, 0.5 * h));
        let k4 = rhs(t + h, &add(&m, &k3, h));
        let mut step = add(&k1, &k2, 2.0);
        step = add(&step, &k3, 2.0);
        step = add(&step, &k4, 1.0);
        m = add(&m, &step, h / 6.0);
        // Renormalise the determinant drift so long paths stay on Sp(2).
        let d = mat_det(&m).sqrt();
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] /= d;
            }
        }
        out.push(((i + 1) as f64 * h, m));
    }
    out
}

/// True when 2 - tr grazes zero between samples: a dip that shallow can hide
/// a down-up crossing pair from any sign-change tally, so such draws are
/// discarded as ambiguous rather than counted.
pub fn grazes_the_crossing_locus(samples: &[(f64, Mat2)]) -> bool {
    let g: Vec<f64> = samples.iter().map(|(_, m)| 2.0 - mat_tr(m)).collect();
    (1..g.len() - 1).any(|i| {
        let local_min = g[i] <= g[i - 1] && g[i] <= g[i + 1];
        let local_max = g[i] >= g[i - 1] && g[i] >= g[i + 1];
        (local_min && g[i] > 0.0 && g[i] < 0.02) || (local_max && g[i] < 0.0 && g[i] > -0.02)
    })
}

/// Draws random paths until the endpoint is safely nondegenerate and the
/// crossing tally is unambiguous, so both sides compute on the same data.
pub fn draw_path(rng: &mut SplitMix64) -> (Vec<(f64, Mat2)>, i64) {
    loop {
        let definite = rng.next_f64() < 0.5;
        let curve = TrigSymCurve::random(rng, definite);
        let t_end = rng.range(1.5, 4.0);
        let steps = 1600 + rng.below(800);
        let samples = integrate_symplectic_path(&curve, t_end, steps);
        let tr = mat_tr(&samples.last().unwrap().1);
        if (tr - 2.0).abs() < 1e-3 || (tr.abs() - 2.0).abs() < 1e-3 {
            continue;
        }
        if grazes_the_crossing_locus(&samples) {
            continue;
        }
        if let Some(idx) = cz_index_crossing_oracle(&samples) {
            return (samples, idx);
        }
    }
}
