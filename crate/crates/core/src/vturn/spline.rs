//! Clamped cubic B-spline legs with imposed end tangents.
//!
//! Each leg has six control points on the knot vector
//! `[0, 0, 0, 0, 1/3, 2/3, 1, 1, 1, 1]`. They are fixed by six conditions:
//! position, first and zero second derivative at both ends. The condition
//! matrix depends only on the knots, so it is inverted once.

use std::sync::OnceLock;

use crate::{Error, Result};

pub const DEGREE: usize = 3;
pub const N_CONTROL: usize = 6;
pub const KNOTS: [f64; N_CONTROL + DEGREE + 1] = [0.0, 0.0, 0.0, 0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 1.0, 1.0, 1.0];
/// Uniform parameter samples per leg.
pub const SAMPLES: usize = 200;

type Mat6 = [[f64; N_CONTROL]; N_CONTROL];

fn find_span(s: f64) -> usize {
    let n = N_CONTROL - 1;
    if s >= KNOTS[n + 1] {
        return n;
    }
    let mut span = DEGREE;
    while span < n && s >= KNOTS[span + 1] {
        span += 1;
    }
    span
}

/// Basis values and their first two derivatives at `s`: `out[k][i]` is the
/// `k`-th derivative of `N_i`.
pub fn basis_derivatives(s: f64) -> [[f64; N_CONTROL]; 3] {
    let s = s.clamp(0.0, 1.0);
    let span = find_span(s);
    let p = DEGREE;
    // Triangular table of basis functions and knot differences.
    let mut ndu = [[0.0f64; DEGREE + 1]; DEGREE + 1];
    let mut left = [0.0f64; DEGREE + 1];
    let mut right = [0.0f64; DEGREE + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = s - KNOTS[span + 1 - j];
        right[j] = KNOTS[span + j] - s;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = [[0.0f64; DEGREE + 1]; 3];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        let mut a = [[0.0f64; DEGREE + 1]; 2];
        a[0][0] = 1.0;
        for k in 1..=2usize {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for k in 1..=2 {
        for j in 0..=p {
            ders[k][j] *= fac;
        }
        fac *= (p - k) as f64;
    }

    let mut out = [[0.0; N_CONTROL]; 3];
    for k in 0..3 {
        for j in 0..=p {
            out[k][span - p + j] = ders[k][j];
        }
    }
    out
}

fn invert(mut m: Mat6) -> Result<Mat6> {
    let mut inv = [[0.0; N_CONTROL]; N_CONTROL];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..N_CONTROL {
        let pivot = (col..N_CONTROL)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-12 {
            return Err(Error::SingularSpline);
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let d = m[col][col];
        for j in 0..N_CONTROL {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..N_CONTROL {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for j in 0..N_CONTROL {
                        m[r][j] -= f * m[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Ok(inv)
}

/// Rows: value, first and second derivative at `s = 0`; second and first
/// derivative and value at `s = 1`.
pub fn condition_matrix() -> Mat6 {
    let b0 = basis_derivatives(0.0);
    let b1 = basis_derivatives(1.0);
    [b0[0], b0[1], b0[2], b1[2], b1[1], b1[0]]
}

struct Tables {
    inverse: Mat6,
    samples: Vec<[[f64; N_CONTROL]; 3]>,
}

fn tables() -> Result<&'static Tables> {
    static TABLES: OnceLock<Option<Tables>> = OnceLock::new();
    TABLES
        .get_or_init(|| {
            let inverse = invert(condition_matrix()).ok()?;
            let samples = (0..SAMPLES)
                .map(|k| basis_derivatives(k as f64 / (SAMPLES - 1) as f64))
                .collect();
            Some(Tables { inverse, samples })
        })
        .as_ref()
        .ok_or(Error::SingularSpline)
}

/// One spline leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineSegment {
    pub control: [[f64; 2]; N_CONTROL],
}

impl SplineSegment {
    /// Leg from `q0` to `q1` with end derivatives `alpha * d0` and
    /// `beta * d1` (`d0`, `d1` unit vectors) and zero end curvature terms.
    pub fn solve(q0: [f64; 2], d0: [f64; 2], alpha: f64, q1: [f64; 2], d1: [f64; 2], beta: f64) -> Result<Self> {
        let inv = &tables()?.inverse;
        let rhs = [
            q0,
            [alpha * d0[0], alpha * d0[1]],
            [0.0, 0.0],
            [0.0, 0.0],
            [beta * d1[0], beta * d1[1]],
            q1,
        ];
        let mut control = [[0.0; 2]; N_CONTROL];
        for (i, c) in control.iter_mut().enumerate() {
            for (j, r) in rhs.iter().enumerate() {
                c[0] += inv[i][j] * r[0];
                c[1] += inv[i][j] * r[1];
            }
        }
        Ok(Self { control })
    }

    fn combine(&self, w: &[f64; N_CONTROL]) -> [f64; 2] {
        let mut p = [0.0; 2];
        for (c, wi) in self.control.iter().zip(w) {
            p[0] += wi * c[0];
            p[1] += wi * c[1];
        }
        p
    }

    pub fn point(&self, s: f64) -> [f64; 2] {
        self.combine(&basis_derivatives(s)[0])
    }

    pub fn derivative(&self, s: f64) -> [f64; 2] {
        self.combine(&basis_derivatives(s)[1])
    }

    pub fn second_derivative(&self, s: f64) -> [f64; 2] {
        self.combine(&basis_derivatives(s)[2])
    }

    /// Samples the leg at [`SAMPLES`] uniform parameters.
    pub fn sample(&self) -> Result<LegSamples> {
        let t = tables()?;
        let mut points = Vec::with_capacity(SAMPLES);
        let mut kappa = Vec::with_capacity(SAMPLES);
        for w in &t.samples {
            let p = self.combine(&w[0]);
            let d = self.combine(&w[1]);
            let dd = self.combine(&w[2]);
            let speed = d[0].hypot(d[1]);
            let k = if speed > 1e-12 {
                (d[0] * dd[1] - d[1] * dd[0]) / (speed * speed * speed)
            } else {
                0.0
            };
            points.push(p);
            kappa.push(k);
        }
        Ok(LegSamples::new(points, kappa))
    }
}

/// A leg sampled along its parameter: positions, signed curvature, and
/// cumulative arc length (chord sums).
#[derive(Debug, Clone, PartialEq)]
pub struct LegSamples {
    pub points: Vec<[f64; 2]>,
    pub kappa: Vec<f64>,
    pub arc: Vec<f64>,
}

impl LegSamples {
    pub fn new(points: Vec<[f64; 2]>, kappa: Vec<f64>) -> Self {
        let mut arc = Vec::with_capacity(points.len());
        let mut s = 0.0;
        for (k, p) in points.iter().enumerate() {
            if k > 0 {
                s += crate::geometry::dist(points[k - 1], *p);
            }
            arc.push(s);
        }
        Self { points, kappa, arc }
    }

    pub fn length(&self) -> f64 {
        self.arc.last().copied().unwrap_or(0.0)
    }

    /// Arc length attributed to sample `i` (half of each adjacent chord).
    pub fn ds(&self, i: usize) -> f64 {
        let n = self.arc.len();
        let lo = if i == 0 { self.arc[0] } else { 0.5 * (self.arc[i - 1] + self.arc[i]) };
        let hi = if i + 1 == n { self.arc[i] } else { 0.5 * (self.arc[i] + self.arc[i + 1]) };
        hi - lo
    }

    /// `dκ/ds` at sample `i`: central differences inside, one-sided at the ends.
    pub fn dkappa(&self, i: usize) -> f64 {
        let n = self.arc.len();
        if n < 2 {
            return 0.0;
        }
        let (a, b) = match i {
            0 => (0, 1),
            _ if i + 1 == n => (n - 2, n - 1),
            _ => (i - 1, i + 1),
        };
        let ds = self.arc[b] - self.arc[a];
        if ds > 1e-12 {
            (self.kappa[b] - self.kappa[a]) / ds
        } else {
            0.0
        }
    }

    /// `γ1 Σ κ² Δs + γ2 Σ (dκ/ds)² Δs + γ3 Σ Δs`.
    pub fn quality(&self, gamma: &[f64; 3]) -> f64 {
        let mut bend = 0.0;
        let mut twist = 0.0;
        for i in 0..self.arc.len() {
            let ds = self.ds(i);
            bend += self.kappa[i] * self.kappa[i] * ds;
            let dk = self.dkappa(i);
            twist += dk * dk * ds;
        }
        gamma[0] * bend + gamma[1] * twist + gamma[2] * self.length()
    }
}
