//! Dig-candidate extraction along the pile toe.
//!
//! The toe is the iso-line at a fixed height above the ground, traced with
//! marching squares on the cell-centre lattice. Segments are oriented with
//! the pile on their left, linked into polylines, clipped to the dig region
//! and walked at a fixed arc-length spacing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geometry::dist;
use crate::heightfield::HeightField;
use crate::worldmodel::DigPose;
use crate::{Error, Result};

/// Axis-aligned dig region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    #[serde(rename = "x_min_m")]
    pub x_min: f64,
    #[serde(rename = "x_max_m")]
    pub x_max: f64,
    #[serde(rename = "y_min_m")]
    pub y_min: f64,
    #[serde(rename = "y_max_m")]
    pub y_max: f64,
}

impl Default for Region {
    fn default() -> Self {
        Self {
            x_min: -5.0,
            x_max: 8.0,
            y_min: 0.0,
            y_max: 6.0,
        }
    }
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        if self.x_max > self.x_min && self.y_max > self.y_min {
            Ok(())
        } else {
            Err(Error::Config("dig region is empty".into()))
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        const TOL: f64 = 1e-9;
        p[0] >= self.x_min - TOL && p[0] <= self.x_max + TOL && p[1] >= self.y_min - TOL && p[1] <= self.y_max + TOL
    }

    /// Liang-Barsky clip of segment `a -> b`; returns the parameter range
    /// inside the region.
    fn clip(&self, a: [f64; 2], b: [f64; 2]) -> Option<(f64, f64)> {
        let d = [b[0] - a[0], b[1] - a[1]];
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for (p, q) in [
            (-d[0], a[0] - self.x_min),
            (d[0], self.x_max - a[0]),
            (-d[1], a[1] - self.y_min),
            (d[1], self.y_max - a[1]),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        (t0 <= t1).then_some((t0, t1))
    }
}

/// A dig location on the toe with its heading into the pile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DigCandidate {
    pub pose: DigPose,
    /// Position in the listing order.
    pub index: usize,
}

/// Settings of candidate extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ListupOptions {
    #[serde(rename = "spacing_m")]
    pub dx: f64,
    /// Iso-height of the toe above the ground.
    #[serde(rename = "contour_level_m")]
    pub level: f64,
    /// Half-width of the box filter applied before taking the gradient.
    #[serde(rename = "heading_smoothing_cells")]
    pub smoothing: usize,
}

impl Default for ListupOptions {
    fn default() -> Self {
        Self {
            dx: 1.0,
            level: 0.15,
            smoothing: 2,
        }
    }
}

// Grid edge holding a contour crossing: (vertical?, i, j) of its lower node.
type EdgeKey = (bool, usize, usize);

struct Segment {
    a: [f64; 2],
    b: [f64; 2],
    ka: EdgeKey,
    kb: EdgeKey,
}

fn crossing(field: &HeightField, level: f64, key: EdgeKey) -> [f64; 2] {
    let (vertical, i, j) = key;
    let (i1, j1) = if vertical { (i, j + 1) } else { (i + 1, j) };
    let h0 = field.get(i, j);
    let h1 = field.get(i1, j1);
    let t = ((level - h0) / (h1 - h0)).clamp(0.0, 1.0);
    let p0 = field.dims().cell_center(i, j);
    let p1 = field.dims().cell_center(i1, j1);
    [p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])]
}

/// Oriented marching-squares segments of the `level` iso-line over grid
/// cells `i0..i1 x j0..j1` (lower-left node indices).
fn segments(field: &HeightField, level: f64, (i0, i1, j0, j1): (usize, usize, usize, usize)) -> Vec<Segment> {
    let mut out = Vec::new();
    for j in j0..j1 {
        for i in i0..i1 {
            let v = [field.get(i, j), field.get(i + 1, j), field.get(i + 1, j + 1), field.get(i, j + 1)];
            let above = v.map(|h| h >= level);
            let case = above.iter().enumerate().fold(0, |c, (k, &a)| c | ((a as usize) << k));
            if case == 0 || case == 15 {
                continue;
            }
            // Cell edges, counter-clockwise from the bottom.
            let edges: [EdgeKey; 4] = [(false, i, j), (true, i + 1, j), (false, i, j + 1), (true, i, j)];
            let crosses = |e: usize| above[e] != above[(e + 1) % 4];
            let crossed: Vec<usize> = (0..4).filter(|&e| crosses(e)).collect();
            let pairs: Vec<(usize, usize)> = if crossed.len() == 2 {
                vec![(crossed[0], crossed[1])]
            } else {
                // Saddle: join around the corners that agree with the centre.
                let centre_above = v.iter().sum::<f64>() / 4.0 >= level;
                if above[0] == centre_above {
                    vec![(0, 1), (2, 3)]
                } else {
                    vec![(3, 0), (1, 2)]
                }
            };
            let gx = 0.5 * ((v[1] - v[0]) + (v[2] - v[3]));
            let gy = 0.5 * ((v[3] - v[0]) + (v[2] - v[1]));
            for (e0, e1) in pairs {
                let (mut ka, mut kb) = (edges[e0], edges[e1]);
                let (mut a, mut b) = (crossing(field, level, ka), crossing(field, level, kb));
                // Keep the high side on the left.
                let d = [b[0] - a[0], b[1] - a[1]];
                let left_dot = d[0] * gy - d[1] * gx;
                let flip = if crossed.len() == 2 {
                    left_dot < 0.0
                } else {
                    // In a saddle the corner between the two edges decides.
                    let corner = [1, 2, 3, 0][e0];
                    let (cx, cy) = (corner == 1 || corner == 2, corner >= 2);
                    let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                    let cp = field.dims().cell_center(i + cx as usize, j + cy as usize);
                    let to_corner = [cp[0] - mid[0], cp[1] - mid[1]];
                    let left = [-d[1], d[0]];
                    let corner_on_left = left[0] * to_corner[0] + left[1] * to_corner[1] > 0.0;
                    corner_on_left != above[corner]
                };
                if flip {
                    std::mem::swap(&mut a, &mut b);
                    std::mem::swap(&mut ka, &mut kb);
                }
                out.push(Segment { a, b, ka, kb });
            }
        }
    }
    out
}

/// Links oriented segments into polylines.
fn link(segs: &[Segment]) -> Vec<Vec<[f64; 2]>> {
    let mut by_start: HashMap<EdgeKey, usize> = HashMap::new();
    let mut has_pred = vec![false; segs.len()];
    for (k, s) in segs.iter().enumerate() {
        by_start.insert(s.ka, k);
    }
    for s in segs {
        if let Some(&n) = by_start.get(&s.kb) {
            has_pred[n] = true;
        }
    }
    let mut used = vec![false; segs.len()];
    let mut lines = Vec::new();
    let walk = |start: usize, used: &mut Vec<bool>| {
        let mut line = vec![segs[start].a];
        let mut k = start;
        loop {
            used[k] = true;
            line.push(segs[k].b);
            match by_start.get(&segs[k].kb) {
                Some(&n) if !used[n] => k = n,
                _ => break,
            }
        }
        line
    };
    // Open chains first, then closed loops, each in scan order.
    for k in 0..segs.len() {
        if !has_pred[k] && !used[k] {
            lines.push(walk(k, &mut used));
        }
    }
    for k in 0..segs.len() {
        if !used[k] {
            lines.push(walk(k, &mut used));
        }
    }
    lines
}

/// Splits a polyline into the pieces inside the region.
fn clip_polyline(line: &[[f64; 2]], region: &Region) -> Vec<Vec<[f64; 2]>> {
    let mut pieces = Vec::new();
    let mut current: Vec<[f64; 2]> = Vec::new();
    for w in line.windows(2) {
        let (a, b) = (w[0], w[1]);
        match region.clip(a, b) {
            Some((t0, t1)) => {
                let p0 = [a[0] + t0 * (b[0] - a[0]), a[1] + t0 * (b[1] - a[1])];
                let p1 = [a[0] + t1 * (b[0] - a[0]), a[1] + t1 * (b[1] - a[1])];
                if current.is_empty() || t0 > 0.0 {
                    if current.len() > 1 {
                        pieces.push(std::mem::take(&mut current));
                    }
                    current = vec![p0];
                }
                current.push(p1);
                if t1 < 1.0 {
                    pieces.push(std::mem::take(&mut current));
                }
            }
            None => {
                if current.len() > 1 {
                    pieces.push(std::mem::take(&mut current));
                }
                current.clear();
            }
        }
    }
    if current.len() > 1 {
        pieces.push(current);
    }
    pieces.retain(|p| p.len() > 1);
    pieces
}

/// Points at arc length `0, dx, 2 dx, ...` along a polyline.
fn walk_polyline(line: &[[f64; 2]], dx: f64) -> Vec<[f64; 2]> {
    let mut out = vec![line[0]];
    let mut next = dx;
    let mut s = 0.0;
    for w in line.windows(2) {
        let len = dist(w[0], w[1]);
        while len > 0.0 && next <= s + len + 1e-9 {
            let t = ((next - s) / len).clamp(0.0, 1.0);
            out.push([w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])]);
            next += dx;
        }
        s += len;
    }
    out
}

/// Gradient of the box-filtered field at `p`.
fn smoothed_gradient(field: &HeightField, p: [f64; 2], radius: usize) -> [f64; 2] {
    let c = field.cell();
    let r = radius as isize;
    let mut g = [0.0; 2];
    for dj in -r..=r {
        for di in -r..=r {
            let x = p[0] + di as f64 * c;
            let y = p[1] + dj as f64 * c;
            g[0] += field.sample_unchecked(x + c, y) - field.sample_unchecked(x - c, y);
            g[1] += field.sample_unchecked(x, y + c) - field.sample_unchecked(x, y - c);
        }
    }
    g
}

/// Dig candidates on the toe contour inside `region`, spaced `dx` apart
/// along the contour, headed uphill into the pile.
pub fn listup(field: &HeightField, region: &Region, opts: &ListupOptions) -> Vec<DigCandidate> {
    let dims = field.dims();
    let margin = 2.0 * dims.cell;
    let to_index = |v: f64, o: f64, n: usize| (((v - o) / dims.cell).floor().max(0.0) as usize).min(n - 1);
    let i0 = to_index(region.x_min - margin, dims.origin[0], dims.nx);
    let i1 = to_index(region.x_max + margin, dims.origin[0], dims.nx) + 1;
    let j0 = to_index(region.y_min - margin, dims.origin[1], dims.ny);
    let j1 = to_index(region.y_max + margin, dims.origin[1], dims.ny) + 1;
    let window = (i0, i1.min(dims.nx - 1), j0, j1.min(dims.ny - 1));

    let segs = segments(field, opts.level, window);
    let mut pieces: Vec<Vec<[f64; 2]>> = link(&segs)
        .iter()
        .flat_map(|l| clip_polyline(l, region))
        .collect();
    pieces.sort_by(|a, b| a[0][0].total_cmp(&b[0][0]).then(a[0][1].total_cmp(&b[0][1])));

    let mut out: Vec<DigCandidate> = Vec::new();
    for piece in &pieces {
        for (k, p) in walk_polyline(piece, opts.dx).into_iter().enumerate() {
            if out.iter().any(|c| dist([c.pose.x, c.pose.y], p) < 0.5 * opts.dx) {
                continue;
            }
            let g = smoothed_gradient(field, p, opts.smoothing);
            let heading = if g[0].hypot(g[1]) > 1e-12 {
                g[1].atan2(g[0])
            } else {
                // Flat neighbourhood: fall back to the left normal of the contour.
                let q = piece[(k + 1).min(piece.len() - 1)];
                let o = piece[k.min(piece.len() - 2)];
                (q[0] - o[0]).atan2(-(q[1] - o[1]))
            };
            out.push(DigCandidate {
                pose: DigPose::new(p[0], p[1], heading),
                index: out.len(),
            });
        }
    }
    out
}
