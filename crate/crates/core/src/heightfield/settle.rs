//! Angle-of-repose relaxation.
//!
//! A cell that is higher than an 8-neighbour by more than
//! `distance * tan(repose)` sheds material to every such neighbour. With `m`
//! violating neighbours and excesses `e_k`, neighbour `k` receives
//! `omega * e_k / (m + 1)`, where `omega` is an over-relaxation factor in
//! `(0, 2)`. Since `e_k` never exceeds the height difference, each transfer
//! lowers the sum of squared heights by at least
//! `(2 - omega) / omega * sum(t_k^2)`, so the relaxation terminates. The
//! share is also limited so a cell never goes below zero.
//! Cells are revisited through a worklist, which keeps local relaxations
//! (after a single dig) proportional to the disturbed area.

use std::f64::consts::SQRT_2;

use super::HeightField;
use crate::{Error, Result};

const NEIGHBOURS: [(isize, isize, bool); 8] = [
    (1, 0, false),
    (-1, 0, false),
    (0, 1, false),
    (0, -1, false),
    (1, 1, true),
    (-1, 1, true),
    (1, -1, true),
    (-1, -1, true),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleOptions {
    /// Upper bound on worklist sweeps before giving up.
    pub max_sweeps: usize,
    /// A pair only counts as violating when its drop exceeds the cap by this
    /// relative margin.
    pub tolerance: f64,
    /// Over-relaxation factor, in `(0, 2)`. Values near 2 cut the sweep count
    /// by an order of magnitude on deep cuts.
    pub over_relaxation: f64,
}

impl Default for SettleOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 10_000,
            tolerance: 1e-7,
            over_relaxation: 1.9,
        }
    }
}

impl HeightField {
    /// Relaxes every slope steeper than `repose` (radians). Volume is
    /// conserved.
    pub fn settle(&self, repose: f64) -> Result<HeightField> {
        self.settle_with(repose, SettleOptions::default())
    }

    pub fn settle_with(&self, repose: f64, opts: SettleOptions) -> Result<HeightField> {
        let mut out = self.clone();
        let window = (0, self.nx() - 1, 0, self.ny() - 1);
        out.settle_window_in_place(repose, window, opts)?;
        Ok(out)
    }

    /// Relaxation seeded with the cells of `window` (inclusive grid bounds).
    /// When the field was stable outside the window, the result is globally
    /// stable.
    pub(crate) fn settle_window_in_place(
        &mut self,
        repose: f64,
        window: (usize, usize, usize, usize),
        opts: SettleOptions,
    ) -> Result<()> {
        if !(repose > 0.0 && repose < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid(format!("angle of repose must be in (0, pi/2), got {repose}")));
        }
        if !(opts.over_relaxation > 0.0 && opts.over_relaxation < 2.0) {
            return Err(Error::invalid("over-relaxation factor must be in (0, 2)"));
        }
        let nx = self.nx();
        let ny = self.ny();
        let tan = repose.tan();
        let cap_axis = self.cell() * tan;
        let cap_diag = self.cell() * SQRT_2 * tan;
        let margin = 1.0 + opts.tolerance;
        let h = self.heights_mut();

        let (i0, i1, j0, j1) = window;
        let mut queued = vec![false; nx * ny];
        let mut current: Vec<usize> = Vec::with_capacity((i1 - i0 + 1) * (j1 - j0 + 1));
        for j in j0..=j1.min(ny - 1) {
            for i in i0..=i1.min(nx - 1) {
                current.push(j * nx + i);
                queued[j * nx + i] = true;
            }
        }
        let mut next: Vec<usize> = Vec::new();

        for _ in 0..opts.max_sweeps {
            if current.is_empty() {
                return Ok(());
            }
            for &idx in &current {
                queued[idx] = false;
            }
            for &idx in &current {
                let i = (idx % nx) as isize;
                let j = (idx / nx) as isize;
                let hi = h[idx];
                let mut excess = [0.0f64; 8];
                let mut targets = [0usize; 8];
                let mut m = 0usize;
                for &(di, dj, diag) in &NEIGHBOURS {
                    let (ni, nj) = (i + di, j + dj);
                    if ni < 0 || nj < 0 || ni >= nx as isize || nj >= ny as isize {
                        continue;
                    }
                    let n_idx = nj as usize * nx + ni as usize;
                    let cap = if diag { cap_diag } else { cap_axis };
                    let drop = hi - h[n_idx];
                    if drop > cap * margin {
                        excess[m] = drop - cap;
                        targets[m] = n_idx;
                        m += 1;
                    }
                }
                if m == 0 {
                    continue;
                }
                let total: f64 = excess[..m].iter().sum();
                let share = (opts.over_relaxation / (m + 1) as f64).min(hi / total);
                let mut shed = 0.0;
                for k in 0..m {
                    let t = excess[k] * share;
                    h[targets[k]] += t;
                    shed += t;
                }
                h[idx] = hi - shed;

                // Any pair involving this cell or one of its neighbours changed.
                for dj in -2..=2isize {
                    for di in -2..=2isize {
                        let (ni, nj) = (i + di, j + dj);
                        if ni < 0 || nj < 0 || ni >= nx as isize || nj >= ny as isize {
                            continue;
                        }
                        let n_idx = nj as usize * nx + ni as usize;
                        if !queued[n_idx] {
                            queued[n_idx] = true;
                            next.push(n_idx);
                        }
                    }
                }
            }
            next.sort_unstable();
            std::mem::swap(&mut current, &mut next);
            next.clear();
        }
        if current.is_empty() {
            return Ok(());
        }
        Err(Error::Convergence {
            sweeps: opts.max_sweeps,
            max_slope: self.max_slope(),
            cap: tan,
        })
    }
}
