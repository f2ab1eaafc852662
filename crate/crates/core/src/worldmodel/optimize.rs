//! Projected gradient descent over the loading action.

use serde::{Deserialize, Serialize};

use super::{LoadAction, Normalization, PerformanceTriple, WorldModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeOptions {
    pub step_length: f64,
    pub fd_step: f64,
    pub max_iterations: usize,
    pub patience: usize,
    pub tolerance: f64,
    pub initial: [f64; 4],
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            step_length: 0.05,
            fd_step: 1e-4,
            max_iterations: 30,
            patience: 3,
            tolerance: 1e-4,
            initial: LoadAction::NOMINAL.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeResult {
    pub action: LoadAction,
    pub performance: PerformanceTriple,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Central-difference gradient of `f` at `a`. The stencil centre is pulled
/// `h` inside the box so every probe is a valid action.
pub fn fd_gradient(f: &mut impl FnMut(&LoadAction) -> f64, a: &LoadAction, h: f64) -> [f64; 4] {
    let mut g = [0.0; 4];
    for k in 0..4 {
        let c = a.0[k].clamp(h, 1.0 - h);
        let mut plus = a.0;
        let mut minus = a.0;
        plus[k] = c + h;
        minus[k] = c - h;
        g[k] = (f(&LoadAction(plus)) - f(&LoadAction(minus))) / (2.0 * h);
    }
    g
}

/// Minimizes `w · normalized(Ψ)` for one encoded dig. Returns the best
/// iterate seen, which is never worse than the start point.
pub fn optimize_action<M: WorldModel>(
    model: &M,
    enc: &M::Encoding,
    norm: &Normalization,
    opts: &OptimizeOptions,
) -> OptimizeResult {
    let mut evaluations = 0usize;
    let mut any_mass = false;
    let mut eval = |a: &LoadAction| {
        evaluations += 1;
        let p = model.performance(enc, a);
        any_mass |= !p.is_zero_mass();
        (p, norm.objective(&p))
    };

    let start = LoadAction::new(opts.initial);
    let (start_perf, start_obj) = eval(&start);
    let mut best = (start, start_perf, start_obj);
    let mut current = start;
    let mut stall = 0;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let g = fd_gradient(&mut |a| eval(a).1, &current, opts.fd_step);
        let mut next = current.0;
        for k in 0..4 {
            next[k] -= opts.step_length * g[k];
        }
        current = LoadAction::new(next);
        let (perf, obj) = eval(&current);
        if obj < best.2 - opts.tolerance {
            stall = 0;
        } else {
            stall += 1;
        }
        if obj < best.2 {
            best = (current, perf, obj);
        }
        if stall >= opts.patience {
            break;
        }
    }

    if !any_mass {
        best = (start, start_perf, start_obj);
    }
    OptimizeResult {
        action: best.0,
        performance: best.1,
        objective: best.2,
        iterations,
        evaluations,
    }
}
