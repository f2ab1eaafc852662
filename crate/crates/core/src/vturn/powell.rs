//! Powell's conjugate-direction search on the unit cube.

/// Search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowellOptions {
    pub max_evals: usize,
    /// Function evaluations per line search.
    pub line_evals: usize,
    /// Stop when an iteration improves the value by less than this.
    pub tolerance: f64,
}

impl Default for PowellOptions {
    fn default() -> Self {
        Self {
            max_evals: 100,
            line_evals: 10,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowellResult {
    pub x: [f64; 3],
    pub value: f64,
    pub evals: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

struct Counter<'a, F> {
    f: &'a F,
    evals: usize,
    max: usize,
}

impl<F: Fn(&[f64; 3]) -> f64> Counter<'_, F> {
    fn call(&mut self, x: &[f64; 3]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn left(&self) -> usize {
        self.max.saturating_sub(self.evals)
    }
}

fn along(x: &[f64; 3], d: &[f64; 3], t: f64) -> [f64; 3] {
    [
        (x[0] + t * d[0]).clamp(0.0, 1.0),
        (x[1] + t * d[1]).clamp(0.0, 1.0),
        (x[2] + t * d[2]).clamp(0.0, 1.0),
    ]
}

/// Range of `t` keeping `x + t d` inside the unit cube.
fn feasible_range(x: &[f64; 3], d: &[f64; 3]) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..3 {
        if d[k].abs() < 1e-15 {
            continue;
        }
        let a = (0.0 - x[k]) / d[k];
        let b = (1.0 - x[k]) / d[k];
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
    }
    if lo > hi || !lo.is_finite() {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

/// Golden-section search along `d`; keeps `x` if nothing better is found.
fn line_search<F: Fn(&[f64; 3]) -> f64>(
    c: &mut Counter<'_, F>,
    x: [f64; 3],
    fx: f64,
    d: &[f64; 3],
    evals: usize,
) -> ([f64; 3], f64) {
    let (mut a, mut b) = feasible_range(&x, d);
    let budget = evals.min(c.left());
    if b - a < 1e-12 || budget < 2 {
        return (x, fx);
    }
    let mut t1 = b - INV_PHI * (b - a);
    let mut t2 = a + INV_PHI * (b - a);
    let mut f1 = c.call(&along(&x, d, t1));
    let mut f2 = c.call(&along(&x, d, t2));
    for _ in 2..budget {
        if f1 <= f2 {
            b = t2;
            t2 = t1;
            f2 = f1;
            t1 = b - INV_PHI * (b - a);
            f1 = c.call(&along(&x, d, t1));
        } else {
            a = t1;
            t1 = t2;
            f1 = f2;
            t2 = a + INV_PHI * (b - a);
            f2 = c.call(&along(&x, d, t2));
        }
    }
    let (t, ft) = if f1 <= f2 { (t1, f1) } else { (t2, f2) };
    if ft < fx {
        (along(&x, d, t), ft)
    } else {
        (x, fx)
    }
}

/// Minimizes `f` over `[0, 1]^3` from `x0` within `opts.max_evals`
/// evaluations. Non-finite values count as `+inf`.
pub fn powell_minimize<F: Fn(&[f64; 3]) -> f64>(f: &F, x0: [f64; 3], opts: &PowellOptions) -> PowellResult {
    let mut c = Counter {
        f,
        evals: 0,
        max: opts.max_evals,
    };
    let mut x = x0.map(|v| v.clamp(0.0, 1.0));
    let mut fx = c.call(&x);
    let mut dirs = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    while c.left() > 0 {
        let (x_start, f_start) = (x, fx);
        for d in &dirs {
            (x, fx) = line_search(&mut c, x, fx, d, opts.line_evals);
        }
        let gain = f_start - fx;
        if !(gain > opts.tolerance * (f_start.abs() + 1e-12)) {
            break;
        }
        let new_dir = [x[0] - x_start[0], x[1] - x_start[1], x[2] - x_start[2]];
        let norm = (new_dir[0] * new_dir[0] + new_dir[1] * new_dir[1] + new_dir[2] * new_dir[2]).sqrt();
        if norm > 1e-12 {
            let d = new_dir.map(|v| v / norm);
            (x, fx) = line_search(&mut c, x, fx, &d, opts.line_evals);
            dirs.rotate_left(1);
            dirs[2] = d;
        }
    }
    PowellResult {
        x,
        value: fx,
        evals: c.evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_quadratic_minimum() {
        let f = |x: &[f64; 3]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] - 0.7).powi(2) + (x[0] - x[2]).powi(2);
        let opts = PowellOptions {
            max_evals: 400,
            line_evals: 30,
            ..PowellOptions::default()
        };
        let r = powell_minimize(&f, [0.9, 0.1, 0.5], &opts);
        assert!(r.value < 1e-6, "{r:?}");
        assert!(r.evals <= 400);
    }

    #[test]
    fn respects_bounds_and_budget() {
        let f = |x: &[f64; 3]| -(x[0] + x[1] + x[2]);
        let r = powell_minimize(&f, [0.5; 3], &PowellOptions::default());
        assert!(r.x.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(r.value < -2.9);
        assert!(r.evals <= 100);
    }

    #[test]
    fn infinite_everywhere_stays_infinite() {
        let f = |_: &[f64; 3]| f64::NAN;
        let r = powell_minimize(&f, [0.5; 3], &PowellOptions::default());
        assert!(r.value.is_infinite());
    }
}
