//! Library results against independent reference computations.

use loadplan::heightfield::generate_pile;
use loadplan::vturn::{basis_derivatives, LutAxis, VTurnConfig, KNOTS};
use loadplan::{
    DigPose, FieldDims, HeightField, LoadAction, Normalization, PerformanceTriple, PileSpec, Pose, Surrogate,
    SurrogateParams, VTurnLut, VehicleParams, WorldModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cox-de Boor recursion.
fn cox_de_boor(i: usize, p: usize, s: f64) -> f64 {
    if p == 0 {
        let (a, b) = (KNOTS[i], KNOTS[i + 1]);
        // The last non-empty span is closed on the right.
        let last = b == 1.0 && a < b;
        return if (s >= a && s < b) || (last && s == 1.0) { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = KNOTS[i + p] - KNOTS[i];
    if d1 > 0.0 {
        v += (s - KNOTS[i]) / d1 * cox_de_boor(i, p - 1, s);
    }
    let d2 = KNOTS[i + p + 1] - KNOTS[i + 1];
    if d2 > 0.0 {
        v += (KNOTS[i + p + 1] - s) / d2 * cox_de_boor(i + 1, p - 1, s);
    }
    v
}

#[test]
fn basis_matches_cox_de_boor() {
    let h = 1e-5;
    for k in 0..=200 {
        let s = k as f64 / 200.0;
        let d = basis_derivatives(s);
        for i in 0..6 {
            assert!((d[0][i] - cox_de_boor(i, 3, s)).abs() < 1e-12, "N{i}({s})");
            // One-sided differences at the ends, central inside.
            let (a, b) = ((s - h).max(0.0), (s + h).min(1.0));
            let fd = (cox_de_boor(i, 3, b) - cox_de_boor(i, 3, a)) / (b - a);
            assert!((d[1][i] - fd).abs() < 1e-3, "N{i}'({s}): {} vs {fd}", d[1][i]);
        }
        assert!((d[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(d[1].iter().sum::<f64>().abs() < 1e-9);
    }
}

#[test]
fn sample_is_bilinear_between_cell_centres() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dims = FieldDims::new(17, 13, 0.25, [-1.0, 2.0]).unwrap();
    let heights: Vec<f64> = (0..dims.len()).map(|_| rng.random_range(0.0..3.0)).collect();
    let f = HeightField::new(dims, heights.clone()).unwrap();
    for _ in 0..500 {
        let gx: f64 = rng.random_range(0.0..16.0);
        let gy: f64 = rng.random_range(0.0..12.0);
        let [x, y] = [-1.0 + gx * 0.25, 2.0 + gy * 0.25];
        let (i, j) = ((gx.floor() as usize).min(15), (gy.floor() as usize).min(11));
        let (tx, ty) = (gx - i as f64, gy - j as f64);
        let at = |i: usize, j: usize| heights[j * 17 + i];
        let expected = (1.0 - ty) * ((1.0 - tx) * at(i, j) + tx * at(i + 1, j)) + ty * ((1.0 - tx) * at(i, j + 1) + tx * at(i + 1, j + 1));
        assert!((f.sample(x, y).unwrap() - expected).abs() < 1e-12);
    }
}

#[test]
fn noiseless_pile_volume_matches_the_frustum() {
    let spec = PileSpec {
        noise_amplitude: 0.0,
        ..PileSpec::default()
    };
    let dims = FieldDims::new(601, 421, 0.05, [-14.0, -6.0]).unwrap();
    let f = generate_pile(&spec, dims).unwrap();
    let (l, b, h) = (spec.x_max - spec.x_min, spec.back_toe_y - spec.toe_y, spec.crest_height);
    let t = spec.front_slope.tan();
    // Integral of the horizontal section (l - 2z/t)(b - 2z/t) over height.
    let exact = l * b * h - (l + b) * h * h / t + 4.0 / 3.0 * h * h * h / (t * t);
    assert!((f.volume() - exact).abs() / exact < 2e-3, "{} vs {exact}", f.volume());
}

#[test]
fn normalized_objective_by_hand() {
    let n = Normalization {
        m0: 5000.0,
        t0: 20.0,
        w0: 2e6,
        weights: [2.0, 0.5, 3.0],
    };
    let p = PerformanceTriple::new(2500.0, 30.0, 1e6);
    let expected = 2.0 * (5000.0 / 2500.0) + 0.5 * (30.0 / 20.0) + 3.0 * (1e6 / 2e6);
    assert!((n.objective(&p) - expected).abs() < 1e-12);
}

#[test]
fn surrogate_performance_follows_its_volumes() {
    let params = SurrogateParams::default();
    let model = Surrogate::new(params).unwrap();
    let spec = PileSpec::default();
    let dims = FieldDims::new(301, 211, 0.1, [-14.0, -6.0]).unwrap();
    let field = generate_pile(&spec, dims).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let dig = DigPose::new(rng.random_range(-4.0..7.0), rng.random_range(0.6..1.4), rng.random_range(1.3..1.8));
        let a = LoadAction::new(std::array::from_fn(|_| rng.random_range(0.0..1.0)));
        let enc = model.encode(&field, &dig).unwrap();
        let (swept, removed) = model.volumes(&enc, &a);
        let p = model.performance(&enc, &a);
        if p.is_zero_mass() {
            continue;
        }
        let rho = params.soil_density;
        let cut = a.0[0] * params.max_penetration;
        let lift = 1.0 + 0.5 * a.0[1] + 0.25 * a.0[3];
        assert!((p.mass - rho * removed).abs() < 1e-9 * p.mass);
        let time = params.t0 + params.c_len * cut + params.c_fill * removed / params.bucket_capacity;
        assert!((p.time - time).abs() < 1e-9 * time);
        let work = params.c_cut * swept + params.c_lift * rho * removed * lift;
        assert!((p.work - work).abs() < 1e-9 * work);
        assert!(removed <= params.bucket_capacity * (0.6 + 0.4 * a.0[1]) + 1e-12);
    }
}

#[test]
fn lut_interpolates_trilinearly() {
    let dump = Pose::new(-12.0, -3.0, (-30f64).to_radians());
    let lut = VTurnLut::build(
        dump,
        LutAxis::covering(-1.0, 1.0, 1.0),
        LutAxis::covering(0.0, 1.0, 1.0),
        LutAxis::headings(4),
        &VTurnConfig::default(),
        &VehicleParams::default(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let quarter = std::f64::consts::FRAC_PI_2;
    for _ in 0..200 {
        let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0));
        let h = rng.random_range(0.0..std::f64::consts::TAU);
        let load = rng.random_range(0.0..5000.0);
        let (fx, fy, fh) = (x + 1.0, y, h / quarter);
        let (i, j, k) = ((fx.floor() as u32).min(1), 0u32, (fh.floor() as u32).min(3));
        let (tx, ty, th) = (fx - i as f64, fy, fh - k as f64);
        let mut acc = [0.0; 5];
        for (kk, wk) in [(k, 1.0 - th), ((k + 1) % 4, th)] {
            for (jj, wj) in [(j, 1.0 - ty), (j + 1, ty)] {
                for (ii, wi) in [(i, 1.0 - tx), (i + 1, tx)] {
                    let n = lut.node(ii, jj, kk);
                    for c in 0..5 {
                        acc[c] += wi * wj * wk * f64::from(n[c]);
                    }
                }
            }
        }
        let (v1, v2) = lut.lookup(&Pose::new(x, y, h), load).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
        assert!(close(v1.time, acc[0]) && close(v1.work, acc[1]));
        assert!(close(v2.time, acc[2]) && close(v2.work, acc[3] + acc[4] * load));
    }
}
