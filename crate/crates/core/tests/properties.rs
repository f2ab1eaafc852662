use std::sync::OnceLock;

use loadplan::vturn::{LutAxis, VTurnConfig};
use loadplan::{FieldDims, HeightField, LoadAction, Normalization, PerformanceTriple, Pose, VTurnLut, VehicleParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rough_field(nx: usize, ny: usize, cell: f64, seed: u64) -> HeightField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = FieldDims::new(nx, ny, cell, [0.0, 0.0]).unwrap();
    let heights = (0..nx * ny).map(|_| rng.random_range(0.0..2.5)).collect();
    HeightField::new(dims, heights).unwrap()
}

fn small_lut() -> &'static VTurnLut {
    static LUT: OnceLock<VTurnLut> = OnceLock::new();
    LUT.get_or_init(|| {
        VTurnLut::build(
            Pose::new(-12.0, -3.0, (-30f64).to_radians()),
            LutAxis::covering(-2.0, 2.0, 2.0),
            LutAxis::covering(0.0, 2.0, 2.0),
            LutAxis::headings(6),
            &VTurnConfig::default(),
            &VehicleParams::default(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn settle_conserves_volume_caps_slope_and_stays_non_negative(
        nx in 6usize..28,
        ny in 6usize..28,
        cell in 0.05f64..0.4,
        repose_deg in 15.0f64..50.0,
        seed in any::<u64>(),
    ) {
        let f = rough_field(nx, ny, cell, seed);
        let repose = repose_deg.to_radians();
        let s = f.settle(repose).unwrap();
        prop_assert!((s.volume() - f.volume()).abs() <= 1e-9 * f.volume());
        prop_assert!(s.max_slope() <= repose.tan() + 1e-6);
        prop_assert!(s.heights().iter().all(|h| *h >= 0.0));
    }

    #[test]
    fn settling_a_settled_field_changes_nothing(seed in any::<u64>(), repose_deg in 20.0f64..40.0) {
        let once = rough_field(15, 12, 0.1, seed).settle(repose_deg.to_radians()).unwrap();
        let twice = once.settle(repose_deg.to_radians()).unwrap();
        prop_assert_eq!(once.heights(), twice.heights());
    }

    #[test]
    fn cutout_and_replace_are_exact_on_planes(
        a in -1.0f64..1.0,
        b in -0.5f64..0.5,
        c in -0.5f64..0.5,
        x in -2.0f64..2.0,
        y in -2.0f64..2.0,
        heading in -3.2f64..3.2,
        n in 4usize..30,
        spacing in 0.05f64..0.2,
    ) {
        let dims = FieldDims::new(121, 121, 0.1, [-6.0, -6.0]).unwrap();
        let plane = |px: f64, py: f64| 3.0 + a + b * px + c * py;
        let f = HeightField::from_fn(dims, plane).unwrap();
        let pose = Pose::new(x, y, heading);
        let patch = f.cutout(&pose, n, n as f64 * spacing).unwrap();
        for bi in 0..n {
            for ai in 0..n {
                let [wx, wy] = pose.to_world(patch.local_coord(ai), patch.local_coord(bi));
                prop_assert!((patch.get(ai, bi) - plane(wx, wy)).abs() < 1e-9);
            }
        }
        let back = f.replace(&patch).unwrap();
        let worst = back.heights().iter().zip(f.heights()).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        prop_assert!(worst < 1e-9, "max deviation {}", worst);
    }

    #[test]
    fn pose_frames_are_inverse(x in -50.0f64..50.0, y in -50.0f64..50.0, h in -7.0f64..7.0, u in -10.0f64..10.0, v in -10.0f64..10.0) {
        let p = Pose::new(x, y, h);
        let [wx, wy] = p.to_world(u, v);
        let [lu, lv] = p.to_local(wx, wy);
        prop_assert!((lu - u).abs() < 1e-9 && (lv - v).abs() < 1e-9);
    }

    #[test]
    fn load_action_clamps_into_the_unit_box(raw in prop::array::uniform4(prop_oneof![
        any::<f64>(),
        -2.0f64..3.0,
        Just(f64::NAN),
        Just(f64::INFINITY),
    ])) {
        let a = LoadAction::new(raw);
        prop_assert!(a.0.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(LoadAction::new(a.0), a);
        for (k, r) in raw.iter().enumerate() {
            if (0.0..=1.0).contains(r) {
                prop_assert_eq!(a.0[k], *r);
            }
        }
    }

    #[test]
    fn objective_argmin_is_invariant_to_weight_scaling(
        triples in prop::collection::vec((200.0f64..5000.0, 10.0f64..80.0, 1e4f64..3e6), 2..12),
        weights in prop::array::uniform3(0.1f64..5.0),
        scale in 0.01f64..100.0,
    ) {
        let base = Normalization { weights, ..Normalization::default() };
        let scaled = Normalization { weights: weights.map(|w| w * scale), ..base };
        let argmin = |n: &Normalization| {
            triples
                .iter()
                .enumerate()
                .map(|(k, (m, t, w))| (n.objective(&PerformanceTriple::new(*m, *t, *w)), k))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap()
                .1
        };
        prop_assert_eq!(argmin(&base), argmin(&scaled));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lut_lookup_is_a_convex_combination_of_nodes(
        x in -2.0f64..2.0,
        y in 0.0f64..2.0,
        h in -3.2f64..3.2,
        load in 0.0f64..6000.0,
    ) {
        let lut = small_lut();
        let (v1, v2) = lut.lookup(&Pose::new(x, y, h), load).unwrap();
        let (mut lo, mut hi) = ([f64::MAX; 3], [f64::MIN; 3]);
        for k in 0..lut.heading.count {
            for j in 0..lut.y.count {
                for i in 0..lut.x.count {
                    let n = lut.node(i, j, k);
                    for (c, v) in [n[0], n[2], n[3] + n[4] * load as f32].iter().enumerate() {
                        lo[c] = lo[c].min(f64::from(*v));
                        hi[c] = hi[c].max(f64::from(*v));
                    }
                }
            }
        }
        for (c, v) in [v1.time, v2.time, v2.work].iter().enumerate() {
            let tol = 1e-6 * hi[c].abs().max(1.0);
            prop_assert!(*v >= lo[c] - tol && *v <= hi[c] + tol);
        }
    }

    #[test]
    fn lut_headings_wrap_and_loaded_work_is_affine(x in -2.0f64..2.0, y in 0.0f64..2.0, h in -3.2f64..3.2, load in 0.0f64..6000.0) {
        let lut = small_lut();
        let (a1, a2) = lut.lookup(&Pose::new(x, y, h), load).unwrap();
        let (b1, b2) = lut.lookup(&Pose::new(x, y, h + std::f64::consts::TAU), load).unwrap();
        prop_assert!((a1.time - b1.time).abs() < 1e-9 * a1.time && (a2.work - b2.work).abs() < 1e-9 * a2.work);

        let (_, empty) = lut.lookup(&Pose::new(x, y, h), 0.0).unwrap();
        let (_, double) = lut.lookup(&Pose::new(x, y, h), 2.0 * load).unwrap();
        let step = a2.work - empty.work;
        prop_assert!((double.work - empty.work - 2.0 * step).abs() <= 1e-9 * double.work.abs().max(1.0));
        prop_assert_eq!(a2.time, empty.time);
    }
}

#[test]
fn lut_rejects_queries_outside_the_lattice() {
    let lut = small_lut();
    assert!(lut.lookup(&Pose::new(2.5, 1.0, 0.0), 0.0).is_err());
    assert!(lut.lookup(&Pose::new(0.0, -0.5, 0.0), 0.0).is_err());
    assert!(lut.lookup(&Pose::new(2.0, 2.0, 1.0), 0.0).is_ok());
}
