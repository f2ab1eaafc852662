use loadplan::harness::{run_experiment, write_reports, InitialPiles, ScenarioConfig};
use loadplan::heightfield::{read_csv, read_hfld, write_csv, write_hfld};
use loadplan::vturn::{LutAxis, VTurnConfig};
use loadplan::{Error, FieldDims, HeightField, Pose, Strategy, VTurnLut, VehicleParams};

fn field() -> HeightField {
    let dims = FieldDims::new(7, 5, 0.2, [-1.0, 0.5]).unwrap();
    HeightField::from_fn(dims, |x, y| 1.0 + 0.3 * x - 0.1 * y * y).unwrap()
}

fn is_format(e: &Error) -> bool {
    matches!(e, Error::Format { .. })
}

#[test]
fn hfld_round_trips_at_single_precision() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.hfld");
    let f = field();
    write_hfld(&path, &f).unwrap();
    let g = read_hfld(&path).unwrap();
    assert_eq!(g.dims(), f.dims());
    for (a, b) in f.heights().iter().zip(g.heights()) {
        assert_eq!(*b, f64::from(*a as f32));
    }
}

#[test]
fn hfld_rejects_damaged_input() {
    let bytes = field().to_hfld_bytes();
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(is_format(&HeightField::from_hfld_bytes(&bad).unwrap_err()));
    let mut bad = bytes.clone();
    bad[4] = 9;
    let e = HeightField::from_hfld_bytes(&bad).unwrap_err();
    assert!(e.to_string().contains("version"), "{e}");
    assert!(is_format(&HeightField::from_hfld_bytes(&bytes[..bytes.len() - 3]).unwrap_err()));
    let mut long = bytes.clone();
    long.push(0);
    assert!(is_format(&HeightField::from_hfld_bytes(&long).unwrap_err()));
}

#[test]
fn csv_round_trips_and_reports_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let f = field();
    write_csv(&path, &f).unwrap();
    assert_eq!(read_csv(&path, 0.2, [-1.0, 0.5]).unwrap(), f);

    let e = HeightField::from_csv_str("1,2,3\n4,5\n", 0.1, [0.0, 0.0]).unwrap_err();
    assert!(is_format(&e) && e.to_string().contains("line 2"), "{e}");
    let e = HeightField::from_csv_str("1,2\n3,x\n", 0.1, [0.0, 0.0]).unwrap_err();
    assert!(is_format(&e) && e.to_string().contains("\"x\""), "{e}");
}

#[test]
fn missing_files_name_the_path() {
    let e = read_hfld("/nonexistent/dir/pile.hfld").unwrap_err();
    assert!(matches!(e, Error::Io { .. }));
    assert!(e.to_string().contains("/nonexistent/dir/pile.hfld"));
}

#[test]
fn vlut_round_trips_and_rejects_damage() {
    let lut = VTurnLut::build(
        Pose::new(-12.0, -3.0, (-30f64).to_radians()),
        LutAxis::covering(-1.0, 1.0, 2.0),
        LutAxis::covering(0.0, 1.0, 1.0),
        LutAxis::headings(4),
        &VTurnConfig::default(),
        &VehicleParams::default(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.vlut");
    lut.write(&path).unwrap();
    assert_eq!(VTurnLut::read(&path).unwrap(), lut);

    let bytes = lut.to_bytes();
    let mut bad = bytes.clone();
    bad[1] = 0;
    assert!(is_format(&VTurnLut::from_bytes(&bad).unwrap_err()));
    assert!(is_format(&VTurnLut::from_bytes(&bytes[..bytes.len() - 1]).unwrap_err()));
}

fn small_scenario() -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.planner.region.x_min = -5.0;
    c.planner.region.x_max = -1.0;
    c.lut.x_step = 2.0;
    c.lut.y_step = 2.0;
    c.lut.heading_count = 8;
    c.cycles = 3;
    c.depths = vec![1, 2];
    c.strategies = vec![Strategy::Greedy, Strategy::Nominal];
    c.seeds = vec![0, 1];
    c
}

#[test]
fn reports_have_the_documented_schema() {
    let config = small_scenario();
    let lut = config.build_lut().unwrap();
    let result = run_experiment(&config, &lut, &InitialPiles::Generated).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = write_reports(&result, dir.path()).unwrap();
    assert!(files.warnings.is_empty(), "{:?}", files.warnings);

    let read = |name: &str| std::fs::read_to_string(dir.path().join(name)).unwrap();
    let runs = read("runs.csv");
    let mut lines = runs.lines();
    assert_eq!(
        lines.next().unwrap(),
        "seed,strategy,cycles,termination,mass_kg,time_s,work_j,objective,predictions"
    );
    assert_eq!(lines.count(), 2 * 4);

    let plan = read("plan_tree-d2_seed1.csv");
    assert!(plan.starts_with("n,x_dig,y_dig,heading,a1,a2,a3,a4,M,T_load,W_load,T_v1,W_v1,T_v2,W_v2,T_total,W_total,objective,predictions\n"));
    for row in plan.lines().skip(1) {
        assert_eq!(row.split(',').count(), 19);
        assert!(row.split(',').all(|v| v.parse::<f64>().is_ok()), "{row}");
    }

    let depth = read("depth_sweep.csv");
    assert_eq!(depth.lines().count(), 3);
    assert!(depth.starts_with("depth,obj_mean,obj_std,mass_t,time_s,work_MJ,predictions\n"));
    assert!(read("strategies.csv").starts_with(
        "strategy,runs,mass_t,load_time_s,load_work_MJ,vturn_time_s,vturn_work_MJ,dump_time_s,total_time_s,total_work_MJ,obj_mean,obj_std\n"
    ));

    for svg in ["depth_sweep.svg", "strategies.svg"] {
        let text = read(svg);
        let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{svg}: {e}"));
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert!(doc.descendants().any(|n| n.has_tag_name("polyline") || n.has_tag_name("path")));
    }

    let stats: serde_json::Value = serde_json::from_str(&read("stats.json")).unwrap();
    assert!(stats.is_object());
}
