//! End-to-end runs of the command-line front end.

use std::fs;
use std::path::Path;

use tempfile::tempdir;

use topoflow::cli::run;
use topoflow::transport::FlowPlan;

fn run_args(args: &[&str]) -> i32 {
    run(std::iter::once("topoflow").chain(args.iter().copied()))
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

#[test]
fn transport_pipeline_from_fixture() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("array.json");
    let plan = dir.path().join("plan.json");
    assert_eq!(
        run_args(&[
            "fixture",
            "--kind",
            "dyadic-array",
            "--m",
            "2",
            "--n",
            "2",
            "--h",
            "1",
            "--grid",
            "16",
            "--out",
            &path_str(&cfg),
        ]),
        0
    );
    assert_eq!(
        run_args(&[
            "transport",
            "--in",
            &path_str(&cfg),
            "--out",
            &path_str(&plan)
        ]),
        0
    );
    let parsed = FlowPlan::from_json(&fs::read_to_string(&plan).unwrap()).unwrap();
    assert!(parsed.cost > 0.0);
    let config =
        topoflow::geometry::ChargeConfig::from_json(&fs::read_to_string(&cfg).unwrap()).unwrap();
    parsed.verify(&config).unwrap();
}

#[test]
fn transport_of_pair_costs_three() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("pair.json");
    fs::write(
        &cfg,
        r#"[{"pos": [0.0, 0.0], "deg": 1}, {"pos": [3.0, 0.0], "deg": -1}]"#,
    )
    .unwrap();
    let out = dir.path().join("plan.json");
    assert_eq!(
        run_args(&[
            "transport",
            "--in",
            &path_str(&cfg),
            "--out",
            &path_str(&out)
        ]),
        0
    );
    let plan = FlowPlan::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!((plan.cost - 3.0).abs() < 1e-12);
    assert_eq!(plan.edges.len(), 1);
}

#[test]
fn imbalanced_config_exits_two() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("imbalanced.json");
    fs::write(
        &cfg,
        r#"[{"pos": [0.0, 0.0], "deg": 1}, {"pos": [1.0, 0.0], "deg": 1}]"#,
    )
    .unwrap();
    assert_eq!(run_args(&["transport", "--in", &path_str(&cfg)]), 2);
}

#[test]
fn missing_input_exits_one() {
    assert_eq!(
        run_args(&["transport", "--in", "/nonexistent/file.json"]),
        1
    );
}

#[test]
fn bad_energy_exponent_exits_one() {
    let dir = tempdir().unwrap();
    let map = dir.path().join("map.csv");
    assert_eq!(
        run_args(&[
            "fixture",
            "--kind",
            "constant",
            "--grid",
            "16",
            "--out",
            &path_str(&map)
        ]),
        0
    );
    assert_eq!(
        run_args(&["energy", "--in", &path_str(&map), "--p", "0.5"]),
        1
    );
}

#[test]
fn constant_fixture_has_zero_energy() {
    let dir = tempdir().unwrap();
    let map = dir.path().join("map.csv");
    let out = dir.path().join("energy.json");
    run_args(&[
        "fixture",
        "--kind",
        "constant",
        "--grid",
        "16",
        "--out",
        &path_str(&map),
    ]);
    assert_eq!(
        run_args(&[
            "energy",
            "--in",
            &path_str(&map),
            "--p",
            "1",
            "--out",
            &path_str(&out)
        ]),
        0
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["energy"].as_f64().unwrap(), 0.0);
}

#[test]
fn single_vortex_fixture_yields_one_positive_charge() {
    let dir = tempdir().unwrap();
    let map = dir.path().join("vortex.csv");
    let out = dir.path().join("degree.json");
    run_args(&[
        "fixture",
        "--kind",
        "single-vortex",
        "--grid",
        "256",
        "--eps",
        "0.05",
        "--out",
        &path_str(&map),
    ]);
    assert_eq!(
        run_args(&["degree", "--in", &path_str(&map), "--out", &path_str(&out)]),
        0
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let entries = report["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0]["deg"], 1);
}

#[test]
fn degree_detects_pair_from_generated_fixture() {
    let dir = tempdir().unwrap();
    let map = dir.path().join("pair.csv");
    let out = dir.path().join("degree.json");
    assert_eq!(
        run_args(&[
            "fixture",
            "--kind",
            "vortex-pair",
            "--grid",
            "64",
            "--out",
            &path_str(&map)
        ]),
        0
    );
    assert_eq!(
        run_args(&["degree", "--in", &path_str(&map), "--out", &path_str(&out)]),
        0
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["total_degree"], 0);
    assert_eq!(report["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn degree_csv_format() {
    let dir = tempdir().unwrap();
    let map = dir.path().join("pair.csv");
    let out = dir.path().join("degree.csv");
    run_args(&[
        "fixture",
        "--kind",
        "vortex-pair",
        "--grid",
        "64",
        "--out",
        &path_str(&map),
    ]);
    assert_eq!(
        run_args(&[
            "degree",
            "--in",
            &path_str(&map),
            "--format",
            "csv",
            "--out",
            &path_str(&out)
        ]),
        0
    );
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,deg"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn relaxed_report_on_pair_fixture() {
    let dir = tempdir().unwrap();
    let map = dir.path().join("pair.csv");
    let out = dir.path().join("relaxed.json");
    run_args(&[
        "fixture",
        "--kind",
        "vortex-pair",
        "--grid",
        "128",
        "--out",
        &path_str(&map),
    ]);
    assert_eq!(
        run_args(&["relaxed", "--in", &path_str(&map), "--out", &path_str(&out)]),
        0
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let transport = report["transport"].as_f64().unwrap();
    let dirichlet = report["dirichlet"].as_f64().unwrap();
    let total = report["total"].as_f64().unwrap();
    assert!((transport - 1.0).abs() < 1e-9);
    assert!((total - dirichlet - std::f64::consts::TAU * transport).abs() < 1e-9);
}

#[test]
fn dual_reports_value_and_gap() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("pair.json");
    fs::write(
        &cfg,
        r#"[{"pos": [0.0, 0.0], "deg": 1}, {"pos": [3.0, 0.0], "deg": -1}]"#,
    )
    .unwrap();
    let out = dir.path().join("dual.json");
    assert_eq!(
        run_args(&["dual", "--in", &path_str(&cfg), "--out", &path_str(&out)]),
        0
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!((report["value"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!(report["gap"].as_f64().unwrap().abs() <= 1e-8 * 4.0);
    assert_eq!(report["potential"].as_array().unwrap().len(), 2);
}

#[test]
fn dualfield_samples_a_grid() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("pair.json");
    fs::write(
        &cfg,
        r#"[{"pos": [0.0, 0.0], "deg": 1}, {"pos": [3.0, 0.0], "deg": -1}]"#,
    )
    .unwrap();
    let out = dir.path().join("field.csv");
    assert_eq!(
        run_args(&[
            "dualfield",
            "--in",
            &path_str(&cfg),
            "--grid",
            "16",
            "--out",
            &path_str(&out)
        ]),
        0
    );
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,phi"));
    assert_eq!(lines.count(), 16 * 16);
}

#[test]
fn sweep_emits_matching_columns() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    assert_eq!(
        run_args(&[
            "sweep",
            "--m",
            "2",
            "--alpha",
            "3/4",
            "--n",
            "6",
            "--out",
            &path_str(&out)
        ]),
        0
    );
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("n,centralized,hierarchical_recurrence,hierarchical_closed,regime")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 7);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 5);
        let rec: f64 = cols[2].parse().unwrap();
        let closed: f64 = cols[3].parse().unwrap();
        assert!((rec - closed).abs() <= 1e-12 * (1.0 + rec.abs()));
        assert_eq!(cols[4], "super-critical");
    }
}

#[test]
fn branched_writes_a_valid_tree() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("clustered.json");
    fs::write(
        &cfg,
        r#"[{"pos": [0.0, 0.0], "deg": 1}, {"pos": [0.0, 0.1], "deg": 1},
            {"pos": [10.0, 0.0], "deg": -1}, {"pos": [10.0, 0.1], "deg": -1}]"#,
    )
    .unwrap();
    let out = dir.path().join("tree.json");
    assert_eq!(
        run_args(&[
            "branched",
            "--in",
            &path_str(&cfg),
            "--alpha",
            "0.5",
            "--out",
            &path_str(&out)
        ]),
        0
    );
    let tree =
        topoflow::branched::BranchedTree::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    let recomputed = topoflow::branched::tree_cost(&tree).unwrap();
    assert!((recomputed - tree.cost).abs() <= 1e-9 * (1.0 + tree.cost));
    assert!(tree.cost < 20.0);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("square.json");
    fs::write(
        &cfg,
        r#"[{"pos": [0.0, 0.0], "deg": 1}, {"pos": [1.0, 1.0], "deg": 1},
            {"pos": [1.0, 0.0], "deg": -1}, {"pos": [0.0, 1.0], "deg": -1}]"#,
    )
    .unwrap();
    let out1 = dir.path().join("a.json");
    let out2 = dir.path().join("b.json");
    for (cmd, o) in [("transport", &out1), ("transport", &out2)] {
        assert_eq!(
            run_args(&[cmd, "--in", &path_str(&cfg), "--out", &path_str(o)]),
            0
        );
    }
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());
}

#[test]
fn grid_fixture_round_trips_through_csv() {
    let dir = tempdir().unwrap();
    let map = dir.path().join("vortex.csv");
    assert_eq!(
        run_args(&[
            "fixture",
            "--kind",
            "single-vortex",
            "--grid",
            "64",
            "--eps",
            "0.1",
            "--out",
            &path_str(&map)
        ]),
        0
    );
    let text = fs::read_to_string(&map).unwrap();
    let parsed = topoflow::degree::GridMap::from_csv(&text).unwrap();
    assert_eq!(parsed.to_csv(), text);
}
