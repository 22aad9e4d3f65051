//! Drives the `sideflow` binary against the bundled cases and checks the
//! exit-code contract: 0 pass, 1 concept failure, 2 unusable input, 4
//! solver non-convergence.

use std::path::PathBuf;
use std::process::{Command, Output};

use sideflow_core::model::{flow_from_json, Demand, Instance, InstanceBuilder, ServiceRate};
use sideflow_core::rat;
use sideflow_core::timefn::StepFn;
use tempfile::TempDir;

fn case(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("cases")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn sideflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sideflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn read(dir: &TempDir, name: &str) -> String {
    std::fs::read_to_string(dir.path().join(name))
        .unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

#[test]
fn load_concentrated_merge_flow_writes_volume_knots() {
    let dir = TempDir::new().unwrap();
    let out = sideflow(&[
        "load",
        &case("merge.json"),
        "--flow",
        &case("merge-concentrated.flow.json"),
        "--model",
        "linear",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("0 capacity violation(s)"));
    let profiles = read(&dir, "edge-profiles.csv");
    for row in ["e1,volume,0,0,0", "e1,volume,2,4,4", "e1,volume,6,0,0"] {
        assert!(profiles.contains(row), "missing `{row}` in:\n{profiles}");
    }
}

#[test]
fn load_without_flow_reports_flat_profiles() {
    let dir = TempDir::new().unwrap();
    let out = sideflow(&[
        "load",
        &case("merge.json"),
        "--model",
        "linear",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let profiles = read(&dir, "edge-profiles.csv");
    for row in profiles.lines().skip(1) {
        let value = row.split(',').nth(3).unwrap();
        assert_eq!(value, "0", "nonzero series row `{row}`");
    }
    assert_eq!(
        read(&dir, "violations.csv").lines().count(),
        1,
        "zero flow must not violate any capacity"
    );
}

#[test]
fn load_split_branch_flow_reports_late_overload() {
    let dir = TempDir::new().unwrap();
    let out = sideflow(&[
        "load",
        &case("counterexample-loose.json"),
        "--flow",
        &case("counterexample-loose-split.flow.json"),
        "--model",
        "linear",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("1 capacity violation(s)"));
    let violations = read(&dir, "violations.csv");
    assert!(
        violations.lines().any(|l| l.starts_with("e3,39/8,")),
        "expected the merge edge to overflow from 39/8 in:\n{violations}"
    );
}

#[test]
fn check_staged_phases_flow_passes_window_screen() {
    let dir = TempDir::new().unwrap();
    let out = sideflow(&[
        "check",
        &case("phases.json"),
        "--flow",
        &case("phases-staged.flow.json"),
        "--concept",
        "weak-lp",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("weak-lp: pass"));
    assert!(read(&dir, "check-report.json").contains("\"pass\": true"));
}

#[test]
fn check_early_cutoff_fails_with_detour_witness() {
    let dir = TempDir::new().unwrap();
    let out = sideflow(&[
        "check",
        &case("phases-early.json"),
        "--flow",
        &case("phases-early-staged-early.flow.json"),
        "--concept",
        "weak-lp",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("weak-lp: fail"));
    let witnesses = read(&dir, "witnesses.csv");
    assert!(
        witnesses
            .lines()
            .any(|l| l.starts_with("direct,") && l.contains(",slow,")),
        "expected a direct-to-slow witness in:\n{witnesses}"
    );
}

#[test]
fn check_three_commodity_splits_whole_flow_from_per_walk_screens() {
    let global_dir = TempDir::new().unwrap();
    let global = sideflow(&[
        "check",
        &case("three-commodity.json"),
        "--flow",
        &case("three-commodity-forced.flow.json"),
        "--concept",
        "global",
        "--out",
        global_dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&global), 0, "{}", stderr(&global));
    let bundle_dir = TempDir::new().unwrap();
    let bundle = sideflow(&[
        "check",
        &case("three-commodity.json"),
        "--flow",
        &case("three-commodity-forced.flow.json"),
        "--concept",
        "weak-bs",
        "--out",
        bundle_dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&bundle), 1);
    assert!(stdout(&bundle).contains("weak-bs: fail"));
}

#[test]
fn check_rejects_flow_bound_to_a_different_instance() {
    let dir = TempDir::new().unwrap();
    let out = sideflow(&[
        "check",
        &case("counterexample.json"),
        "--flow",
        &case("counterexample-loose-upper.flow.json"),
        "--concept",
        "weak-lp",
        "--model",
        "linear",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("digest"));
}

#[test]
fn missing_instance_file_is_a_usage_error() {
    let out = sideflow(&["load", "/nonexistent/instance.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_instance_file_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "not json").unwrap();
    let out = sideflow(&["load", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("broken.json"));
}

#[test]
fn solve_slack_instance_converges_in_one_stage() {
    let inst = InstanceBuilder::new(rat!(0), rat!(4))
        .edge("a", "s", "t", rat!(1), ServiceRate::Unbounded)
        .edge("b", "s", "t", rat!(2), ServiceRate::Unbounded)
        .commodity(
            "traffic",
            "s",
            "t",
            Demand::FixedRate(StepFn::constant(rat!(0), rat!(1), rat!(1))),
        )
        .walk("traffic", "fast", &["a"])
        .walk("traffic", "slow", &["b"])
        .build()
        .unwrap();
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("slack.json");
    std::fs::write(&path, inst.to_json()).unwrap();
    let out = sideflow(&[
        "solve",
        path.to_str().unwrap(),
        "--schedule",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("limit: feasible"));
    assert_eq!(
        read(&dir, "trace.csv").lines().count(),
        2,
        "one schedule entry makes a one-stage trace"
    );
}

#[test]
fn solve_prices_walks_the_default_schedule() {
    let dir = TempDir::new().unwrap();
    let out = sideflow(&[
        "solve",
        &case("prices.json"),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("lambda 2:") && text.contains("lambda 1024:"));
    assert!(text.contains("limit: feasible, strong-mns check pass"));
    let trace = read(&dir, "trace.csv");
    assert_eq!(trace.lines().count(), 11, "header plus ten stages");
    assert!(trace.lines().next().unwrap().contains("north-central_volume"));
    let limit = read(&dir, "limit.flow.json");
    let inst = Instance::from_json(&std::fs::read_to_string(case("prices.json")).unwrap()).unwrap();
    assert!(flow_from_json(&inst, &limit).is_ok(), "limit flow round-trips");
}

#[test]
fn solve_closing_door_stops_at_the_iteration_cap() {
    let dir = TempDir::new().unwrap();
    let out = sideflow(&[
        "solve",
        &case("capacity-drop.json"),
        "--target",
        "weak-mns",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(stdout(&out).contains("(not converged)"));
    for partial in ["trace.csv", "limit.flow.json", "limit-verdict.json"] {
        assert!(dir.path().join(partial).exists(), "missing partial {partial}");
    }
}

#[test]
fn gap_reports_directional_cost_between_merge_flows() {
    let out = sideflow(&[
        "gap",
        &case("merge.json"),
        "--flow",
        &case("merge-concentrated.flow.json"),
        "--against",
        &case("merge-split.flow.json"),
        "--model",
        "linear",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(
        stdout(&out).contains("directional cost toward the second flow: -2 (-2)"),
        "splitting the merge must look strictly cheaper: {}",
        stdout(&out)
    );
}

#[test]
fn gap_separates_demand_set_gap_from_screened_residual() {
    let dir = TempDir::new().unwrap();
    let out = sideflow(&[
        "gap",
        &case("prices.json"),
        "--flow",
        &case("prices-limit.flow.json"),
        "--concept",
        "strong-mns",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("vi gap over the demand set: 1 (1)"),
        "ignoring capacities the central path undercuts by one: {text}"
    );
    assert!(
        text.contains("admissible-direction residual under strong-mns: 0 (0)"),
        "tight capacities screen every profitable direction: {text}"
    );
    assert!(dir.path().join("vi-gap.json").exists());
    assert!(dir.path().join("qvi-residual.json").exists());
}

#[test]
fn repro_merge_prints_anchored_assertions() {
    let out = sideflow(&["repro", "merge"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("case merge: PASS"));
    assert!(text.contains("merge.concentrated-volume-profile"));
    assert!(text.contains("(0,0) (2,4) (6,0)"));
}

#[test]
fn repro_counterexample_reports_the_inner_product() {
    let out = sideflow(&["repro", "counterexample"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("counterexample.cross-cost-inner-product"));
    assert!(text.contains("-1661/410"));
}

#[test]
fn repro_cycles_compares_circuit_and_detour_costs() {
    let out = sideflow(&["repro", "cycles"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("circuit 3, detour 10"));
}

#[test]
fn repro_unknown_case_is_a_usage_error() {
    let out = sideflow(&["repro", "nonesuch"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bundled cases"));
}

#[test]
fn repro_out_writes_flow_and_profile_artifacts() {
    let dir = TempDir::new().unwrap();
    let out = sideflow(&["repro", "merge", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let inst = Instance::from_json(&std::fs::read_to_string(case("merge.json")).unwrap()).unwrap();
    let flow = read(&dir, "merge-concentrated.flow.json");
    assert!(flow_from_json(&inst, &flow).is_ok(), "artifact flow binds to the instance");
    assert!(read(&dir, "merge-concentrated-volumes.csv").starts_with("edge,"));
}
