//! CSV and JSON writers for command results. Every numeric column comes in
//! an exact form (integers and fractions) next to a decimal approximation,
//! so downstream plotting never loses the exact values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::json;
use sideflow_core::equilibrium::{CheckReport, GapReport};
use sideflow_core::loading::LoadingResult;
use sideflow_core::model::Instance;
use sideflow_core::sideconstraints::FeasibilityReport;
use sideflow_core::solver::HomotopyTrace;
use sideflow_core::timefn::{PwlFn, Rat, StepFn};

pub fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| format!("write {}: {e}", path.display()))
}

fn push_knots(out: &mut String, label: &str, kind: &str, f: &PwlFn) {
    for (t, v) in f.knots() {
        let _ = writeln!(out, "{label},{kind},{t},{v},{}", v.to_f64());
    }
}

fn push_segments(out: &mut String, label: &str, kind: &str, f: &StepFn) {
    for (a, b, v) in f.segments() {
        let _ = writeln!(out, "{label},{kind},{a},{b},{v},{}", v.to_f64());
    }
}

/// Knot rows of every edge's volume and queue under a loaded flow.
pub fn edge_profiles_csv(inst: &Instance, res: &LoadingResult) -> String {
    let mut out = String::from("edge,profile,time,value,value_approx\n");
    for (e, edge) in inst.edges.iter().enumerate() {
        push_knots(&mut out, &edge.id, "volume", &res.edges[e].volume);
        push_knots(&mut out, &edge.id, "queue", &res.edges[e].queue);
    }
    out
}

/// Segment rows of every edge's inflow and outflow rates.
pub fn edge_rates_csv(inst: &Instance, res: &LoadingResult) -> String {
    let mut out = String::from("edge,profile,from,to,rate,rate_approx\n");
    for (e, edge) in inst.edges.iter().enumerate() {
        push_segments(&mut out, &edge.id, "inflow", &res.edges[e].inflow);
        push_segments(&mut out, &edge.id, "outflow", &res.edges[e].outflow);
    }
    out
}

/// Knot rows of every walk's arrival-time map.
pub fn walk_arrivals_csv(inst: &Instance, res: &LoadingResult) -> String {
    let mut out = String::from("walk,departure,arrival,arrival_approx\n");
    for (w, walk) in inst.walks.iter().enumerate() {
        push_knots_named(&mut out, &walk.name, res.exit_time(w));
    }
    out
}

fn push_knots_named(out: &mut String, label: &str, f: &PwlFn) {
    for (t, v) in f.knots() {
        let _ = writeln!(out, "{label},{t},{v},{}", v.to_f64());
    }
}

/// Knot rows of every walk's effective delay.
pub fn walk_costs_csv(inst: &Instance, costs: &[PwlFn]) -> String {
    let mut out = String::from("walk,departure,cost,cost_approx\n");
    for (w, walk) in inst.walks.iter().enumerate() {
        push_knots_named(&mut out, &walk.name, &costs[w]);
    }
    out
}

/// One row per capacity violation window.
pub fn violations_csv(report: &FeasibilityReport) -> String {
    let mut out = String::from("edge,start,end,max_excess,max_excess_approx\n");
    for v in &report.violations {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            v.edge,
            v.start,
            v.end,
            v.max_excess,
            v.max_excess.to_f64()
        );
    }
    out
}

/// One row per homotopy stage.
pub fn trace_csv(inst: &Instance, trace: &HomotopyTrace) -> String {
    let mut out = String::from(
        "lambda,iterations,converged,residual,residual_approx,max_excess,max_excess_approx",
    );
    for walk in &inst.walks {
        let _ = write!(out, ",{}_volume", walk.name);
    }
    out.push('\n');
    for stage in &trace.stages {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            stage.lambda,
            stage.iterations,
            stage.converged,
            stage.residual,
            stage.residual.to_f64(),
            stage.max_excess,
            stage.max_excess.to_f64()
        );
        for rate in &stage.flow.rates {
            let _ = write!(out, ",{}", rate.total().to_f64());
        }
        out.push('\n');
    }
    out
}

fn rat_json(v: &Rat) -> serde_json::Value {
    json!({ "exact": v.to_string(), "approx": v.to_f64() })
}

/// JSON document of one concept verdict.
pub fn check_report_json(inst: &Instance, report: &CheckReport) -> String {
    let witnesses: Vec<_> = report
        .witnesses
        .iter()
        .map(|w| {
            json!({
                "from": inst.walks[w.from].name,
                "to": inst.walks[w.to].name,
                "time": rat_json(&w.time),
                "shift": rat_json(&w.shift),
                "cost_from": rat_json(&w.cost_from),
                "cost_to": rat_json(&w.cost_to),
                "gap": rat_json(&w.gap),
            })
        })
        .collect();
    let infeasibilities: Vec<_> = report
        .infeasibilities
        .iter()
        .map(|v| {
            json!({
                "edge": v.edge,
                "start": rat_json(&v.start),
                "end": rat_json(&v.end),
                "max_excess": rat_json(&v.max_excess),
            })
        })
        .collect();
    let doc = json!({
        "concept": report.concept.name(),
        "pass": report.pass,
        "tolerance": rat_json(&report.tolerance),
        "witnesses": witnesses,
        "infeasibilities": infeasibilities,
    });
    serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
}

/// One row per deviation witness.
pub fn witnesses_csv(inst: &Instance, report: &CheckReport) -> String {
    let mut out = String::from("from,time,to,shift,cost_from,cost_to,gap,gap_approx\n");
    for w in &report.witnesses {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            inst.walks[w.from].name,
            w.time,
            inst.walks[w.to].name,
            w.shift,
            w.cost_from,
            w.cost_to,
            w.gap,
            w.gap.to_f64()
        );
    }
    out
}

/// JSON document of a gap computation.
pub fn gap_report_json(label: &str, report: &GapReport) -> String {
    let doc = json!({
        "kind": label,
        "gap": rat_json(&report.gap),
        "current_value": rat_json(&report.current_value),
        "best_value": rat_json(&report.best_value),
    });
    serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
}
