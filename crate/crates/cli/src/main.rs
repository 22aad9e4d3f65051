//! Command-line front end: load flows onto instances, check equilibrium
//! concepts, run the penalty homotopy, measure gaps, and reproduce the
//! bundled example cases.
//!
//! Exit codes are a stable contract: 0 pass, 1 concept failure or failed
//! repro assertion, 2 parse or usage error, 3 loader error, 4 solver
//! non-convergence.

use sideflow_cli::{cases, output};

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sideflow_core::deviations::{Concept, GridSpec};
use sideflow_core::equilibrium::{
    check_scde, check_unconstrained, inner_product, vi_gap, qvi_residual, EquilibriumError, FeasibleSet,
};
use sideflow_core::loading::{effective_delay, load, DelayModel, LoadingOptions};
use sideflow_core::model::{flow_from_json, Instance, WalkInflow};
use sideflow_core::rat;
use sideflow_core::solver::{default_schedule, solve_penalty_homotopy, SolverError};
use sideflow_core::timefn::Rat;

#[derive(Parser)]
#[command(
    name = "sideflow",
    version,
    about = "Side-constrained flows over time: loading, feasibility, equilibrium checks, solving"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a flow onto an instance and write its profiles as CSV
    Load {
        /// Instance file
        instance: PathBuf,
        /// Flow file; without it the zero flow is loaded
        #[arg(long)]
        flow: Option<PathBuf>,
        /// Delay model: vickrey or linear
        #[arg(long, default_value = "vickrey")]
        model: String,
        /// Output directory
        #[arg(long, default_value = "sideflow-out")]
        out: PathBuf,
    },
    /// Check a flow against an equilibrium concept
    Check {
        /// Instance file
        instance: PathBuf,
        /// Flow file
        #[arg(long)]
        flow: PathBuf,
        /// Concept: unconstrained, global, strong-lp, weak-lp, strong-mns,
        /// weak-mns, strong-bs or weak-bs
        #[arg(long)]
        concept: String,
        /// Delay model: vickrey or linear
        #[arg(long, default_value = "vickrey")]
        model: String,
        /// Grid step; default is a two-hundredth of the horizon
        #[arg(long)]
        grid: Option<String>,
        /// Cost tolerance for witnesses; default 1/1000000
        #[arg(long)]
        tol: Option<String>,
        /// Output directory
        #[arg(long, default_value = "sideflow-out")]
        out: PathBuf,
    },
    /// Run the penalty homotopy toward a screening concept
    Solve {
        /// Instance file
        instance: PathBuf,
        /// Delay model: vickrey or linear
        #[arg(long, default_value = "vickrey")]
        model: String,
        /// Comma-separated increasing penalty factors; default 2,4,...,1024
        #[arg(long)]
        schedule: Option<String>,
        /// Grid step; default is a two-hundredth of the horizon
        #[arg(long)]
        grid: Option<String>,
        /// Residual tolerance per stage; default 1/10000
        #[arg(long)]
        tol: Option<String>,
        /// Concept whose screening window shapes the penalty:
        /// strong-lp, strong-mns, weak-lp or weak-mns
        #[arg(long, default_value = "strong-mns")]
        target: String,
        /// Output directory
        #[arg(long, default_value = "sideflow-out")]
        out: PathBuf,
    },
    /// Measure optimality gaps of a flow
    Gap {
        /// Instance file
        instance: PathBuf,
        /// Flow file
        #[arg(long)]
        flow: PathBuf,
        /// Second flow; reports the directional cost of moving toward it
        #[arg(long)]
        against: Option<PathBuf>,
        /// Additionally report the admissible-direction residual for this concept
        #[arg(long)]
        concept: Option<String>,
        /// Delay model: vickrey or linear
        #[arg(long, default_value = "vickrey")]
        model: String,
        /// Grid step; default is a two-hundredth of the horizon
        #[arg(long)]
        grid: Option<String>,
        /// Output directory
        #[arg(long, default_value = "sideflow-out")]
        out: PathBuf,
    },
    /// Re-run a bundled case's assertions
    Repro {
        /// Case id, or `all`
        case: String,
        /// Directory for flow and profile artifacts; omitted means none
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CliError {
    /// Unusable input: exits 2.
    Parse(String),
    /// The loader rejected the flow: exits 3.
    Load(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Load(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m) | CliError::Load(m) => m,
        }
    }
}

fn parse_err(e: impl std::fmt::Display) -> CliError {
    CliError::Parse(e.to_string())
}

fn equilibrium_err(e: EquilibriumError) -> CliError {
    match e {
        EquilibriumError::Loading(_) | EquilibriumError::Constraint(_) => {
            CliError::Load(e.to_string())
        }
        other => CliError::Parse(other.to_string()),
    }
}

fn solver_err(e: SolverError) -> CliError {
    match e {
        SolverError::Loading(_) | SolverError::Constraint(_) => CliError::Load(e.to_string()),
        SolverError::Equilibrium(inner) => equilibrium_err(inner),
        other => CliError::Parse(other.to_string()),
    }
}

fn read_instance(path: &Path) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    Instance::from_json(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn read_flow(inst: &Instance, path: &Path) -> Result<WalkInflow, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    flow_from_json(inst, &text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn parse_model(s: &str) -> Result<DelayModel, CliError> {
    s.parse::<DelayModel>().map_err(parse_err)
}

fn parse_concept(s: &str) -> Result<Concept, CliError> {
    s.parse::<Concept>().map_err(parse_err)
}

fn parse_rat(what: &str, s: &str) -> Result<Rat, CliError> {
    s.parse::<Rat>()
        .map_err(|e| CliError::Parse(format!("{what}: {e}")))
}

fn make_grid(
    inst: &Instance,
    step: &Option<String>,
    tol: &Option<String>,
    default_tol: Rat,
) -> Result<GridSpec, CliError> {
    let mut grid = match step {
        Some(s) => GridSpec::with_step(parse_rat("--grid", s)?),
        None => GridSpec::for_instance(inst),
    };
    grid.tolerance = match tol {
        Some(s) => parse_rat("--tol", s)?,
        None => default_tol,
    };
    Ok(grid)
}

fn write(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    output::write_file(dir, name, content).map_err(CliError::Parse)
}

fn cmd_load(
    instance: &Path,
    flow: &Option<PathBuf>,
    model: &str,
    out: &Path,
) -> Result<u8, CliError> {
    let inst = read_instance(instance)?;
    let model = parse_model(model)?;
    let h = match flow {
        Some(path) => read_flow(&inst, path)?,
        None => WalkInflow::zero(&inst),
    };
    let opts = LoadingOptions::new(model);
    let res = load(&inst, &h, &opts).map_err(|e| CliError::Load(e.to_string()))?;
    let feas = sideflow_core::sideconstraints::check_feasible(&inst, &res)
        .map_err(|e| CliError::Load(e.to_string()))?;
    let costs = effective_delay(&inst, &h, &res);
    write(out, "edge-profiles.csv", &output::edge_profiles_csv(&inst, &res))?;
    write(out, "edge-rates.csv", &output::edge_rates_csv(&inst, &res))?;
    write(out, "walk-arrivals.csv", &output::walk_arrivals_csv(&inst, &res))?;
    write(out, "walk-costs.csv", &output::walk_costs_csv(&inst, &costs))?;
    write(out, "violations.csv", &output::violations_csv(&feas))?;
    println!(
        "loaded {} walks over {} edges; {} capacity violation(s); profiles in {}",
        inst.walks.len(),
        inst.edges.len(),
        feas.violations.len(),
        out.display()
    );
    Ok(0)
}

fn cmd_check(
    instance: &Path,
    flow: &Path,
    concept: &str,
    model: &str,
    grid: &Option<String>,
    tol: &Option<String>,
    out: &Path,
) -> Result<u8, CliError> {
    let inst = read_instance(instance)?;
    let concept = parse_concept(concept)?;
    let model = parse_model(model)?;
    let h = read_flow(&inst, flow)?;
    let opts = LoadingOptions::new(model);
    let grid = make_grid(&inst, grid, tol, rat!(1, 1_000_000))?;
    let tolerance = grid.tolerance.clone();
    let report = if concept == Concept::Unconstrained {
        check_unconstrained(&inst, &h, &opts, &grid, &tolerance)
    } else {
        check_scde(&inst, &h, concept, &opts, &grid, &tolerance)
    }
    .map_err(equilibrium_err)?;
    write(out, "check-report.json", &output::check_report_json(&inst, &report))?;
    write(out, "witnesses.csv", &output::witnesses_csv(&inst, &report))?;
    println!(
        "{}: {} ({} witness(es), {} violation(s))",
        report.concept.name(),
        if report.pass { "pass" } else { "fail" },
        report.witnesses.len(),
        report.infeasibilities.len()
    );
    Ok(if report.pass { 0 } else { 1 })
}

fn cmd_solve(
    instance: &Path,
    model: &str,
    schedule: &Option<String>,
    grid: &Option<String>,
    tol: &Option<String>,
    target: &str,
    out: &Path,
) -> Result<u8, CliError> {
    let inst = read_instance(instance)?;
    let model = parse_model(model)?;
    let target = parse_concept(target)?;
    let schedule = match schedule {
        Some(list) => list
            .split(',')
            .map(|s| parse_rat("--schedule", s.trim()))
            .collect::<Result<Vec<_>, _>>()?,
        None => default_schedule(),
    };
    let grid = make_grid(&inst, grid, tol, rat!(1, 10_000))?;
    let opts = LoadingOptions::new(model);
    let trace =
        solve_penalty_homotopy(&inst, &schedule, &grid, target, &opts).map_err(solver_err)?;
    write(out, "trace.csv", &output::trace_csv(&inst, &trace))?;
    write(
        out,
        "limit.flow.json",
        &sideflow_core::model::flow_to_json(&inst, &trace.limit.flow),
    )?;
    write(
        out,
        "limit-verdict.json",
        &output::check_report_json(&inst, &trace.limit.verdict),
    )?;
    let mut all_converged = true;
    for stage in &trace.stages {
        all_converged &= stage.converged;
        println!(
            "lambda {}: residual {} after {} iteration(s), max excess {}{}",
            stage.lambda,
            stage.residual.to_f64(),
            stage.iterations,
            stage.max_excess.to_f64(),
            if stage.converged { "" } else { " (not converged)" }
        );
    }
    println!(
        "limit: {}feasible, {} check {}",
        if trace.limit.feasible { "" } else { "in" },
        trace.limit.verdict.concept.name(),
        if trace.limit.verdict.pass { "pass" } else { "fail" }
    );
    Ok(if all_converged { 0 } else { 4 })
}

fn cmd_gap(
    instance: &Path,
    flow: &Path,
    against: &Option<PathBuf>,
    concept: &Option<String>,
    model: &str,
    grid: &Option<String>,
    out: &Path,
) -> Result<u8, CliError> {
    let inst = read_instance(instance)?;
    let model = parse_model(model)?;
    let h = read_flow(&inst, flow)?;
    let opts = LoadingOptions::new(model);
    let grid = make_grid(&inst, grid, &None, rat!(1, 1_000_000))?;
    if let Some(path) = against {
        let g = read_flow(&inst, path)?;
        let res = load(&inst, &h, &opts).map_err(|e| CliError::Load(e.to_string()))?;
        let costs = effective_delay(&inst, &h, &res);
        let value = &inner_product(&costs, &g) - &inner_product(&costs, &h);
        println!("directional cost toward the second flow: {value} ({})", value.to_f64());
        return Ok(0);
    }
    let vi = vi_gap(&inst, &h, FeasibleSet::Lambda, &opts, &grid).map_err(equilibrium_err)?;
    write(out, "vi-gap.json", &output::gap_report_json("vi", &vi))?;
    println!("vi gap over the demand set: {} ({})", vi.gap, vi.gap.to_f64());
    if let Some(name) = concept {
        let concept = parse_concept(name)?;
        let q = qvi_residual(&inst, &h, concept, &opts, &grid).map_err(equilibrium_err)?;
        write(out, "qvi-residual.json", &output::gap_report_json("qvi", &q))?;
        println!(
            "admissible-direction residual under {}: {} ({})",
            concept.name(),
            q.gap,
            q.gap.to_f64()
        );
    }
    Ok(0)
}

fn cmd_repro(case: &str, out: &Option<PathBuf>) -> Result<u8, CliError> {
    let ids: Vec<&str> = if case == "all" {
        cases::CASE_IDS.to_vec()
    } else {
        vec![case]
    };
    let mut all_pass = true;
    for id in ids {
        let report = match cases::run_case(id, out.as_deref()) {
            None => {
                return Err(CliError::Parse(format!(
                    "unknown case `{id}`; bundled cases: {}",
                    cases::CASE_IDS.join(", ")
                )))
            }
            Some(run) => run.map_err(CliError::Parse)?,
        };
        println!("case {}: {}", report.id, if report.pass() { "PASS" } else { "FAIL" });
        for a in &report.assertions {
            println!(
                "  {} {:<48} {}",
                if a.pass { "PASS" } else { "FAIL" },
                a.anchor,
                a.measured
            );
        }
        all_pass &= report.pass();
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match &cli.command {
        Command::Load { instance, flow, model, out } => cmd_load(instance, flow, model, out),
        Command::Check { instance, flow, concept, model, grid, tol, out } => {
            cmd_check(instance, flow, concept, model, grid, tol, out)
        }
        Command::Solve { instance, model, schedule, grid, tol, target, out } => {
            cmd_solve(instance, model, schedule, grid, tol, target, out)
        }
        Command::Gap { instance, flow, against, concept, model, grid, out } => {
            cmd_gap(instance, flow, against, concept, model, grid, out)
        }
        Command::Repro { case, out } => cmd_repro(case, out),
    };
    match run {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
