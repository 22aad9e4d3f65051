//! Grid solvers: damped best-response iteration for unconstrained
//! equilibria, and an increasing-penalty sweep that steers the iterates
//! toward capacity-respecting ones.
//!
//! The iteration repeats `h <- (1 - a_k) h + a_k BR(h)` with `BR` the
//! cheapest routing against the current costs and `a_k = 2/(k+2)`. Walk
//! costs are never assumed monotone in the flow, so convergence is
//! monitored rather than guaranteed: running out of iterations is an
//! ordinary outcome carried in the result, not an error. The penalty sweep
//! re-runs the iteration under costs augmented by `lambda` times the
//! capacity excess for an increasing schedule of factors, warm-starting
//! each stage from the previous one.

use thiserror::Error;

pub use crate::deviations::GridSpec;

use crate::deviations::{Concept, DeviationError};
use crate::equilibrium::{
    best_response, check_scde, inner_product, CheckReport, EquilibriumError,
};
use crate::loading::{
    effective_delay, free_flow_cost_bound, load, truncate_costs, LoadingError, LoadingOptions,
    LoadingResult,
};
use crate::model::{Demand, Instance, WalkInflow};
use crate::sideconstraints::{
    check_feasible, penalty, psi_lambda, traversal_excess, walk_excess_from_edges, Penalties,
    SideConstraintError,
};
use crate::timefn::{PwlFn, Rat};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("the penalty sweep can target entry or traversal screening concepts, not `{0}`")]
    UnsupportedTarget(Concept),
    #[error("penalty factors must be positive and strictly increasing")]
    BadSchedule,
    #[error(transparent)]
    Grid(#[from] DeviationError),
    #[error(transparent)]
    Loading(#[from] LoadingError),
    #[error(transparent)]
    Constraint(#[from] SideConstraintError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
}

/// Which cost operator the iteration equilibrates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PsiSource {
    /// The plain walk costs.
    Pure,
    /// Walk costs truncated at `cost_cap + 1`, plus `lambda` times the
    /// walk's capacity excess.
    Penalized {
        lambda: Rat,
        window: PenaltyWindow,
    },
}

/// Where the capacity excess entering a penalty is read off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyWindow {
    /// Excess at the instant the walk enters each capacitated leg.
    Entry,
    /// Worst excess anywhere while traversing each capacitated leg.
    Traversal,
}

impl PenaltyWindow {
    /// The window matching a concept's capacity screening, for the four
    /// concepts the penalty sweep can target.
    pub fn for_target(concept: Concept) -> Option<PenaltyWindow> {
        match concept {
            Concept::StrongLp | Concept::StrongMns => Some(PenaltyWindow::Entry),
            Concept::WeakLp | Concept::WeakMns => Some(PenaltyWindow::Traversal),
            _ => None,
        }
    }
}

/// Truncation level for penalized costs: twice the largest cost a walk can
/// have with empty edges, so that any positive penalty eventually dominates
/// every real routing alternative.
pub fn cost_cap(inst: &Instance) -> Rat {
    Rat::from(2) * free_flow_cost_bound(inst)
}

/// Walk costs of a loaded flow under the given source: plain effective
/// delays, or the truncated delays plus the scaled capacity excess.
pub fn walk_costs(
    inst: &Instance,
    h: &WalkInflow,
    res: &LoadingResult,
    source: &PsiSource,
) -> Result<Vec<PwlFn>, SolverError> {
    let base = effective_delay(inst, h, res);
    match source {
        PsiSource::Pure => Ok(base),
        PsiSource::Penalized { lambda, window } => {
            let truncated = truncate_costs(&base, &(cost_cap(inst) + Rat::one()));
            let penalties = match window {
                PenaltyWindow::Entry => penalty(inst, res)?,
                PenaltyWindow::Traversal => {
                    let zero = PwlFn::constant(Rat::zero());
                    let edge: Vec<PwlFn> = traversal_excess(inst, res)?
                        .into_iter()
                        .map(|d| match d {
                            Some(d) => d.clamp_min_zero(),
                            None => zero.clone(),
                        })
                        .collect();
                    let walk = walk_excess_from_edges(inst, res, &edge);
                    Penalties { edge, walk }
                }
            };
            Ok(psi_lambda(&truncated, &penalties, lambda))
        }
    }
}

/// Starting state for the damped best-response iteration.
#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Flow to start from; when absent, everything is routed by cheapest
    /// empty-network cost first.
    pub start: Option<WalkInflow>,
    /// Offset added to the iteration counter in the step size `2/(k+2)`,
    /// so a warm-started run keeps taking small steps.
    pub step_offset: usize,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub flow: WalkInflow,
    /// Final linearized-optimality gap `<cost(h), h - BR(h)>`.
    pub residual: Rat,
    /// The gap after every pass, ending with `residual`.
    pub residual_history: Vec<Rat>,
    /// Mixing steps taken.
    pub iterations: usize,
    /// False when the iteration budget ran out above tolerance; `flow` is
    /// still the last iterate.
    pub converged: bool,
}

/// Runs the damped best-response iteration on the demand grid until the
/// linearized-optimality gap drops to the grid tolerance or the iteration
/// budget runs out. The iterates routes stay inside the demand space
/// exactly: per-slice rates for rate demands, total volume and rate bounds
/// for volume demands. Elastic commodities are solved through their
/// reduction and the returned flow keeps only the original walks.
pub fn solve_unconstrained(
    inst: &Instance,
    source: &PsiSource,
    opts: &LoadingOptions,
    grid: &GridSpec,
    solve: &SolveOptions,
) -> Result<SolveOutcome, SolverError> {
    if inst
        .commodities
        .iter()
        .any(|c| matches!(c.demand, Demand::Elastic { .. }))
    {
        let reduced = inst.elastic_to_fixed_volume();
        let inner = SolveOptions {
            start: solve
                .start
                .as_ref()
                .map(|h| crate::equilibrium::reduce_elastic(inst, h).1),
            step_offset: solve.step_offset,
        };
        let mut out = solve_unconstrained(&reduced, source, opts, grid, &inner)?;
        out.flow.rates.truncate(inst.walks.len());
        return Ok(out);
    }
    grid.validate(inst)?;
    let mut h = match &solve.start {
        Some(h) => h.clone(),
        None => {
            let empty = WalkInflow::zero(inst);
            let res = load(inst, &empty, opts)?;
            let costs = walk_costs(inst, &empty, &res, source)?;
            best_response(inst, &costs, grid)
        }
    };
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let res = load(inst, &h, opts)?;
        let costs = walk_costs(inst, &h, &res, source)?;
        let best = best_response(inst, &costs, grid);
        let gap = inner_product(&costs, &h) - inner_product(&costs, &best);
        history.push(gap.clone());
        if gap <= grid.tolerance {
            converged = true;
            break;
        }
        if iterations >= grid.max_iterations {
            break;
        }
        let alpha = Rat::new(2, (solve.step_offset + iterations) as i64 + 2);
        h = mix(&h, &best, &alpha);
        iterations += 1;
    }
    Ok(SolveOutcome {
        flow: h,
        residual: history.last().expect("at least one pass ran").clone(),
        residual_history: history,
        iterations,
        converged,
    })
}

fn mix(h: &WalkInflow, toward: &WalkInflow, alpha: &Rat) -> WalkInflow {
    let keep = &Rat::one() - alpha;
    WalkInflow {
        rates: h
            .rates
            .iter()
            .zip(&toward.rates)
            .map(|(a, b)| a.scale(&keep).add(&b.scale(alpha)))
            .collect(),
    }
}

/// Penalty factors `2, 4, ..., 1024`.
pub fn default_schedule() -> Vec<Rat> {
    (1..=10).map(|n| Rat::from(1i64 << n)).collect()
}

/// One penalty factor's stage: the flow it settled on, its final gap, and
/// how far the flow still overloads some capacity.
#[derive(Debug, Clone)]
pub struct HomotopyStage {
    pub lambda: Rat,
    pub flow: WalkInflow,
    pub residual: Rat,
    pub residual_history: Vec<Rat>,
    pub max_excess: Rat,
    pub iterations: usize,
    pub converged: bool,
}

/// The candidate the sweep ends on.
#[derive(Debug, Clone)]
pub struct LimitCandidate {
    pub flow: WalkInflow,
    /// Whether the flow's loads respect every capacity exactly.
    pub feasible: bool,
    /// Grid verdict for the target concept.
    pub verdict: CheckReport,
}

/// Record of a full penalty sweep.
#[derive(Debug, Clone)]
pub struct HomotopyTrace {
    pub target: Concept,
    pub schedule: Vec<Rat>,
    pub stages: Vec<HomotopyStage>,
    pub limit: LimitCandidate,
}

/// Sweeps the penalty factor up the schedule, running the best-response
/// iteration under `cost + lambda * excess` at each stage and warm-starting
/// from the previous stage's flow. Targets with traversal screening read
/// the excess over whole traversal windows rather than at entry instants.
/// The limit candidate is the last stage's flow with its feasibility and
/// concept verdict.
pub fn solve_penalty_homotopy(
    inst: &Instance,
    schedule: &[Rat],
    grid: &GridSpec,
    target: Concept,
    opts: &LoadingOptions,
) -> Result<HomotopyTrace, SolverError> {
    let Some(window) = PenaltyWindow::for_target(target) else {
        return Err(SolverError::UnsupportedTarget(target));
    };
    if schedule.is_empty()
        || !schedule[0].is_positive()
        || !schedule.windows(2).all(|w| w[0] < w[1])
    {
        return Err(SolverError::BadSchedule);
    }
    let mut stages: Vec<HomotopyStage> = Vec::new();
    let mut start: Option<WalkInflow> = None;
    let mut step_offset = 0;
    for lambda in schedule {
        let source = PsiSource::Penalized {
            lambda: lambda.clone(),
            window,
        };
        let out = solve_unconstrained(
            inst,
            &source,
            opts,
            grid,
            &SolveOptions {
                start: start.take(),
                step_offset,
            },
        )?;
        let res = load(inst, &out.flow, opts)?;
        let feasibility = check_feasible(inst, &res)?;
        let max_excess = feasibility
            .violations
            .iter()
            .map(|v| v.max_excess.clone())
            .max()
            .unwrap_or_else(Rat::zero);
        step_offset += out.iterations;
        start = Some(out.flow.clone());
        stages.push(HomotopyStage {
            lambda: lambda.clone(),
            flow: out.flow,
            residual: out.residual,
            residual_history: out.residual_history,
            max_excess,
            iterations: out.iterations,
            converged: out.converged,
        });
    }
    let last = stages.last().expect("schedule is nonempty");
    let verdict = check_scde(inst, &last.flow, target, opts, grid, &grid.tolerance)?;
    Ok(HomotopyTrace {
        target,
        schedule: schedule.to_vec(),
        limit: LimitCandidate {
            flow: last.flow.clone(),
            feasible: last.max_excess.is_zero(),
            verdict,
        },
        stages,
    })
}
