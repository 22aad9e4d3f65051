//! Edge loads, capacity feasibility, violation penalties and penalized costs.
//!
//! Each edge designates one flow measure (volume, queue, cumulative inflow or
//! inflow rate) as its load; a flow is feasible when every capacitated edge's
//! load stays below its capacity at all times. Infeasibility is reported as
//! maximal violation intervals with their worst excess, all computed exactly
//! on the piecewise structure of the loads.
//!
//! The excess `(load - capacity)+` doubles as the penalty term of the
//! penalized walk cost: a walk pays, at each of its edges, the excess at the
//! moment it enters that edge. The traversal-window transform replaces an
//! edge's load by the worst excess anywhere during the traversal of that
//! edge, which turns checks over whole traversal intervals into checks at
//! entry instants.

use thiserror::Error;

use crate::loading::{DelayModel, LoadingResult};
use crate::model::{Instance, LoadKind};
use crate::timefn::{PwlFn, Rat, StepFn};

#[derive(Debug, Error)]
pub enum SideConstraintError {
    #[error("edge `{edge}`: {reason}")]
    KindUnavailable { edge: String, reason: String },
}

/// The flow measure an edge's capacity constrains. Three of the four kinds
/// are continuous in time; the inflow rate is a step function and gets its
/// own variant so comparisons stay exact.
#[derive(Debug, Clone)]
pub enum EdgeLoad {
    Curve(PwlFn),
    Rate(StepFn),
}

impl EdgeLoad {
    pub fn eval(&self, t: &Rat) -> Rat {
        match self {
            EdgeLoad::Curve(f) => f.eval(t),
            EdgeLoad::Rate(f) => f.eval(t),
        }
    }
}

/// The load series selected by the edge's kind.
pub fn edge_load(
    inst: &Instance,
    res: &LoadingResult,
    e: usize,
) -> Result<EdgeLoad, SideConstraintError> {
    let edge = &inst.edges[e];
    let loaded = &res.edges[e];
    match edge.load_kind {
        LoadKind::Volume => Ok(EdgeLoad::Curve(loaded.volume.clone())),
        LoadKind::Queue => {
            if res.model != DelayModel::Vickrey {
                return Err(SideConstraintError::KindUnavailable {
                    edge: edge.id.clone(),
                    reason: "queue loads require the point-queue delay model".into(),
                });
            }
            Ok(EdgeLoad::Curve(loaded.queue.clone()))
        }
        LoadKind::CumulativeInflow => Ok(EdgeLoad::Curve(loaded.cumulative_inflow.clone())),
        LoadKind::InflowRate => Ok(EdgeLoad::Rate(loaded.inflow.clone())),
    }
}

/// One maximal interval on which an edge load exceeds its capacity. The
/// start is the infimum of the violation times (the load may still equal the
/// capacity exactly there); intervals reaching the end of the evaluation
/// span are truncated at it.
#[derive(Debug, Clone)]
pub struct FeasibilityViolation {
    pub edge: String,
    pub start: Rat,
    pub end: Rat,
    pub max_excess: Rat,
}

#[derive(Debug, Clone, Default)]
pub struct FeasibilityReport {
    pub violations: Vec<FeasibilityViolation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    /// Infimum of the violation times of one edge, if it has any.
    pub fn first_violation(&self, edge: &str) -> Option<&Rat> {
        self.violations
            .iter()
            .filter(|v| v.edge == edge)
            .map(|v| &v.start)
            .min()
    }
}

/// Maximal subintervals of `[lo, hi]` where `d > 0`, each with its largest
/// value. Interval starts and ends are exact roots of `d`.
fn positive_regions(d: &PwlFn, lo: &Rat, hi: &Rat) -> Vec<(Rat, Rat, Rat)> {
    let clamped = d.clamp_min_zero();
    let mut ts: Vec<Rat> = vec![lo.clone()];
    for (t, _) in clamped.knots() {
        if t > lo && t < hi {
            ts.push(t.clone());
        }
    }
    ts.push(hi.clone());
    let vals: Vec<Rat> = ts.iter().map(|t| clamped.eval(t)).collect();
    let mut out: Vec<(Rat, Rat, Rat)> = Vec::new();
    let mut current: Option<(Rat, Rat, Rat)> = None;
    for i in 0..ts.len() - 1 {
        let positive = vals[i].is_positive() || vals[i + 1].is_positive();
        if positive {
            let seg_max = vals[i].clone().max(vals[i + 1].clone());
            match &mut current {
                Some((_, end, max)) => {
                    *end = ts[i + 1].clone();
                    if seg_max > *max {
                        *max = seg_max;
                    }
                }
                None => current = Some((ts[i].clone(), ts[i + 1].clone(), seg_max)),
            }
        } else if let Some(region) = current.take() {
            out.push(region);
        }
    }
    if let Some(region) = current.take() {
        out.push(region);
    }
    out
}

/// Violation intervals of one edge load against a capacity.
fn load_violations(load: &EdgeLoad, cap: &PwlFn, span: &(Rat, Rat)) -> Vec<(Rat, Rat, Rat)> {
    match load {
        EdgeLoad::Curve(f) => positive_regions(&f.sub(cap), &span.0, &span.1),
        EdgeLoad::Rate(f) => {
            let mut regions: Vec<(Rat, Rat, Rat)> = Vec::new();
            for (a, b, v) in f.segments() {
                let d = PwlFn::constant(v.clone()).sub(cap);
                for (s, e, m) in positive_regions(&d, a, b) {
                    match regions.last_mut() {
                        Some((_, prev_end, prev_max)) if *prev_end == s => {
                            *prev_end = e;
                            if m > *prev_max {
                                *prev_max = m;
                            }
                        }
                        _ => regions.push((s, e, m)),
                    }
                }
            }
            regions
        }
    }
}

/// Compares every capacitated edge's load against its capacity. Edges
/// without a capacity are unconstrained.
pub fn check_feasible(
    inst: &Instance,
    res: &LoadingResult,
) -> Result<FeasibilityReport, SideConstraintError> {
    let mut report = FeasibilityReport::default();
    for (e, edge) in inst.edges.iter().enumerate() {
        let Some(cap) = &edge.capacity else { continue };
        let load = edge_load(inst, res, e)?;
        for (start, end, max_excess) in load_violations(&load, cap, &res.span) {
            report.violations.push(FeasibilityViolation {
                edge: edge.id.clone(),
                start,
                end,
                max_excess,
            });
        }
    }
    Ok(report)
}

/// Per-edge and per-walk capacity excesses.
#[derive(Debug, Clone)]
pub struct Penalties {
    /// `(load - capacity)+` per edge; identically zero without a capacity.
    pub edge: Vec<PwlFn>,
    /// Per walk, the sum over its legs of the edge excess at the moment the
    /// walk enters that edge, as a function of the departure time.
    pub walk: Vec<PwlFn>,
}

/// Capacity excesses for every edge and walk. Penalties need a load that is
/// continuous in time, so a capacitated inflow-rate edge is rejected.
pub fn penalty(inst: &Instance, res: &LoadingResult) -> Result<Penalties, SideConstraintError> {
    let zero = PwlFn::constant(Rat::zero());
    let mut edge_excess: Vec<PwlFn> = Vec::with_capacity(inst.edges.len());
    for (e, edge) in inst.edges.iter().enumerate() {
        let Some(cap) = &edge.capacity else {
            edge_excess.push(zero.clone());
            continue;
        };
        match edge_load(inst, res, e)? {
            EdgeLoad::Curve(f) => edge_excess.push(f.sub(cap).clamp_min_zero()),
            EdgeLoad::Rate(_) => {
                return Err(SideConstraintError::KindUnavailable {
                    edge: edge.id.clone(),
                    reason: "penalties require a load that is continuous in time".into(),
                })
            }
        }
    }
    let walk_excess = walk_excess_from_edges(inst, res, &edge_excess);
    Ok(Penalties {
        edge: edge_excess,
        walk: walk_excess,
    })
}

/// Per-walk excesses from given per-edge excess curves: for each walk, the
/// sum over its capacitated legs of the edge curve at the moment the walk
/// enters that leg, as a function of the departure time.
pub fn walk_excess_from_edges(
    inst: &Instance,
    res: &LoadingResult,
    edge_excess: &[PwlFn],
) -> Vec<PwlFn> {
    let zero = PwlFn::constant(Rat::zero());
    inst.walks
        .iter()
        .enumerate()
        .map(|(w, walk)| {
            let mut acc = zero.clone();
            for (j, &e) in walk.edges.iter().enumerate() {
                if inst.edges[e].capacity.is_some() {
                    acc = acc.add(&edge_excess[e].compose(&res.arrivals[w][j]));
                }
            }
            acc
        })
        .collect()
}

/// The penalized walk costs `cost + lambda * excess`.
pub fn psi_lambda(costs: &[PwlFn], penalties: &Penalties, lambda: &Rat) -> Vec<PwlFn> {
    assert!(
        !lambda.is_negative(),
        "penalty factors must be nonnegative"
    );
    costs
        .iter()
        .zip(&penalties.walk)
        .map(|(c, xi)| c.add(&xi.scale(lambda)))
        .collect()
}

/// Replaces each capacitated edge's excess at an instant by the worst excess
/// anywhere while traversing the edge from that instant: the result at `t`
/// is `max{load(z) - cap(z) : z in [t, exit(t)]}`. Checking this transformed
/// excess against zero at entry instants is exactly a check of the original
/// load over whole traversal intervals. `None` for uncapacitated edges.
pub fn traversal_excess(
    inst: &Instance,
    res: &LoadingResult,
) -> Result<Vec<Option<PwlFn>>, SideConstraintError> {
    let mut out = Vec::with_capacity(inst.edges.len());
    for (e, edge) in inst.edges.iter().enumerate() {
        let Some(cap) = &edge.capacity else {
            out.push(None);
            continue;
        };
        let d = match edge_load(inst, res, e)? {
            EdgeLoad::Curve(f) => f.sub(cap),
            EdgeLoad::Rate(_) => {
                return Err(SideConstraintError::KindUnavailable {
                    edge: edge.id.clone(),
                    reason: "traversal windows require a load that is continuous in time".into(),
                })
            }
        };
        out.push(Some(window_max(&d, &res.exit_maps[e], &res.span)));
    }
    Ok(out)
}

/// `g(t) = max{d(z) : z in [t, exit(t)]}` for a nondecreasing exit map with
/// `exit(t) >= t`. Exact: between consecutive critical times (knots of `d`,
/// knots of `exit`, preimages of `d`'s knots under `exit`) the window
/// endpoints stay on fixed linear pieces and the set of interior knots of
/// `d` inside the window is constant, so the maximum is a maximum of two
/// linear functions and a constant.
fn window_max(d: &PwlFn, exit: &PwlFn, span: &(Rat, Rat)) -> PwlFn {
    let mut grid: std::collections::BTreeSet<Rat> = std::collections::BTreeSet::new();
    grid.insert(span.0.clone());
    grid.insert(span.1.clone());
    for (t, _) in exit.knots() {
        if *t > span.0 && *t < span.1 {
            grid.insert(t.clone());
        }
    }
    for (k, _) in d.knots() {
        if *k > span.0 && *k < span.1 {
            grid.insert(k.clone());
        }
        if let Some(pre) = exit.earliest_preimage(k) {
            if pre > span.0 && pre < span.1 {
                grid.insert(pre);
            }
        }
    }
    let grid: Vec<Rat> = grid.into_iter().collect();
    let d_end = d.compose(exit);
    let two = Rat::from(2);
    let mut knots: Vec<(Rat, Rat)> = Vec::new();
    let push = |t: Rat, v: Rat, knots: &mut Vec<(Rat, Rat)>| {
        if knots.last().map(|(lt, _)| *lt == t).unwrap_or(false) {
            return;
        }
        knots.push((t, v));
    };
    for i in 0..grid.len() - 1 {
        let (x0, x1) = (&grid[i], &grid[i + 1]);
        let mid = (x0 + x1) / &two;
        // Interior knots of d inside the window, tested at the midpoint;
        // membership cannot change inside a critical interval.
        let interior = d
            .knots()
            .iter()
            .filter(|(k, _)| *k >= mid && exit.eval(&mid) >= *k)
            .map(|(_, v)| v.clone())
            .max();
        let window_value = |t: &Rat| -> Rat {
            let mut m = d.eval(t).max(d_end.eval(t));
            if let Some(c) = &interior {
                m = m.max(c.clone());
            }
            m
        };
        let v0 = window_value(x0);
        let v1 = window_value(x1);
        push(x0.clone(), v0, &mut knots);
        // The three candidates are linear on the interval, so the max can
        // only gain a knot where two of them cross.
        let mut cuts: Vec<Rat> = Vec::new();
        let d0 = (d.eval(x0), d.eval(x1));
        let e0 = (d_end.eval(x0), d_end.eval(x1));
        let add_crossing = |a: &(Rat, Rat), b: &(Rat, Rat), cuts: &mut Vec<Rat>| {
            let da = &a.0 - &b.0;
            let db = &a.1 - &b.1;
            if (da.is_positive() && db.is_negative()) || (da.is_negative() && db.is_positive()) {
                let t = x0 + (x1 - x0) * &da / (&da - &db);
                cuts.push(t);
            }
        };
        add_crossing(&d0, &e0, &mut cuts);
        if let Some(c) = &interior {
            add_crossing(&d0, &(c.clone(), c.clone()), &mut cuts);
            add_crossing(&e0, &(c.clone(), c.clone()), &mut cuts);
        }
        cuts.sort();
        cuts.dedup();
        for t in cuts {
            if t > *x0 && t < *x1 {
                let v = window_value(&t);
                push(t, v, &mut knots);
            }
        }
        push(x1.clone(), v1, &mut knots);
    }
    PwlFn::new(knots).expect("grid times increase")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loading::{effective_delay, load, LoadingOptions};
    use crate::model::{Demand, InstanceBuilder, ServiceRate, WalkInflow};
    use crate::rat;

    fn capped_edge_instance(kind: LoadKind, cap: PwlFn) -> Instance {
        InstanceBuilder::new(rat!(0), rat!(8))
            .edge("e", "s", "t", rat!(2), ServiceRate::Finite(rat!(2)))
            .capacity(cap)
            .load_kind(kind)
            .commodity(
                "c",
                "s",
                "t",
                Demand::FixedRate(StepFn::constant(rat!(0), rat!(2), rat!(2))),
            )
            .walk("c", "p", &["e"])
            .build()
            .unwrap()
    }

    #[test]
    fn volume_violation_interval_is_exact() {
        let inst = capped_edge_instance(LoadKind::Volume, PwlFn::constant(rat!(3)));
        let mut h = WalkInflow::zero(&inst);
        h.rates[0] = StepFn::constant(rat!(0), rat!(2), rat!(2));
        let res = load(&inst, &h, &LoadingOptions::new(DelayModel::Linear)).unwrap();
        let report = check_feasible(&inst, &res).unwrap();
        assert!(!report.is_feasible());
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        // volume rises to 4 by t=2 and drains by t=6, crossing 3 at 3/2 and 3
        assert_eq!(v.start, Rat::new(3, 2));
        assert_eq!(v.end, rat!(3));
        assert_eq!(v.max_excess, rat!(1));
        assert_eq!(report.first_violation("e"), Some(&Rat::new(3, 2)));

        let slack = capped_edge_instance(LoadKind::Volume, PwlFn::constant(rat!(5)));
        let res = load(&slack, &h, &LoadingOptions::new(DelayModel::Linear)).unwrap();
        assert!(check_feasible(&slack, &res).unwrap().is_feasible());
    }

    #[test]
    fn rate_load_compares_against_moving_capacity() {
        let cap = PwlFn::new(vec![(rat!(0), rat!(3)), (rat!(4), rat!(0))]).unwrap();
        let inst = capped_edge_instance(LoadKind::InflowRate, cap);
        let mut h = WalkInflow::zero(&inst);
        h.rates[0] = StepFn::constant(rat!(0), rat!(2), rat!(2));
        let res = load(&inst, &h, &LoadingOptions::new(DelayModel::Linear)).unwrap();
        let report = check_feasible(&inst, &res).unwrap();
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        // capacity 3 - 3t/4 crosses the rate 2 at t = 4/3
        assert_eq!(v.start, Rat::new(4, 3));
        assert_eq!(v.end, rat!(2));
        assert_eq!(v.max_excess, Rat::new(1, 2));
    }

    #[test]
    fn queue_load_requires_point_queue_model() {
        let inst = capped_edge_instance(LoadKind::Queue, PwlFn::constant(rat!(1)));
        let h = WalkInflow::zero(&inst);
        let res = load(&inst, &h, &LoadingOptions::new(DelayModel::Linear)).unwrap();
        assert!(matches!(
            edge_load(&inst, &res, 0),
            Err(SideConstraintError::KindUnavailable { .. })
        ));
        let res = load(&inst, &h, &LoadingOptions::new(DelayModel::Vickrey)).unwrap();
        assert!(edge_load(&inst, &res, 0).is_ok());
    }

    #[test]
    fn feasible_flow_has_zero_penalty() {
        let inst = capped_edge_instance(LoadKind::Volume, PwlFn::constant(rat!(5)));
        let mut h = WalkInflow::zero(&inst);
        h.rates[0] = StepFn::constant(rat!(0), rat!(2), rat!(2));
        let res = load(&inst, &h, &LoadingOptions::new(DelayModel::Linear)).unwrap();
        let pen = penalty(&inst, &res).unwrap();
        assert_eq!(pen.edge[0], PwlFn::constant(rat!(0)));
        assert_eq!(pen.walk[0], PwlFn::constant(rat!(0)));
        let costs = effective_delay(&inst, &h, &res);
        let pen_costs = psi_lambda(&costs, &pen, &rat!(7));
        assert_eq!(pen_costs[0], costs[0]);
    }

    #[test]
    fn walk_penalty_composes_entry_times() {
        let inst = InstanceBuilder::new(rat!(0), rat!(4))
            .edge("e", "s", "t", rat!(1), ServiceRate::Finite(rat!(1)))
            .capacity(PwlFn::constant(Rat::new(1, 2)))
            .commodity(
                "c",
                "s",
                "t",
                Demand::FixedRate(StepFn::constant(rat!(0), rat!(1), rat!(1))),
            )
            .walk("c", "p", &["e"])
            .build()
            .unwrap();
        let mut h = WalkInflow::zero(&inst);
        h.rates[0] = StepFn::constant(rat!(0), rat!(1), rat!(1));
        let res = load(&inst, &h, &LoadingOptions::new(DelayModel::Vickrey)).unwrap();
        let pen = penalty(&inst, &res).unwrap();
        // the volume peaks at 1 at t=1, so excess peaks at 1/2
        assert_eq!(pen.edge[0].eval(&rat!(1)), Rat::new(1, 2));
        assert_eq!(pen.edge[0].eval(&Rat::new(1, 2)), Rat::new(0, 1));
        // a single leg entered at departure time: walk excess equals edge excess
        assert_eq!(pen.walk[0], pen.edge[0]);
        let costs = effective_delay(&inst, &h, &res);
        let pen_costs = psi_lambda(&costs, &pen, &rat!(2));
        assert_eq!(pen_costs[0].eval(&rat!(1)), costs[0].eval(&rat!(1)) + rat!(1));
    }

    #[test]
    fn traversal_excess_sees_ahead() {
        let inst = capped_edge_instance(LoadKind::Volume, PwlFn::constant(rat!(3)));
        let mut h = WalkInflow::zero(&inst);
        h.rates[0] = StepFn::constant(rat!(0), rat!(2), rat!(2));
        let res = load(&inst, &h, &LoadingOptions::new(DelayModel::Linear)).unwrap();
        let tilde = traversal_excess(&inst, &res).unwrap();
        let g = tilde[0].as_ref().unwrap();
        // entering at 0 traverses until 2 and meets the peak excess 1 at 2
        assert_eq!(g.eval(&rat!(0)), rat!(1));
        assert_eq!(g.eval(&rat!(1)), rat!(1));
        assert_eq!(g.eval(&rat!(2)), rat!(1));
        // after the peak the worst excess ahead is the current one
        assert_eq!(g.eval(&rat!(3)), rat!(0));
        assert_eq!(g.eval(&rat!(4)), rat!(-1));
        assert_eq!(g.eval(&rat!(6)), rat!(-3));
    }

    #[test]
    fn uncapacitated_edges_are_skipped() {
        let inst = InstanceBuilder::new(rat!(0), rat!(4))
            .edge("e", "s", "t", rat!(1), ServiceRate::Unbounded)
            .commodity(
                "c",
                "s",
                "t",
                Demand::FixedRate(StepFn::constant(rat!(0), rat!(1), rat!(5))),
            )
            .walk("c", "p", &["e"])
            .build()
            .unwrap();
        let mut h = WalkInflow::zero(&inst);
        h.rates[0] = StepFn::constant(rat!(0), rat!(1), rat!(5));
        let res = load(&inst, &h, &LoadingOptions::default()).unwrap();
        assert!(check_feasible(&inst, &res).unwrap().is_feasible());
        let tilde = traversal_excess(&inst, &res).unwrap();
        assert!(tilde[0].is_none());
    }
}
