//! Equilibrium verdicts, variational gaps, and the transshipment view of
//! flow differences.
//!
//! A flow is at equilibrium for a concept when no departing particle has a
//! strictly cheaper admissible alternative, comparing its walk cost at the
//! departure time against the alternative's cost at the shifted time. The
//! checks work on a time grid: candidate alternatives come from the grid
//! enumeration of deviations, and failed verdicts carry witnesses that can
//! be re-verified by direct evaluation. The gap reports measure optimality
//! of the routing against the linearized cost, either over the whole
//! discretized inflow space or along admissible deviation directions.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::deviations::{
    admissible, apply_deviation, enumerate_u, probe_slice, Admissibility, Concept, Deviation,
    DeviationError, GridSpec,
};
use crate::loading::{effective_delay, load, LoadingError, LoadingOptions};
use crate::model::{Demand, Instance, ModelError, WalkInflow};
use crate::sideconstraints::{check_feasible, FeasibilityViolation, SideConstraintError};
use crate::timefn::{integrate_step_times_pwl, PwlFn, Rat, StepFn};

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("commodity `{commodity}`: flows route different totals at time {time}")]
    DemandMismatch { commodity: String, time: Rat },
    #[error("the transshipment decomposition requires rate-fixed demand")]
    RateDemandRequired,
    #[error("an instance with elastic demand must be judged through its reduction")]
    ReductionRequired,
    #[error(transparent)]
    Deviation(#[from] DeviationError),
    #[error(transparent)]
    Loading(#[from] LoadingError),
    #[error(transparent)]
    Constraint(#[from] SideConstraintError),
}

/// A departing particle with a strictly cheaper alternative: flow on walk
/// `from` at `time` pays `cost_from`, while walk `to` entered at
/// `time + shift` would cost `cost_to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationWitness {
    pub from: usize,
    pub time: Rat,
    pub to: usize,
    pub shift: Rat,
    pub cost_from: Rat,
    pub cost_to: Rat,
    pub gap: Rat,
}

/// Grid verdict for one concept. A failed verdict lists either cheaper
/// alternatives or, when the flow itself violates a capacity, the
/// feasibility violations.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub concept: Concept,
    pub pass: bool,
    pub witnesses: Vec<DeviationWitness>,
    pub infeasibilities: Vec<FeasibilityViolation>,
    pub grid: GridSpec,
    pub tolerance: Rat,
}

/// Optimality of a flow's routing against its own (frozen) costs.
#[derive(Debug, Clone)]
pub struct GapReport {
    /// For [`vi_gap`]: current value minus the best value, nonnegative when
    /// the flow already routes everything as cheaply as the grid allows.
    /// For [`qvi_residual`]: the most negative directional value, zero when
    /// no admissible direction improves.
    pub gap: Rat,
    pub current_value: Rat,
    pub best_value: Rat,
    pub best_flow: WalkInflow,
}

/// Exact value of `sum over walks of the integral of cost * inflow`.
pub fn inner_product(costs: &[PwlFn], h: &WalkInflow) -> Rat {
    let mut acc = Rat::zero();
    for (rate, cost) in h.rates.iter().zip(costs) {
        if let Some((a, b)) = rate.support() {
            let (a, b) = (a.clone(), b.clone());
            acc += integrate_step_times_pwl(rate, cost, &a, &b);
        }
    }
    acc
}

/// The grid equilibrium check for a concept: the flow must be feasible for
/// it (capacities ignored only by the unconstrained concept), and at every
/// grid time, flow on a walk must not have a strictly cheaper admissible
/// alternative beyond the tolerance.
pub fn check_scde(
    inst: &Instance,
    h: &WalkInflow,
    concept: Concept,
    opts: &LoadingOptions,
    grid: &GridSpec,
    tol: &Rat,
) -> Result<CheckReport, EquilibriumError> {
    grid.validate(inst)?;
    let res = load(inst, h, opts)?;
    let mut report = CheckReport {
        concept,
        pass: true,
        witnesses: Vec::new(),
        infeasibilities: Vec::new(),
        grid: grid.clone(),
        tolerance: tol.clone(),
    };
    if concept != Concept::Unconstrained {
        let feasibility = check_feasible(inst, &res)?;
        if !feasibility.is_feasible() {
            report.pass = false;
            report.infeasibilities = feasibility.violations;
            return Ok(report);
        }
    }
    let costs = effective_delay(inst, h, &res);
    for p in 0..inst.walks.len() {
        for t in grid.times(inst) {
            let alternatives = enumerate_u(inst, h, &res, p, &t, concept, grid)?;
            if alternatives.is_empty() {
                continue;
            }
            let cost_from = costs[p].eval(&t);
            for (q, shift) in alternatives {
                let cost_to = costs[q].eval(&(&t + &shift));
                if cost_from > &cost_to + tol {
                    report.witnesses.push(DeviationWitness {
                        from: p,
                        time: t.clone(),
                        to: q,
                        shift,
                        cost_from: cost_from.clone(),
                        gap: &cost_from - &cost_to,
                        cost_to,
                    });
                }
            }
        }
    }
    report.pass = report.witnesses.is_empty();
    Ok(report)
}

/// The reduced instance together with the flow extended to it: routed
/// inflows carry over walk for walk, and each formerly elastic commodity's
/// unrouted volume goes onto its stay-home walk at a uniform rate.
pub fn reduce_elastic(inst: &Instance, h: &WalkInflow) -> (Instance, WalkInflow) {
    let reduced = inst.elastic_to_fixed_volume();
    let mut rh = WalkInflow::zero(&reduced);
    rh.rates[..h.rates.len()].clone_from_slice(&h.rates);
    for (ci, c) in inst.commodities.iter().enumerate() {
        let Demand::Elastic { volume, .. } = &c.demand else { continue };
        let missing = volume - h.commodity_volume(inst, ci);
        if !missing.is_positive() {
            continue;
        }
        let stay = reduced
            .walk_index(&format!("{}.stay-home", c.name))
            .expect("reduction adds a stay-home walk per elastic commodity");
        rh.rates[stay] = StepFn::constant(
            inst.horizon.0.clone(),
            inst.horizon.1.clone(),
            missing / inst.horizon_length(),
        );
    }
    (reduced, rh)
}

/// Equilibrium conditions without capacities. Rate-fixed commodities must
/// route each departure slot to a cheapest walk; volume-based commodities
/// must price all used slots at the commodity's threshold (the cheapest
/// used cost), with strictly cheaper slots filled to their walk's rate
/// bound. Elastic commodities are checked through their reduction, so
/// witnesses then refer to the reduced instance's walks.
pub fn check_unconstrained(
    inst: &Instance,
    h: &WalkInflow,
    opts: &LoadingOptions,
    grid: &GridSpec,
    tol: &Rat,
) -> Result<CheckReport, EquilibriumError> {
    if inst
        .commodities
        .iter()
        .any(|c| matches!(c.demand, Demand::Elastic { .. }))
    {
        let (reduced, rh) = reduce_elastic(inst, h);
        return check_unconstrained(&reduced, &rh, opts, grid, tol);
    }
    grid.validate(inst)?;
    let res = load(inst, h, opts)?;
    let costs = effective_delay(inst, h, &res);
    Ok(scan_cheapest_routing(inst, h, &costs, grid, tol))
}

/// The same conditions judged under caller-supplied walk costs, for flows
/// under penalized or otherwise modified cost operators. The costs must
/// line up with `inst.walks`; elastic commodities must already be reduced.
pub fn check_unconstrained_with_costs(
    inst: &Instance,
    h: &WalkInflow,
    costs: &[PwlFn],
    grid: &GridSpec,
    tol: &Rat,
) -> Result<CheckReport, EquilibriumError> {
    if inst
        .commodities
        .iter()
        .any(|c| matches!(c.demand, Demand::Elastic { .. }))
    {
        return Err(EquilibriumError::ReductionRequired);
    }
    grid.validate(inst)?;
    Ok(scan_cheapest_routing(inst, h, costs, grid, tol))
}

fn scan_cheapest_routing(
    inst: &Instance,
    h: &WalkInflow,
    costs: &[PwlFn],
    grid: &GridSpec,
    tol: &Rat,
) -> CheckReport {
    let mut witnesses = Vec::new();
    for (ci, c) in inst.commodities.iter().enumerate() {
        let walks: Vec<usize> = inst.walks_of(ci).map(|(i, _)| i).collect();
        match &c.demand {
            Demand::FixedRate(_) => {
                for t in grid.times(inst) {
                    for &p in &walks {
                        if !h.rates[p].eval(&t).is_positive() {
                            continue;
                        }
                        let cost_from = costs[p].eval(&t);
                        let (best, cost_to) = walks
                            .iter()
                            .map(|&q| (q, costs[q].eval(&t)))
                            .min_by(|a, b| a.1.cmp(&b.1))
                            .expect("commodities have walks");
                        if cost_from > &cost_to + tol {
                            witnesses.push(DeviationWitness {
                                from: p,
                                time: t.clone(),
                                to: best,
                                shift: Rat::zero(),
                                cost_from: cost_from.clone(),
                                gap: &cost_from - &cost_to,
                                cost_to,
                            });
                        }
                    }
                }
            }
            Demand::FixedVolume(_) => {
                let Some(threshold) = cheapest_used_cost(h, costs, &walks) else {
                    continue;
                };
                for &p in &walks {
                    for (a, b, _) in h.rates[p].segments() {
                        let (at, worst) = costs[p].max_over_with_arg(a, b);
                        if worst > &threshold + tol {
                            witnesses.push(DeviationWitness {
                                from: p,
                                time: at,
                                to: p,
                                shift: Rat::zero(),
                                cost_from: worst.clone(),
                                cost_to: threshold.clone(),
                                gap: worst - &threshold,
                            });
                        }
                    }
                    witnesses.extend(unfilled_cheap_slots(
                        inst,
                        h,
                        &costs[p],
                        p,
                        &threshold,
                        tol,
                    ));
                }
            }
            Demand::Elastic { .. } => unreachable!("reduced or rejected above"),
        }
    }
    CheckReport {
        concept: Concept::Unconstrained,
        pass: witnesses.is_empty(),
        witnesses,
        infeasibilities: Vec::new(),
        grid: grid.clone(),
        tolerance: tol.clone(),
    }
}

/// Cheapest cost over all intervals where one of the walks carries flow.
fn cheapest_used_cost(h: &WalkInflow, costs: &[PwlFn], walks: &[usize]) -> Option<Rat> {
    walks
        .iter()
        .flat_map(|&p| {
            h.rates[p]
                .segments()
                .map(|(a, b, _)| costs[p].min_over(a, b))
                .collect::<Vec<_>>()
        })
        .min()
}

/// Times where walk `p` is strictly cheaper than the threshold but not
/// filled to its rate bound.
fn unfilled_cheap_slots(
    inst: &Instance,
    h: &WalkInflow,
    cost: &PwlFn,
    p: usize,
    threshold: &Rat,
    tol: &Rat,
) -> Vec<DeviationWitness> {
    let margin = PwlFn::constant(threshold - tol).sub(cost);
    let mut out = Vec::new();
    for (lo, hi) in positive_spans(&margin, &inst.horizon.0, &inst.horizon.1) {
        let mut cuts = vec![lo.clone()];
        for t in h.rates[p].breakpoints() {
            if *t > lo && *t < hi {
                cuts.push(t.clone());
            }
        }
        cuts.push(hi.clone());
        for w in cuts.windows(2) {
            if w[0] == w[1] {
                continue;
            }
            let level = h.rates[p].eval(&w[0]);
            let filled = match &inst.walks[p].bound {
                Some(bound) => &(bound - &level) <= tol,
                None => false,
            };
            if !filled {
                out.push(DeviationWitness {
                    from: p,
                    time: w[0].clone(),
                    to: p,
                    shift: Rat::zero(),
                    cost_from: cost.eval(&w[0]),
                    cost_to: threshold.clone(),
                    gap: threshold - &cost.eval(&w[0]),
                });
            }
        }
    }
    out
}

/// Open spans inside `[lo, hi]` where `f` is strictly positive somewhere on
/// each span's interior.
fn positive_spans(f: &PwlFn, lo: &Rat, hi: &Rat) -> Vec<(Rat, Rat)> {
    let clamped = f.clamp_min_zero();
    let mut ts = vec![lo.clone()];
    for (t, _) in clamped.knots() {
        if t > lo && t < hi {
            ts.push(t.clone());
        }
    }
    ts.push(hi.clone());
    let mut out: Vec<(Rat, Rat)> = Vec::new();
    for i in 0..ts.len() - 1 {
        if clamped.eval(&ts[i]).is_positive() || clamped.eval(&ts[i + 1]).is_positive() {
            match out.last_mut() {
                Some((_, end)) if *end == ts[i] => *end = ts[i + 1].clone(),
                _ => out.push((ts[i].clone(), ts[i + 1].clone())),
            }
        }
    }
    out
}

/// The minimizing side of the gap computation.
pub enum FeasibleSet<'a> {
    /// The full discretized inflow space of the instance's demands.
    Lambda,
    /// A caller-supplied finite family of flows.
    Sampled(&'a [WalkInflow]),
}

/// How much cheaper the flow's routing could be against its own costs:
/// `gap = <cost, h> - min over alternatives of <cost, h'>`, with the
/// minimum taken slot-by-slot over the discretized inflow space, or over
/// the supplied family. Zero gap on the full space is the discrete
/// equilibrium condition.
pub fn vi_gap(
    inst: &Instance,
    h: &WalkInflow,
    set: FeasibleSet<'_>,
    opts: &LoadingOptions,
    grid: &GridSpec,
) -> Result<GapReport, EquilibriumError> {
    if inst
        .commodities
        .iter()
        .any(|c| matches!(c.demand, Demand::Elastic { .. }))
    {
        let (reduced, rh) = reduce_elastic(inst, h);
        return match set {
            FeasibleSet::Lambda => vi_gap(&reduced, &rh, FeasibleSet::Lambda, opts, grid),
            FeasibleSet::Sampled(family) => {
                let family: Vec<WalkInflow> =
                    family.iter().map(|f| reduce_elastic(inst, f).1).collect();
                vi_gap(&reduced, &rh, FeasibleSet::Sampled(&family), opts, grid)
            }
        };
    }
    grid.validate(inst)?;
    let res = load(inst, h, opts)?;
    let costs = effective_delay(inst, h, &res);
    let current_value = inner_product(&costs, h);
    let (best_value, best_flow) = match set {
        FeasibleSet::Sampled(family) => family
            .iter()
            .map(|f| (inner_product(&costs, f), f))
            .min_by(|a, b| a.0.cmp(&b.0))
            .map(|(v, f)| (v, f.clone()))
            .unwrap_or_else(|| (current_value.clone(), h.clone())),
        FeasibleSet::Lambda => {
            let best = best_response(inst, &costs, grid);
            (inner_product(&costs, &best), best)
        }
    };
    Ok(GapReport {
        gap: &current_value - &best_value,
        current_value,
        best_value,
        best_flow,
    })
}

/// Cheapest routing of every demand against frozen costs: rate-fixed
/// commodities send each grid slot's rate to a cheapest walk; volume-based
/// commodities fill the cheapest (walk, slot) pairs to the walks' rate
/// bounds until the volume is placed.
pub fn best_response(inst: &Instance, costs: &[PwlFn], grid: &GridSpec) -> WalkInflow {
    let times = grid.times(inst);
    let mut best = WalkInflow::zero(inst);
    for (ci, c) in inst.commodities.iter().enumerate() {
        let walks: Vec<usize> = inst.walks_of(ci).map(|(i, _)| i).collect();
        match &c.demand {
            Demand::FixedRate(r) => {
                for w in times.windows(2) {
                    let slot = r.restrict(&w[0], &w[1]);
                    if slot.is_zero() {
                        continue;
                    }
                    let cheapest = walks
                        .iter()
                        .map(|&p| (integrate_step_times_pwl(&slot, &costs[p], &w[0], &w[1]), p))
                        .min()
                        .expect("commodities have walks");
                    best.rates[cheapest.1] = best.rates[cheapest.1].add(&slot);
                }
            }
            Demand::FixedVolume(q) | Demand::Elastic { volume: q, .. } => {
                let mut slots: Vec<(Rat, usize, usize)> = Vec::new();
                for &p in &walks {
                    for (k, w) in times.windows(2).enumerate() {
                        let unit_cost = costs[p].integrate(&w[0], &w[1]) / (&w[1] - &w[0]);
                        slots.push((unit_cost, p, k));
                    }
                }
                slots.sort();
                let mut remaining = q.clone();
                for (_, p, k) in slots {
                    if !remaining.is_positive() {
                        break;
                    }
                    let (a, b) = (&times[k], &times[k + 1]);
                    let width = b - a;
                    let rate = match &inst.walks[p].bound {
                        Some(bound) => bound.clone().min(&remaining / &width),
                        None => &remaining / &width,
                    };
                    if !rate.is_positive() {
                        continue;
                    }
                    remaining -= &rate * &width;
                    best.rates[p] =
                        best.rates[p].add(&StepFn::constant(a.clone(), b.clone(), rate));
                }
            }
        }
    }
    best
}

/// The most negative directional cost along grid-admissible deviations:
/// for each departure slot and admissible alternative, the cost change of
/// rerouting the probe slice, minimized over all of them. Zero when no
/// admissible direction exists; negative values exhibit a strictly
/// improving deviation, returned as the best flow.
pub fn qvi_residual(
    inst: &Instance,
    h: &WalkInflow,
    concept: Concept,
    opts: &LoadingOptions,
    grid: &GridSpec,
) -> Result<GapReport, EquilibriumError> {
    grid.validate(inst)?;
    let res = load(inst, h, opts)?;
    let costs = effective_delay(inst, h, &res);
    let current_value = inner_product(&costs, h);
    let mut best: Option<(Rat, Deviation)> = None;
    for p in 0..inst.walks.len() {
        for t in grid.times(inst) {
            let alternatives = enumerate_u(inst, h, &res, p, &t, concept, grid)?;
            if alternatives.is_empty() {
                continue;
            }
            let gamma = grid
                .width_factors
                .iter()
                .find_map(|wf| {
                    probe_slice(h, p, &t, &(wf * &grid.step), &grid.rate_factors[0])
                })
                .expect("alternatives imply a probe with mass");
            let (glo, ghi) = {
                let (a, b) = gamma.support().expect("probe has mass");
                (a.clone(), b.clone())
            };
            let removed = integrate_step_times_pwl(&gamma, &costs[p], &glo, &ghi);
            for (q, shift) in alternatives {
                let shifted = gamma.shift(&shift);
                let added =
                    integrate_step_times_pwl(&shifted, &costs[q], &(&glo + &shift), &(&ghi + &shift));
                let value = &added - &removed;
                if best.as_ref().map(|(v, _)| &value < v).unwrap_or(true) {
                    best = Some((
                        value,
                        Deviation {
                            from: p,
                            to: q,
                            rate: gamma.clone(),
                            shift,
                        },
                    ));
                }
            }
        }
    }
    match best {
        Some((value, d)) if value.is_negative() => {
            debug_assert!(matches!(
                admissible(inst, h, &d, concept, &res)?,
                Admissibility::Yes
            ));
            let best_flow = apply_deviation(inst, h, &d)?;
            Ok(GapReport {
                best_value: &current_value + &value,
                gap: value,
                current_value,
                best_flow,
            })
        }
        _ => Ok(GapReport {
            gap: Rat::zero(),
            best_value: current_value.clone(),
            current_value,
            best_flow: h.clone(),
        }),
    }
}

/// Splits the difference of two flows with identical slot totals into
/// walk-to-walk moves: on each interval of the merged breakpoint grid,
/// every walk with surplus sends to every walk with deficit, proportionally
/// to the deficits. The moves are nonnegative and add up exactly to the
/// difference.
pub fn elementary_decomposition(
    inst: &Instance,
    h: &WalkInflow,
    h_star: &WalkInflow,
) -> Result<BTreeMap<(usize, usize), StepFn>, EquilibriumError> {
    type RateSegments = Vec<(Rat, Rat, Rat)>;
    let mut segments: BTreeMap<(usize, usize), RateSegments> = BTreeMap::new();
    for (ci, c) in inst.commodities.iter().enumerate() {
        if !matches!(c.demand, Demand::FixedRate(_)) {
            return Err(EquilibriumError::RateDemandRequired);
        }
        let walks: Vec<usize> = inst.walks_of(ci).map(|(i, _)| i).collect();
        let mut cuts: Vec<Rat> = Vec::new();
        for &w in &walks {
            cuts.extend(h.rates[w].breakpoints().iter().cloned());
            cuts.extend(h_star.rates[w].breakpoints().iter().cloned());
        }
        cuts.sort();
        cuts.dedup();
        for w in cuts.windows(2) {
            let t = &w[0];
            let sum_h: Rat = walks.iter().map(|&p| h.rates[p].eval(t)).sum();
            let sum_star: Rat = walks.iter().map(|&p| h_star.rates[p].eval(t)).sum();
            if sum_h != sum_star {
                return Err(EquilibriumError::DemandMismatch {
                    commodity: c.name.clone(),
                    time: t.clone(),
                });
            }
            let mut surpluses = Vec::new();
            let mut deficits = Vec::new();
            for &p in &walks {
                let diff = h.rates[p].eval(t) - h_star.rates[p].eval(t);
                if diff.is_positive() {
                    surpluses.push((p, diff));
                } else if diff.is_negative() {
                    deficits.push((p, -diff));
                }
            }
            let total: Rat = deficits.iter().map(|(_, d)| d.clone()).sum();
            if !total.is_positive() {
                continue;
            }
            for (p, s) in &surpluses {
                for (q, d) in &deficits {
                    segments
                        .entry((*p, *q))
                        .or_default()
                        .push((w[0].clone(), w[1].clone(), s * d / &total));
                }
            }
        }
    }
    Ok(segments
        .into_iter()
        .map(|(pq, segs)| (pq, StepFn::from_segments(&segs)))
        .filter(|(_, f)| !f.is_zero())
        .collect())
}

/// The instance with each commodity's walk set cut down to the named ones.
/// The caller asserts that the kept walks dominate the dropped ones; this
/// is recorded, not verified.
pub fn restrict_to_dominating(inst: &Instance, keep: &[&str]) -> Result<Instance, ModelError> {
    inst.restrict_to_dominating(keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loading::DelayModel;
    use crate::model::{InstanceBuilder, ServiceRate};
    use crate::rat;

    fn tol() -> Rat {
        Rat::new(1, 1_000_000)
    }

    fn rate_instance() -> Instance {
        InstanceBuilder::new(rat!(0), rat!(8))
            .edge("narrow", "s", "t", rat!(2), ServiceRate::Finite(rat!(2)))
            .edge("wide", "s", "t", rat!(3), ServiceRate::Unbounded)
            .commodity(
                "c",
                "s",
                "t",
                Demand::FixedRate(StepFn::constant(rat!(0), rat!(2), rat!(2))),
            )
            .walk("c", "via-narrow", &["narrow"])
            .walk("c", "via-wide", &["wide"])
            .build()
            .unwrap()
    }

    fn volume_instance() -> Instance {
        InstanceBuilder::new(rat!(0), rat!(8))
            .edge("a", "s", "t", rat!(1), ServiceRate::Unbounded)
            .edge("b", "s", "t", rat!(2), ServiceRate::Unbounded)
            .commodity("c", "s", "t", Demand::FixedVolume(rat!(4)))
            .walk_bounded("c", "pa", &["a"], rat!(2))
            .walk_bounded("c", "pb", &["b"], rat!(2))
            .build()
            .unwrap()
    }

    fn flow_on(inst: &Instance, walk: usize, rate: StepFn) -> WalkInflow {
        let mut h = WalkInflow::zero(inst);
        h.rates[walk] = rate;
        h
    }

    fn opts() -> LoadingOptions {
        LoadingOptions::new(DelayModel::Vickrey)
    }

    #[test]
    fn unconstrained_check_accepts_cheapest_routes() {
        let inst = rate_instance();
        let grid = GridSpec::with_step(rat!(1));
        let cheap = flow_on(&inst, 0, StepFn::constant(rat!(0), rat!(2), rat!(2)));
        let report = check_unconstrained(&inst, &cheap, &opts(), &grid, &tol()).unwrap();
        assert!(report.pass, "constant delay 2 beats 3: {:?}", report.witnesses);

        let dear = flow_on(&inst, 1, StepFn::constant(rat!(0), rat!(2), rat!(2)));
        let report = check_unconstrained(&inst, &dear, &opts(), &grid, &tol()).unwrap();
        assert!(!report.pass);
        let w = &report.witnesses[0];
        assert_eq!((w.from, w.to, &w.shift), (1, 0, &rat!(0)));
        assert_eq!(w.cost_from, rat!(3));
        assert_eq!(w.cost_to, rat!(2));
        assert_eq!(w.gap, rat!(1));
        // witnesses re-verify against a fresh loading
        let res = load(&inst, &dear, &opts()).unwrap();
        let costs = effective_delay(&inst, &dear, &res);
        assert_eq!(costs[w.from].eval(&w.time), w.cost_from);
        assert_eq!(costs[w.to].eval(&(&w.time + &w.shift)), w.cost_to);
    }

    #[test]
    fn volume_check_fills_cheap_slots_to_their_bounds() {
        let inst = volume_instance();
        let grid = GridSpec::with_step(rat!(1));
        let good = flow_on(&inst, 0, StepFn::constant(rat!(0), rat!(2), rat!(2)));
        let report = check_unconstrained(&inst, &good, &opts(), &grid, &tol()).unwrap();
        assert!(report.pass, "{:?}", report.witnesses);

        let bad = flow_on(&inst, 1, StepFn::constant(rat!(0), rat!(2), rat!(2)));
        let report = check_unconstrained(&inst, &bad, &opts(), &grid, &tol()).unwrap();
        assert!(!report.pass);
        // the cheaper walk is below the threshold 2 but empty, not at bound
        assert!(report.witnesses.iter().any(|w| w.from == 0 && w.gap == rat!(1)));
    }

    #[test]
    fn elastic_checks_reduce_to_volume_demand() {
        let theta = PwlFn::new(vec![(rat!(0), rat!(3)), (rat!(4), rat!(1))]).unwrap();
        let inst = InstanceBuilder::new(rat!(0), rat!(8))
            .edge("e", "s", "t", rat!(1), ServiceRate::Unbounded)
            .commodity(
                "c",
                "s",
                "t",
                Demand::Elastic {
                    volume: rat!(4),
                    inverse_demand: theta,
                },
            )
            .walk_bounded("c", "p", &["e"], rat!(2))
            .build()
            .unwrap();
        let grid = GridSpec::with_step(rat!(1));
        let all = flow_on(&inst, 0, StepFn::constant(rat!(0), rat!(2), rat!(2)));
        let report = check_unconstrained(&inst, &all, &opts(), &grid, &tol()).unwrap();
        assert!(report.pass, "{:?}", report.witnesses);

        let half = flow_on(&inst, 0, StepFn::constant(rat!(0), rat!(2), rat!(1)));
        let report = check_unconstrained(&inst, &half, &opts(), &grid, &tol()).unwrap();
        assert!(!report.pass);
        // the stay-home walk (appended by the reduction) costs 2 above the
        // threshold 1 set by the road
        assert!(report.witnesses.iter().any(|w| w.from == 1 && w.gap == rat!(1)));
    }

    #[test]
    fn vi_gap_agrees_with_unconstrained_check() {
        let grid = GridSpec::with_step(rat!(1));
        for (inst, pass_flow, fail_flow, fail_value) in [
            (
                rate_instance(),
                flow_on(&rate_instance(), 0, StepFn::constant(rat!(0), rat!(2), rat!(2))),
                flow_on(&rate_instance(), 1, StepFn::constant(rat!(0), rat!(2), rat!(2))),
                rat!(12),
            ),
            (
                volume_instance(),
                flow_on(&volume_instance(), 0, StepFn::constant(rat!(0), rat!(2), rat!(2))),
                flow_on(&volume_instance(), 1, StepFn::constant(rat!(0), rat!(2), rat!(2))),
                rat!(8),
            ),
        ] {
            let gap = vi_gap(&inst, &pass_flow, FeasibleSet::Lambda, &opts(), &grid).unwrap();
            assert_eq!(gap.gap, rat!(0));
            let gap = vi_gap(&inst, &fail_flow, FeasibleSet::Lambda, &opts(), &grid).unwrap();
            assert_eq!(gap.gap, rat!(4));
            assert_eq!(gap.current_value, fail_value);
            assert_eq!(gap.best_value, &fail_value - &rat!(4));
        }
    }

    #[test]
    fn sampled_gap_compares_supplied_family() {
        let inst = rate_instance();
        let grid = GridSpec::with_step(rat!(1));
        let h1 = flow_on(&inst, 1, StepFn::constant(rat!(0), rat!(2), rat!(2)));
        let h2 = flow_on(&inst, 0, StepFn::constant(rat!(0), rat!(2), rat!(2)));
        let family = [h1.clone(), h2.clone()];
        let gap = vi_gap(&inst, &h1, FeasibleSet::Sampled(&family), &opts(), &grid).unwrap();
        assert_eq!(gap.gap, rat!(4));
        assert_eq!(gap.best_flow, h2);
    }

    #[test]
    fn qvi_finds_improving_directions() {
        let inst = rate_instance();
        let grid = GridSpec::with_step(rat!(1));
        let dear = flow_on(&inst, 1, StepFn::constant(rat!(0), rat!(2), rat!(2)));
        let report = qvi_residual(&inst, &dear, Concept::Unconstrained, &opts(), &grid).unwrap();
        // the best probe moves rate 1/5 over [3/4, 5/4] from cost 3 to cost 2
        assert_eq!(report.gap, Rat::new(-1, 10));
        assert_eq!(report.best_value, &report.current_value + &report.gap);
        assert_ne!(report.best_flow, dear);

        let cheap = flow_on(&inst, 0, StepFn::constant(rat!(0), rat!(2), rat!(2)));
        let report = qvi_residual(&inst, &cheap, Concept::Unconstrained, &opts(), &grid).unwrap();
        assert!(!report.gap.is_negative());
    }

    #[test]
    fn feasibility_precedes_equilibrium() {
        let inst = InstanceBuilder::new(rat!(0), rat!(8))
            .edge("e", "s", "t", rat!(2), ServiceRate::Finite(rat!(2)))
            .capacity(PwlFn::constant(rat!(3)))
            .edge("f", "s", "t", rat!(6), ServiceRate::Unbounded)
            .commodity(
                "c",
                "s",
                "t",
                Demand::FixedRate(StepFn::constant(rat!(0), rat!(2), rat!(2))),
            )
            .walk("c", "pe", &["e"])
            .walk("c", "pf", &["f"])
            .build()
            .unwrap();
        let h = flow_on(&inst, 0, StepFn::constant(rat!(0), rat!(2), rat!(2)));
        let opts = LoadingOptions::new(DelayModel::Linear);
        let grid = GridSpec::with_step(rat!(1));
        let report = check_scde(&inst, &h, Concept::Global, &opts, &grid, &tol()).unwrap();
        assert!(!report.pass);
        assert!(report.witnesses.is_empty());
        assert_eq!(report.infeasibilities[0].edge, "e");
        // the unconstrained concept ignores the capacity and judges costs:
        // delay reaches at most 4 while the alternative costs 6
        let report = check_scde(&inst, &h, Concept::Unconstrained, &opts, &grid, &tol()).unwrap();
        assert!(report.pass, "{:?}", report.witnesses);
    }

    #[test]
    fn scde_witnesses_point_to_cheaper_alternatives() {
        let inst = rate_instance();
        let grid = GridSpec::with_step(rat!(1));
        let dear = flow_on(&inst, 1, StepFn::constant(rat!(0), rat!(2), rat!(2)));
        let report =
            check_scde(&inst, &dear, Concept::StrongLp, &opts(), &grid, &tol()).unwrap();
        assert!(!report.pass);
        let w = &report.witnesses[0];
        assert_eq!((w.from, w.to), (1, 0));
        assert_eq!(w.gap, rat!(1));
        let cheap = flow_on(&inst, 0, StepFn::constant(rat!(0), rat!(2), rat!(2)));
        let report =
            check_scde(&inst, &cheap, Concept::StrongLp, &opts(), &grid, &tol()).unwrap();
        assert!(report.pass, "{:?}", report.witnesses);
    }

    #[test]
    fn decomposition_matches_hand_split() {
        let inst = InstanceBuilder::new(rat!(0), rat!(4))
            .edge("x", "s", "t", rat!(1), ServiceRate::Unbounded)
            .edge("y", "s", "t", rat!(1), ServiceRate::Unbounded)
            .edge("z", "s", "t", rat!(1), ServiceRate::Unbounded)
            .commodity(
                "c",
                "s",
                "t",
                Demand::FixedRate(StepFn::constant(rat!(0), rat!(1), rat!(2))),
            )
            .walk("c", "px", &["x"])
            .walk("c", "py", &["y"])
            .walk("c", "pz", &["z"])
            .build()
            .unwrap();
        let h = flow_on(&inst, 0, StepFn::constant(rat!(0), rat!(1), rat!(2)));
        let mut h_star = WalkInflow::zero(&inst);
        h_star.rates[1] = StepFn::constant(rat!(0), rat!(1), rat!(1));
        h_star.rates[2] = StepFn::constant(rat!(0), rat!(1), rat!(1));
        let g = elementary_decomposition(&inst, &h, &h_star).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[&(0, 1)], StepFn::constant(rat!(0), rat!(1), rat!(1)));
        assert_eq!(g[&(0, 2)], StepFn::constant(rat!(0), rat!(1), rat!(1)));
        // the moves add up to the flow difference on every walk
        for p in 0..3 {
            let mut diff = h.rates[p].sub(&h_star.rates[p]);
            for ((from, to), f) in &g {
                if *from == p {
                    diff = diff.sub(f);
                }
                if *to == p {
                    diff = diff.add(f);
                }
            }
            assert!(diff.is_zero(), "walk {p} keeps a residual {diff:?}");
        }
        assert!(elementary_decomposition(&inst, &h, &h).unwrap().is_empty());

        let mut short = WalkInflow::zero(&inst);
        short.rates[1] = StepFn::constant(rat!(0), rat!(1), rat!(1));
        assert!(matches!(
            elementary_decomposition(&inst, &h, &short),
            Err(EquilibriumError::DemandMismatch { .. })
        ));
    }

    #[test]
    fn restriction_delegates_to_instance() {
        let inst = rate_instance();
        let only = restrict_to_dominating(&inst, &["via-narrow"]).unwrap();
        assert_eq!(only.walks.len(), 1);
        assert_eq!(only.walks[0].name, "via-narrow");
    }
}
