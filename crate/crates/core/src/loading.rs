//! Exact network loading: pushes walk inflows through the network and
//! produces edge flows, volumes, queues, arrival-time maps and walk costs.
//!
//! The loader is event driven. Time advances in windows on which every rate
//! in the network is constant; a window ends at the next inflow breakpoint,
//! the next boundary of an already scheduled exit interval, the first exit
//! of any parcel currently being created, or a queue running empty. Each
//! window of inflow into an edge becomes a parcel whose exit interval is
//! fixed at entry from the edge's current state, so first-in first-out order
//! and exact conservation hold by construction.
//!
//! Two delay models are supported. Under [`DelayModel::Linear`] an edge delays
//! a particle entering at time `t` by `tau + volume(t) / rate`; under
//! [`DelayModel::Vickrey`] by `tau + queue(t) / rate`, where the queue drains
//! at the service rate. Edges with unbounded service are pure shifts by `tau`.
//! All arithmetic is rational, so results are exact.

use std::collections::BTreeSet;
use std::ops::Bound::{Excluded, Unbounded};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CostSpec, Demand, Instance, ServiceRate, WalkInflow};
use crate::timefn::{PwlFn, Rat, StepFn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayModel {
    Vickrey,
    Linear,
}

impl std::str::FromStr for DelayModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vickrey" => Ok(DelayModel::Vickrey),
            "linear" => Ok(DelayModel::Linear),
            other => Err(format!("unknown delay model `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadingOptions {
    pub model: DelayModel,
    /// Safety cap on simulation windows.
    pub max_events: usize,
}

impl LoadingOptions {
    pub fn new(model: DelayModel) -> Self {
        LoadingOptions {
            model,
            max_events: 1_000_000,
        }
    }
}

impl Default for LoadingOptions {
    fn default() -> Self {
        LoadingOptions::new(DelayModel::Vickrey)
    }
}

#[derive(Debug, Error)]
pub enum LoadingError {
    #[error("edge `{edge}`: exit order would violate entry order at time {time}")]
    NonFifoDetected { edge: String, time: Rat },
    #[error("simulation exceeded {0} windows")]
    EventLimit(usize),
}

/// Flow measures of one edge over the whole simulation.
#[derive(Debug, Clone)]
pub struct EdgeLoading {
    pub inflow: StepFn,
    pub outflow: StepFn,
    pub cumulative_inflow: PwlFn,
    pub cumulative_outflow: PwlFn,
    /// Particles currently on the edge: cumulative inflow minus outflow.
    pub volume: PwlFn,
    /// Particles entered by `t` that will not have left by `t + tau`.
    pub queue: PwlFn,
}

/// Flow of one walk over one of its edges.
#[derive(Debug, Clone)]
pub struct LegLoading {
    pub inflow: StepFn,
    pub outflow: StepFn,
}

#[derive(Debug, Clone)]
pub struct LoadingResult {
    pub model: DelayModel,
    pub edges: Vec<EdgeLoading>,
    /// Indexed `[walk][leg]`, legs in walk order.
    pub legs: Vec<Vec<LegLoading>>,
    /// `arrivals[p][j]` maps a departure time to the entry time into leg `j`;
    /// the last entry is the arrival at the end of the walk. Exact on `span`.
    pub arrivals: Vec<Vec<PwlFn>>,
    /// Walk travel time as a function of the departure time.
    pub delays: Vec<PwlFn>,
    /// Per-edge map from entry time to exit time, exact on `span`.
    pub exit_maps: Vec<PwlFn>,
    /// Interval on which the arrival maps and delays are exact.
    pub span: (Rat, Rat),
}

impl LoadingResult {
    pub fn exit_time(&self, walk: usize) -> &PwlFn {
        self.arrivals[walk].last().expect("walks are non-empty")
    }
}

type LegKey = (usize, usize);

/// One scheduled exit interval with its per-leg rates.
#[derive(Debug, Clone)]
struct Parcel {
    start: Rat,
    end: Rat,
    rates: Vec<(LegKey, Rat)>,
}

impl Parcel {
    fn aggregate(&self) -> Rat {
        self.rates.iter().map(|(_, r)| r).sum()
    }

    fn rate_of(&self, key: LegKey) -> Rat {
        self.rates
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, r)| r.clone())
            .unwrap_or_else(Rat::zero)
    }
}

struct EdgeSim {
    parcels: Vec<Parcel>,
    /// Index of the first parcel with `end > t`.
    active: usize,
    /// Volume (linear model) or queue (point-queue model); meaningful only
    /// for edges with a finite service rate.
    state: Rat,
    last_exit_end: Option<Rat>,
}

impl EdgeSim {
    fn active_parcel(&self, t: &Rat) -> Option<&Parcel> {
        let p = self.parcels.get(self.active)?;
        (p.start <= *t && *t < p.end).then_some(p)
    }

    fn outflow_rate(&self, t: &Rat) -> Rat {
        self.active_parcel(t)
            .map(|p| p.aggregate())
            .unwrap_or_else(Rat::zero)
    }
}

/// Loads `h` onto the network and returns all flow measures, arrival maps and
/// delays. Works for any inflow, feasible or not; side constraints are
/// evaluated separately.
pub fn load(
    inst: &Instance,
    h: &WalkInflow,
    opts: &LoadingOptions,
) -> Result<LoadingResult, LoadingError> {
    let mut events: BTreeSet<Rat> = BTreeSet::new();
    for f in &h.rates {
        for b in f.breakpoints() {
            events.insert(b.clone());
        }
    }
    let mut sims: Vec<EdgeSim> = inst
        .edges
        .iter()
        .map(|_| EdgeSim {
            parcels: Vec::new(),
            active: 0,
            state: Rat::zero(),
            last_exit_end: None,
        })
        .collect();
    let span_lo = events
        .iter()
        .next()
        .cloned()
        .unwrap_or_else(Rat::zero)
        .min(inst.horizon.0.clone())
        .min(Rat::zero());
    let mut sim_end = inst.horizon.1.clone();

    let mut t = match events.iter().next() {
        Some(first) => first.clone(),
        None => inst.horizon.1.clone(),
    };
    let mut windows = 0usize;
    loop {
        windows += 1;
        if windows > opts.max_events {
            return Err(LoadingError::EventLimit(opts.max_events));
        }
        for sim in &mut sims {
            while sim.active < sim.parcels.len() && sim.parcels[sim.active].end <= t {
                sim.active += 1;
            }
        }
        // Current inflow rate of every leg: the walk inflow for the first
        // leg, the upstream leg's scheduled exit rate for the rest.
        let mut leg_rate: Vec<Vec<Rat>> = Vec::with_capacity(inst.walks.len());
        for (w, walk) in inst.walks.iter().enumerate() {
            let mut rates = Vec::with_capacity(walk.edges.len());
            for j in 0..walk.edges.len() {
                let r = if j == 0 {
                    h.rates[w].eval(&t)
                } else {
                    let upstream = walk.edges[j - 1];
                    sims[upstream]
                        .active_parcel(&t)
                        .map(|p| p.rate_of((w, j - 1)))
                        .unwrap_or_else(Rat::zero)
                };
                rates.push(r);
            }
            leg_rate.push(rates);
        }
        let mut edge_in: Vec<Vec<(LegKey, Rat)>> = vec![Vec::new(); inst.edges.len()];
        for (w, walk) in inst.walks.iter().enumerate() {
            for (j, &e) in walk.edges.iter().enumerate() {
                if leg_rate[w][j].is_positive() {
                    edge_in[e].push(((w, j), leg_rate[w][j].clone()));
                }
            }
        }

        let mut u: Option<Rat> = events.range((Excluded(&t), Unbounded)).next().cloned();
        let min_cap = |u: Option<Rat>, cap: Rat| -> Option<Rat> {
            Some(match u {
                Some(v) => v.min(cap),
                None => cap,
            })
        };
        for (e, edge) in inst.edges.iter().enumerate() {
            let a: Rat = edge_in[e].iter().map(|(_, r)| r).sum();
            if a.is_positive() {
                let first_exit = match (&edge.service_rate, opts.model) {
                    (ServiceRate::Unbounded, _) => &t + &edge.free_flow_time,
                    (ServiceRate::Finite(nu), _) => {
                        &t + &edge.free_flow_time + &sims[e].state / nu
                    }
                };
                u = min_cap(u, first_exit);
            }
            if opts.model == DelayModel::Vickrey {
                if let ServiceRate::Finite(nu) = &edge.service_rate {
                    if sims[e].state.is_positive() && a < *nu {
                        u = min_cap(u, &t + &sims[e].state / (nu - &a));
                    }
                }
            }
        }
        let Some(u) = u else {
            break;
        };
        debug_assert!(u > t, "windows must advance");

        for (e, edge) in inst.edges.iter().enumerate() {
            let b = sims[e].outflow_rate(&t);
            let a: Rat = edge_in[e].iter().map(|(_, r)| r).sum();
            if a.is_positive() {
                // Exit interval and rate scale of the parcel entering on [t, u).
                let (start, end, scale) = match (&edge.service_rate, opts.model) {
                    (ServiceRate::Unbounded, _) => {
                        (&t + &edge.free_flow_time, &u + &edge.free_flow_time, Rat::one())
                    }
                    (ServiceRate::Finite(nu), DelayModel::Linear) => {
                        let slope = Rat::one() + (&a - &b) / nu;
                        if !slope.is_positive() {
                            return Err(LoadingError::NonFifoDetected {
                                edge: edge.id.clone(),
                                time: t.clone(),
                            });
                        }
                        let start = &t + &edge.free_flow_time + &sims[e].state / nu;
                        let state_u = &sims[e].state + (&a - &b) * (&u - &t);
                        let end = &u + &edge.free_flow_time + state_u / nu;
                        (start, end, slope)
                    }
                    (ServiceRate::Finite(nu), DelayModel::Vickrey) => {
                        if sims[e].state.is_positive() || a > *nu {
                            let start = &t + &edge.free_flow_time + &sims[e].state / nu;
                            let state_u = &sims[e].state + (&a - nu) * (&u - &t);
                            let end = &u + &edge.free_flow_time + state_u / nu;
                            (start, end, &a / nu)
                        } else {
                            (&t + &edge.free_flow_time, &u + &edge.free_flow_time, Rat::one())
                        }
                    }
                };
                if let Some(last_end) = &sims[e].last_exit_end {
                    if start < *last_end {
                        return Err(LoadingError::NonFifoDetected {
                            edge: edge.id.clone(),
                            time: t.clone(),
                        });
                    }
                }
                let rates: Vec<(LegKey, Rat)> = edge_in[e]
                    .iter()
                    .map(|(k, r)| (*k, r / &scale))
                    .collect();
                if end > start {
                    sim_end = sim_end.max(end.clone());
                    events.insert(start.clone());
                    events.insert(end.clone());
                    let sim = &mut sims[e];
                    let merged = match sim.parcels.last_mut() {
                        Some(last) if last.end == start && last.rates == rates => {
                            last.end = end.clone();
                            true
                        }
                        _ => false,
                    };
                    if !merged {
                        sim.parcels.push(Parcel {
                            start,
                            end: end.clone(),
                            rates,
                        });
                    }
                    sim.last_exit_end = Some(end);
                }
            }
            // State update over the committed window.
            let dt = &u - &t;
            match (&edge.service_rate, opts.model) {
                (ServiceRate::Unbounded, _) => {}
                (ServiceRate::Finite(_), DelayModel::Linear) => {
                    sims[e].state += (&a - &b) * &dt;
                    debug_assert!(!sims[e].state.is_negative(), "edge volume stays nonnegative");
                }
                (ServiceRate::Finite(nu), DelayModel::Vickrey) => {
                    if sims[e].state.is_positive() || a > *nu {
                        sims[e].state += (&a - nu) * &dt;
                        debug_assert!(!sims[e].state.is_negative(), "queue stays nonnegative");
                    }
                }
            }
        }
        events = events.split_off(&u);
        events.remove(&u);
        t = u;
    }

    assemble(inst, h, opts.model, &sims, span_lo, sim_end)
}

fn assemble(
    inst: &Instance,
    h: &WalkInflow,
    model: DelayModel,
    sims: &[EdgeSim],
    span_lo: Rat,
    sim_end: Rat,
) -> Result<LoadingResult, LoadingError> {
    let mut leg_out_segs: Vec<Vec<Vec<(Rat, Rat, Rat)>>> = inst
        .walks
        .iter()
        .map(|w| vec![Vec::new(); w.edges.len()])
        .collect();
    for sim in sims {
        for p in &sim.parcels {
            for ((w, j), r) in &p.rates {
                leg_out_segs[*w][*j].push((p.start.clone(), p.end.clone(), r.clone()));
            }
        }
    }
    let mut legs: Vec<Vec<LegLoading>> = Vec::with_capacity(inst.walks.len());
    for (w, walk) in inst.walks.iter().enumerate() {
        let mut walk_legs: Vec<LegLoading> = Vec::with_capacity(walk.edges.len());
        for j in 0..walk.edges.len() {
            let inflow = if j == 0 {
                h.rates[w].clone()
            } else {
                walk_legs[j - 1].outflow.clone()
            };
            let outflow = StepFn::from_segments(&leg_out_segs[w][j]);
            debug_assert_eq!(inflow.total(), outflow.total(), "leg conserves volume");
            walk_legs.push(LegLoading { inflow, outflow });
        }
        legs.push(walk_legs);
    }

    let mut edges: Vec<EdgeLoading> = Vec::with_capacity(inst.edges.len());
    for (e, edge) in inst.edges.iter().enumerate() {
        let mut inflow = StepFn::zero();
        let mut outflow = StepFn::zero();
        for (w, walk) in inst.walks.iter().enumerate() {
            for (j, &ej) in walk.edges.iter().enumerate() {
                if ej == e {
                    inflow = inflow.add(&legs[w][j].inflow);
                    outflow = outflow.add(&legs[w][j].outflow);
                }
            }
        }
        let cumulative_inflow = inflow.cumulative();
        let cumulative_outflow = outflow.cumulative();
        let volume = cumulative_inflow.sub(&cumulative_outflow);
        let queue = cumulative_inflow.sub(
            &cumulative_outflow.shift_time(&-edge.free_flow_time.clone()),
        );
        debug_assert!(!volume.global_min().is_negative(), "volume stays nonnegative");
        debug_assert!(!queue.global_min().is_negative(), "queue stays nonnegative");
        edges.push(EdgeLoading {
            inflow,
            outflow,
            cumulative_inflow,
            cumulative_outflow,
            volume,
            queue,
        });
    }

    let max_free_flow: Rat = inst
        .walks
        .iter()
        .map(|w| {
            w.edges
                .iter()
                .map(|&e| inst.edges[e].free_flow_time.clone())
                .sum::<Rat>()
        })
        .max()
        .unwrap_or_else(Rat::zero);
    let span_hi = sim_end.max(inst.horizon.1.clone()) + max_free_flow + Rat::one();
    let span = (span_lo, span_hi);

    let exit_maps: Vec<PwlFn> = inst
        .edges
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let state = match model {
                DelayModel::Linear => &edges[e].volume,
                DelayModel::Vickrey => &edges[e].queue,
            };
            exit_time_map(edge, state, &span)
        })
        .collect();

    let identity = PwlFn::identity_on(span.0.clone(), span.1.clone());
    let mut arrivals: Vec<Vec<PwlFn>> = Vec::with_capacity(inst.walks.len());
    let mut delays: Vec<PwlFn> = Vec::with_capacity(inst.walks.len());
    for walk in &inst.walks {
        let mut maps = Vec::with_capacity(walk.edges.len() + 1);
        maps.push(identity.clone());
        for &e in &walk.edges {
            let next = exit_maps[e].compose(maps.last().unwrap());
            maps.push(next);
        }
        delays.push(maps.last().unwrap().sub(&identity));
        arrivals.push(maps);
    }

    Ok(LoadingResult {
        model,
        edges,
        legs,
        arrivals,
        delays,
        exit_maps,
        span,
    })
}

/// The map from entry time to exit time of one edge, exact on `span`.
fn exit_time_map(edge: &crate::model::Edge, state: &PwlFn, span: &(Rat, Rat)) -> PwlFn {
    let mut grid: BTreeSet<Rat> = BTreeSet::new();
    grid.insert(span.0.clone());
    grid.insert(span.1.clone());
    if let ServiceRate::Finite(_) = edge.service_rate {
        for (t, _) in state.knots() {
            if *t > span.0 && *t < span.1 {
                grid.insert(t.clone());
            }
        }
    }
    let knots = grid
        .into_iter()
        .map(|t| {
            let v = match &edge.service_rate {
                ServiceRate::Unbounded => &t + &edge.free_flow_time,
                ServiceRate::Finite(nu) => &t + &edge.free_flow_time + state.eval(&t) / nu,
            };
            (t, v)
        })
        .collect();
    PwlFn::new(knots).expect("grid is increasing")
}

/// Walk costs as functions of the departure time: the travel time, plus the
/// arrival penalty when one is configured. Stay-home walks instead cost their
/// commodity's inverse demand at the routed volume, constant in time.
pub fn effective_delay(inst: &Instance, h: &WalkInflow, loading: &LoadingResult) -> Vec<PwlFn> {
    inst.walks
        .iter()
        .enumerate()
        .map(|(w, walk)| {
            if let Some(cost) = &walk.bypass_cost {
                let routed: Rat = inst
                    .walks_of(walk.commodity)
                    .filter(|(_, other)| other.bypass_cost.is_none())
                    .map(|(i, _)| h.rates[i].total())
                    .sum();
                return PwlFn::constant(cost.eval(&routed));
            }
            match &inst.cost {
                CostSpec::TravelTime => loading.delays[w].clone(),
                CostSpec::SchedulePenalty { target, penalty } => {
                    let lateness = loading.exit_time(w).add_const(&-target.clone());
                    loading.delays[w].add(&penalty.compose(&lateness))
                }
            }
        })
        .collect()
}

/// Caps every walk cost at `m`, the standard device for keeping costs finite
/// on instances where some deviations are arbitrarily bad.
pub fn truncate_costs(costs: &[PwlFn], m: &Rat) -> Vec<PwlFn> {
    costs.iter().map(|c| c.truncate_above(m)).collect()
}

/// An inflow-independent scale for cost caps: the largest free-flow walk
/// cost, raised by the largest penalty and inverse-demand values where those
/// apply.
pub fn free_flow_cost_bound(inst: &Instance) -> Rat {
    let mut bound = Rat::zero();
    for walk in &inst.walks {
        let total: Rat = walk
            .edges
            .iter()
            .map(|&e| inst.edges[e].free_flow_time.clone())
            .sum();
        bound = bound.max(total);
    }
    if let CostSpec::SchedulePenalty { penalty, .. } = &inst.cost {
        bound += penalty.global_max();
    }
    for c in &inst.commodities {
        if let Demand::Elastic { inverse_demand, .. } = &c.demand {
            bound = bound.max(inverse_demand.global_max());
        }
    }
    for w in &inst.walks {
        if let Some(cost) = &w.bypass_cost {
            bound = bound.max(cost.global_max());
        }
    }
    bound
}

/// Exact bookkeeping audit of a loading result. Checks that each walk's
/// inflow enters its first leg unchanged, that flow leaving a leg enters the
/// next one, that edge flows are the sums of their leg flows, that edge
/// volumes stay nonnegative, and that every particle that enters an edge
/// eventually leaves it. Returns the first broken identity.
pub fn audit_conservation(
    inst: &Instance,
    h: &WalkInflow,
    res: &LoadingResult,
) -> Result<(), String> {
    for (w, walk) in inst.walks.iter().enumerate() {
        if !res.legs[w][0].inflow.sub(&h.rates[w]).is_zero() {
            return Err(format!(
                "walk `{}` does not feed its inflow into its first edge",
                walk.name
            ));
        }
        for j in 1..walk.edges.len() {
            if !res.legs[w][j].inflow.sub(&res.legs[w][j - 1].outflow).is_zero() {
                return Err(format!(
                    "walk `{}` loses flow between legs {} and {}",
                    walk.name,
                    j - 1,
                    j
                ));
            }
        }
    }
    for (e, edge) in inst.edges.iter().enumerate() {
        let mut leg_in = StepFn::zero();
        let mut leg_out = StepFn::zero();
        for (w, walk) in inst.walks.iter().enumerate() {
            for (j, &leg_edge) in walk.edges.iter().enumerate() {
                if leg_edge == e {
                    leg_in = leg_in.add(&res.legs[w][j].inflow);
                    leg_out = leg_out.add(&res.legs[w][j].outflow);
                }
            }
        }
        let loading = &res.edges[e];
        if !loading.inflow.sub(&leg_in).is_zero() {
            return Err(format!(
                "edge `{}` inflow differs from the sum of its leg inflows",
                edge.id
            ));
        }
        if !loading.outflow.sub(&leg_out).is_zero() {
            return Err(format!(
                "edge `{}` outflow differs from the sum of its leg outflows",
                edge.id
            ));
        }
        if loading.inflow.total() != loading.outflow.total() {
            return Err(format!(
                "edge `{}` swallows volume: {} in, {} out",
                edge.id,
                loading.inflow.total(),
                loading.outflow.total()
            ));
        }
        if loading.volume.global_min().is_negative() {
            return Err(format!("edge `{}` volume goes negative", edge.id));
        }
    }
    let injected: Rat = h.rates.iter().map(StepFn::total).sum();
    let arrived: Rat = res
        .legs
        .iter()
        .map(|legs| legs.last().expect("walks are non-empty").outflow.total())
        .sum();
    if injected != arrived {
        return Err(format!(
            "{injected} units departed but {arrived} arrived"
        ));
    }
    Ok(())
}
