//! Walk-to-walk flow deviations and the rules deciding which of them the
//! capacities allow.
//!
//! A deviation moves part of one walk's inflow onto another walk of the same
//! commodity, optionally retiming the moved slice by a fixed shift. The
//! admissibility concepts interpret the capacities differently along two
//! axes: checks at edge-entry instants against checks over whole traversal
//! intervals, and checks judged under the current flow against checks judged
//! after rerouting. The grid enumeration approximates the set of viable
//! alternatives near a departure time by probing a descending family of
//! slice widths and rates.

use thiserror::Error;

use serde::{Deserialize, Serialize};

use crate::loading::{load, LoadingError, LoadingOptions, LoadingResult};
use crate::model::{Demand, Instance, WalkInflow};
use crate::sideconstraints::{
    check_feasible, edge_load, traversal_excess, EdgeLoad, SideConstraintError,
};
use crate::timefn::{PwlFn, Rat, StepFn};

#[derive(Debug, Error)]
pub enum DeviationError {
    #[error("deviation invariant violated: {0}")]
    InvariantViolated(String),
    #[error("grid specification invalid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Loading(#[from] LoadingError),
    #[error(transparent)]
    Constraint(#[from] SideConstraintError),
}

/// Moves the rate `rate` of walk `from`'s inflow onto walk `to` of the same
/// commodity; the moved slice departs `shift` later than it originally did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deviation {
    pub from: usize,
    pub to: usize,
    pub rate: StepFn,
    pub shift: Rat,
}

/// How the capacities restrict which deviations particles may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Concept {
    /// Capacities are ignored; every valid deviation is allowed.
    Unconstrained,
    /// The whole rerouted flow must remain feasible.
    Global,
    /// The target walk must be strictly below capacity at each edge-entry
    /// instant, judged under the current flow.
    StrongLp,
    /// Strictly below capacity throughout each edge traversal, judged under
    /// the current flow.
    WeakLp,
    /// The entry-instant rule, except that edges shared with the current
    /// walk up to the split point are exempt when the slice is not retimed.
    StrongMns,
    /// The traversal rule with the same shared-prefix exemption.
    WeakMns,
    /// At most capacity at each entry instant, with loads and timings
    /// recomputed for the rerouted flow.
    StrongBs,
    /// At most capacity throughout each traversal, recomputed for the
    /// rerouted flow.
    WeakBs,
}

impl Concept {
    pub const ALL: [Concept; 8] = [
        Concept::Unconstrained,
        Concept::Global,
        Concept::StrongLp,
        Concept::WeakLp,
        Concept::StrongMns,
        Concept::WeakMns,
        Concept::StrongBs,
        Concept::WeakBs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Concept::Unconstrained => "unconstrained",
            Concept::Global => "global",
            Concept::StrongLp => "strong-lp",
            Concept::WeakLp => "weak-lp",
            Concept::StrongMns => "strong-mns",
            Concept::WeakMns => "weak-mns",
            Concept::StrongBs => "strong-bs",
            Concept::WeakBs => "weak-bs",
        }
    }
}

impl std::fmt::Display for Concept {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Concept {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Concept::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown admissibility concept `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Admissibility {
    Yes,
    No(String),
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        matches!(self, Admissibility::Yes)
    }
}

/// Discretization used to probe deviations and to build flows on a time
/// lattice: slice widths are `width_factors * step` around a grid time,
/// slice rates are `rate_factors` times the local inflow level, and
/// departure shifts range over multiples of `step`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub step: Rat,
    pub width_factors: Vec<Rat>,
    pub rate_factors: Vec<Rat>,
    pub max_iterations: usize,
    pub tolerance: Rat,
}

impl GridSpec {
    /// Defaults: 200 grid steps across the horizon, widths 1/4, 1/10, 1/20
    /// of a step, rates 1/10 and 1/100 of the local level.
    pub fn for_instance(inst: &Instance) -> GridSpec {
        GridSpec::with_step(inst.horizon_length() / Rat::from(200))
    }

    pub fn with_step(step: Rat) -> GridSpec {
        GridSpec {
            step,
            width_factors: vec![Rat::new(1, 4), Rat::new(1, 10), Rat::new(1, 20)],
            rate_factors: vec![Rat::new(1, 10), Rat::new(1, 100)],
            max_iterations: 500,
            tolerance: Rat::new(1, 1_000_000),
        }
    }

    pub fn validate(&self, inst: &Instance) -> Result<(), DeviationError> {
        let fail = |m: &str| Err(DeviationError::InvalidGrid(m.into()));
        if !self.step.is_positive() {
            return fail("time step must be positive");
        }
        if !(inst.horizon_length() / &self.step).is_integer() {
            return fail("time step must divide the horizon length");
        }
        if !self.tolerance.is_positive() {
            return fail("tolerance must be positive");
        }
        if self.width_factors.is_empty() || self.rate_factors.is_empty() {
            return fail("scale families must be nonempty");
        }
        if self
            .width_factors
            .iter()
            .chain(&self.rate_factors)
            .any(|f| !f.is_positive())
        {
            return fail("scale factors must be positive");
        }
        if self.max_iterations == 0 {
            return fail("iteration budget must be positive");
        }
        Ok(())
    }

    /// Grid times from the start to the end of the horizon, inclusive.
    pub fn times(&self, inst: &Instance) -> Vec<Rat> {
        let mut out = Vec::new();
        let mut t = inst.horizon.0.clone();
        while t <= inst.horizon.1 {
            out.push(t.clone());
            t = &t + &self.step;
        }
        out
    }

    /// Candidate departure shifts: multiples of the step spanning the
    /// horizon length in both directions.
    pub fn shifts(&self, inst: &Instance) -> Vec<Rat> {
        let len = inst.horizon_length();
        let mut out = Vec::new();
        let mut d = -len.clone();
        while d <= len {
            out.push(d.clone());
            d = &d + &self.step;
        }
        out
    }
}

/// The flow after performing a deviation: the rate leaves walk `from`, and
/// arrives on walk `to` shifted in time. Fails when the deviation would
/// remove flow that is not there, overfill the target walk, retime a
/// rate-fixed commodity, or move flow outside the horizon.
pub fn apply_deviation(
    inst: &Instance,
    h: &WalkInflow,
    d: &Deviation,
) -> Result<WalkInflow, DeviationError> {
    let fail = |m: String| Err(DeviationError::InvariantViolated(m));
    if d.from >= inst.walks.len() || d.to >= inst.walks.len() {
        return fail("walk index out of range".into());
    }
    let (p, q) = (&inst.walks[d.from], &inst.walks[d.to]);
    if p.commodity != q.commodity {
        return fail(format!(
            "walks `{}` and `{}` belong to different commodities",
            p.name, q.name
        ));
    }
    if !d.rate.is_nonnegative() {
        return fail("deviation rate must be nonnegative".into());
    }
    if !h.rates[d.from].sub(&d.rate).is_nonnegative() {
        return fail(format!("more flow removed from walk `{}` than it carries", p.name));
    }
    if !d.shift.is_zero() {
        if let Demand::FixedRate(_) = inst.commodities[p.commodity].demand {
            return fail("rate-fixed commodities cannot retime departures".into());
        }
    }
    let shifted = d.rate.shift(&d.shift);
    if let Some((lo, hi)) = shifted.support() {
        if *lo < inst.horizon.0 || *hi > inst.horizon.1 {
            return fail("flow moved outside the planning horizon".into());
        }
    }
    let mut moved = h.clone();
    moved.rates[d.from] = moved.rates[d.from].sub(&d.rate);
    moved.rates[d.to] = moved.rates[d.to].add(&shifted);
    if let Some(bound) = &q.bound {
        if moved.rates[d.to].max_level() > *bound {
            return fail(format!(
                "more flow moved onto walk `{}` than its rate bound allows",
                q.name
            ));
        }
    }
    Ok(moved)
}

/// Maximal intervals on which the rate is positive.
fn support_intervals(f: &StepFn) -> Vec<(Rat, Rat)> {
    let mut out: Vec<(Rat, Rat)> = Vec::new();
    for (a, b, v) in f.segments() {
        if !v.is_positive() {
            continue;
        }
        match out.last_mut() {
            Some((_, end)) if *end == *a => *end = b.clone(),
            _ => out.push((a.clone(), b.clone())),
        }
    }
    out
}

fn common_prefix_len(p: &[usize], q: &[usize]) -> usize {
    p.iter().zip(q).take_while(|(a, b)| a == b).count()
}

/// Worst excess of a rate load over the capacity anywhere in the closed
/// entry window `[lo, hi]`.
fn rate_excess_sup(r: &StepFn, cap: &PwlFn, lo: &Rat, hi: &Rat) -> Rat {
    let mut cuts: Vec<Rat> = vec![lo.clone()];
    for t in r.breakpoints() {
        if t > lo && t < hi {
            cuts.push(t.clone());
        }
    }
    cuts.push(hi.clone());
    let mut worst = r.eval(hi) - cap.eval(hi);
    for w in cuts.windows(2) {
        let excess = r.eval(&w[0]) - cap.min_over(&w[0], &w[1]);
        if excess > worst {
            worst = excess;
        }
    }
    worst
}

/// Capacity checks on walk `q`'s capacitated legs over every departure
/// interval in `support`. With `tilde` the traversal excesses are checked;
/// without, the loads at the entry instants. `strict` demands room to
/// spare, otherwise reaching capacity exactly is allowed.
fn entry_checks(
    inst: &Instance,
    res: &LoadingResult,
    q: usize,
    support: &[(Rat, Rat)],
    exempt_legs: usize,
    strict: bool,
    tilde: Option<&[Option<PwlFn>]>,
) -> Result<Admissibility, DeviationError> {
    for (j, &e) in inst.walks[q].edges.iter().enumerate() {
        if j < exempt_legs {
            continue;
        }
        let edge = &inst.edges[e];
        let Some(cap) = &edge.capacity else { continue };
        let entry = &res.arrivals[q][j];
        for (a, b) in support {
            let worst = match tilde {
                Some(t) => t[e]
                    .as_ref()
                    .expect("capacitated edges carry a traversal excess")
                    .compose(entry)
                    .max_over(a, b),
                None => match edge_load(inst, res, e)? {
                    EdgeLoad::Curve(f) => f.sub(cap).compose(entry).max_over(a, b),
                    EdgeLoad::Rate(r) => rate_excess_sup(&r, cap, &entry.eval(a), &entry.eval(b)),
                },
            };
            let ok = if strict {
                worst.is_negative()
            } else {
                !worst.is_positive()
            };
            if !ok {
                let phase = if tilde.is_some() { "during traversal" } else { "at entry" };
                return Ok(Admissibility::No(format!(
                    "edge `{}` is at capacity {} for departures in [{}, {}]",
                    edge.id, phase, a, b
                )));
            }
        }
    }
    Ok(Admissibility::Yes)
}

/// Whether the concept allows the deviation, given the loading of the
/// current flow. The reasons name the blocking edge and departure interval.
pub fn admissible(
    inst: &Instance,
    h: &WalkInflow,
    d: &Deviation,
    concept: Concept,
    res: &LoadingResult,
) -> Result<Admissibility, DeviationError> {
    match concept {
        Concept::Unconstrained => {
            apply_deviation(inst, h, d)?;
            Ok(Admissibility::Yes)
        }
        Concept::Global => {
            let moved = apply_deviation(inst, h, d)?;
            let reloaded = load(inst, &moved, &LoadingOptions::new(res.model))?;
            let report = check_feasible(inst, &reloaded)?;
            match report.violations.first() {
                None => Ok(Admissibility::Yes),
                Some(v) => Ok(Admissibility::No(format!(
                    "moving the flow overloads edge `{}` from time {}",
                    v.edge, v.start
                ))),
            }
        }
        Concept::StrongLp | Concept::WeakLp | Concept::StrongMns | Concept::WeakMns => {
            apply_deviation(inst, h, d)?;
            let support = support_intervals(&d.rate.shift(&d.shift));
            if support.is_empty() {
                return Ok(Admissibility::Yes);
            }
            let exempt = match concept {
                Concept::StrongMns | Concept::WeakMns if d.shift.is_zero() => {
                    common_prefix_len(&inst.walks[d.from].edges, &inst.walks[d.to].edges)
                }
                _ => 0,
            };
            let weak = matches!(concept, Concept::WeakLp | Concept::WeakMns);
            let tilde = if weak {
                Some(traversal_excess(inst, res)?)
            } else {
                None
            };
            entry_checks(inst, res, d.to, &support, exempt, true, tilde.as_deref())
        }
        Concept::StrongBs | Concept::WeakBs => {
            let moved = apply_deviation(inst, h, d)?;
            let support = support_intervals(&d.rate.shift(&d.shift));
            if support.is_empty() {
                return Ok(Admissibility::Yes);
            }
            let reloaded = load(inst, &moved, &LoadingOptions::new(res.model))?;
            let tilde = if concept == Concept::WeakBs {
                Some(traversal_excess(inst, &reloaded)?)
            } else {
                None
            };
            entry_checks(inst, &reloaded, d.to, &support, 0, false, tilde.as_deref())
        }
    }
}

/// Admissible alternatives to walk `p` near departure time `t`: the pairs
/// (target walk, shift) that accept every probed slice of `p`'s inflow
/// around `t`. Probes take each grid width, intersect with where `p`
/// actually flows, and try each grid rate factor of the local level; a pair
/// qualifies only if all probes with positive mass are admissible. Empty
/// when nothing flows on `p` near `t`.
pub fn enumerate_u(
    inst: &Instance,
    h: &WalkInflow,
    res: &LoadingResult,
    p: usize,
    t: &Rat,
    concept: Concept,
    grid: &GridSpec,
) -> Result<Vec<(usize, Rat)>, DeviationError> {
    let commodity = inst.walks[p].commodity;
    let shifts = match inst.commodities[commodity].demand {
        Demand::FixedRate(_) => vec![Rat::zero()],
        _ => grid.shifts(inst),
    };
    let mut out = Vec::new();
    for (q, _) in inst.walks_of(commodity) {
        for delta in &shifts {
            if q == p && delta.is_zero() {
                continue;
            }
            let mut any_mass = false;
            let mut all_pass = true;
            'scales: for wf in &grid.width_factors {
                for rf in &grid.rate_factors {
                    let Some(gamma) = probe_slice(h, p, t, &(wf * &grid.step), rf) else {
                        continue 'scales;
                    };
                    any_mass = true;
                    let d = Deviation {
                        from: p,
                        to: q,
                        rate: gamma,
                        shift: delta.clone(),
                    };
                    match admissible(inst, h, &d, concept, res) {
                        Ok(Admissibility::Yes) => {}
                        Ok(Admissibility::No(_)) | Err(DeviationError::InvariantViolated(_)) => {
                            all_pass = false;
                            break 'scales;
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            if any_mass && all_pass {
                out.push((q, delta.clone()));
            }
        }
    }
    Ok(out)
}

/// The probe slice near `t` used by the enumeration: walk `p`'s inflow
/// restricted to a half-width window and flattened to `rate_factor` times
/// its smallest positive level there. `None` when nothing flows in the
/// window.
pub(crate) fn probe_slice(
    h: &WalkInflow,
    p: usize,
    t: &Rat,
    half_width: &Rat,
    rate_factor: &Rat,
) -> Option<StepFn> {
    let window = h.rates[p].restrict(&(t - half_width), &(t + half_width));
    let level = window.min_positive_level()?;
    let rate = rate_factor * &level;
    let segments: Vec<(Rat, Rat, Rat)> = window
        .segments()
        .filter(|(_, _, v)| v.is_positive())
        .map(|(a, b, _)| (a.clone(), b.clone(), rate.clone()))
        .collect();
    Some(StepFn::from_segments(&segments))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loading::DelayModel;
    use crate::model::{InstanceBuilder, ServiceRate};
    use crate::rat;

    fn two_route_instance(narrow_cap: Option<PwlFn>) -> Instance {
        let mut b = InstanceBuilder::new(rat!(0), rat!(8)).edge(
            "narrow",
            "s",
            "t",
            rat!(2),
            ServiceRate::Finite(rat!(2)),
        );
        if let Some(cap) = narrow_cap {
            b = b.capacity(cap);
        }
        b.edge("wide", "s", "t", rat!(5), ServiceRate::Unbounded)
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

    fn all_on(inst: &Instance, walk: usize) -> WalkInflow {
        let mut h = WalkInflow::zero(inst);
        h.rates[walk] = StepFn::constant(rat!(0), rat!(2), rat!(2));
        h
    }

    fn loaded(inst: &Instance, h: &WalkInflow) -> LoadingResult {
        load(inst, h, &LoadingOptions::new(DelayModel::Linear)).unwrap()
    }

    #[test]
    fn moving_everything_swaps_pure_flows() {
        let inst = two_route_instance(None);
        let h1 = all_on(&inst, 0);
        let h2 = all_on(&inst, 1);
        let d = Deviation {
            from: 0,
            to: 1,
            rate: StepFn::constant(rat!(0), rat!(2), rat!(2)),
            shift: rat!(0),
        };
        let moved = apply_deviation(&inst, &h1, &d).unwrap();
        assert_eq!(moved, h2);
        let back = Deviation { from: 1, to: 0, ..d };
        assert_eq!(apply_deviation(&inst, &moved, &back).unwrap(), h1);
    }

    #[test]
    fn zero_and_self_deviations_change_nothing() {
        let inst = two_route_instance(None);
        let h = all_on(&inst, 0);
        let zero = Deviation {
            from: 0,
            to: 1,
            rate: StepFn::zero(),
            shift: rat!(0),
        };
        assert_eq!(apply_deviation(&inst, &h, &zero).unwrap(), h);
        let this = Deviation {
            from: 0,
            to: 0,
            rate: StepFn::constant(rat!(0), rat!(1), rat!(1)),
            shift: rat!(0),
        };
        assert_eq!(apply_deviation(&inst, &h, &this).unwrap(), h);
    }

    #[test]
    fn invariants_reject_bad_deviations() {
        let inst = two_route_instance(None);
        let h = all_on(&inst, 0);
        let expect = |d: &Deviation, needle: &str| {
            match apply_deviation(&inst, &h, d) {
                Err(DeviationError::InvariantViolated(m)) => {
                    assert!(m.contains(needle), "`{m}` missing `{needle}`")
                }
                other => panic!("expected invariant violation, got {other:?}"),
            }
        };
        let base = Deviation {
            from: 0,
            to: 1,
            rate: StepFn::constant(rat!(0), rat!(2), rat!(3)),
            shift: rat!(0),
        };
        expect(&base, "more flow removed");
        expect(
            &Deviation {
                rate: StepFn::constant(rat!(0), rat!(2), rat!(1)),
                shift: rat!(1),
                ..base.clone()
            },
            "cannot retime",
        );

        let volume = InstanceBuilder::new(rat!(0), rat!(8))
            .edge("a", "s", "t", rat!(1), ServiceRate::Unbounded)
            .edge("b", "s", "t", rat!(2), ServiceRate::Unbounded)
            .commodity("c", "s", "t", Demand::FixedVolume(rat!(4)))
            .walk_bounded("c", "pa", &["a"], rat!(5))
            .walk_bounded("c", "pb", &["b"], rat!(1))
            .build()
            .unwrap();
        let mut h = WalkInflow::zero(&volume);
        h.rates[0] = StepFn::constant(rat!(0), rat!(2), rat!(2));
        let slice = Deviation {
            from: 0,
            to: 1,
            rate: StepFn::constant(rat!(0), rat!(2), rat!(2)),
            shift: rat!(7),
        };
        match apply_deviation(&volume, &h, &slice) {
            Err(DeviationError::InvariantViolated(m)) => {
                assert!(m.contains("outside the planning horizon"), "`{m}`")
            }
            other => panic!("expected invariant violation, got {other:?}"),
        }
        let overfill = Deviation { shift: rat!(0), ..slice };
        match apply_deviation(&volume, &h, &overfill) {
            Err(DeviationError::InvariantViolated(m)) => {
                assert!(m.contains("rate bound"), "`{m}`")
            }
            other => panic!("expected invariant violation, got {other:?}"),
        }
    }

    #[test]
    fn entry_rule_judges_under_current_flow() {
        let inst = two_route_instance(Some(PwlFn::constant(rat!(3))));
        let h = all_on(&inst, 0);
        let res = loaded(&inst, &h);
        let away = Deviation {
            from: 0,
            to: 1,
            rate: StepFn::constant(rat!(0), rat!(2), Rat::new(1, 10)),
            shift: rat!(0),
        };
        // the target walk has no capacity, so the entry rule is satisfied
        assert!(admissible(&inst, &h, &away, Concept::StrongLp, &res)
            .unwrap()
            .is_admissible());
        // the whole flow stays infeasible after so small a move
        match admissible(&inst, &h, &away, Concept::Global, &res).unwrap() {
            Admissibility::No(m) => assert!(m.contains("narrow"), "`{m}`"),
            Admissibility::Yes => panic!("expected inadmissible"),
        }

        let h = all_on(&inst, 1);
        let res = loaded(&inst, &h);
        let toward = Deviation {
            from: 1,
            to: 0,
            rate: StepFn::constant(rat!(0), rat!(2), Rat::new(1, 10)),
            shift: rat!(0),
        };
        for concept in [
            Concept::StrongLp,
            Concept::WeakLp,
            Concept::Global,
            Concept::StrongBs,
            Concept::WeakBs,
        ] {
            assert!(
                admissible(&inst, &h, &toward, concept, &res).unwrap().is_admissible(),
                "{concept} should admit a small move onto the empty edge"
            );
        }

        let tight = two_route_instance(Some(PwlFn::constant(rat!(0))));
        let h = all_on(&tight, 1);
        let res = loaded(&tight, &h);
        match admissible(&tight, &h, &toward, Concept::StrongLp, &res).unwrap() {
            Admissibility::No(m) => assert!(m.contains("at entry"), "`{m}`"),
            Admissibility::Yes => panic!("a zero-capacity edge admits nothing strictly"),
        }
    }

    fn shared_prefix_instance() -> Instance {
        // both walks start on `a`, whose capacity equals its load exactly
        let cap = PwlFn::new(vec![(rat!(0), rat!(0)), (rat!(1), rat!(1)), (rat!(2), rat!(0))])
            .unwrap();
        InstanceBuilder::new(rat!(0), rat!(8))
            .edge("a", "s", "m", rat!(1), ServiceRate::Finite(rat!(1)))
            .capacity(cap)
            .edge("b", "m", "t", rat!(1), ServiceRate::Unbounded)
            .edge("c", "m", "t", rat!(3), ServiceRate::Unbounded)
            .commodity("c1", "s", "t", Demand::FixedVolume(rat!(1)))
            .walk_bounded("c1", "ab", &["a", "b"], rat!(10))
            .walk_bounded("c1", "ac", &["a", "c"], rat!(10))
            .build()
            .unwrap()
    }

    #[test]
    fn shared_prefix_is_exempt_without_retiming() {
        let inst = shared_prefix_instance();
        let mut h = WalkInflow::zero(&inst);
        h.rates[0] = StepFn::constant(rat!(0), rat!(1), rat!(1));
        let res = load(&inst, &h, &LoadingOptions::new(DelayModel::Vickrey)).unwrap();
        let d = Deviation {
            from: 0,
            to: 1,
            rate: StepFn::constant(rat!(0), rat!(1), Rat::new(1, 10)),
            shift: rat!(0),
        };
        match admissible(&inst, &h, &d, Concept::StrongLp, &res).unwrap() {
            Admissibility::No(m) => assert!(m.contains("`a`"), "`{m}`"),
            Admissibility::Yes => panic!("the shared edge is saturated"),
        }
        // sharing the saturated edge is fine when nothing is retimed
        for concept in [Concept::StrongMns, Concept::WeakMns] {
            assert!(admissible(&inst, &h, &d, concept, &res).unwrap().is_admissible());
        }
        // rerouting does not change the shared edge's inflow at all
        for concept in [Concept::StrongBs, Concept::WeakBs] {
            assert!(admissible(&inst, &h, &d, concept, &res).unwrap().is_admissible());
        }
        // a retimed slice loses the exemption
        let retimed = Deviation { shift: Rat::new(1, 2), ..d };
        for concept in [Concept::StrongMns, Concept::WeakMns] {
            match admissible(&inst, &h, &retimed, concept, &res).unwrap() {
                Admissibility::No(m) => assert!(m.contains("`a`"), "`{m}`"),
                Admissibility::Yes => panic!("retimed slices get no exemption"),
            }
        }
    }

    #[test]
    fn smaller_and_shorter_slices_stay_admissible() {
        let inst = two_route_instance(Some(PwlFn::constant(rat!(3))));
        let h = all_on(&inst, 1);
        let res = loaded(&inst, &h);
        let d = Deviation {
            from: 1,
            to: 0,
            rate: StepFn::constant(rat!(0), rat!(2), Rat::new(1, 10)),
            shift: rat!(0),
        };
        for concept in [Concept::StrongLp, Concept::WeakLp, Concept::StrongMns] {
            assert!(admissible(&inst, &h, &d, concept, &res).unwrap().is_admissible());
            let halved = Deviation {
                rate: d.rate.scale(&Rat::new(1, 2)),
                ..d.clone()
            };
            assert!(admissible(&inst, &h, &halved, concept, &res).unwrap().is_admissible());
            let shortened = Deviation {
                rate: d.rate.restrict(&rat!(0), &Rat::new(1, 2)),
                ..d.clone()
            };
            assert!(admissible(&inst, &h, &shortened, concept, &res)
                .unwrap()
                .is_admissible());
        }
    }

    #[test]
    fn enumeration_requires_local_flow() {
        let inst = two_route_instance(None);
        let h = all_on(&inst, 0);
        let res = loaded(&inst, &h);
        let grid = GridSpec::with_step(rat!(1));
        let u = enumerate_u(&inst, &h, &res, 0, &rat!(1), Concept::Unconstrained, &grid).unwrap();
        assert_eq!(u, vec![(1, rat!(0))]);
        // nothing departs on the walk near t = 5
        let u = enumerate_u(&inst, &h, &res, 0, &rat!(5), Concept::Unconstrained, &grid).unwrap();
        assert!(u.is_empty());
    }

    #[test]
    fn enumeration_spans_in_horizon_shifts() {
        let inst = InstanceBuilder::new(rat!(0), rat!(8))
            .edge("a", "s", "t", rat!(1), ServiceRate::Unbounded)
            .edge("b", "s", "t", rat!(2), ServiceRate::Unbounded)
            .commodity("c", "s", "t", Demand::FixedVolume(rat!(4)))
            .walk_bounded("c", "pa", &["a"], rat!(10))
            .walk_bounded("c", "pb", &["b"], rat!(10))
            .build()
            .unwrap();
        let mut h = WalkInflow::zero(&inst);
        h.rates[0] = StepFn::constant(rat!(0), rat!(2), rat!(2));
        let res = load(&inst, &h, &LoadingOptions::default()).unwrap();
        let grid = GridSpec::with_step(rat!(1));
        let u = enumerate_u(&inst, &h, &res, 0, &rat!(1), Concept::Unconstrained, &grid).unwrap();
        // probes cover [3/4, 5/4]; shifting by -1 leaves the horizon, by 6 not yet
        let expected: Vec<(usize, Rat)> = (1..=6)
            .map(|k| (0, rat!(k)))
            .chain((0..=6).map(|k| (1, rat!(k))))
            .collect();
        assert_eq!(u, expected);
    }

    #[test]
    fn grid_spec_validates_divisibility() {
        let inst = two_route_instance(None);
        assert!(GridSpec::for_instance(&inst).validate(&inst).is_ok());
        let bad = GridSpec::with_step(rat!(3));
        assert!(matches!(
            bad.validate(&inst),
            Err(DeviationError::InvalidGrid(m)) if m.contains("divide")
        ));
        let mut degenerate = GridSpec::with_step(rat!(1));
        degenerate.tolerance = rat!(0);
        assert!(degenerate.validate(&inst).is_err());
    }

    #[test]
    fn concept_names_round_trip() {
        for c in Concept::ALL {
            assert_eq!(c.name().parse::<Concept>().unwrap(), c);
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(json, format!("\"{}\"", c.name()));
        }
        assert!("strongest-lp".parse::<Concept>().is_err());
    }
}
