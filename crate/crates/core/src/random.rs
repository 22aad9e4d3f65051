//! Seeded generators for the randomized property suites: small layered
//! instances, demand-matching inflows, and deviations of flow that is
//! actually routed. Everything is driven by an explicit seed, so failures
//! reproduce exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::deviations::Deviation;
use crate::model::{
    CostSpec, Demand, Instance, InstanceBuilder, LoadKind, ServiceRate, WalkInflow,
};
use crate::timefn::{PwlFn, Rat, StepFn};

pub struct Gen(ChaCha8Rng);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn int(&mut self, lo: i64, hi: i64) -> i64 {
        self.0.gen_range(lo..=hi)
    }

    /// A rational with denominator 4, numerator drawn from `lo..=hi`.
    pub fn quarters(&mut self, lo: i64, hi: i64) -> Rat {
        Rat::new(self.int(lo, hi), 4)
    }

    pub fn chance(&mut self, num: u32, den: u32) -> bool {
        self.0.gen_range(0..den) < num
    }
}

/// A random single-commodity layered network with up to three hops, parallel
/// edges on at least one hop, mixed service rates, and capacities on roughly
/// half the edges. The horizon is sized so that any demand-matching inflow
/// fully clears under either delay model: free-flow times plus the worst
/// possible queueing of the whole volume fit before the end.
pub fn random_instance(g: &mut Gen) -> Instance {
    let hops = g.int(1, 3) as usize;
    let wide_hop = g.int(0, hops as i64 - 1) as usize;
    let mut layers: Vec<Vec<String>> = Vec::new();
    let mut taus: Vec<Rat> = Vec::new();
    let mut rates: Vec<ServiceRate> = Vec::new();
    for hop in 0..hops {
        let parallel = if hop == wide_hop { 2 } else { g.int(1, 2) };
        let mut ids = Vec::new();
        for side in 0..parallel {
            let letter = (b'a' + side as u8) as char;
            ids.push(format!("e{hop}{letter}"));
            taus.push(g.quarters(1, 6));
            rates.push(if g.chance(1, 2) {
                ServiceRate::Unbounded
            } else {
                ServiceRate::Finite(g.quarters(2, 8))
            });
        }
        layers.push(ids);
    }

    let active_until = Rat::from(2);
    let mut demand_segments = vec![(Rat::zero(), Rat::one(), g.quarters(2, 8))];
    if g.chance(3, 4) {
        demand_segments.push((Rat::one(), active_until.clone(), g.quarters(0, 8)));
    }
    let rate = StepFn::from_segments(&demand_segments);
    let volume = rate.total();

    let mut worst_exit = active_until.clone();
    for (tau, service) in taus.iter().zip(&rates) {
        worst_exit += tau;
        if let ServiceRate::Finite(nu) = service {
            worst_exit += &volume * &nu.recip();
        }
    }
    let horizon_end = worst_exit + Rat::one();

    let mut b = InstanceBuilder::new(Rat::zero(), horizon_end);
    let mut edge_iter = taus.into_iter().zip(rates);
    for (hop, ids) in layers.iter().enumerate() {
        let tail = format!("n{hop}");
        let head = format!("n{}", hop + 1);
        for id in ids {
            let (tau, service) = edge_iter.next().expect("one entry per edge");
            b = b.edge(id, &tail, &head, tau, service);
            if g.chance(1, 2) {
                b = b.capacity(PwlFn::constant(g.quarters(2, 12)));
                b = b.load_kind(match g.int(0, 3) {
                    0 => LoadKind::Queue,
                    1 => LoadKind::InflowRate,
                    _ => LoadKind::Volume,
                });
            }
        }
    }
    let sink = format!("n{hops}");
    b = b.commodity("c", "n0", &sink, Demand::FixedRate(rate));

    let mut routes: Vec<Vec<String>> = vec![Vec::new()];
    for ids in &layers {
        routes = routes
            .into_iter()
            .flat_map(|prefix| {
                ids.iter().map(move |id| {
                    let mut r = prefix.clone();
                    r.push(id.clone());
                    r
                })
            })
            .collect();
    }
    routes.truncate(4);
    for (i, route) in routes.iter().enumerate() {
        let refs: Vec<&str> = route.iter().map(String::as_str).collect();
        b = b.walk("c", &format!("p{i}"), &refs);
    }
    b = b.cost(CostSpec::TravelTime);
    b.build().expect("generated instances are valid")
}

/// A demand-matching inflow: each constant piece of the prescribed rate,
/// sometimes split at its midpoint, is shared among the walks in random
/// integer proportions.
pub fn random_inflow(g: &mut Gen, inst: &Instance) -> WalkInflow {
    let mut per_walk: Vec<Vec<(Rat, Rat, Rat)>> = vec![Vec::new(); inst.walks.len()];
    for (ci, c) in inst.commodities.iter().enumerate() {
        let Demand::FixedRate(rate) = &c.demand else {
            panic!("random inflows cover rate demand only");
        };
        let members: Vec<usize> = inst.walks_of(ci).map(|(i, _)| i).collect();
        let mut pieces: Vec<(Rat, Rat, Rat)> = Vec::new();
        for (a, b, v) in rate.segments() {
            if g.chance(1, 2) {
                let mid = (a + b) / Rat::from(2);
                pieces.push((a.clone(), mid.clone(), v.clone()));
                pieces.push((mid, b.clone(), v.clone()));
            } else {
                pieces.push((a.clone(), b.clone(), v.clone()));
            }
        }
        for (a, b, v) in pieces {
            let weights: Vec<i64> = members.iter().map(|_| g.int(0, 3)).collect();
            let total: i64 = weights.iter().sum();
            if total == 0 {
                per_walk[members[0]].push((a, b, v));
                continue;
            }
            for (&w, &weight) in members.iter().zip(&weights) {
                if weight > 0 {
                    let share = &v * &Rat::new(weight, total);
                    per_walk[w].push((a.clone(), b.clone(), share));
                }
            }
        }
    }
    WalkInflow {
        rates: per_walk.iter().map(|s| StepFn::from_segments(s)).collect(),
    }
}

/// A pair of independent demand-matching inflows on the same instance.
pub fn random_flow_pair(g: &mut Gen, inst: &Instance) -> (WalkInflow, WalkInflow) {
    (random_inflow(g, inst), random_inflow(g, inst))
}

/// A deviation that moves part of one flow-carrying slice of some walk onto
/// a sibling walk, unshifted. `None` when the flow routes everything onto
/// commodities without an alternative.
pub fn random_deviation(g: &mut Gen, inst: &Instance, h: &WalkInflow) -> Option<Deviation> {
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for ci in 0..inst.commodities.len() {
        let members: Vec<usize> = inst.walks_of(ci).map(|(i, _)| i).collect();
        if members.len() < 2 {
            continue;
        }
        for &from in &members {
            if !h.rates[from].is_zero() {
                for &to in &members {
                    if to != from {
                        candidates.push((from, to));
                    }
                }
            }
        }
    }
    if candidates.is_empty() {
        return None;
    }
    let (from, to) = candidates[g.int(0, candidates.len() as i64 - 1) as usize];
    let slices: Vec<(Rat, Rat, Rat)> = h.rates[from]
        .segments()
        .filter(|(_, _, v)| v.is_positive())
        .map(|(a, b, v)| (a.clone(), b.clone(), v.clone()))
        .collect();
    let (mut a, mut b, v) = slices[g.int(0, slices.len() as i64 - 1) as usize].clone();
    if g.chance(1, 2) {
        let mid = (&a + &b) / Rat::from(2);
        if g.chance(1, 2) {
            b = mid;
        } else {
            a = mid;
        }
    }
    let factor = [Rat::one(), Rat::new(1, 2), Rat::new(1, 4)][g.int(0, 2) as usize].clone();
    Some(Deviation {
        from,
        to,
        rate: StepFn::constant(a, b, v * factor),
        shift: Rat::zero(),
    })
}

/// The same deviation at a random fraction of its rate.
pub fn random_scale(g: &mut Gen, d: &Deviation) -> Deviation {
    let lambda = [
        Rat::zero(),
        Rat::new(1, 4),
        Rat::new(1, 3),
        Rat::new(1, 2),
        Rat::new(3, 4),
        Rat::one(),
    ][g.int(0, 5) as usize]
        .clone();
    Deviation {
        rate: d.rate.scale(&lambda),
        ..d.clone()
    }
}

/// The same deviation restricted in time to a random finite union of
/// subintervals of its support.
pub fn random_restriction(g: &mut Gen, d: &Deviation) -> Deviation {
    let mut restricted = StepFn::zero();
    for (a, b, _) in d.rate.segments() {
        let mid = (a + b) / Rat::from(2);
        let keep = match g.int(0, 3) {
            0 => None,
            1 => Some((a.clone(), mid)),
            2 => Some((mid, b.clone())),
            _ => Some((a.clone(), b.clone())),
        };
        if let Some((lo, hi)) = keep {
            restricted = restricted.add(&d.rate.restrict(&lo, &hi));
        }
    }
    Deviation {
        rate: restricted,
        ..d.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deviations::{admissible, apply_deviation, Concept, DeviationError};
    use crate::loading::{audit_conservation, load, DelayModel, LoadingOptions};
    use crate::model::membership;
    use crate::sideconstraints::SideConstraintError;

    #[test]
    fn generated_flows_match_their_demand_and_load_cleanly() {
        for seed in 0..20 {
            let mut g = Gen::new(seed);
            let inst = random_instance(&mut g);
            let h = random_inflow(&mut g, &inst);
            assert!(
                membership(&inst, &h).is_member(),
                "seed {seed} breaks demand feasibility"
            );
            for model in [DelayModel::Vickrey, DelayModel::Linear] {
                let res = load(&inst, &h, &LoadingOptions::new(model)).unwrap();
                audit_conservation(&inst, &h, &res)
                    .unwrap_or_else(|m| panic!("seed {seed}, {model:?}: {m}"));
            }
        }
    }

    #[test]
    fn sampled_deviations_apply_cleanly() {
        let mut applied = 0;
        for seed in 100..140 {
            let mut g = Gen::new(seed);
            let inst = random_instance(&mut g);
            let h = random_inflow(&mut g, &inst);
            if let Some(d) = random_deviation(&mut g, &inst, &h) {
                let moved = apply_deviation(&inst, &h, &d).unwrap();
                assert!(membership(&inst, &moved).is_member());
                applied += 1;
            }
        }
        assert!(applied >= 20, "only {applied} of 40 seeds produced a deviation");
    }

    #[test]
    fn admissibility_survives_scaling_and_restriction() {
        let mut observed = 0;
        for seed in 200..260 {
            let mut g = Gen::new(seed);
            let inst = random_instance(&mut g);
            let h = random_inflow(&mut g, &inst);
            let res = load(&inst, &h, &LoadingOptions::new(DelayModel::Vickrey)).unwrap();
            let Some(d) = random_deviation(&mut g, &inst, &h) else {
                continue;
            };
            for concept in [Concept::Unconstrained, Concept::StrongLp, Concept::WeakMns] {
                let verdict = |d: &Deviation| match admissible(&inst, &h, d, concept, &res) {
                    Ok(a) => Some(a.is_admissible()),
                    Err(DeviationError::Constraint(SideConstraintError::KindUnavailable {
                        ..
                    })) => None,
                    Err(e) => panic!("seed {seed}, {concept}: {e}"),
                };
                if verdict(&d) != Some(true) {
                    continue;
                }
                observed += 1;
                let scaled = random_scale(&mut g, &d);
                assert_eq!(
                    verdict(&scaled),
                    Some(true),
                    "seed {seed}, {concept}: scaling broke admissibility"
                );
                let cut = random_restriction(&mut g, &d);
                assert_eq!(
                    verdict(&cut),
                    Some(true),
                    "seed {seed}, {concept}: time restriction broke admissibility"
                );
            }
        }
        assert!(observed >= 20, "only {observed} admissible deviations seen");
    }

    #[test]
    fn seeds_reproduce_identical_data() {
        let make = || {
            let mut g = Gen::new(42);
            let inst = random_instance(&mut g);
            let h = random_inflow(&mut g, &inst);
            (inst.digest(), h)
        };
        let (d1, h1) = make();
        let (d2, h2) = make();
        assert_eq!(d1, d2);
        assert_eq!(h1, h2);
    }
}
