//! Static traffic assignment on explicit path sets: Wardrop, unsaturated-
//! alternative, and small-bundle equilibrium checks, plus a potential-
//! minimizing solver.
//!
//! This module is a conceptual oracle and regression anchor for the
//! time-dependent machinery, not a scalable assignment code. Path sets are
//! enumerated explicitly (capped at 10^4), the route subproblem is solved
//! by cost-sorted greedy filling, and everything runs in exact rational
//! arithmetic.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use thiserror::Error;

use crate::timefn::{PwlFn, Rat};

/// Hard cap on explicitly enumerated paths per instance.
pub const PATH_CAP: usize = 10_000;

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StaticError {
    #[error("{0}")]
    Invalid(String),
    #[error("commodity `{commodity}` cannot route its demand within the capacities")]
    Infeasible { commodity: String },
    #[error("no convergence within {iterations} iterations; last gap {gap}")]
    NotConverged { iterations: usize, gap: Rat },
    #[error("more than {PATH_CAP} simple paths; this module only serves small instances")]
    TooManyPaths,
    #[error("unsupported schema version {0}")]
    SchemaVersion(u32),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone)]
pub struct StaticEdge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    /// Latency as a non-decreasing function of the edge's aggregate load,
    /// constant-extended beyond its knots.
    pub latency: PwlFn,
    pub capacity: Option<Rat>,
}

#[derive(Debug, Clone)]
pub struct StaticCommodity {
    pub name: String,
    pub source: usize,
    pub sink: usize,
    pub demand: Rat,
}

/// A simple source-sink path, indexed like [`StaticInstance::paths`].
#[derive(Debug, Clone)]
pub struct StaticPath {
    pub name: String,
    pub commodity: usize,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct StaticInstance {
    pub nodes: Vec<String>,
    pub edges: Vec<StaticEdge>,
    pub commodities: Vec<StaticCommodity>,
    pub paths: Vec<StaticPath>,
    pub comment: Option<String>,
}

/// One flow value per path, indexed like [`StaticInstance::paths`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticFlow {
    pub x: Vec<Rat>,
}

impl StaticFlow {
    pub fn zero(inst: &StaticInstance) -> Self {
        StaticFlow {
            x: vec![Rat::zero(); inst.paths.len()],
        }
    }
}

impl StaticInstance {
    pub fn paths_of(&self, commodity: usize) -> impl Iterator<Item = (usize, &StaticPath)> {
        self.paths
            .iter()
            .enumerate()
            .filter(move |(_, p)| p.commodity == commodity)
    }

    /// Aggregate load per edge under a path flow.
    pub fn edge_loads(&self, flow: &StaticFlow) -> Vec<Rat> {
        let mut loads = vec![Rat::zero(); self.edges.len()];
        for (p, path) in self.paths.iter().enumerate() {
            if flow.x[p].is_zero() {
                continue;
            }
            for &e in &path.edges {
                loads[e] += &flow.x[p];
            }
        }
        loads
    }

    /// Path costs at the given edge loads.
    pub fn path_costs(&self, loads: &[Rat]) -> Vec<Rat> {
        self.paths
            .iter()
            .map(|p| p.edges.iter().map(|&e| self.edges[e].latency.eval(&loads[e])).sum())
            .collect()
    }

    /// Checks nonnegativity, exact demand satisfaction, and (when asked)
    /// capacity feasibility of the aggregated loads.
    pub fn validate_flow(&self, flow: &StaticFlow, capacities: bool) -> Result<(), StaticError> {
        if flow.x.len() != self.paths.len() {
            return Err(StaticError::Invalid(format!(
                "flow has {} entries for {} paths",
                flow.x.len(),
                self.paths.len()
            )));
        }
        if let Some(p) = flow.x.iter().position(|v| v.is_negative()) {
            return Err(StaticError::Invalid(format!(
                "negative flow on path `{}`",
                self.paths[p].name
            )));
        }
        for (ci, c) in self.commodities.iter().enumerate() {
            let routed: Rat = self.paths_of(ci).map(|(p, _)| flow.x[p].clone()).sum();
            if routed != c.demand {
                return Err(StaticError::Invalid(format!(
                    "commodity `{}` routes {} of demand {}",
                    c.name, routed, c.demand
                )));
            }
        }
        if capacities {
            let loads = self.edge_loads(flow);
            for (e, edge) in self.edges.iter().enumerate() {
                if let Some(cap) = &edge.capacity {
                    if &loads[e] > cap {
                        return Err(StaticError::Invalid(format!(
                            "load {} exceeds capacity {} on edge `{}`",
                            loads[e], cap, edge.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Stable content digest (canonical serialization).
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(&StaticInstanceFile::from_instance(self))
            .expect("instance serializes");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        format!("{:x}", hasher.finalize())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&StaticInstanceFile::from_instance(self))
            .expect("serializes")
    }

    pub fn from_json(s: &str) -> Result<StaticInstance, StaticError> {
        let file: StaticInstanceFile = serde_json::from_str(s)?;
        file.into_instance()
    }
}

// ---------------------------------------------------------------------------
// Construction

pub struct StaticInstanceBuilder {
    nodes: Vec<String>,
    edges: Vec<StaticEdge>,
    commodities: Vec<StaticCommodity>,
    declared: Vec<StaticPath>,
    comment: Option<String>,
}

impl Default for StaticInstanceBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl StaticInstanceBuilder {
    pub fn new() -> Self {
        StaticInstanceBuilder {
            nodes: Vec::new(),
            edges: Vec::new(),
            commodities: Vec::new(),
            declared: Vec::new(),
            comment: None,
        }
    }

    fn node_idx(&mut self, name: &str) -> usize {
        match self.nodes.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.nodes.push(name.to_string());
                self.nodes.len() - 1
            }
        }
    }

    pub fn edge(mut self, id: &str, tail: &str, head: &str, latency: PwlFn) -> Self {
        let tail = self.node_idx(tail);
        let head = self.node_idx(head);
        self.edges.push(StaticEdge {
            id: id.to_string(),
            tail,
            head,
            latency,
            capacity: None,
        });
        self
    }

    /// Capacity of the edge declared last.
    pub fn capacity(mut self, cap: Rat) -> Self {
        self.edges
            .last_mut()
            .expect("capacity needs a preceding edge")
            .capacity = Some(cap);
        self
    }

    pub fn commodity(mut self, name: &str, source: &str, sink: &str, demand: Rat) -> Self {
        let source = self.node_idx(source);
        let sink = self.node_idx(sink);
        self.commodities.push(StaticCommodity {
            name: name.to_string(),
            source,
            sink,
            demand,
        });
        self
    }

    /// Declares one path for a commodity. Commodities with no declared
    /// paths get all their simple source-sink paths enumerated at build.
    pub fn path(mut self, commodity: &str, name: &str, edges: &[&str]) -> Self {
        let ci = self
            .commodities
            .iter()
            .position(|c| c.name == commodity)
            .expect("path needs a declared commodity");
        let edges = edges
            .iter()
            .map(|id| {
                self.edges
                    .iter()
                    .position(|e| e.id == *id)
                    .unwrap_or_else(|| panic!("unknown edge `{id}`"))
            })
            .collect();
        self.declared.push(StaticPath {
            name: name.to_string(),
            commodity: ci,
            edges,
        });
        self
    }

    pub fn comment(mut self, s: &str) -> Self {
        self.comment = Some(s.to_string());
        self
    }

    pub fn build(self) -> Result<StaticInstance, StaticError> {
        let mut inst = StaticInstance {
            nodes: self.nodes,
            edges: self.edges,
            commodities: self.commodities,
            paths: Vec::new(),
            comment: self.comment,
        };
        for (e, edge) in inst.edges.iter().enumerate() {
            if !edge.latency.is_nondecreasing() {
                return Err(StaticError::Invalid(format!(
                    "latency of edge `{}` decreases somewhere",
                    edge.id
                )));
            }
            if edge.latency.eval(&Rat::zero()).is_negative() {
                return Err(StaticError::Invalid(format!(
                    "latency of edge `{}` is negative at zero load",
                    edge.id
                )));
            }
            if let Some(cap) = &edge.capacity {
                if !cap.is_positive() {
                    return Err(StaticError::Invalid(format!(
                        "capacity of edge `{}` must be positive",
                        edge.id
                    )));
                }
            }
            if inst.edges[..e].iter().any(|o| o.id == edge.id) {
                return Err(StaticError::Invalid(format!("duplicate edge `{}`", edge.id)));
            }
        }
        for (ci, c) in inst.commodities.iter().enumerate() {
            if c.demand.is_negative() {
                return Err(StaticError::Invalid(format!(
                    "commodity `{}` has negative demand",
                    c.name
                )));
            }
            let declared: Vec<&StaticPath> =
                self.declared.iter().filter(|p| p.commodity == ci).collect();
            if declared.is_empty() {
                let enumerated = enumerate_paths(&inst, c.source, c.sink, inst.paths.len())?;
                if enumerated.is_empty() {
                    return Err(StaticError::Invalid(format!(
                        "sink `{}` is unreachable from source `{}` for commodity `{}`",
                        inst.nodes[c.sink], inst.nodes[c.source], c.name
                    )));
                }
                for edges in enumerated {
                    let name = format!(
                        "{}:{}",
                        c.name,
                        edges
                            .iter()
                            .map(|&e| inst.edges[e].id.as_str())
                            .collect::<Vec<_>>()
                            .join("-")
                    );
                    inst.paths.push(StaticPath {
                        name,
                        commodity: ci,
                        edges,
                    });
                }
            }
        }
        for p in self.declared {
            verify_path(&inst, &p)?;
            inst.paths.push(p);
        }
        if inst.paths.len() > PATH_CAP {
            return Err(StaticError::TooManyPaths);
        }
        inst.paths.sort_by_key(|p| p.commodity);
        Ok(inst)
    }
}

fn verify_path(inst: &StaticInstance, p: &StaticPath) -> Result<(), StaticError> {
    let c = &inst.commodities[p.commodity];
    let mut at = c.source;
    for &e in &p.edges {
        if inst.edges[e].tail != at {
            return Err(StaticError::Invalid(format!(
                "path `{}` breaks at edge `{}`",
                p.name, inst.edges[e].id
            )));
        }
        at = inst.edges[e].head;
    }
    if at != c.sink {
        return Err(StaticError::Invalid(format!(
            "path `{}` ends at `{}`, not the sink",
            p.name, inst.nodes[at]
        )));
    }
    Ok(())
}

/// All simple paths from `source` to `sink` as edge index sequences, in
/// depth-first order. Fails once the instance-wide budget is exhausted.
fn enumerate_paths(
    inst: &StaticInstance,
    source: usize,
    sink: usize,
    already: usize,
) -> Result<Vec<Vec<usize>>, StaticError> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut visited = vec![false; inst.nodes.len()];
    fn dfs(
        inst: &StaticInstance,
        at: usize,
        sink: usize,
        stack: &mut Vec<usize>,
        visited: &mut [bool],
        out: &mut Vec<Vec<usize>>,
        budget: usize,
    ) -> Result<(), StaticError> {
        if at == sink {
            if out.len() >= budget {
                return Err(StaticError::TooManyPaths);
            }
            out.push(stack.clone());
            return Ok(());
        }
        visited[at] = true;
        for (e, edge) in inst.edges.iter().enumerate() {
            if edge.tail == at && !visited[edge.head] {
                stack.push(e);
                dfs(inst, edge.head, sink, stack, visited, out, budget)?;
                stack.pop();
            }
        }
        visited[at] = false;
        Ok(())
    }
    dfs(
        inst,
        source,
        sink,
        &mut stack,
        &mut visited,
        &mut out,
        PATH_CAP.saturating_sub(already),
    )?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Equilibrium checks

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticConcept {
    /// Used paths are within tolerance of the commodity minimum.
    Wardrop,
    /// Comparison restricted to alternatives all of whose edges sit
    /// strictly below capacity.
    Lp,
    /// Comparison restricted to alternatives onto which a small bundle can
    /// shift while keeping the flow capacity-feasible; edges shared with
    /// the current path do not change load and never block the shift.
    Bs,
}

impl fmt::Display for StaticConcept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StaticConcept::Wardrop => "wardrop",
            StaticConcept::Lp => "lp",
            StaticConcept::Bs => "bs",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticWitness {
    pub from: usize,
    pub to: usize,
    pub cost_from: Rat,
    pub cost_to: Rat,
    pub gap: Rat,
}

#[derive(Debug, Clone)]
pub struct StaticCheckReport {
    pub concept: StaticConcept,
    pub pass: bool,
    pub witnesses: Vec<StaticWitness>,
    pub tolerance: Rat,
}

/// Bundle sizes tried by the small-bundle check, largest first. A shift is
/// admissible when some size fits; since feasibility only improves as the
/// bundle shrinks, testing this descending grid suffices down to its
/// smallest size.
pub fn bundle_grid() -> Vec<Rat> {
    vec![
        Rat::new(1, 10),
        Rat::new(1, 100),
        Rat::new(1, 1_000),
        Rat::new(1, 10_000),
    ]
}

/// Equilibrium check of a path flow. The flow must satisfy the demands
/// exactly, and respect capacities for the capacity-screened concepts. A
/// witness records a loaded path together with a strictly cheaper
/// alternative the concept admits.
pub fn static_check(
    inst: &StaticInstance,
    flow: &StaticFlow,
    concept: StaticConcept,
    tol: &Rat,
) -> Result<StaticCheckReport, StaticError> {
    inst.validate_flow(flow, concept != StaticConcept::Wardrop)?;
    let loads = inst.edge_loads(flow);
    let costs = inst.path_costs(&loads);
    let mut witnesses = Vec::new();
    for ci in 0..inst.commodities.len() {
        let members: Vec<usize> = inst.paths_of(ci).map(|(p, _)| p).collect();
        for &p in &members {
            if !flow.x[p].is_positive() {
                continue;
            }
            for &q in &members {
                if q == p {
                    continue;
                }
                let admissible = match concept {
                    StaticConcept::Wardrop => true,
                    StaticConcept::Lp => inst.paths[q].edges.iter().all(|&e| {
                        inst.edges[e]
                            .capacity
                            .as_ref()
                            .map(|c| loads[e] < *c)
                            .unwrap_or(true)
                    }),
                    StaticConcept::Bs => bundle_grid().iter().any(|eps| {
                        eps <= &flow.x[p]
                            && inst.paths[q].edges.iter().all(|&e| {
                                inst.paths[p].edges.contains(&e)
                                    || inst.edges[e]
                                        .capacity
                                        .as_ref()
                                        .map(|c| &(&loads[e] + eps) <= c)
                                        .unwrap_or(true)
                            })
                    }),
                };
                if admissible && costs[q] < &costs[p] - tol {
                    witnesses.push(StaticWitness {
                        from: p,
                        to: q,
                        cost_from: costs[p].clone(),
                        cost_to: costs[q].clone(),
                        gap: &costs[p] - &costs[q],
                    });
                }
            }
        }
    }
    Ok(StaticCheckReport {
        concept,
        pass: witnesses.is_empty(),
        witnesses,
        tolerance: tol.clone(),
    })
}

// ---------------------------------------------------------------------------
// Potential minimization

/// The potential `sum over edges of the integral of latency from 0 to the
/// edge's load`.
pub fn beckmann_objective(inst: &StaticInstance, flow: &StaticFlow) -> Rat {
    let loads = inst.edge_loads(flow);
    inst.edges
        .iter()
        .zip(&loads)
        .map(|(e, z)| e.latency.integrate(&Rat::zero(), z))
        .sum()
}

/// Cheapest routing against fixed path costs: per commodity, paths in cost
/// order each take as much of the remaining demand as the remaining
/// capacity slack of their edges allows. Exact on parallel-route instances;
/// on general graphs the greedy order is a documented small-instance
/// heuristic.
fn cheapest_routing(
    inst: &StaticInstance,
    costs: &[Rat],
) -> Result<StaticFlow, StaticError> {
    let mut slack: Vec<Option<Rat>> =
        inst.edges.iter().map(|e| e.capacity.clone()).collect();
    let mut flow = StaticFlow::zero(inst);
    for (ci, c) in inst.commodities.iter().enumerate() {
        let mut order: Vec<usize> = inst.paths_of(ci).map(|(p, _)| p).collect();
        order.sort_by(|&a, &b| (costs[a].clone(), a).cmp(&(costs[b].clone(), b)));
        let mut remaining = c.demand.clone();
        for p in order {
            if !remaining.is_positive() {
                break;
            }
            let mut take = remaining.clone();
            for &e in &inst.paths[p].edges {
                if let Some(s) = &slack[e] {
                    take = take.min(s.clone());
                }
            }
            if !take.is_positive() {
                continue;
            }
            for &e in &inst.paths[p].edges {
                if let Some(s) = &mut slack[e] {
                    *s -= &take;
                }
            }
            remaining -= &take;
            flow.x[p] = take;
        }
        if remaining.is_positive() {
            return Err(StaticError::Infeasible {
                commodity: c.name.clone(),
            });
        }
    }
    Ok(flow)
}

/// Largest step along `x + alpha (y - x)` that keeps the potential
/// non-increasing: the exact minimizer of the piecewise-quadratic potential
/// on the segment, found from the sign change of its piecewise-linear
/// derivative.
fn exact_step(inst: &StaticInstance, x: &[Rat], y: &[Rat]) -> Rat {
    let d: Vec<Rat> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let derivative = |alpha: &Rat| -> Rat {
        inst.edges
            .iter()
            .enumerate()
            .map(|(e, edge)| &d[e] * &edge.latency.eval(&(&x[e] + &(alpha * &d[e]))))
            .sum()
    };
    let one = Rat::one();
    if !derivative(&one).is_positive() {
        return one;
    }
    let zero = Rat::zero();
    if !derivative(&zero).is_negative() {
        return zero;
    }
    let mut cuts: Vec<Rat> = vec![zero.clone(), one.clone()];
    for (e, edge) in inst.edges.iter().enumerate() {
        if d[e].is_zero() {
            continue;
        }
        for (z, _) in edge.latency.knots() {
            let alpha = (z - &x[e]) / &d[e];
            if alpha.is_positive() && alpha < one {
                cuts.push(alpha);
            }
        }
    }
    cuts.sort();
    cuts.dedup();
    for w in cuts.windows(2) {
        let (ga, gb) = (derivative(&w[0]), derivative(&w[1]));
        if !ga.is_positive() && gb.is_positive() {
            if ga.is_zero() {
                return w[0].clone();
            }
            return &w[0] + &((&w[1] - &w[0]) * &(-&ga) / (&gb - &ga));
        }
    }
    one
}

/// Minimizes the potential by successive cheapest routings with exact line
/// search, stopping once the linearized-optimality gap `<cost(x), x - y>`
/// drops to the tolerance. The potential never increases along the
/// iterates. Without capacities the result satisfies the Wardrop
/// conditions at the same tolerance.
pub fn beckmann_solve(inst: &StaticInstance, tol: &Rat) -> Result<StaticFlow, StaticError> {
    let max_iterations = 500;
    let free_flow = inst.path_costs(&vec![Rat::zero(); inst.edges.len()]);
    let mut flow = cheapest_routing(inst, &free_flow)?;
    let mut gap = Rat::zero();
    for _ in 0..max_iterations {
        let loads = inst.edge_loads(&flow);
        let costs = inst.path_costs(&loads);
        let best = cheapest_routing(inst, &costs)?;
        gap = costs
            .iter()
            .zip(flow.x.iter().zip(&best.x))
            .map(|(c, (xa, ya))| c * &(xa - ya))
            .sum();
        if &gap <= tol {
            return Ok(flow);
        }
        let loads_y = inst.edge_loads(&best);
        let alpha = exact_step(inst, &loads, &loads_y);
        flow = StaticFlow {
            x: flow
                .x
                .iter()
                .zip(&best.x)
                .map(|(a, b)| a + &(&alpha * &(b - a)))
                .collect(),
        };
    }
    Err(StaticError::NotConverged {
        iterations: max_iterations,
        gap,
    })
}

// ---------------------------------------------------------------------------
// File format

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StaticEdgeFile {
    id: String,
    tail: String,
    head: String,
    latency: PwlFn,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    capacity: Option<Rat>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StaticPathFile {
    name: String,
    edges: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StaticCommodityFile {
    name: String,
    source: String,
    sink: String,
    demand: Rat,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    paths: Vec<StaticPathFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StaticInstanceFile {
    schema_version: u32,
    /// Distinguishes this family member from the time-dependent format.
    #[serde(rename = "static")]
    is_static: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    comment: Option<String>,
    nodes: Vec<String>,
    edges: Vec<StaticEdgeFile>,
    commodities: Vec<StaticCommodityFile>,
}

impl StaticInstanceFile {
    fn from_instance(inst: &StaticInstance) -> StaticInstanceFile {
        StaticInstanceFile {
            schema_version: SCHEMA_VERSION,
            is_static: true,
            comment: inst.comment.clone(),
            nodes: inst.nodes.clone(),
            edges: inst
                .edges
                .iter()
                .map(|e| StaticEdgeFile {
                    id: e.id.clone(),
                    tail: inst.nodes[e.tail].clone(),
                    head: inst.nodes[e.head].clone(),
                    latency: e.latency.clone(),
                    capacity: e.capacity.clone(),
                })
                .collect(),
            commodities: inst
                .commodities
                .iter()
                .enumerate()
                .map(|(ci, c)| StaticCommodityFile {
                    name: c.name.clone(),
                    source: inst.nodes[c.source].clone(),
                    sink: inst.nodes[c.sink].clone(),
                    demand: c.demand.clone(),
                    paths: inst
                        .paths_of(ci)
                        .map(|(_, p)| StaticPathFile {
                            name: p.name.clone(),
                            edges: p.edges.iter().map(|&e| inst.edges[e].id.clone()).collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    fn into_instance(self) -> Result<StaticInstance, StaticError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(StaticError::SchemaVersion(self.schema_version));
        }
        if !self.is_static {
            return Err(StaticError::Invalid(
                "file does not carry the static marker".into(),
            ));
        }
        let mut b = StaticInstanceBuilder::new();
        for n in &self.nodes {
            b.node_idx(n);
        }
        for e in &self.edges {
            b = b.edge(&e.id, &e.tail, &e.head, e.latency.clone());
            if let Some(cap) = &e.capacity {
                b = b.capacity(cap.clone());
            }
        }
        for c in &self.commodities {
            b = b.commodity(&c.name, &c.source, &c.sink, c.demand.clone());
            for p in &c.paths {
                let edge_refs: Vec<&str> = p.edges.iter().map(|s| s.as_str()).collect();
                b = b.path(&c.name, &p.name, &edge_refs);
            }
        }
        if let Some(comment) = &self.comment {
            b = b.comment(comment);
        }
        b.build()
    }
}
