//! Networks, commodities, demand modes, instances and flows, plus their
//! on-disk formats.
//!
//! An [`Instance`] owns the network, the commodities with their walks, the
//! planning horizon and the cost specification. Walks are flattened into a
//! single indexed list so that flows ([`WalkInflow`]) are plain dense vectors
//! of step functions. Instances are immutable after construction; all lookups
//! resolve to indices at build time.
//!
//! The file formats are JSON documents with a `schema_version` field; unknown
//! fields are rejected. Numbers are exact rationals written as strings (or
//! plain integers), never floats. A flow file must name the digest of the
//! instance it belongs to.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::timefn::{PwlFn, Rat, StepFn};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("unknown commodity `{0}`")]
    UnknownCommodity(String),
    #[error("unknown walk `{0}`")]
    UnknownWalk(String),
    #[error("duplicate {kind} id `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error("walk `{walk}`: edge `{edge}` does not continue the walk (expected tail `{expected}`)")]
    Disconnected {
        walk: String,
        edge: String,
        expected: String,
    },
    #[error("walk `{0}` has no edges")]
    EmptyWalk(String),
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("flow file references instance digest {expected} but the instance has digest {actual}")]
    DigestMismatch { expected: String, actual: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

/// What a finite-service edge can pass per unit of time; `Unbounded` encodes
/// an edge without a rate limit (pure transit).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ServiceRate {
    Finite(Rat),
    Unbounded,
}

impl ServiceRate {
    pub fn as_finite(&self) -> Option<&Rat> {
        match self {
            ServiceRate::Finite(v) => Some(v),
            ServiceRate::Unbounded => None,
        }
    }
}

/// Which flow measure of an edge is compared against its capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadKind {
    Volume,
    Queue,
    CumulativeInflow,
    InflowRate,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    pub free_flow_time: Rat,
    pub service_rate: ServiceRate,
    pub capacity: Option<PwlFn>,
    pub load_kind: LoadKind,
}

/// A route through the network; cycles and repeated edges are allowed.
#[derive(Debug, Clone)]
pub struct Walk {
    pub name: String,
    pub commodity: usize,
    pub edges: Vec<usize>,
    /// Hard cap on the inflow rate into this walk (required for volume demand).
    pub bound: Option<Rat>,
    /// Set on stay-home walks created by [`Instance::elastic_to_fixed_volume`]:
    /// the cost of such a walk is this function of the commodity's routed
    /// volume instead of a travel time.
    pub bypass_cost: Option<PwlFn>,
}

#[derive(Debug, Clone)]
pub enum Demand {
    /// Particles enter the network at this rate; walk choice is free.
    FixedRate(StepFn),
    /// A total volume chooses walks and departure times, subject to walk bounds.
    FixedVolume(Rat),
    /// Up to `volume` enters; the rest stays home at a cost given by the
    /// non-increasing `inverse_demand` function of the routed volume.
    Elastic { volume: Rat, inverse_demand: PwlFn },
}

#[derive(Debug, Clone)]
pub struct Commodity {
    pub name: String,
    pub source: usize,
    pub sink: usize,
    pub demand: Demand,
}

/// How a walk's effective delay is derived from its travel time.
#[derive(Debug, Clone)]
pub enum CostSpec {
    TravelTime,
    /// Travel time plus `penalty(arrival - target)`.
    SchedulePenalty { target: Rat, penalty: PwlFn },
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
    pub commodities: Vec<Commodity>,
    pub walks: Vec<Walk>,
    pub horizon: (Rat, Rat),
    pub cost: CostSpec,
    pub comment: Option<String>,
}

impl Instance {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn walk_index(&self, name: &str) -> Option<usize> {
        self.walks.iter().position(|w| w.name == name)
    }

    /// Walks of one commodity as `(global index, walk)` pairs.
    pub fn walks_of(&self, commodity: usize) -> impl Iterator<Item = (usize, &Walk)> {
        self.walks
            .iter()
            .enumerate()
            .filter(move |(_, w)| w.commodity == commodity)
    }

    pub fn horizon_length(&self) -> Rat {
        &self.horizon.1 - &self.horizon.0
    }

    /// Node sequence `v_1 .. v_{k+1}` visited by a walk.
    pub fn walk_nodes(&self, walk: usize) -> Vec<usize> {
        let w = &self.walks[walk];
        let mut nodes = Vec::with_capacity(w.edges.len() + 1);
        if let Some(&first) = w.edges.first() {
            nodes.push(self.edges[first].tail);
        }
        for &e in &w.edges {
            nodes.push(self.edges[e].head);
        }
        nodes
    }

    /// Stable content digest of the instance (canonical serialization).
    pub fn digest(&self) -> String {
        let file = InstanceFile::from_instance(self);
        let bytes = serde_json::to_vec(&file).expect("instance serializes");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        format!("{:x}", hasher.finalize())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from_instance(self)).expect("serializes")
    }

    pub fn from_json(s: &str) -> Result<Instance, ModelError> {
        let file: InstanceFile = serde_json::from_str(s)?;
        file.into_instance()
    }

    /// Replaces every elastic commodity by a volume commodity with an extra
    /// stay-home walk over a fresh unbounded edge from source to sink. The
    /// stay-home walk's cost is the commodity's inverse demand evaluated at
    /// the routed volume, and its inflow bound strictly exceeds the volume
    /// spread over the horizon, so staying home entirely is always feasible.
    /// Instances without elastic commodities are returned unchanged.
    pub fn elastic_to_fixed_volume(&self) -> Instance {
        if !self
            .commodities
            .iter()
            .any(|c| matches!(c.demand, Demand::Elastic { .. }))
        {
            return self.clone();
        }
        let mut out = self.clone();
        for ci in 0..out.commodities.len() {
            let (volume, inverse_demand) = match &out.commodities[ci].demand {
                Demand::Elastic {
                    volume,
                    inverse_demand,
                } => (volume.clone(), inverse_demand.clone()),
                _ => continue,
            };
            let c = &out.commodities[ci];
            let edge_id = format!("stay-home-{}", c.name);
            let walk_name = format!("{}.stay-home", c.name);
            let (source, sink) = (c.source, c.sink);
            out.edges.push(Edge {
                id: edge_id,
                tail: source,
                head: sink,
                free_flow_time: Rat::one(),
                service_rate: ServiceRate::Unbounded,
                capacity: None,
                load_kind: LoadKind::Volume,
            });
            let len = out.horizon_length();
            let bound = if volume.is_zero() {
                Rat::one()
            } else {
                Rat::from(2) * &volume / len
            };
            out.walks.push(Walk {
                name: walk_name,
                commodity: ci,
                edges: vec![out.edges.len() - 1],
                bound: Some(bound),
                bypass_cost: Some(inverse_demand),
            });
            out.commodities[ci].demand = Demand::FixedVolume(volume);
        }
        out
    }

    /// Keeps only the named walks (domination is asserted by the caller, not
    /// verified; the returned instance records that in its comment).
    pub fn restrict_to_dominating(&self, keep: &[&str]) -> Result<Instance, ModelError> {
        let mut out = self.clone();
        let kept: Vec<Walk> = self
            .walks
            .iter()
            .filter(|w| keep.contains(&w.name.as_str()))
            .cloned()
            .collect();
        for name in keep {
            if self.walk_index(name).is_none() {
                return Err(ModelError::UnknownWalk((*name).to_string()));
            }
        }
        for (ci, c) in self.commodities.iter().enumerate() {
            if !kept.iter().any(|w| w.commodity == ci) {
                return Err(ModelError::Invalid(format!(
                    "restriction leaves commodity `{}` without walks",
                    c.name
                )));
            }
        }
        out.walks = kept;
        let note = "walk set restricted; domination asserted by caller".to_string();
        out.comment = Some(match &self.comment {
            Some(c) => format!("{c}; {note}"),
            None => note,
        });
        Ok(out)
    }
}

/// A walk inflow: one rate function per walk, indexed like [`Instance::walks`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkInflow {
    pub rates: Vec<StepFn>,
}

impl WalkInflow {
    pub fn zero(inst: &Instance) -> Self {
        WalkInflow {
            rates: vec![StepFn::zero(); inst.walks.len()],
        }
    }

    pub fn from_named(
        inst: &Instance,
        named: &IndexMap<String, StepFn>,
    ) -> Result<Self, ModelError> {
        let mut flow = WalkInflow::zero(inst);
        for (name, f) in named {
            let idx = inst
                .walk_index(name)
                .ok_or_else(|| ModelError::UnknownWalk(name.clone()))?;
            flow.rates[idx] = f.clone();
        }
        Ok(flow)
    }

    pub fn to_named(&self, inst: &Instance) -> IndexMap<String, StepFn> {
        self.rates
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.is_zero())
            .map(|(i, f)| (inst.walks[i].name.clone(), f.clone()))
            .collect()
    }

    pub fn rate(&self, walk: usize) -> &StepFn {
        &self.rates[walk]
    }

    /// Total inflow rate of one commodity.
    pub fn commodity_rate(&self, inst: &Instance, commodity: usize) -> StepFn {
        inst.walks_of(commodity)
            .fold(StepFn::zero(), |acc, (i, _)| acc.add(&self.rates[i]))
    }

    /// Total volume routed by one commodity.
    pub fn commodity_volume(&self, inst: &Instance, commodity: usize) -> Rat {
        inst.walks_of(commodity)
            .map(|(i, _)| self.rates[i].total())
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Validation

/// One failed static check, identified by a stable code.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationIssue {
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, code: &'static str, message: String) {
        self.issues.push(ValidationIssue { code, message });
    }
}

/// Checks every statically decidable model assumption and reports violations;
/// an instance is usable iff the report is empty.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    if inst.horizon.0 >= inst.horizon.1 {
        report.push(
            "horizon-nondegenerate",
            format!(
                "horizon [{}, {}] is empty",
                inst.horizon.0, inst.horizon.1
            ),
        );
    }
    if inst.horizon.0.is_negative() {
        report.push(
            "horizon-nonnegative",
            format!("horizon starts at {} < 0", inst.horizon.0),
        );
    }
    for e in &inst.edges {
        if !e.free_flow_time.is_positive() {
            report.push(
                "positive-free-flow-time",
                format!("edge `{}` has free-flow time {}", e.id, e.free_flow_time),
            );
        }
        if let ServiceRate::Finite(nu) = &e.service_rate {
            if !nu.is_positive() {
                report.push(
                    "positive-service-rate",
                    format!("edge `{}` has service rate {}", e.id, nu),
                );
            }
        }
        if let Some(cap) = &e.capacity {
            if cap.global_min().is_negative() {
                report.push(
                    "nonnegative-capacity",
                    format!("edge `{}` has a negative capacity value", e.id),
                );
            }
            if e.load_kind == LoadKind::Queue && e.service_rate == ServiceRate::Unbounded {
                report.push(
                    "queue-load-needs-service-rate",
                    format!("edge `{}` caps its queue but has no service rate", e.id),
                );
            }
        }
    }
    for (ci, c) in inst.commodities.iter().enumerate() {
        let walks: Vec<(usize, &Walk)> = inst.walks_of(ci).collect();
        if walks.is_empty() {
            report.push(
                "nonempty-walk-set",
                format!("commodity `{}` has no walks", c.name),
            );
        }
        for (wi, w) in &walks {
            let nodes = inst.walk_nodes(*wi);
            if nodes.first() != Some(&c.source) || nodes.last() != Some(&c.sink) {
                report.push(
                    "walk-connects-od",
                    format!(
                        "walk `{}` does not run from `{}` to `{}`",
                        w.name, inst.nodes[c.source], inst.nodes[c.sink]
                    ),
                );
            }
        }
        match &c.demand {
            Demand::FixedRate(rate) => {
                if !rate.is_nonnegative() {
                    report.push(
                        "nonnegative-demand",
                        format!("commodity `{}` has a negative inflow rate", c.name),
                    );
                }
                if let Some((lo, hi)) = rate.support() {
                    if *lo < inst.horizon.0 || *hi > inst.horizon.1 {
                        report.push(
                            "demand-within-horizon",
                            format!("commodity `{}` injects flow outside the horizon", c.name),
                        );
                    }
                }
            }
            Demand::FixedVolume(q) | Demand::Elastic { volume: q, .. } => {
                if q.is_negative() {
                    report.push(
                        "nonnegative-demand",
                        format!("commodity `{}` has volume {}", c.name, q),
                    );
                }
                let mut capacity_total = Rat::zero();
                let mut all_bounded = true;
                for (_, w) in &walks {
                    match &w.bound {
                        Some(b) => {
                            if b.is_negative() {
                                report.push(
                                    "nonnegative-walk-bound",
                                    format!("walk `{}` has bound {}", w.name, b),
                                );
                            }
                            capacity_total += b * inst.horizon_length();
                        }
                        None => {
                            all_bounded = false;
                            report.push(
                                "walk-bound-required",
                                format!(
                                    "walk `{}` of volume commodity `{}` has no inflow bound",
                                    w.name, c.name
                                ),
                            );
                        }
                    }
                }
                if all_bounded && !walks.is_empty() && capacity_total < *q {
                    report.push(
                        "demand-satisfiable",
                        format!(
                            "commodity `{}` cannot place volume {} under its walk bounds",
                            c.name, q
                        ),
                    );
                }
                if let Demand::Elastic { inverse_demand, .. } = &c.demand {
                    let nondecreasing_ok = inverse_demand
                        .knots()
                        .windows(2)
                        .all(|w| w[0].1 >= w[1].1);
                    if !nondecreasing_ok {
                        report.push(
                            "nonincreasing-inverse-demand",
                            format!("commodity `{}` has an increasing inverse demand", c.name),
                        );
                    }
                }
            }
        }
    }
    if let CostSpec::SchedulePenalty { penalty, .. } = &inst.cost {
        if penalty.global_min().is_negative() {
            report.push(
                "nonnegative-penalty",
                "arrival penalty takes negative values".to_string(),
            );
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Membership

#[derive(Debug, Clone)]
pub enum Membership {
    InLambda,
    Violations(Vec<String>),
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::InLambda)
    }
}

/// Does `h` lie in the feasible walk-inflow set of the instance's demand mode?
/// Rate demand requires the per-commodity rates to sum to the prescribed rate
/// exactly; volume demand requires exact volume and the walk bounds. All
/// inflows must be non-negative with support inside the horizon.
pub fn membership(inst: &Instance, h: &WalkInflow) -> Membership {
    let mut violations = Vec::new();
    if h.rates.len() != inst.walks.len() {
        violations.push(format!(
            "flow has {} walk entries, instance has {} walks",
            h.rates.len(),
            inst.walks.len()
        ));
        return Membership::Violations(violations);
    }
    for (i, f) in h.rates.iter().enumerate() {
        if !f.is_nonnegative() {
            violations.push(format!("walk `{}` has a negative inflow rate", inst.walks[i].name));
        }
        if let Some((lo, hi)) = f.support() {
            if *lo < inst.horizon.0 || *hi > inst.horizon.1 {
                violations.push(format!(
                    "walk `{}` has inflow outside the horizon",
                    inst.walks[i].name
                ));
            }
        }
    }
    for (ci, c) in inst.commodities.iter().enumerate() {
        match &c.demand {
            Demand::FixedRate(rate) => {
                let total = h.commodity_rate(inst, ci);
                if &total != rate {
                    let gap = total.sub(rate);
                    let worst = gap
                        .values()
                        .iter()
                        .map(|v| v.abs())
                        .max()
                        .unwrap_or_else(Rat::zero);
                    violations.push(format!(
                        "commodity `{}`: walk rates do not sum to the demand rate (max gap {})",
                        c.name, worst
                    ));
                }
            }
            Demand::FixedVolume(q) => {
                let vol = h.commodity_volume(inst, ci);
                if vol != *q {
                    violations.push(format!(
                        "commodity `{}`: routed volume {} differs from demand {}",
                        c.name, vol, q
                    ));
                }
                for (wi, w) in inst.walks_of(ci) {
                    if let Some(b) = &w.bound {
                        let peak = h.rates[wi].max_level();
                        if &peak > b {
                            violations.push(format!(
                                "walk `{}` exceeds its inflow bound ({} > {})",
                                w.name, peak, b
                            ));
                        }
                    }
                }
            }
            Demand::Elastic { volume, .. } => {
                let vol = h.commodity_volume(inst, ci);
                if vol > *volume {
                    violations.push(format!(
                        "commodity `{}`: routed volume {} exceeds the elastic volume {}",
                        c.name, vol, volume
                    ));
                }
                for (wi, w) in inst.walks_of(ci) {
                    if let Some(b) = &w.bound {
                        let peak = h.rates[wi].max_level();
                        if &peak > b {
                            violations.push(format!(
                                "walk `{}` exceeds its inflow bound ({} > {})",
                                w.name, peak, b
                            ));
                        }
                    }
                }
            }
        }
    }
    if violations.is_empty() {
        Membership::InLambda
    } else {
        Membership::Violations(violations)
    }
}

// ---------------------------------------------------------------------------
// Builder

/// Incremental construction with id resolution; `build` performs the hard
/// structural checks (references, connectivity, uniqueness).
pub struct InstanceBuilder {
    nodes: Vec<String>,
    edges: Vec<Edge>,
    commodities: Vec<Commodity>,
    walks: Vec<(String, String, Vec<String>, Option<Rat>)>,
    horizon: (Rat, Rat),
    cost: CostSpec,
    comment: Option<String>,
}

impl InstanceBuilder {
    pub fn new(t0: Rat, tf: Rat) -> Self {
        InstanceBuilder {
            nodes: Vec::new(),
            edges: Vec::new(),
            commodities: Vec::new(),
            walks: Vec::new(),
            horizon: (t0, tf),
            cost: CostSpec::TravelTime,
            comment: None,
        }
    }

    fn node_idx(&mut self, id: &str) -> usize {
        if let Some(i) = self.nodes.iter().position(|n| n == id) {
            i
        } else {
            self.nodes.push(id.to_string());
            self.nodes.len() - 1
        }
    }

    pub fn comment(mut self, text: &str) -> Self {
        self.comment = Some(text.to_string());
        self
    }

    pub fn cost(mut self, cost: CostSpec) -> Self {
        self.cost = cost;
        self
    }

    pub fn edge(
        mut self,
        id: &str,
        tail: &str,
        head: &str,
        free_flow_time: Rat,
        service_rate: ServiceRate,
    ) -> Self {
        let tail = self.node_idx(tail);
        let head = self.node_idx(head);
        self.edges.push(Edge {
            id: id.to_string(),
            tail,
            head,
            free_flow_time,
            service_rate,
            capacity: None,
            load_kind: LoadKind::Volume,
        });
        self
    }

    /// Sets the capacity of the most recently added edge.
    pub fn capacity(mut self, cap: PwlFn) -> Self {
        self.edges
            .last_mut()
            .expect("capacity needs a preceding edge")
            .capacity = Some(cap);
        self
    }

    /// Sets the load kind of the most recently added edge.
    pub fn load_kind(mut self, kind: LoadKind) -> Self {
        self.edges
            .last_mut()
            .expect("load_kind needs a preceding edge")
            .load_kind = kind;
        self
    }

    pub fn commodity(mut self, name: &str, source: &str, sink: &str, demand: Demand) -> Self {
        let source = self.node_idx(source);
        let sink = self.node_idx(sink);
        self.commodities.push(Commodity {
            name: name.to_string(),
            source,
            sink,
            demand,
        });
        self
    }

    pub fn walk(self, commodity: &str, name: &str, edges: &[&str]) -> Self {
        self.walk_bounded_opt(commodity, name, edges, None)
    }

    pub fn walk_bounded(self, commodity: &str, name: &str, edges: &[&str], bound: Rat) -> Self {
        self.walk_bounded_opt(commodity, name, edges, Some(bound))
    }

    fn walk_bounded_opt(
        mut self,
        commodity: &str,
        name: &str,
        edges: &[&str],
        bound: Option<Rat>,
    ) -> Self {
        self.walks.push((
            commodity.to_string(),
            name.to_string(),
            edges.iter().map(|e| e.to_string()).collect(),
            bound,
        ));
        self
    }

    pub fn build(self) -> Result<Instance, ModelError> {
        let mut seen = std::collections::HashSet::new();
        for e in &self.edges {
            if !seen.insert(e.id.clone()) {
                return Err(ModelError::Duplicate {
                    kind: "edge",
                    id: e.id.clone(),
                });
            }
        }
        seen.clear();
        for c in &self.commodities {
            if !seen.insert(c.name.clone()) {
                return Err(ModelError::Duplicate {
                    kind: "commodity",
                    id: c.name.clone(),
                });
            }
        }
        seen.clear();
        let mut walks = Vec::new();
        for (cname, wname, edge_ids, bound) in &self.walks {
            if !seen.insert(wname.clone()) {
                return Err(ModelError::Duplicate {
                    kind: "walk",
                    id: wname.clone(),
                });
            }
            let ci = self
                .commodities
                .iter()
                .position(|c| &c.name == cname)
                .ok_or_else(|| ModelError::UnknownCommodity(cname.clone()))?;
            if edge_ids.is_empty() {
                return Err(ModelError::EmptyWalk(wname.clone()));
            }
            let mut edges = Vec::with_capacity(edge_ids.len());
            for id in edge_ids {
                let ei = self
                    .edges
                    .iter()
                    .position(|e| &e.id == id)
                    .ok_or_else(|| ModelError::UnknownEdge(id.clone()))?;
                if let Some(&prev) = edges.last() {
                    let prev: usize = prev;
                    if self.edges[prev].head != self.edges[ei].tail {
                        return Err(ModelError::Disconnected {
                            walk: wname.clone(),
                            edge: id.clone(),
                            expected: self.nodes[self.edges[prev].head].clone(),
                        });
                    }
                }
                edges.push(ei);
            }
            walks.push(Walk {
                name: wname.clone(),
                commodity: ci,
                edges,
                bound: bound.clone(),
                bypass_cost: None,
            });
        }
        Ok(Instance {
            nodes: self.nodes,
            edges: self.edges,
            commodities: self.commodities,
            walks,
            horizon: self.horizon,
            cost: self.cost,
            comment: self.comment,
        })
    }
}

// ---------------------------------------------------------------------------
// File formats

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeFile {
    id: String,
    tail: String,
    head: String,
    free_flow_time: Rat,
    /// A rational rate or the string "inf".
    service_rate: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    capacity: Option<PwlFn>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    load: Option<LoadKind>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WalkFile {
    name: String,
    edges: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    bound: Option<Rat>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    stay_home_cost: Option<PwlFn>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
enum DemandFile {
    FixedRate { rate: StepFn },
    FixedVolume { volume: Rat },
    Elastic { volume: Rat, inverse_demand: PwlFn },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommodityFile {
    name: String,
    source: String,
    sink: String,
    walks: Vec<WalkFile>,
    demand: DemandFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
enum CostFile {
    TravelTime,
    SchedulePenalty { target: Rat, penalty: PwlFn },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    schema_version: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    comment: Option<String>,
    horizon: (Rat, Rat),
    nodes: Vec<String>,
    edges: Vec<EdgeFile>,
    commodities: Vec<CommodityFile>,
    cost: CostFile,
}

impl InstanceFile {
    fn from_instance(inst: &Instance) -> InstanceFile {
        InstanceFile {
            schema_version: SCHEMA_VERSION,
            comment: inst.comment.clone(),
            horizon: inst.horizon.clone(),
            nodes: inst.nodes.clone(),
            edges: inst
                .edges
                .iter()
                .map(|e| EdgeFile {
                    id: e.id.clone(),
                    tail: inst.nodes[e.tail].clone(),
                    head: inst.nodes[e.head].clone(),
                    free_flow_time: e.free_flow_time.clone(),
                    service_rate: match &e.service_rate {
                        ServiceRate::Finite(v) => v.to_string(),
                        ServiceRate::Unbounded => "inf".to_string(),
                    },
                    capacity: e.capacity.clone(),
                    load: if e.load_kind == LoadKind::Volume {
                        None
                    } else {
                        Some(e.load_kind)
                    },
                })
                .collect(),
            commodities: inst
                .commodities
                .iter()
                .enumerate()
                .map(|(ci, c)| CommodityFile {
                    name: c.name.clone(),
                    source: inst.nodes[c.source].clone(),
                    sink: inst.nodes[c.sink].clone(),
                    walks: inst
                        .walks_of(ci)
                        .map(|(_, w)| WalkFile {
                            name: w.name.clone(),
                            edges: w.edges.iter().map(|&e| inst.edges[e].id.clone()).collect(),
                            bound: w.bound.clone(),
                            stay_home_cost: w.bypass_cost.clone(),
                        })
                        .collect(),
                    demand: match &c.demand {
                        Demand::FixedRate(rate) => DemandFile::FixedRate { rate: rate.clone() },
                        Demand::FixedVolume(q) => DemandFile::FixedVolume { volume: q.clone() },
                        Demand::Elastic {
                            volume,
                            inverse_demand,
                        } => DemandFile::Elastic {
                            volume: volume.clone(),
                            inverse_demand: inverse_demand.clone(),
                        },
                    },
                })
                .collect(),
            cost: match &inst.cost {
                CostSpec::TravelTime => CostFile::TravelTime,
                CostSpec::SchedulePenalty { target, penalty } => CostFile::SchedulePenalty {
                    target: target.clone(),
                    penalty: penalty.clone(),
                },
            },
        }
    }

    fn into_instance(self) -> Result<Instance, ModelError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion(self.schema_version));
        }
        let mut b = InstanceBuilder::new(self.horizon.0, self.horizon.1);
        for n in &self.nodes {
            b.node_idx(n);
        }
        for e in self.edges {
            if !self.nodes.contains(&e.tail) {
                return Err(ModelError::UnknownNode(e.tail));
            }
            if !self.nodes.contains(&e.head) {
                return Err(ModelError::UnknownNode(e.head));
            }
            let service = if e.service_rate.trim() == "inf" {
                ServiceRate::Unbounded
            } else {
                ServiceRate::Finite(
                    e.service_rate
                        .parse()
                        .map_err(|err| ModelError::Invalid(format!("{err}")))?,
                )
            };
            b = b.edge(&e.id, &e.tail, &e.head, e.free_flow_time, service);
            if let Some(cap) = e.capacity {
                b = b.capacity(cap);
            }
            if let Some(kind) = e.load {
                b = b.load_kind(kind);
            }
        }
        let mut stay_home = Vec::new();
        for c in self.commodities {
            b = b.commodity(&c.name, &c.source, &c.sink, match c.demand {
                DemandFile::FixedRate { rate } => Demand::FixedRate(rate),
                DemandFile::FixedVolume { volume } => Demand::FixedVolume(volume),
                DemandFile::Elastic {
                    volume,
                    inverse_demand,
                } => Demand::Elastic {
                    volume,
                    inverse_demand,
                },
            });
            for w in c.walks {
                let edge_refs: Vec<&str> = w.edges.iter().map(|s| s.as_str()).collect();
                b = match w.bound {
                    Some(bound) => b.walk_bounded(&c.name, &w.name, &edge_refs, bound),
                    None => b.walk(&c.name, &w.name, &edge_refs),
                };
                if let Some(cost) = w.stay_home_cost {
                    stay_home.push((w.name.clone(), cost));
                }
            }
        }
        if let CostFile::SchedulePenalty { target, penalty } = self.cost {
            b = b.cost(CostSpec::SchedulePenalty { target, penalty });
        }
        if let Some(comment) = self.comment {
            b = b.comment(&comment);
        }
        let mut inst = b.build()?;
        for (name, cost) in stay_home {
            let wi = inst.walk_index(&name).expect("walk just built");
            inst.walks[wi].bypass_cost = Some(cost);
        }
        Ok(inst)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowFile {
    schema_version: u32,
    instance_digest: String,
    inflows: IndexMap<String, StepFn>,
}

/// Serializes a flow against its instance (records the instance digest).
pub fn flow_to_json(inst: &Instance, h: &WalkInflow) -> String {
    let file = FlowFile {
        schema_version: SCHEMA_VERSION,
        instance_digest: inst.digest(),
        inflows: h.to_named(inst),
    };
    serde_json::to_string_pretty(&file).expect("serializes")
}

/// Parses a flow file and checks that it belongs to `inst`.
pub fn flow_from_json(inst: &Instance, s: &str) -> Result<WalkInflow, ModelError> {
    let file: FlowFile = serde_json::from_str(s)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(ModelError::SchemaVersion(file.schema_version));
    }
    let actual = inst.digest();
    if file.instance_digest != actual {
        return Err(ModelError::DigestMismatch {
            expected: file.instance_digest,
            actual,
        });
    }
    WalkInflow::from_named(inst, &file.inflows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn two_route_instance() -> Instance {
        let rate = StepFn::constant(rat!(0), rat!(2), rat!(2));
        InstanceBuilder::new(rat!(0), rat!(2))
            .edge("e1", "s", "w", rat!(2), ServiceRate::Finite(rat!(2)))
            .edge("e2", "s", "w", rat!(4), ServiceRate::Finite(rat!(2)))
            .edge("e3", "w", "t", rat!(1), ServiceRate::Unbounded)
            .capacity(PwlFn::constant(rat!(2)))
            .load_kind(LoadKind::InflowRate)
            .commodity("c1", "s", "t", Demand::FixedRate(rate))
            .walk("c1", "upper", &["e1", "e3"])
            .walk("c1", "lower", &["e2", "e3"])
            .build()
            .unwrap()
    }

    #[test]
    fn builder_resolves_and_validates() {
        let inst = two_route_instance();
        assert_eq!(inst.nodes, vec!["s", "w", "t"]);
        assert_eq!(inst.walks.len(), 2);
        assert_eq!(inst.walk_nodes(0), vec![0, 1, 2]);
        assert!(validate_instance(&inst).is_valid());
    }

    #[test]
    fn builder_rejects_disconnected_walks() {
        let err = InstanceBuilder::new(rat!(0), rat!(1))
            .edge("a", "s", "v", rat!(1), ServiceRate::Unbounded)
            .edge("b", "w", "t", rat!(1), ServiceRate::Unbounded)
            .commodity("c", "s", "t", Demand::FixedVolume(rat!(1)))
            .walk("c", "p", &["a", "b"])
            .build()
            .unwrap_err();
        assert!(matches!(err, ModelError::Disconnected { .. }));
    }

    #[test]
    fn validation_flags_boundary_violations() {
        let inst = InstanceBuilder::new(rat!(0), rat!(3))
            .edge("e", "s", "t", rat!(0), ServiceRate::Finite(rat!(0)))
            .commodity("c", "s", "t", Demand::FixedVolume(rat!(10)))
            .walk_bounded("c", "p", &["e"], rat!(1))
            .build()
            .unwrap();
        let report = validate_instance(&inst);
        let codes: Vec<_> = report.issues.iter().map(|i| i.code).collect();
        assert!(codes.contains(&"positive-free-flow-time"));
        assert!(codes.contains(&"positive-service-rate"));
        // volume 10 cannot fit under bound 1 over a horizon of length 3
        assert!(codes.contains(&"demand-satisfiable"));
    }

    #[test]
    fn membership_checks_rate_demand() {
        let inst = two_route_instance();
        let mut h = WalkInflow::zero(&inst);
        h.rates[0] = StepFn::constant(rat!(0), rat!(2), rat!(2));
        assert!(membership(&inst, &h).is_member());
        h.rates[0] = StepFn::constant(rat!(0), rat!(2), rat!(1));
        match membership(&inst, &h) {
            Membership::Violations(v) => assert_eq!(v.len(), 1),
            Membership::InLambda => panic!("expected violation"),
        }
        // split across both walks is fine
        h.rates[1] = StepFn::constant(rat!(0), rat!(2), rat!(1));
        assert!(membership(&inst, &h).is_member());
    }

    #[test]
    fn elastic_reduction_adds_stay_home_walk() {
        let theta = PwlFn::new(vec![(rat!(0), rat!(10)), (rat!(4), rat!(2))]).unwrap();
        let inst = InstanceBuilder::new(rat!(0), rat!(3))
            .edge("e", "s", "t", rat!(1), ServiceRate::Finite(rat!(1)))
            .commodity(
                "c",
                "s",
                "t",
                Demand::Elastic {
                    volume: rat!(4),
                    inverse_demand: theta.clone(),
                },
            )
            .walk_bounded("c", "p", &["e"], rat!(10))
            .build()
            .unwrap();
        let reduced = inst.elastic_to_fixed_volume();
        assert_eq!(reduced.walks.len(), 2);
        let stay = &reduced.walks[1];
        assert_eq!(stay.bypass_cost, Some(theta));
        // bound strictly exceeds volume / horizon length = 4/3
        assert!(stay.bound.clone().unwrap() > Rat::new(4, 3));
        assert!(matches!(
            reduced.commodities[0].demand,
            Demand::FixedVolume(_)
        ));
        // idempotent on its image, identity without elastic commodities
        let again = reduced.elastic_to_fixed_volume();
        assert_eq!(again.walks.len(), reduced.walks.len());
        let plain = two_route_instance();
        assert_eq!(
            plain.elastic_to_fixed_volume().walks.len(),
            plain.walks.len()
        );
    }

    #[test]
    fn instance_file_round_trip_and_digest() {
        let inst = two_route_instance();
        let json = inst.to_json();
        let back = Instance::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json);
        assert_eq!(back.digest(), inst.digest());
        assert!(Instance::from_json("{}").is_err());
        let with_unknown = json.replace("\"schema_version\"", "\"extra\": 1, \"schema_version\"");
        assert!(Instance::from_json(&with_unknown).is_err());
    }

    #[test]
    fn flow_file_round_trip_checks_digest() {
        let inst = two_route_instance();
        let mut h = WalkInflow::zero(&inst);
        h.rates[0] = StepFn::constant(rat!(0), rat!(2), rat!(2));
        let json = flow_to_json(&inst, &h);
        let back = flow_from_json(&inst, &json).unwrap();
        assert_eq!(back, h);
        let other = InstanceBuilder::new(rat!(0), rat!(1))
            .edge("e", "s", "t", rat!(1), ServiceRate::Unbounded)
            .commodity("c", "s", "t", Demand::FixedVolume(rat!(0)))
            .walk_bounded("c", "p", &["e"], rat!(1))
            .build()
            .unwrap();
        assert!(matches!(
            flow_from_json(&other, &json),
            Err(ModelError::DigestMismatch { .. })
        ));
    }

    #[test]
    fn restriction_keeps_named_walks() {
        let inst = two_route_instance();
        let restricted = inst.restrict_to_dominating(&["upper"]).unwrap();
        assert_eq!(restricted.walks.len(), 1);
        assert!(restricted.comment.unwrap().contains("asserted"));
        assert!(inst.restrict_to_dominating(&[]).is_err());
        assert!(inst.restrict_to_dominating(&["nope"]).is_err());
    }
}
