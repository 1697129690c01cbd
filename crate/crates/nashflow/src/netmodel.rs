//! Networks with transit times and capacities, and the commodities routed through them.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, serde_opt_q, serde_q, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArcId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CommodityId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Mode {
    #[default]
    General,
    CommonOrigin,
    CommonDestination,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::General => "general",
            Mode::CommonOrigin => "commonOrigin",
            Mode::CommonDestination => "commonDestination",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawArc {
    pub id: String,
    pub tail: String,
    pub head: String,
    #[serde(with = "serde_q")]
    pub transit: Q,
    #[serde(with = "serde_q")]
    pub capacity: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCommodity {
    pub id: String,
    pub origin: String,
    pub destination: String,
    #[serde(with = "serde_q")]
    pub rate: Q,
    #[serde(with = "serde_q")]
    pub inflow_start: Q,
    #[serde(with = "serde_opt_q", default)]
    pub inflow_end: Option<Q>,
}

/// Instance as read from disk, before any checking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInstance {
    pub nodes: Vec<String>,
    pub arcs: Vec<RawArc>,
    #[serde(default)]
    pub commodities: Vec<RawCommodity>,
    #[serde(default)]
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub id: String,
    pub tail: NodeId,
    pub head: NodeId,
    pub transit: Q,
    pub capacity: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Commodity {
    pub id: String,
    pub origin: NodeId,
    pub destination: NodeId,
    pub rate: Q,
    pub inflow_start: Q,
    pub inflow_end: Option<Q>,
}

impl Commodity {
    /// Length of the particle domain, `None` when unbounded.
    pub fn particle_bound(&self) -> Option<Q> {
        self.inflow_end
            .as_ref()
            .map(|b| (b - &self.inflow_start) * &self.rate)
    }
}

/// A validated instance. Immutable; construct with [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    nodes: Vec<String>,
    arcs: Vec<Arc>,
    commodities: Vec<Commodity>,
    mode: Mode,
    out_arcs: Vec<Vec<ArcId>>,
    in_arcs: Vec<Vec<ArcId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("commodity {0} has no path from origin to destination")]
    MissingPath(String),
    #[error("arc {0} has non-positive capacity")]
    NonPositiveCapacity(String),
    #[error("arc {0} has negative transit time")]
    NegativeTransit(String),
    #[error("a directed cycle has zero total transit time")]
    CycleWithZeroTransit,
    #[error("instance is not consistent with mode {0}")]
    ModeMismatch(Mode),
    #[error("arc {0} is a self-loop")]
    SelfLoop(String),
    #[error("{element} refers to unknown node {node}")]
    UnknownNode { element: String, node: String },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("commodity {0} has non-positive rate")]
    NonPositiveRate(String),
    #[error("commodity {0} has an invalid inflow interval")]
    BadInflowInterval(String),
}

impl Violation {
    /// Variant name, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::MissingPath(_) => "MissingPath",
            Violation::NonPositiveCapacity(_) => "NonPositiveCapacity",
            Violation::NegativeTransit(_) => "NegativeTransit",
            Violation::CycleWithZeroTransit => "CycleWithZeroTransit",
            Violation::ModeMismatch(_) => "ModeMismatch",
            Violation::SelfLoop(_) => "SelfLoop",
            Violation::UnknownNode { .. } => "UnknownNode",
            Violation::DuplicateId { .. } => "DuplicateId",
            Violation::NonPositiveRate(_) => "NonPositiveRate",
            Violation::BadInflowInterval(_) => "BadInflowInterval",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("cannot read instance: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed instance: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid instance: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("instance is not in common-origin mode")]
    NotCommonOrigin,
}

fn check_unique<'a>(
    kind: &'static str,
    ids: impl Iterator<Item = &'a String>,
    out: &mut Vec<Violation>,
) {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            out.push(Violation::DuplicateId {
                kind,
                id: id.clone(),
            });
        }
    }
}

/// Checks every structural invariant, returning all violations found.
pub fn validate_instance(raw: &RawInstance) -> Result<Instance, Vec<Violation>> {
    let mut bad = Vec::new();
    check_unique("node", raw.nodes.iter(), &mut bad);
    check_unique("arc", raw.arcs.iter().map(|a| &a.id), &mut bad);
    check_unique("commodity", raw.commodities.iter().map(|c| &c.id), &mut bad);
    let index: HashMap<&str, NodeId> = raw
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), NodeId(i)))
        .collect();
    let mut lookup = |element: &str, node: &str| -> Option<NodeId> {
        let found = index.get(node).copied();
        if found.is_none() {
            bad.push(Violation::UnknownNode {
                element: element.to_string(),
                node: node.to_string(),
            });
        }
        found
    };

    let mut arcs = Vec::with_capacity(raw.arcs.len());
    for a in &raw.arcs {
        let tail = lookup(&a.id, &a.tail);
        let head = lookup(&a.id, &a.head);
        if let (Some(tail), Some(head)) = (tail, head) {
            arcs.push(Arc {
                id: a.id.clone(),
                tail,
                head,
                transit: a.transit.clone(),
                capacity: a.capacity.clone(),
            });
        }
    }
    let mut commodities = Vec::with_capacity(raw.commodities.len());
    for c in &raw.commodities {
        let origin = lookup(&c.id, &c.origin);
        let destination = lookup(&c.id, &c.destination);
        if let (Some(origin), Some(destination)) = (origin, destination) {
            commodities.push(Commodity {
                id: c.id.clone(),
                origin,
                destination,
                rate: c.rate.clone(),
                inflow_start: c.inflow_start.clone(),
                inflow_end: c.inflow_end.clone(),
            });
        }
    }

    for a in &arcs {
        if !a.capacity.is_positive() {
            bad.push(Violation::NonPositiveCapacity(a.id.clone()));
        }
        if a.transit.is_negative() {
            bad.push(Violation::NegativeTransit(a.id.clone()));
        }
        if a.tail == a.head {
            bad.push(Violation::SelfLoop(a.id.clone()));
        }
    }
    for c in &commodities {
        if !c.rate.is_positive() {
            bad.push(Violation::NonPositiveRate(c.id.clone()));
        }
        let end_ok = c.inflow_end.as_ref().map_or(true, |b| *b > c.inflow_start);
        if c.inflow_start.is_negative() || !end_ok {
            bad.push(Violation::BadInflowInterval(c.id.clone()));
        }
    }

    let inst = Instance::assemble(raw.nodes.clone(), arcs, commodities, raw.mode);
    for c in &inst.commodities {
        if transit_distances(&inst, c.origin)[c.destination.0].is_none() {
            bad.push(Violation::MissingPath(c.id.clone()));
        }
    }
    let consistent = match inst.mode {
        Mode::General => true,
        Mode::CommonOrigin => inst.commodities.windows(2).all(|w| w[0].origin == w[1].origin),
        Mode::CommonDestination => inst
            .commodities
            .windows(2)
            .all(|w| w[0].destination == w[1].destination),
    };
    if !consistent {
        bad.push(Violation::ModeMismatch(inst.mode));
    }
    if inst.mode == Mode::CommonDestination && !inst.zero_transit_acyclic() {
        bad.push(Violation::CycleWithZeroTransit);
    }

    if bad.is_empty() {
        Ok(inst)
    } else {
        Err(bad)
    }
}

impl Instance {
    fn assemble(nodes: Vec<String>, arcs: Vec<Arc>, commodities: Vec<Commodity>, mode: Mode) -> Self {
        let mut out_arcs = vec![Vec::new(); nodes.len()];
        let mut in_arcs = vec![Vec::new(); nodes.len()];
        for (i, a) in arcs.iter().enumerate() {
            out_arcs[a.tail.0].push(ArcId(i));
            in_arcs[a.head.0].push(ArcId(i));
        }
        Instance {
            nodes,
            arcs,
            commodities,
            mode,
            out_arcs,
            in_arcs,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, NetError> {
        let raw: RawInstance = serde_json::from_str(text)?;
        validate_instance(&raw).map_err(NetError::Invalid)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_raw(&self) -> RawInstance {
        let name = |v: NodeId| self.nodes[v.0].clone();
        RawInstance {
            nodes: self.nodes.clone(),
            arcs: self
                .arcs
                .iter()
                .map(|a| RawArc {
                    id: a.id.clone(),
                    tail: name(a.tail),
                    head: name(a.head),
                    transit: a.transit.clone(),
                    capacity: a.capacity.clone(),
                })
                .collect(),
            commodities: self
                .commodities
                .iter()
                .map(|c| RawCommodity {
                    id: c.id.clone(),
                    origin: name(c.origin),
                    destination: name(c.destination),
                    rate: c.rate.clone(),
                    inflow_start: c.inflow_start.clone(),
                    inflow_end: c.inflow_end.clone(),
                })
                .collect(),
            mode: self.mode,
        }
    }

    /// Copy with the commodity list replaced; the result is re-validated.
    pub fn with_commodities(&self, commodities: Vec<Commodity>) -> Result<Self, Vec<Violation>> {
        let mut raw = self.to_raw();
        raw.commodities = Instance::assemble(self.nodes.clone(), vec![], commodities, self.mode)
            .to_raw()
            .commodities;
        validate_instance(&raw)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn commodity_count(&self) -> usize {
        self.commodities.len()
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.nodes[v.0]
    }

    pub fn node_names(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n == name).map(NodeId)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn arc(&self, e: ArcId) -> &Arc {
        &self.arcs[e.0]
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc_ids(&self) -> impl Iterator<Item = ArcId> {
        (0..self.arcs.len()).map(ArcId)
    }

    pub fn arc_by_id(&self, id: &str) -> Option<ArcId> {
        self.arcs.iter().position(|a| a.id == id).map(ArcId)
    }

    pub fn commodity(&self, j: CommodityId) -> &Commodity {
        &self.commodities[j.0]
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn commodity_ids(&self) -> impl Iterator<Item = CommodityId> {
        (0..self.commodities.len()).map(CommodityId)
    }

    pub fn commodity_by_id(&self, id: &str) -> Option<CommodityId> {
        self.commodities
            .iter()
            .position(|c| c.id == id)
            .map(CommodityId)
    }

    pub fn out_arcs(&self, v: NodeId) -> &[ArcId] {
        &self.out_arcs[v.0]
    }

    pub fn in_arcs(&self, v: NodeId) -> &[ArcId] {
        &self.in_arcs[v.0]
    }

    pub fn min_capacity(&self) -> Option<Q> {
        self.arcs.iter().map(|a| a.capacity.clone()).min()
    }

    pub fn min_transit(&self) -> Option<Q> {
        self.arcs.iter().map(|a| a.transit.clone()).min()
    }

    pub fn total_rate(&self) -> Q {
        self.commodities.iter().map(|c| c.rate.clone()).sum()
    }

    /// True when the subgraph of zero-transit arcs has no directed cycle.
    pub fn zero_transit_acyclic(&self) -> bool {
        self.topological_order(|a| a.transit.is_zero()).is_some()
    }

    /// Topological order of the subgraph of arcs passing `keep`, if acyclic.
    pub fn topological_order(&self, keep: impl Fn(&Arc) -> bool) -> Option<Vec<NodeId>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for a in self.arcs.iter().filter(|a| keep(a)) {
            indeg[a.head.0] += 1;
        }
        let mut stack: Vec<usize> = (0..n).rev().filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = stack.pop() {
            order.push(NodeId(v));
            for &e in &self.out_arcs[v] {
                let a = &self.arcs[e.0];
                if keep(a) {
                    indeg[a.head.0] -= 1;
                    if indeg[a.head.0] == 0 {
                        stack.push(a.head.0);
                    }
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

/// Shortest transit-time distances from `from`; `None` marks unreachable nodes.
pub fn transit_distances(inst: &Instance, from: NodeId) -> Vec<Option<Q>> {
    let mut dist: Vec<Option<Q>> = vec![None; inst.node_count()];
    let mut heap = BinaryHeap::new();
    dist[from.0] = Some(Q::zero());
    heap.push(Reverse((Q::zero(), from.0)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if dist[v].as_ref().map_or(false, |best| *best < d) {
            continue;
        }
        for &e in inst.out_arcs(NodeId(v)) {
            let a = inst.arc(e);
            let nd = &d + &a.transit;
            if dist[a.head.0].as_ref().map_or(true, |cur| nd < *cur) {
                dist[a.head.0] = Some(nd.clone());
                heap.push(Reverse((nd, a.head.0)));
            }
        }
    }
    dist
}

/// Single-commodity instance obtained by joining all sinks to a new super sink.
#[derive(Debug, Clone)]
pub struct SuperSinkExtension {
    pub instance: Instance,
    pub sink: NodeId,
    /// New arc `t_j -> sink` per original commodity.
    pub new_arcs: Vec<ArcId>,
    pub total_rate: Q,
    pub sigma: Q,
    pub distances: Vec<Q>,
}

fn fresh_name(taken: &HashSet<String>, base: &str) -> String {
    let mut name = base.to_string();
    let mut k = 1;
    while taken.contains(&name) {
        name = format!("{base}_{k}");
        k += 1;
    }
    name
}

/// Adds a super sink with arcs of transit `d_max - d_j` and capacity
/// `r_j * sigma / (2 r)` where `sigma = min(min capacity, r)`.
pub fn extend_with_super_sink(inst: &Instance) -> Result<SuperSinkExtension, NetError> {
    if inst.mode != Mode::CommonOrigin || inst.commodities.is_empty() {
        return Err(NetError::NotCommonOrigin);
    }
    let source = inst.commodities[0].origin;
    let dist = transit_distances(inst, source);
    let deltas: Vec<Q> = inst
        .commodities
        .iter()
        .map(|c| {
            dist[c.destination.0]
                .clone()
                .ok_or_else(|| NetError::Invalid(vec![Violation::MissingPath(c.id.clone())]))
        })
        .collect::<Result<_, _>>()?;
    let d_max = deltas.iter().max().unwrap().clone();
    let r = inst.total_rate();
    let nu_min = inst.min_capacity().unwrap_or_else(|| r.clone());
    let sigma = rational::min_q(&nu_min, &r).clone();

    let mut raw = inst.to_raw();
    let node_names: HashSet<String> = raw.nodes.iter().cloned().collect();
    let sink_name = fresh_name(&node_names, "super_sink");
    raw.nodes.push(sink_name.clone());
    let mut arc_names: HashSet<String> = raw.arcs.iter().map(|a| a.id.clone()).collect();
    let mut new_arcs = Vec::with_capacity(inst.commodities.len());
    for (c, delta) in inst.commodities.iter().zip(&deltas) {
        let id = fresh_name(&arc_names, &format!("to_super_sink_{}", c.id));
        arc_names.insert(id.clone());
        new_arcs.push(ArcId(raw.arcs.len()));
        raw.arcs.push(RawArc {
            id,
            tail: inst.node_name(c.destination).to_string(),
            head: sink_name.clone(),
            transit: &d_max - delta,
            capacity: &c.rate * &sigma / (rational::q(2) * &r),
        });
    }
    let commodity_names: HashSet<String> = inst.commodities.iter().map(|c| c.id.clone()).collect();
    raw.commodities = vec![RawCommodity {
        id: fresh_name(&commodity_names, "all"),
        origin: inst.node_name(source).to_string(),
        destination: sink_name,
        rate: r.clone(),
        inflow_start: Q::zero(),
        inflow_end: None,
    }];
    raw.mode = Mode::General;
    let extended = validate_instance(&raw).map_err(NetError::Invalid)?;
    let sink = NodeId(extended.node_count() - 1);
    Ok(SuperSinkExtension {
        instance: extended,
        sink,
        new_arcs,
        total_rate: r,
        sigma,
        distances: deltas,
    })
}
