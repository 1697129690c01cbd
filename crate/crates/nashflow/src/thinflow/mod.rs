//! Thin flows: the static flows and label derivatives that describe a Nash
//! flow over time locally, their exact solvers and a verifier for the
//! multi-commodity conditions.

mod decompose;
mod solver;
mod verify;

use num::{Signed, Zero};
use serde_json::json;

pub use decompose::{decompose, decompose_by_source, path_decomposition, PathFlow};
pub use solver::{
    solve_thinflow_multisource, solve_thinflow_single, ThinFlowSource, MAX_ACTIVE_ARCS,
};
pub(crate) use solver::solve_single_with_value;
pub use verify::{
    verify_multicommodity_thinflow, verify_multicommodity_thinflow_with, ThinFlowCertificate,
    ThinFlowViolation, VerifyChecks,
};

use crate::netmodel::{ArcId, Instance, NodeId};
use crate::rational::{format, Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ThinFlowError {
    #[error("no active path from a source to the sink")]
    NoSinkPath,
    #[error("active arcs contain a cycle")]
    Cyclic,
    #[error("{arcs} active arcs exceed the solver limit of {limit}")]
    SizeLimitExceeded { arcs: usize, limit: usize },
    #[error("node {node} is not reachable from any source over active arcs")]
    UnreachableNode { node: String },
    #[error("resetting arc {arc} is not active")]
    ResettingInactive { arc: String },
    #[error("no arc-state assignment satisfies the thin-flow conditions")]
    NoSolution,
    #[error("new arc of commodity {commodity} carries no flow")]
    NewArcInactive { commodity: usize },
}

/// Static flow `x'` on the active arcs with label derivatives `l'`.
///
/// Single-source thin flows have one source with supply equal to the flow
/// value; multi-source ones split a unit supply so that `l'_{s_j} = x'_j / r_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThinFlow {
    pub active: Vec<ArcId>,
    pub resetting: Vec<ArcId>,
    /// `x'_e` for every arc of the instance, zero off the active set.
    pub flow: Vec<Q>,
    /// `l'_v`; `None` for nodes not reached by active arcs.
    pub labels: Vec<Option<Q>>,
    pub sources: Vec<ThinFlowSource>,
    /// `x'_j` per source.
    pub supplies: Vec<Q>,
    pub sink: NodeId,
}

impl ThinFlow {
    pub fn label(&self, v: NodeId) -> Option<&Q> {
        self.labels[v.0].as_ref()
    }

    pub fn is_active(&self, e: ArcId) -> bool {
        self.active.contains(&e)
    }

    pub fn is_resetting(&self, e: ArcId) -> bool {
        self.resetting.contains(&e)
    }

    pub fn value(&self) -> Q {
        self.supplies.iter().sum()
    }

    /// Stress `rho_e` of an active arc without foreign flow.
    pub fn stress_of(&self, inst: &Instance, e: ArcId) -> Option<Q> {
        let a = inst.arc(e);
        let lu = self.label(a.tail)?;
        Some(stress(
            lu,
            &self.flow[e.0],
            &Q::zero(),
            &a.capacity,
            self.is_resetting(e),
        ))
    }

    pub fn to_json(&self, inst: &Instance) -> serde_json::Value {
        let flow: serde_json::Map<_, _> = self
            .active
            .iter()
            .map(|&e| (inst.arc(e).id.clone(), json!(format(&self.flow[e.0]))))
            .collect();
        let labels: serde_json::Map<_, _> = inst
            .nodes()
            .filter_map(|v| {
                self.label(v)
                    .map(|l| (inst.node_name(v).to_string(), json!(format(l))))
            })
            .collect();
        let arcs = |set: &[ArcId]| -> Vec<String> {
            set.iter().map(|&e| inst.arc(e).id.clone()).collect()
        };
        let sources: Vec<_> = self
            .sources
            .iter()
            .zip(&self.supplies)
            .map(|(s, x)| {
                json!({
                    "node": inst.node_name(s.node),
                    "rate": format(&s.rate),
                    "supply": format(x),
                })
            })
            .collect();
        json!({
            "flow": flow,
            "labels": labels,
            "active": arcs(&self.active),
            "resetting": arcs(&self.resetting),
            "sources": sources,
            "sink": inst.node_name(self.sink),
        })
    }
}

/// `(x' + y') / nu` on resetting arcs, otherwise at least `l'_u`.
pub fn stress(tail_label: &Q, flow: &Q, foreign: &Q, capacity: &Q, resetting: bool) -> Q {
    let w = (flow + foreign) / capacity;
    if resetting || w > *tail_label {
        w
    } else {
        debug_assert!(!tail_label.is_negative());
        tail_label.clone()
    }
}
