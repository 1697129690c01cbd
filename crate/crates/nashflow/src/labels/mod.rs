//! Earliest-arrival labels over particles, active and resetting arcs, waiting
//! times recovered from labels, foreign-flow derivatives and label extension.

mod bellman;
mod extend;
mod foreign;

use num::{Signed, Zero};
use serde_json::json;

pub use bellman::{earliest_arrival, earliest_arrival_all};
pub use extend::{extend_labels, ExtendOptions};
pub use foreign::{foreign_flow, ForeignFlow};

use crate::loading::QueueProfile;
use crate::netmodel::{ArcId, CommodityId, Instance, NodeId};
use crate::rational::{Show, Q};
use crate::timefn::{pwl_to_json, PwlFunction};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelError {
    #[error("zero-transit arcs form a cycle")]
    CyclicZeroTransit,
    #[error("time {} is outside the label range of commodity {commodity}", Show(.theta))]
    ThetaOutsideRange { commodity: String, theta: Q },
    #[error("labels of commodity {commodity} never reach time {}", Show(.theta))]
    ValueNotAttained { commodity: String, theta: Q },
    #[error("arc {arc} has zero transit time")]
    ZeroTransitArc { arc: String },
    #[error("label extension exceeded the budget of {limit} breakpoints")]
    BreakpointBudgetExceeded { limit: usize },
    #[error("no active incoming arc for commodity {commodity} at node {node}")]
    NoActiveArc { commodity: String, node: String },
    #[error("strategy table has the wrong shape")]
    Shape,
}

/// Labels `l_{j,v}` of one commodity; `None` for nodes it cannot reach.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommodityLabels {
    pub commodity: CommodityId,
    pub nodes: Vec<Option<PwlFunction>>,
    /// Largest particle the labels are meant for.
    pub domain_end: Option<Q>,
}

impl CommodityLabels {
    pub fn label(&self, v: NodeId) -> Option<&PwlFunction> {
        self.nodes[v.0].as_ref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub commodities: Vec<CommodityLabels>,
}

impl LabelSet {
    pub fn commodity(&self, j: CommodityId) -> &CommodityLabels {
        &self.commodities[j.0]
    }

    pub fn label(&self, j: CommodityId, v: NodeId) -> Option<&PwlFunction> {
        self.commodities[j.0].label(v)
    }

    pub fn to_json(&self, inst: &Instance) -> serde_json::Value {
        let commodities: Vec<_> = self
            .commodities
            .iter()
            .map(|c| {
                let nodes: serde_json::Map<_, _> = inst
                    .nodes()
                    .filter_map(|v| {
                        c.label(v)
                            .map(|l| (inst.node_name(v).to_string(), pwl_to_json(l)))
                    })
                    .collect();
                json!({
                    "commodity": inst.commodity(c.commodity).id,
                    "domain_end": c.domain_end.as_ref().map(crate::rational::format),
                    "labels": nodes,
                })
            })
            .collect();
        json!({ "commodities": commodities })
    }
}

/// Active and resetting arcs of one commodity at one particle.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ArcStatus {
    pub active: Vec<ArcId>,
    pub resetting: Vec<ArcId>,
}

/// Arc `uv` is active when `l_v(phi) = T_e(l_u(phi))` and resetting when its
/// queue is positive at `l_u(phi)`.
pub fn arc_status(
    inst: &Instance,
    labels: &CommodityLabels,
    profile: &QueueProfile,
    phi: &Q,
) -> ArcStatus {
    let mut status = ArcStatus::default();
    for e in inst.arc_ids() {
        let a = inst.arc(e);
        let (Some(lu), Some(lv)) = (labels.label(a.tail), labels.label(a.head)) else {
            continue;
        };
        let theta = lu.eval(phi);
        let queue = profile.arc(e);
        if lv.eval(phi) == queue.exit.eval(&theta) {
            status.active.push(e);
        }
        if queue.waiting.eval(&theta).is_positive() {
            status.resetting.push(e);
        }
    }
    status
}

/// Waiting time on `e` at time `theta` recovered from the labels of all
/// commodities: the largest gap `l_v - l_u - transit` over the first particle
/// of each commodity reaching the tail at `theta`.
pub fn waiting_from_labels(
    inst: &Instance,
    labels: &LabelSet,
    e: ArcId,
    theta: &Q,
) -> Result<Q, LabelError> {
    let a = inst.arc(e);
    let mut best = Q::zero();
    for c in &labels.commodities {
        let (Some(lu), Some(lv)) = (c.label(a.tail), c.label(a.head)) else {
            continue;
        };
        let phi = lu
            .first_preimage(theta)
            .ok_or_else(|| LabelError::ThetaOutsideRange {
                commodity: inst.commodity(c.commodity).id.clone(),
                theta: theta.clone(),
            })?;
        let gap = lv.eval(&phi) - theta - &a.transit;
        if gap > best {
            best = gap;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests;
