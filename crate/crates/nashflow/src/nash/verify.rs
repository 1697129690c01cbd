use num::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::NashFlowOverTime;
use crate::labels::{earliest_arrival_all, LabelSet};
use crate::loading::{check_feasibility, FeasibilityViolation, FlowOverTime, QueueProfile};
use crate::netmodel::{ArcId, CommodityId, Instance};
use crate::rational::{min_q, serde_q, Show, Q};
use crate::thinflow::{verify_multicommodity_thinflow, ThinFlowCertificate, ThinFlowViolation};
use crate::timefn::{pwl_to_json, PwlFunction, StepFunction};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[serde(tag = "kind")]
pub enum NashViolation {
    #[error("flow is not feasible ({} violations)", .violations.len())]
    NotFeasible { violations: Vec<FeasibilityViolation> },
    #[error("commodity {commodity} on arc {arc}: cumulative inflow and outflow at the labels differ by {} at particle {}", Show(.gap), Show(.phi))]
    NashViolated {
        commodity: String,
        arc: String,
        #[serde(with = "serde_q")]
        phi: Q,
        #[serde(with = "serde_q")]
        gap: Q,
    },
    #[error("static flow of commodity {commodity} is unbalanced at node {node} by {} at particle {}", Show(.excess), Show(.phi))]
    StaticFlowViolated {
        commodity: String,
        node: String,
        #[serde(with = "serde_q")]
        phi: Q,
        #[serde(with = "serde_q")]
        excess: Q,
    },
    #[error("labels unavailable: {reason}")]
    LabelsUnavailable { reason: String },
}

/// Evidence of a verified Nash flow: the earliest-arrival labels and the
/// underlying static flows `x_{j,e}(phi) = F+_{j,e}(l_{j,u}(phi))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NashCertificate {
    pub pairs_checked: usize,
    pub labels: LabelSet,
    /// Indexed `[commodity][arc]`.
    pub static_flows: Vec<Vec<PwlFunction>>,
}

impl NashCertificate {
    pub fn to_json(&self, inst: &Instance) -> serde_json::Value {
        let flows: serde_json::Map<_, _> = inst
            .commodity_ids()
            .map(|j| {
                let arcs: serde_json::Map<_, _> = inst
                    .arc_ids()
                    .filter(|e| !is_zero_fn(&self.static_flows[j.0][e.0]))
                    .map(|e| (inst.arc(e).id.clone(), pwl_to_json(&self.static_flows[j.0][e.0])))
                    .collect();
                (inst.commodity(j).id.clone(), json!(arcs))
            })
            .collect();
        json!({
            "pairs_checked": self.pairs_checked,
            "static_flows": flows,
            "labels": self.labels.to_json(inst),
        })
    }
}

fn is_zero_fn(f: &PwlFunction) -> bool {
    f.is_affine() && f.slope_after().is_zero() && f.values().iter().all(Q::is_zero)
}

fn particle_end(labels: &LabelSet, j: CommodityId, horizon: &Q) -> Q {
    labels
        .commodity(j)
        .domain_end
        .as_ref()
        .map_or(horizon, |d| min_q(d, horizon))
        .clone()
}

/// Checks that a feasible flow only uses current shortest paths: for every
/// commodity `j` and arc `uv`, `F+_{j,e}(l_{j,u}(phi)) = F-_{j,e}(l_{j,v}(phi))`
/// on the particles `[0, min(horizon, particle bound)]`, and that the
/// resulting static flows have value `phi`.
pub fn verify_nash(
    inst: &Instance,
    flow: &FlowOverTime,
    horizon: &Q,
) -> Result<NashCertificate, Vec<NashViolation>> {
    let profile = QueueProfile::from_flow(inst, flow);
    if let Err(violations) = check_feasibility(inst, flow, &profile) {
        return Err(vec![NashViolation::NotFeasible { violations }]);
    }
    let labels = earliest_arrival_all(inst, &profile).map_err(|err| {
        vec![NashViolation::LabelsUnavailable {
            reason: err.to_string(),
        }]
    })?;

    let pairs: Vec<(CommodityId, ArcId)> = inst
        .commodity_ids()
        .flat_map(|j| inst.arc_ids().map(move |e| (j, e)))
        .collect();
    let results: Vec<(PwlFunction, Option<NashViolation>)> = pairs
        .par_iter()
        .map(|&(j, e)| check_pair(inst, flow, &labels, horizon, j, e))
        .collect();

    let mut bad = Vec::new();
    let mut static_flows = vec![Vec::with_capacity(inst.arc_count()); inst.commodity_count()];
    for (&(j, _), (x, violation)) in pairs.iter().zip(results) {
        static_flows[j.0].push(x);
        bad.extend(violation);
    }
    for j in inst.commodity_ids() {
        static_balance(inst, &labels, &static_flows[j.0], horizon, j, &mut bad);
    }
    if bad.is_empty() {
        Ok(NashCertificate {
            pairs_checked: pairs.len(),
            labels,
            static_flows,
        })
    } else {
        Err(bad)
    }
}

fn check_pair(
    inst: &Instance,
    flow: &FlowOverTime,
    labels: &LabelSet,
    horizon: &Q,
    j: CommodityId,
    e: ArcId,
) -> (PwlFunction, Option<NashViolation>) {
    let a = inst.arc(e);
    let own = labels.commodity(j);
    let end = particle_end(labels, j, horizon);
    let fin = flow.cumulative_inflow(j, e);
    let violation = |phi: Q, gap: Q| NashViolation::NashViolated {
        commodity: inst.commodity(j).id.clone(),
        arc: a.id.clone(),
        phi,
        gap,
    };
    match (own.label(a.tail), own.label(a.head)) {
        (Some(lu), Some(lv)) => {
            let x = fin.compose(lu);
            let y = flow.cumulative_outflow(j, e).compose(lv);
            let bad = x
                .first_difference_on(&y, Some(&Q::zero()), Some(&end))
                .map(|(phi, gap)| violation(phi, gap));
            (x, bad)
        }
        _ => {
            let total = fin.eval(&fin.breakpoints()[fin.breakpoints().len() - 1]);
            let bad = (!total.is_zero()).then(|| violation(Q::zero(), total));
            (PwlFunction::constant(Q::zero()), bad)
        }
    }
}

fn static_balance(
    inst: &Instance,
    labels: &LabelSet,
    x: &[PwlFunction],
    horizon: &Q,
    j: CommodityId,
    bad: &mut Vec<NashViolation>,
) {
    let c = inst.commodity(j);
    let end = particle_end(labels, j, horizon);
    for v in inst.nodes() {
        if v == c.destination || labels.label(j, v).is_none() {
            continue;
        }
        let zero = PwlFunction::constant(Q::zero());
        let out = inst.out_arcs(v).iter().fold(zero.clone(), |acc, e| acc.add(&x[e.0]));
        let inc = inst.in_arcs(v).iter().fold(zero.clone(), |acc, e| acc.add(&x[e.0]));
        let expected = if v == c.origin {
            PwlFunction::identity()
        } else {
            zero
        };
        if let Some((phi, excess)) = out
            .sub(&inc)
            .first_difference_on(&expected, Some(&Q::zero()), Some(&end))
        {
            bad.push(NashViolation::StaticFlowViolated {
                commodity: c.id.clone(),
                node: inst.node_name(v).to_string(),
                phi,
                excess,
            });
        }
    }
}

/// Differentiates `x_{j,e} = F+_{j,e} o l_{j,u}` of a constructed Nash flow
/// and checks that the derivatives with the stored labels form a
/// multi-commodity thin flow on every particle piece.
pub fn check_derivatives_thinflow(
    nash: &NashFlowOverTime,
) -> Result<ThinFlowCertificate, Vec<ThinFlowViolation>> {
    let inst = &nash.instance;
    let strategies: Vec<Vec<StepFunction>> = inst
        .commodity_ids()
        .map(|j| {
            inst.arc_ids()
                .map(|e| match nash.labels.label(j, inst.arc(e).tail) {
                    Some(lu) => nash.flow.cumulative_inflow(j, e).compose(lu).differentiate(),
                    None => StepFunction::zero(),
                })
                .collect()
        })
        .collect();
    let end = inst
        .commodities()
        .iter()
        .filter_map(|c| c.particle_bound())
        .filter(|b| b.is_positive())
        .max()
        .unwrap_or_else(|| nash.horizon.clone());
    verify_multicommodity_thinflow(inst, &strategies, &nash.labels, &end)
}
