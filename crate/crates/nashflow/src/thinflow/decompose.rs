use num::{Signed, Zero};

use super::{ThinFlow, ThinFlowError};
use crate::netmodel::{ArcId, Instance, NodeId};
use crate::rational::Q;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathFlow {
    /// Index into the supply list the path starts from.
    pub source: usize,
    pub arcs: Vec<ArcId>,
    pub amount: Q,
}

/// Splits an acyclic static flow into source-sink paths, always following the
/// lowest-numbered arc that still carries flow.
pub fn path_decomposition(
    inst: &Instance,
    flow: &[Q],
    supplies: &[(NodeId, Q)],
    sink: NodeId,
) -> Vec<PathFlow> {
    let mut rest = flow.to_vec();
    let mut left: Vec<Q> = supplies.iter().map(|(_, x)| x.clone()).collect();
    let mut paths = Vec::new();
    for j in 0..supplies.len() {
        while left[j].is_positive() {
            let mut v = supplies[j].0;
            let mut arcs = Vec::new();
            let mut amount = left[j].clone();
            while v != sink {
                let Some(&e) = inst
                    .out_arcs(v)
                    .iter()
                    .filter(|e| rest[e.0].is_positive())
                    .min()
                else {
                    break;
                };
                amount = amount.min(rest[e.0].clone());
                arcs.push(e);
                v = inst.arc(e).head;
            }
            if v != sink {
                return paths;
            }
            for e in &arcs {
                rest[e.0] -= &amount;
            }
            left[j] -= &amount;
            paths.push(PathFlow {
                source: j,
                arcs,
                amount,
            });
        }
    }
    paths
}

/// Per-source static flows of a multi-source thin flow.
pub fn decompose_by_source(inst: &Instance, tf: &ThinFlow) -> Vec<Vec<Q>> {
    let supplies: Vec<(NodeId, Q)> = tf
        .sources
        .iter()
        .zip(&tf.supplies)
        .map(|(s, x)| (s.node, x.clone()))
        .collect();
    let mut out = vec![vec![Q::zero(); inst.arc_count()]; supplies.len()];
    for p in path_decomposition(inst, &tf.flow, &supplies, tf.sink) {
        for e in p.arcs {
            out[p.source][e.0] += &p.amount;
        }
    }
    out
}

/// Groups the paths of a single-source thin flow by the new arc they use;
/// entry `j` holds the flow through `new_arcs[j]`.
pub fn decompose(
    inst: &Instance,
    tf: &ThinFlow,
    new_arcs: &[ArcId],
) -> Result<Vec<Vec<Q>>, ThinFlowError> {
    for (j, &e) in new_arcs.iter().enumerate() {
        if !tf.is_active(e) || !tf.flow[e.0].is_positive() {
            return Err(ThinFlowError::NewArcInactive { commodity: j });
        }
    }
    let supplies: Vec<(NodeId, Q)> = tf
        .sources
        .iter()
        .zip(&tf.supplies)
        .map(|(s, x)| (s.node, x.clone()))
        .collect();
    let mut out = vec![vec![Q::zero(); inst.arc_count()]; new_arcs.len()];
    for p in path_decomposition(inst, &tf.flow, &supplies, tf.sink) {
        let group = p
            .arcs
            .iter()
            .find_map(|e| new_arcs.iter().position(|n| n == e));
        if let Some(j) = group {
            for e in p.arcs {
                out[j][e.0] += &p.amount;
            }
        }
    }
    Ok(out)
}
