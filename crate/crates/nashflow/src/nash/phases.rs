use num::{Signed, Zero};

use super::NashError;
use crate::netmodel::{transit_distances, ArcId, Instance, NodeId};
use crate::rational::Q;
use crate::thinflow::{
    solve_single_with_value, solve_thinflow_multisource, solve_thinflow_single, ThinFlow,
    ThinFlowSource,
};
use crate::timefn::PwlFunction;

pub(super) enum Sources {
    /// One source with `l'_s = 1/rate`; particles beyond `bound` carry no flow.
    Single {
        node: NodeId,
        rate: Q,
        bound: Option<Q>,
    },
    /// Unit supply split over the sources.
    Split(Vec<ThinFlowSource>),
}

pub(super) struct PhaseRun {
    pub phases: Vec<(Q, Q, ThinFlow)>,
    pub labels: Vec<Option<PwlFunction>>,
    /// Label values at the horizon.
    pub final_labels: Vec<Option<Q>>,
}

fn initial_labels(inst: &Instance, sources: &Sources) -> Vec<Option<Q>> {
    let nodes: Vec<NodeId> = match sources {
        Sources::Single { node, .. } => vec![*node],
        Sources::Split(list) => list.iter().map(|s| s.node).collect(),
    };
    let mut best = vec![None; inst.node_count()];
    for s in nodes {
        for (slot, d) in best.iter_mut().zip(transit_distances(inst, s)) {
            if let Some(d) = d {
                if slot.as_ref().map_or(true, |b: &Q| d < *b) {
                    *slot = Some(d);
                }
            }
        }
    }
    best
}

/// `l_v - l_u - tau` for arcs whose endpoints both carry labels.
fn gaps(inst: &Instance, labels: &[Option<Q>]) -> Vec<Option<Q>> {
    inst.arcs()
        .iter()
        .map(|a| match (&labels[a.tail.0], &labels[a.head.0]) {
            (Some(lu), Some(lv)) => Some(lv - lu - &a.transit),
            _ => None,
        })
        .collect()
}

/// Runs thin-flow phases from particle 0 up to `horizon`.
pub(super) fn run_phases(
    inst: &Instance,
    sources: &Sources,
    sink: NodeId,
    horizon: &Q,
    max_phases: usize,
) -> Result<PhaseRun, NashError> {
    let mut phi = Q::zero();
    let mut cur = initial_labels(inst, sources);
    let mut points: Vec<Vec<(Q, Q)>> = cur
        .iter()
        .map(|l| l.iter().map(|v| (Q::zero(), v.clone())).collect())
        .collect();
    let mut first_slope: Vec<Option<Q>> = vec![None; inst.node_count()];
    let mut last_slope: Vec<Option<Q>> = vec![None; inst.node_count()];
    let mut phases = Vec::new();

    while phi < *horizon {
        if phases.len() >= max_phases {
            return Err(NashError::PhaseBudgetExceeded { limit: max_phases });
        }
        let gap = gaps(inst, &cur);
        let active: Vec<ArcId> = inst
            .arc_ids()
            .filter(|e| gap[e.0].as_ref().is_some_and(|g| !g.is_negative()))
            .collect();
        let resetting: Vec<ArcId> = inst
            .arc_ids()
            .filter(|e| gap[e.0].as_ref().is_some_and(|g| g.is_positive()))
            .collect();

        let mut alpha = horizon - &phi;
        let tf = match sources {
            Sources::Single { node, rate, bound } => match bound {
                Some(b) if phi >= *b => solve_single_with_value(
                    inst,
                    &active,
                    &resetting,
                    *node,
                    sink,
                    rate,
                    &Q::zero(),
                )?,
                _ => {
                    if let Some(b) = bound {
                        alpha = alpha.min(b - &phi);
                    }
                    solve_thinflow_single(inst, &active, &resetting, *node, sink, rate)?
                }
            },
            Sources::Split(list) => {
                solve_thinflow_multisource(inst, &active, &resetting, list, sink)?
            }
        };

        for (e, g) in inst.arc_ids().zip(&gap) {
            let Some(g) = g else { continue };
            let a = inst.arc(e);
            let (Some(du), Some(dv)) = (tf.label(a.tail), tf.label(a.head)) else {
                continue;
            };
            let drift = dv - du;
            if (g.is_positive() && drift.is_negative()) || (g.is_negative() && drift.is_positive()) {
                alpha = alpha.min(-g / drift);
            }
        }

        let next = &phi + &alpha;
        for v in inst.nodes() {
            let Some(l) = cur[v.0].as_mut() else { continue };
            let d = tf.label(v).ok_or_else(|| NashError::UncoveredNode {
                node: inst.node_name(v).to_string(),
            })?;
            *l += &alpha * d;
            points[v.0].push((next.clone(), l.clone()));
            first_slope[v.0].get_or_insert_with(|| d.clone());
            last_slope[v.0] = Some(d.clone());
        }
        phases.push((phi, next.clone(), tf));
        phi = next;
    }

    let labels = points
        .into_iter()
        .zip(first_slope.into_iter().zip(last_slope))
        .map(|(pts, (before, after))| {
            if pts.is_empty() {
                return Ok(None);
            }
            let before = before.unwrap_or_else(Q::zero);
            let after = after.unwrap_or_else(|| before.clone());
            PwlFunction::new(pts, before, after).map(Some)
        })
        .collect::<Result<_, _>>()?;
    Ok(PhaseRun {
        phases,
        labels,
        final_labels: cur,
    })
}
