use super::{CommodityLabels, LabelError, LabelSet};
use crate::loading::QueueProfile;
use crate::netmodel::{CommodityId, Instance};
use crate::rational::Q;
use crate::timefn::{min_compose, PwlFunction};

/// Fixed point of `l_v = min(seed_v, min over arcs uv of exit_e o l_u)`.
///
/// Exit functions must satisfy `T_e(t) >= t`, so simple paths suffice and the
/// iteration settles within `|V|` rounds.
pub(crate) fn bellman_labels(
    inst: &Instance,
    exits: &[&PwlFunction],
    seeds: Vec<Option<PwlFunction>>,
) -> Result<Vec<Option<PwlFunction>>, LabelError> {
    if !inst.zero_transit_acyclic() {
        return Err(LabelError::CyclicZeroTransit);
    }
    let mut labels = seeds.clone();
    for _ in 0..=inst.node_count() {
        let mut changed = false;
        for v in inst.nodes() {
            let mut candidates: Vec<PwlFunction> = seeds[v.0].iter().cloned().collect();
            for &e in inst.in_arcs(v) {
                if let Some(lu) = &labels[inst.arc(e).tail.0] {
                    candidates.push(exits[e.0].compose(lu));
                }
            }
            let Some(env) = min_compose(&candidates) else {
                continue;
            };
            if labels[v.0].as_ref() != Some(&env.function) {
                labels[v.0] = Some(env.function);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(labels)
}

/// Earliest arrival labels of commodity `j` under the queues of `profile`.
pub fn earliest_arrival(
    inst: &Instance,
    profile: &QueueProfile,
    j: CommodityId,
    domain_end: Option<Q>,
) -> Result<CommodityLabels, LabelError> {
    let c = inst.commodity(j);
    let mut seeds = vec![None; inst.node_count()];
    seeds[c.origin.0] = Some(PwlFunction::linear(
        crate::rational::one() / &c.rate,
        c.inflow_start.clone(),
    ));
    let exits: Vec<&PwlFunction> = profile.arcs().iter().map(|q| &q.exit).collect();
    let nodes = bellman_labels(inst, &exits, seeds)?;
    Ok(CommodityLabels {
        commodity: j,
        nodes,
        domain_end,
    })
}

/// Labels of every commodity, each over its own particle bound.
pub fn earliest_arrival_all(inst: &Instance, profile: &QueueProfile) -> Result<LabelSet, LabelError> {
    let commodities = inst
        .commodity_ids()
        .map(|j| earliest_arrival(inst, profile, j, inst.commodity(j).particle_bound()))
        .collect::<Result<_, _>>()?;
    Ok(LabelSet { commodities })
}
