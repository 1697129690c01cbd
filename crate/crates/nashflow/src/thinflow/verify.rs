use num::{Signed, Zero};
use serde::Serialize;

use super::stress;
use crate::labels::{foreign_flow, waiting_from_labels, CommodityLabels, LabelSet};
use crate::loading::Interval;
use crate::netmodel::{ArcId, CommodityId, Instance};
use crate::rational::{midpoint, min_q, one, Q};
use crate::timefn::StepFunction;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[serde(tag = "kind")]
pub enum ThinFlowViolation {
    #[error("source label of commodity {commodity} has the wrong slope on {interval}")]
    Tf1Violated { commodity: String, interval: Interval },
    #[error("label slope of commodity {commodity} at node {node} is not the minimal stress on {interval}")]
    Tf2Violated {
        commodity: String,
        node: String,
        interval: Interval,
    },
    #[error("commodity {commodity} uses arc {arc} on {interval} without attaining its stress")]
    Tf3Violated {
        commodity: String,
        arc: String,
        interval: Interval,
    },
    #[error("commodity {commodity} sends flow on inactive arc {arc} on {interval}")]
    SupportViolated {
        commodity: String,
        arc: String,
        interval: Interval,
    },
    #[error("labels of commodity {commodity} are unusable: {reason}")]
    LabelsUnavailable { commodity: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThinFlowCertificate {
    pub pieces_checked: usize,
}

/// Which conditions the verifier enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyChecks {
    pub tightness: bool,
}

impl Default for VerifyChecks {
    fn default() -> Self {
        VerifyChecks { tightness: true }
    }
}

/// Checks the source slopes, the minimal-stress label slopes, tightness and
/// the support condition for every commodity on every particle piece of
/// `[0, horizon]`, cut at the commodity's label domain end when it has one.
/// `strategies` is indexed `[commodity][arc]`.
pub fn verify_multicommodity_thinflow(
    inst: &Instance,
    strategies: &[Vec<StepFunction>],
    labels: &LabelSet,
    horizon: &Q,
) -> Result<ThinFlowCertificate, Vec<ThinFlowViolation>> {
    verify_multicommodity_thinflow_with(inst, strategies, labels, horizon, VerifyChecks::default())
}

pub fn verify_multicommodity_thinflow_with(
    inst: &Instance,
    strategies: &[Vec<StepFunction>],
    labels: &LabelSet,
    horizon: &Q,
    checks: VerifyChecks,
) -> Result<ThinFlowCertificate, Vec<ThinFlowViolation>> {
    let mut bad = Vec::new();
    let mut pieces = 0;
    for j in inst.commodity_ids() {
        match verify_commodity(inst, strategies, labels, horizon, checks, j, &mut bad) {
            Ok(n) => pieces += n,
            Err(reason) => bad.push(ThinFlowViolation::LabelsUnavailable {
                commodity: inst.commodity(j).id.clone(),
                reason,
            }),
        }
    }
    if bad.is_empty() {
        Ok(ThinFlowCertificate {
            pieces_checked: pieces,
        })
    } else {
        Err(bad)
    }
}

/// Queue gap `h_i` of commodity `i` seen at commodity `j`'s particle: value
/// and slope at `phi`.
fn gap_at(
    inst: &Instance,
    labels: &LabelSet,
    j: CommodityId,
    e: ArcId,
    phi: &Q,
) -> Vec<(Q, Q)> {
    let a = inst.arc(e);
    let lj = labels.label(j, a.tail).expect("tail label");
    let theta = lj.eval(phi);
    let speed = lj.slope_right(phi);
    labels
        .commodities
        .iter()
        .filter_map(|c| {
            let (lu, lv) = (c.label(a.tail)?, c.label(a.head)?);
            let psi = lu.first_preimage(&theta)?;
            let value = lv.eval(&psi) - &theta - &a.transit;
            let su = lu.slope_right(&psi);
            let slope = if speed.is_zero() || su.is_zero() {
                Q::zero()
            } else {
                &speed * (lv.slope_right(&psi) / su - one())
            };
            Some((value, slope))
        })
        .collect()
}

fn verify_commodity(
    inst: &Instance,
    strategies: &[Vec<StepFunction>],
    labels: &LabelSet,
    horizon: &Q,
    checks: VerifyChecks,
    j: CommodityId,
    bad: &mut Vec<ThinFlowViolation>,
) -> Result<usize, String> {
    if strategies.len() != inst.commodity_count()
        || strategies.iter().any(|row| row.len() != inst.arc_count())
    {
        return Err("strategy table has the wrong shape".into());
    }
    let c = inst.commodity(j);
    let own: &CommodityLabels = labels.commodity(j);
    let source = own
        .label(c.origin)
        .ok_or_else(|| "no label at the origin".to_string())?;
    let name = || c.id.clone();
    let x = &strategies[j.0];

    let mut foreign = Vec::with_capacity(inst.arc_count());
    for e in inst.arc_ids() {
        let y = foreign_flow(inst, labels, strategies, j, e).map_err(|err| err.to_string())?;
        foreign.push(y.rate);
    }

    let zero = Q::zero();
    let horizon = own.domain_end.as_ref().map_or(horizon, |d| min_q(d, horizon));
    let mut cuts: Vec<Q> = vec![zero.clone(), horizon.clone()];
    for l in own.nodes.iter().flatten() {
        cuts.extend(l.breakpoints().iter().cloned());
    }
    for e in inst.arc_ids() {
        cuts.extend(x[e.0].breakpoints().iter().cloned());
        cuts.extend(foreign[e.0].breakpoints().iter().cloned());
        let a = inst.arc(e);
        let Some(lj) = own.label(a.tail) else { continue };
        for other in &labels.commodities {
            let (Some(lu), Some(lv)) = (other.label(a.tail), other.label(a.head)) else {
                continue;
            };
            for b in lu.breakpoints().iter().chain(lv.breakpoints()) {
                cuts.extend(lj.first_preimage(&lu.eval(b)));
            }
        }
    }
    let mut cuts = within(cuts, &zero, horizon);

    // Refine where the largest queue gap changes its maximizer or sign.
    let mut extra = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let m = midpoint(lo, hi);
        for e in inst.arc_ids() {
            let a = inst.arc(e);
            if own.label(a.tail).is_none() {
                continue;
            }
            let mut gaps = gap_at(inst, labels, j, e, &m);
            gaps.push((Q::zero(), Q::zero()));
            for p in 0..gaps.len() {
                for r in p + 1..gaps.len() {
                    let (dv, ds) = (&gaps[p].0 - &gaps[r].0, &gaps[p].1 - &gaps[r].1);
                    if ds.is_zero() {
                        continue;
                    }
                    let root = &m - dv / ds;
                    if root > *lo && root < *hi {
                        extra.push(root);
                    }
                }
            }
        }
    }
    if !extra.is_empty() {
        cuts.extend(extra);
        cuts = within(cuts, &zero, horizon);
    }

    let r_inv = one() / &c.rate;
    let mut pieces = 0;
    for w in cuts.windows(2) {
        pieces += 1;
        let interval = || Interval::new(Some(w[0].clone()), Some(w[1].clone()));
        let m = midpoint(&w[0], &w[1]);
        if source.slope_right(&m) != r_inv {
            bad.push(ThinFlowViolation::Tf1Violated {
                commodity: name(),
                interval: interval(),
            });
        }
        let mut best: Vec<Option<Q>> = vec![None; inst.node_count()];
        let mut stresses = vec![None; inst.arc_count()];
        for e in inst.arc_ids() {
            let a = inst.arc(e);
            let (Some(lu), Some(lv)) = (own.label(a.tail), own.label(a.head)) else {
                if x[e.0].eval(&m).is_positive() {
                    bad.push(ThinFlowViolation::SupportViolated {
                        commodity: name(),
                        arc: a.id.clone(),
                        interval: interval(),
                    });
                }
                continue;
            };
            let theta = lu.eval(&m);
            let queue = waiting_from_labels(inst, labels, e, &theta).map_err(|err| err.to_string())?;
            let active = lv.eval(&m) == &theta + &a.transit + &queue;
            let xe = x[e.0].eval(&m);
            if !active {
                if xe.is_positive() {
                    bad.push(ThinFlowViolation::SupportViolated {
                        commodity: name(),
                        arc: a.id.clone(),
                        interval: interval(),
                    });
                }
                continue;
            }
            let rho = stress(
                &lu.slope_right(&m),
                &xe,
                &foreign[e.0].eval(&m),
                &a.capacity,
                queue.is_positive(),
            );
            let slot = &mut best[a.head.0];
            if slot.as_ref().map_or(true, |b| rho < *b) {
                *slot = Some(rho.clone());
            }
            stresses[e.0] = Some(rho);
        }
        for v in inst.nodes() {
            if v == c.origin {
                continue;
            }
            let Some(lv) = own.label(v) else { continue };
            if best[v.0].as_ref() != Some(&lv.slope_right(&m)) {
                bad.push(ThinFlowViolation::Tf2Violated {
                    commodity: name(),
                    node: inst.node_name(v).to_string(),
                    interval: interval(),
                });
            }
        }
        if checks.tightness {
            for e in inst.arc_ids() {
                let a = inst.arc(e);
                let Some(rho) = &stresses[e.0] else { continue };
                if x[e.0].eval(&m).is_positive() {
                    let lv = own.label(a.head).expect("active arc has a head label");
                    if lv.slope_right(&m) != *rho {
                        bad.push(ThinFlowViolation::Tf3Violated {
                            commodity: name(),
                            arc: a.id.clone(),
                            interval: interval(),
                        });
                    }
                }
            }
        }
    }
    Ok(pieces)
}

fn within(mut cuts: Vec<Q>, lo: &Q, hi: &Q) -> Vec<Q> {
    cuts.retain(|x| x >= lo && x <= hi);
    cuts.sort();
    cuts.dedup();
    cuts
}
