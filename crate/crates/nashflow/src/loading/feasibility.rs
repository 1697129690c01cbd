use num::{Signed, Zero};
use serde::Serialize;

use super::{cumulative, entry_time, FlowOverTime, Interval, QueueProfile};
use crate::netmodel::{ArcId, CommodityId, Instance, NodeId};
use crate::rational::{serde_q, Show, Q};
use crate::timefn::{piece_samples, StepFunction};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[serde(tag = "kind")]
pub enum FeasibilityViolation {
    #[error("commodity {commodity} violates conservation at node {node} on {interval} (excess {})", Show(.excess))]
    ConservationViolated {
        node: String,
        commodity: String,
        interval: Interval,
        #[serde(with = "serde_q")]
        excess: Q,
    },
    #[error("arc {arc} violates the outflow law on {interval}")]
    OutflowLawViolated { arc: String, interval: Interval },
    #[error("commodity {commodity} violates FIFO on arc {arc} on {interval}")]
    FifoViolated {
        arc: String,
        commodity: String,
        interval: Interval,
    },
    #[error("queue of arc {arc} is negative at {}", Show(.theta))]
    QueueNegative {
        arc: String,
        #[serde(with = "serde_q")]
        theta: Q,
    },
    #[error("queue profile of arc {arc} does not match the flow")]
    ProfileInconsistent { arc: String },
    #[error("queue property {property} fails on arc {arc} at {}", Show(.theta))]
    QueueProperty {
        arc: String,
        property: u8,
        #[serde(with = "serde_q")]
        theta: Q,
    },
    #[error("cumulative inflow and outflow disagree on arc {arc} at {}", Show(.theta))]
    CumulativeMismatch {
        arc: String,
        commodity: Option<String>,
        #[serde(with = "serde_q")]
        theta: Q,
    },
    #[error("flow, profile and instance dimensions differ")]
    ShapeMismatch,
}

/// Evidence of a passed feasibility check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeasibilityCertificate {
    pub pieces_checked: usize,
}

type V = FeasibilityViolation;

/// Checks conservation, the outflow law, FIFO, queue properties and the
/// cumulative identities exactly on every piece.
pub fn check_feasibility(
    inst: &Instance,
    flow: &FlowOverTime,
    profile: &QueueProfile,
) -> Result<FeasibilityCertificate, Vec<FeasibilityViolation>> {
    let mut bad = Vec::new();
    let mut pieces = 0usize;
    if flow.commodity_count() != inst.commodity_count()
        || (flow.commodity_count() > 0 && flow.arc_count() != inst.arc_count())
        || profile.arcs().len() != inst.arc_count()
    {
        return Err(vec![V::ShapeMismatch]);
    }
    pieces += conservation(inst, flow, &mut bad);
    let implied = QueueProfile::from_flow(inst, flow);
    for e in inst.arc_ids() {
        let arc_name = inst.arc(e).id.clone();
        if implied.arc(e) != profile.arc(e) {
            bad.push(V::ProfileInconsistent { arc: arc_name });
            continue;
        }
        pieces += outflow_law(inst, flow, profile, e, &mut bad);
        pieces += fifo(inst, flow, profile, e, &mut bad);
        pieces += queue_properties(inst, flow, profile, e, &mut bad);
    }
    if bad.is_empty() {
        Ok(FeasibilityCertificate {
            pieces_checked: pieces,
        })
    } else {
        Err(bad)
    }
}

fn conservation(inst: &Instance, flow: &FlowOverTime, bad: &mut Vec<V>) -> usize {
    let mut pieces = 0;
    for j in inst.commodity_ids() {
        let c = inst.commodity(j);
        for v in inst.nodes() {
            if v == c.destination {
                continue;
            }
            let diff = node_balance(inst, flow, j, v);
            let diff = if v == c.origin {
                diff.sub(&StepFunction::indicator(
                    c.inflow_start.clone(),
                    c.inflow_end.clone(),
                    c.rate.clone(),
                ))
            } else {
                diff
            };
            for (start, end, excess) in diff.pieces() {
                pieces += 1;
                if !excess.is_zero() {
                    bad.push(V::ConservationViolated {
                        node: inst.node_name(v).to_string(),
                        commodity: c.id.clone(),
                        interval: Interval::new(start, end),
                        excess,
                    });
                }
            }
        }
    }
    pieces
}

/// Outgoing inflow minus incoming outflow of commodity `j` at `v`.
pub(crate) fn node_balance(
    inst: &Instance,
    flow: &FlowOverTime,
    j: CommodityId,
    v: NodeId,
) -> StepFunction {
    let out = StepFunction::sum(inst.out_arcs(v).iter().map(|&e| flow.inflow(j, e)));
    let inc = StepFunction::sum(inst.in_arcs(v).iter().map(|&e| flow.outflow(j, e)));
    out.sub(&inc)
}

fn outflow_law(
    inst: &Instance,
    flow: &FlowOverTime,
    profile: &QueueProfile,
    e: ArcId,
    bad: &mut Vec<V>,
) -> usize {
    let a = inst.arc(e);
    let fin = flow.total_inflow(e);
    let fout = flow.total_outflow(e);
    let z = &profile.arc(e).volume;
    let mut pts: Vec<Q> = fout.breakpoints().to_vec();
    pts.extend(fin.breakpoints().iter().map(|b| b + &a.transit));
    pts.extend(z.breakpoints().iter().cloned());
    let samples = piece_samples(pts);
    for (lo, hi, m) in &samples {
        let expected = if z.eval(m).is_positive() {
            a.capacity.clone()
        } else {
            fin.eval(&(m - &a.transit)).min(a.capacity.clone())
        };
        if fout.eval(m) != expected {
            bad.push(V::OutflowLawViolated {
                arc: a.id.clone(),
                interval: Interval::new(lo.clone(), hi.clone()),
            });
        }
    }
    samples.len()
}

fn fifo(
    inst: &Instance,
    flow: &FlowOverTime,
    profile: &QueueProfile,
    e: ArcId,
    bad: &mut Vec<V>,
) -> usize {
    let a = inst.arc(e);
    let exit = &profile.arc(e).exit;
    let fin = flow.total_inflow(e);
    let fout = flow.total_outflow(e);
    let mut checked = 0;
    for j in inst.commodity_ids() {
        let fin_j = flow.inflow(j, e);
        let fout_j = flow.outflow(j, e);
        if fin_j.is_zero() && fout_j.is_zero() {
            continue;
        }
        let mut pts: Vec<Q> = fout_j.breakpoints().to_vec();
        pts.extend(fout.breakpoints().iter().cloned());
        pts.extend(
            fin_j
                .breakpoints()
                .iter()
                .chain(fin.breakpoints())
                .chain(exit.breakpoints())
                .map(|x| exit.eval(x)),
        );
        let samples = piece_samples(pts);
        checked += samples.len();
        for (lo, hi, m) in samples {
            let ok = match entry_time(exit, &m) {
                Some(x) => {
                    let total = fin.eval(&x);
                    let expected = if total.is_positive() {
                        fout.eval(&m) * fin_j.eval(&x) / total
                    } else {
                        Q::zero()
                    };
                    fout_j.eval(&m) == expected
                }
                None => false,
            };
            if !ok {
                bad.push(V::FifoViolated {
                    arc: a.id.clone(),
                    commodity: inst.commodity(j).id.clone(),
                    interval: Interval::new(lo, hi),
                });
            }
        }
    }
    checked
}

fn queue_properties(
    inst: &Instance,
    flow: &FlowOverTime,
    profile: &QueueProfile,
    e: ArcId,
    bad: &mut Vec<V>,
) -> usize {
    let a = inst.arc(e);
    let name = || a.id.clone();
    let queue = profile.arc(e);
    let (z, q, exit) = (&queue.volume, &queue.waiting, &queue.exit);
    let fin = flow.total_inflow(e);

    for (x, y) in z.points() {
        if y.is_negative() {
            bad.push(V::QueueNegative {
                arc: name(),
                theta: x.clone(),
            });
        }
    }
    if z.slope_before().is_positive() {
        let x = &z.breakpoints()[0] - crate::rational::one();
        bad.push(V::QueueNegative { arc: name(), theta: x });
    }
    if z.slope_after().is_negative() {
        let x = z.breakpoints().last().unwrap() + crate::rational::one();
        bad.push(V::QueueNegative { arc: name(), theta: x });
    }

    let mut pts: Vec<Q> = q.breakpoints().to_vec();
    pts.extend(fin.breakpoints().iter().cloned());
    pts.extend(exit.breakpoints().iter().cloned());
    pts.extend(z.breakpoints().iter().map(|b| b - &a.transit));
    let samples = piece_samples(pts);
    let mut property = |k: u8, theta: &Q| {
        bad.push(V::QueueProperty {
            arc: name(),
            property: k,
            theta: theta.clone(),
        })
    };
    let points = samples
        .iter()
        .flat_map(|(lo, _, m)| lo.iter().chain(std::iter::once(m)));
    for theta in points {
        let qv = q.eval(theta);
        let entry = theta + &a.transit;
        if qv.is_positive() != z.eval(&entry).is_positive() {
            property(1, theta);
        }
        if qv.is_positive() {
            let leave = exit.eval(theta);
            let interior_ok = z
                .breakpoints()
                .iter()
                .filter(|b| **b > entry && **b < leave)
                .all(|b| z.eval(b).is_positive());
            if !(z.eval(&entry).is_positive() && interior_ok && !z.eval(&leave).is_negative()) {
                property(2, theta);
            }
        }
    }
    for (_, _, m) in &samples {
        let rate = fin.eval(m) / &a.capacity - crate::rational::one();
        let queued = q.eval(m).is_positive();
        if fin.eval(m).is_zero() && queued && !exit.slope_right(m).is_zero() {
            property(4, m);
        }
        let expected = if queued { rate } else { rate.max(Q::zero()) };
        if q.slope_right(m) != expected {
            property(7, m);
        }
    }
    if !exit.is_non_decreasing() {
        let x = exit
            .segments()
            .into_iter()
            .find(|s| s.slope.is_negative())
            .and_then(|s| s.start.or(s.end))
            .unwrap_or_else(Q::zero);
        property(5, &x);
    }
    let through = cumulative(&flow.total_outflow(e)).compose(exit);
    if let Some((x, _)) = cumulative(&fin).first_difference(&through) {
        property(3, &x);
    }
    for j in inst.commodity_ids() {
        let fin_j = cumulative(flow.inflow(j, e));
        let through_j = cumulative(flow.outflow(j, e)).compose(exit);
        if let Some((x, _)) = fin_j.first_difference(&through_j) {
            bad.push(V::CumulativeMismatch {
                arc: name(),
                commodity: Some(inst.commodity(j).id.clone()),
                theta: x,
            });
        }
    }
    samples.len()
}
