use num::{Signed, Zero};

use super::phases::{run_phases, PhaseRun, Sources};
use super::reconstruct::{arc_rates, spread};
use super::{Construction, NashError, NashFlowOverTime, NashOptions, Phase};
use crate::labels::earliest_arrival_all;
use crate::loading::{FlowOverTime, QueueProfile};
use crate::netmodel::{extend_with_super_sink, Instance, Mode, NetError};
use crate::rational::{min_q, Q};
use crate::thinflow::{decompose, decompose_by_source, ThinFlowSource};
use crate::timefn::{PwlFunction, StepFunction};

fn checked_horizon(h: Option<Q>) -> Result<Q, NashError> {
    let h = h.ok_or(NashError::HorizonRequired)?;
    if !h.is_positive() {
        return Err(NashError::InvalidHorizon);
    }
    Ok(h)
}

fn require_mode(inst: &Instance, expected: Mode) -> Result<(), NashError> {
    if inst.mode() != expected {
        return Err(NashError::WrongMode {
            expected,
            found: inst.mode(),
        });
    }
    Ok(())
}

fn require_from_zero(inst: &Instance, unbounded: bool) -> Result<(), NashError> {
    for c in inst.commodities() {
        if !c.inflow_start.is_zero() {
            return Err(NashError::InflowStartNonZero {
                commodity: c.id.clone(),
            });
        }
        if unbounded && c.inflow_end.is_some() {
            return Err(NashError::BoundedInflow {
                commodity: c.id.clone(),
            });
        }
    }
    Ok(())
}

/// The instance with commodity `j`'s inflow ending at `ends[j]`.
fn truncate(inst: &Instance, ends: Vec<Q>) -> Result<Instance, NashError> {
    let commodities = inst
        .commodities()
        .iter()
        .zip(ends)
        .map(|(c, end)| {
            if !end.is_positive() {
                return Err(NashError::HorizonTooShort {
                    commodity: c.id.clone(),
                });
            }
            let mut c = c.clone();
            c.inflow_end = Some(end);
            Ok(c)
        })
        .collect::<Result<_, _>>()?;
    inst.with_commodities(commodities)
        .map_err(|v| NashError::Network(NetError::Invalid(v)))
}

/// Rebuilds arc flows of `inst` from the phases, reading labels of the
/// construction network (whose first nodes are those of `inst`).
fn flow_from_phases(
    inst: &Instance,
    node_labels: &[Option<PwlFunction>],
    phases: &[Phase],
) -> Result<FlowOverTime, NashError> {
    let mut flow = FlowOverTime::zero(inst.commodity_count(), inst.arc_count());
    for j in inst.commodity_ids() {
        for e in inst.arc_ids() {
            let a = inst.arc(e);
            let (Some(lu), Some(lv)) = (&node_labels[a.tail.0], &node_labels[a.head.0]) else {
                continue;
            };
            let pieces: Vec<(Q, Q, Q)> = phases
                .iter()
                .map(|p| (p.start.clone(), p.end.clone(), p.decomposition[j.0][e.0].clone()))
                .collect();
            let (fin, fout) = arc_rates(&pieces, lu, lv)?;
            flow.set_inflow(j, e, fin);
            flow.set_outflow(j, e, fout);
        }
    }
    Ok(flow)
}

struct Parts {
    construction: Construction,
    instance: Instance,
    network: Instance,
    horizon: Q,
    phases: Vec<Phase>,
    node_labels: Vec<Option<PwlFunction>>,
    inflow_distribution: Option<Vec<StepFunction>>,
}

fn assemble(p: Parts) -> Result<NashFlowOverTime, NashError> {
    let flow = flow_from_phases(&p.instance, &p.node_labels, &p.phases)?;
    let profile = QueueProfile::from_flow(&p.instance, &flow);
    let labels = earliest_arrival_all(&p.instance, &profile)?;
    Ok(NashFlowOverTime {
        construction: p.construction,
        instance: p.instance,
        network: p.network,
        horizon: p.horizon,
        phases: p.phases,
        node_labels: p.node_labels,
        labels,
        flow,
        inflow_distribution: p.inflow_distribution,
    })
}

/// Nash flow over time of a single commodity with inflow interval `[0, b)`.
///
/// Particles beyond the bound carry no flow; phases past it only move the
/// labels while queues drain.
pub fn construct_nash_single(inst: &Instance, opts: &NashOptions) -> Result<NashFlowOverTime, NashError> {
    if inst.commodity_count() != 1 {
        return Err(NashError::NotSingleCommodity {
            count: inst.commodity_count(),
        });
    }
    require_from_zero(inst, false)?;
    let c = &inst.commodities()[0];
    let bound = c.particle_bound();
    let horizon = checked_horizon(opts.horizon.clone().or_else(|| bound.clone()))?;
    let sources = Sources::Single {
        node: c.origin,
        rate: c.rate.clone(),
        bound: bound.clone(),
    };
    let run = run_phases(inst, &sources, c.destination, &horizon, opts.max_phases)?;
    let last = bound.as_ref().map_or(&horizon, |b| min_q(b, &horizon));
    let instance = truncate(inst, vec![last / &c.rate])?;
    let phases = run
        .phases
        .into_iter()
        .map(|(start, end, tf)| Phase {
            decomposition: vec![tf.flow.clone()],
            start,
            end,
            thinflow: tf,
        })
        .collect();
    assemble(Parts {
        construction: Construction::Single,
        instance,
        network: inst.clone(),
        horizon,
        phases,
        node_labels: run.labels,
        inflow_distribution: None,
    })
}

/// Multi-commodity Nash flow over time for commodities sharing their
/// destination, each with inflow interval `[0, inf)`, up to particle
/// `opts.horizon` of the combined particle space.
pub fn construct_common_destination(
    inst: &Instance,
    opts: &NashOptions,
) -> Result<NashFlowOverTime, NashError> {
    require_mode(inst, Mode::CommonDestination)?;
    if !inst.zero_transit_acyclic() {
        return Err(NashError::CycleWithZeroTransit);
    }
    require_from_zero(inst, true)?;
    let cs = inst.commodities();
    for (k, c) in cs.iter().enumerate() {
        if let Some(d) = cs[..k].iter().find(|d| d.origin == c.origin) {
            return Err(NashError::SharedSource {
                first: d.id.clone(),
                second: c.id.clone(),
            });
        }
    }
    let horizon = checked_horizon(opts.horizon.clone())?;
    let Some(sink) = cs.first().map(|c| c.destination) else {
        return Err(NashError::ThinFlow(crate::thinflow::ThinFlowError::NoSinkPath));
    };
    let list: Vec<ThinFlowSource> = cs
        .iter()
        .map(|c| ThinFlowSource {
            node: c.origin,
            rate: c.rate.clone(),
        })
        .collect();
    let PhaseRun {
        phases: raw,
        labels,
        final_labels,
    } = run_phases(inst, &Sources::Split(list), sink, &horizon, opts.max_phases)?;

    let distribution = (0..cs.len())
        .map(|j| {
            spread(
                raw.iter()
                    .map(|(a, b, tf)| (a.clone(), b.clone(), &tf.supplies[j] * (b - a)))
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ends = cs
        .iter()
        .map(|c| final_labels[c.origin.0].clone().unwrap_or_else(Q::zero))
        .collect();
    let instance = truncate(inst, ends)?;
    let phases = raw
        .into_iter()
        .map(|(start, end, tf)| Phase {
            decomposition: decompose_by_source(inst, &tf),
            start,
            end,
            thinflow: tf,
        })
        .collect();
    assemble(Parts {
        construction: Construction::CommonDestination,
        instance,
        network: inst.clone(),
        horizon,
        phases,
        node_labels: labels,
        inflow_distribution: Some(distribution),
    })
}

/// Multi-commodity Nash flow over time for commodities sharing their origin,
/// each with inflow interval `[0, inf)`: a single-commodity construction on
/// the super-sink extension, split per phase by the new arc each path uses.
pub fn construct_common_origin(inst: &Instance, opts: &NashOptions) -> Result<NashFlowOverTime, NashError> {
    require_mode(inst, Mode::CommonOrigin)?;
    require_from_zero(inst, true)?;
    let horizon = checked_horizon(opts.horizon.clone())?;
    let ext = extend_with_super_sink(inst)?;
    let g = &ext.instance;
    let origin = inst.commodities()[0].origin;
    let sources = Sources::Single {
        node: origin,
        rate: ext.total_rate.clone(),
        bound: None,
    };
    let run = run_phases(g, &sources, ext.sink, &horizon, opts.max_phases)?;
    let m = inst.arc_count();
    let mut phases = Vec::with_capacity(run.phases.len());
    for (start, end, tf) in run.phases {
        let parts = decompose(g, &tf, &ext.new_arcs)?;
        for (c, &e) in inst.commodities().iter().zip(&ext.new_arcs) {
            if tf.flow[e.0] != &c.rate / &ext.total_rate {
                return Err(NashError::SupplyIdentityViolated {
                    commodity: c.id.clone(),
                    found: tf.flow[e.0].clone(),
                });
            }
        }
        let decomposition = parts.into_iter().map(|mut row| {
            row.truncate(m);
            row
        });
        phases.push(Phase {
            decomposition: decomposition.collect(),
            start,
            end,
            thinflow: tf,
        });
    }
    let end_time = &horizon / &ext.total_rate;
    let instance = truncate(inst, vec![end_time; inst.commodity_count()])?;
    assemble(Parts {
        construction: Construction::CommonOrigin,
        instance,
        network: g.clone(),
        horizon,
        phases,
        node_labels: run.labels,
        inflow_distribution: None,
    })
}
