use num::{Signed, Zero};

use super::{cumulative, entry_time, ArcQueue, FlowOverTime, LoadError, QueueProfile};
use crate::netmodel::Instance;
use crate::rational::Q;
use crate::timefn::{PwlFunction, StepFunction};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadOptions {
    /// Maximal number of queue events per arc.
    pub max_breakpoints: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            max_breakpoints: 100_000,
        }
    }
}

/// Result of loading a single arc.
#[derive(Debug, Clone)]
pub struct ArcLoad {
    pub outflows: Vec<StepFunction>,
    pub total_outflow: StepFunction,
    pub queue: ArcQueue,
    /// Time of the last queue event.
    pub last_event: Option<Q>,
}

/// Loads one arc with the given per-commodity inflow rates. Returns `None`
/// when more than `max_events` queue events occur.
pub fn load_arc(
    transit: &Q,
    capacity: &Q,
    inflows: &[StepFunction],
    max_events: usize,
) -> Option<ArcLoad> {
    let arriving = StepFunction::sum(inflows).shift(transit);
    let nu = capacity;
    let mut z = Q::zero();
    let mut points: Vec<(Q, Q)> = Vec::new();
    let mut out: Vec<(Q, Q)> = Vec::new();
    let mut tail_slope = Q::zero();
    let mut events = 0usize;

    for (start, end, c) in arriving.pieces() {
        let Some(mut a) = start else { continue };
        points.push((a.clone(), z.clone()));
        loop {
            events += 1;
            if events > max_events {
                return None;
            }
            let growing = if z.is_zero() { c > *nu } else { c >= *nu };
            if z.is_zero() && !growing {
                out.push((a.clone(), c.clone()));
                tail_slope = Q::zero();
                break;
            }
            out.push((a.clone(), nu.clone()));
            let slope = &c - nu;
            if growing {
                if let Some(b) = &end {
                    z += &slope * (b - &a);
                }
                tail_slope = slope;
                break;
            }
            let depleted = &a + &z / (nu - &c);
            if end.as_ref().map_or(true, |b| depleted < *b) {
                z = Q::zero();
                a = depleted;
                points.push((a.clone(), Q::zero()));
                continue;
            }
            let b = end.as_ref().unwrap();
            z += &slope * (b - &a);
            break;
        }
    }
    let last_event = points.last().map(|p| p.0.clone());
    let volume = if points.is_empty() {
        PwlFunction::constant(Q::zero())
    } else {
        PwlFunction::new(dedup_points(points), Q::zero(), tail_slope).expect("sorted events")
    };
    let total_outflow = StepFunction::new(Q::zero(), dedup_points(out)).expect("sorted events");
    let queue = ArcQueue::from_volume(volume, transit, capacity);
    let outflows = inflows
        .iter()
        .map(|f| split_outflow(f, &queue.exit))
        .collect();
    Some(ArcLoad {
        outflows,
        total_outflow,
        queue,
        last_event,
    })
}

fn dedup_points(points: Vec<(Q, Q)>) -> Vec<(Q, Q)> {
    let mut v: Vec<(Q, Q)> = Vec::with_capacity(points.len());
    for p in points {
        match v.last_mut() {
            Some(last) if last.0 == p.0 => *last = p,
            _ => v.push(p),
        }
    }
    v
}

/// Commodity outflow rate: `F-(theta) = F+(entry time of theta)`.
fn split_outflow(inflow: &StepFunction, exit: &PwlFunction) -> StepFunction {
    if inflow.is_zero() {
        return StepFunction::zero();
    }
    let cum = cumulative(inflow);
    let mut thetas: Vec<Q> = cum
        .breakpoints()
        .iter()
        .chain(exit.breakpoints())
        .map(|x| exit.eval(x))
        .collect();
    thetas.sort();
    thetas.dedup();
    let points = thetas
        .into_iter()
        .map(|t| {
            let x = entry_time(exit, &t).expect("exit time is surjective");
            let v = cum.eval(&x);
            (t, v)
        })
        .collect();
    let slope_after = if exit.slope_after().is_positive() {
        cum.slope_after() / exit.slope_after()
    } else {
        Q::zero()
    };
    let before = cum.slope_before() / exit.slope_before();
    PwlFunction::new(points, before, slope_after)
        .expect("exit images are sorted")
        .differentiate()
}

/// Loads every arc independently from its given per-commodity inflow rates.
///
/// Inflows must be non-negative and vanish outside `[0, horizon)`.
pub fn load_network(
    inst: &Instance,
    inflows: &[Vec<StepFunction>],
    horizon: &Q,
    opts: &LoadOptions,
) -> Result<(FlowOverTime, QueueProfile), LoadError> {
    if inflows.len() != inst.commodity_count()
        || inflows.iter().any(|row| row.len() != inst.arc_count())
    {
        return Err(LoadError::Shape);
    }
    for j in inst.commodity_ids() {
        for e in inst.arc_ids() {
            let f = &inflows[j.0][e.0];
            let names = || (inst.commodity(j).id.clone(), inst.arc(e).id.clone());
            if f.any_negative().is_some() {
                let (commodity, arc) = names();
                return Err(LoadError::NegativeInflow { commodity, arc });
            }
            let zero_outside = f.eval_left(&Q::zero()).is_zero()
                && f.steps().all(|(b, v)| v.is_zero() || (*b >= Q::zero() && b < horizon))
                && f.eval(horizon).is_zero();
            if !zero_outside {
                let (commodity, arc) = names();
                return Err(LoadError::InflowBeyondHorizon { commodity, arc });
            }
        }
    }

    let mut outflow = vec![Vec::with_capacity(inst.arc_count()); inst.commodity_count()];
    let mut queues = Vec::with_capacity(inst.arc_count());
    let mut last_event = horizon.clone();
    let mut volume = Q::zero();
    for e in inst.arc_ids() {
        let a = inst.arc(e);
        let column: Vec<StepFunction> = inflows.iter().map(|row| row[e.0].clone()).collect();
        let load = load_arc(&a.transit, &a.capacity, &column, opts.max_breakpoints).ok_or_else(
            || LoadError::UnboundedBreakpoints {
                arc: a.id.clone(),
                limit: opts.max_breakpoints,
            },
        )?;
        for (j, f) in load.outflows.into_iter().enumerate() {
            outflow[j].push(f);
        }
        if let Some(t) = load.last_event {
            last_event = last_event.max(t);
        }
        volume += cumulative(&StepFunction::sum(&column)).eval(horizon);
        queues.push(load.queue);
    }
    let transit_sum: Q = inst.arcs().iter().map(|a| a.transit.clone()).sum();
    let drain = inst
        .min_capacity()
        .map_or_else(Q::zero, |nu| &volume / nu);
    let valid_until = last_event.max(horizon + transit_sum + drain);
    let flow = FlowOverTime::new(inflows.to_vec(), outflow)?;
    Ok((flow, QueueProfile::new(queues, Some(valid_until))))
}
