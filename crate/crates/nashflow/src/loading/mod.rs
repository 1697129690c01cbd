//! Network loading: outflows, queues, waiting and exit times for given arc inflows.

mod feasibility;
mod flowfile;
mod sweep;

use std::fmt;

use num::{One, Zero};
use serde::Serialize;

pub use feasibility::{check_feasibility, FeasibilityCertificate, FeasibilityViolation};
pub use flowfile::{FlowEntry, FlowFile, FlowFileError};
pub use sweep::{load_arc, load_network, ArcLoad, LoadOptions};

use crate::netmodel::{ArcId, CommodityId, Instance};
use crate::rational::{serde_opt_q, Show, Q};
use crate::timefn::{PwlFunction, StepFunction};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error("negative inflow for commodity {commodity} on arc {arc}")]
    NegativeInflow { commodity: String, arc: String },
    #[error("inflow for commodity {commodity} on arc {arc} is nonzero before time 0 or after the horizon")]
    InflowBeyondHorizon { commodity: String, arc: String },
    #[error("arc {arc} exceeds the breakpoint budget of {limit}")]
    UnboundedBreakpoints { arc: String, limit: usize },
    #[error("time {} lies beyond the computed horizon {}", Show(.theta), Show(.valid_until))]
    BeyondHorizon { theta: Q, valid_until: Q },
    #[error("inflow table has the wrong shape")]
    Shape,
}

/// Half-open interval `[start, end)`; `None` ends are infinite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Interval {
    #[serde(with = "serde_opt_q")]
    pub start: Option<Q>,
    #[serde(with = "serde_opt_q")]
    pub end: Option<Q>,
}

impl Interval {
    pub fn new(start: Option<Q>, end: Option<Q>) -> Self {
        Interval { start, end }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.start {
            Some(a) => write!(f, "[{}, ", Show(a))?,
            None => f.write_str("(-inf, ")?,
        }
        match &self.end {
            Some(b) => write!(f, "{})", Show(b)),
            None => f.write_str("inf)"),
        }
    }
}

/// Cumulative function `F(x) = integral of f over (-inf, x]`, assuming `f`
/// vanishes before its first breakpoint.
pub fn cumulative(f: &StepFunction) -> PwlFunction {
    let anchor = f.breakpoints().first().cloned().unwrap_or_else(Q::zero);
    f.integrate(&anchor)
}

/// Per-commodity arc in- and outflow rates, indexed `[commodity][arc]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowOverTime {
    inflow: Vec<Vec<StepFunction>>,
    outflow: Vec<Vec<StepFunction>>,
}

impl FlowOverTime {
    pub fn new(
        inflow: Vec<Vec<StepFunction>>,
        outflow: Vec<Vec<StepFunction>>,
    ) -> Result<Self, LoadError> {
        let arcs = inflow.first().map_or(0, Vec::len);
        if inflow.len() != outflow.len()
            || inflow.iter().chain(outflow.iter()).any(|row| row.len() != arcs)
        {
            return Err(LoadError::Shape);
        }
        Ok(FlowOverTime { inflow, outflow })
    }

    pub fn zero(commodities: usize, arcs: usize) -> Self {
        let z = vec![vec![StepFunction::zero(); arcs]; commodities];
        FlowOverTime {
            inflow: z.clone(),
            outflow: z,
        }
    }

    pub fn commodity_count(&self) -> usize {
        self.inflow.len()
    }

    pub fn arc_count(&self) -> usize {
        self.inflow.first().map_or(0, Vec::len)
    }

    pub fn inflow(&self, j: CommodityId, e: ArcId) -> &StepFunction {
        &self.inflow[j.0][e.0]
    }

    pub fn outflow(&self, j: CommodityId, e: ArcId) -> &StepFunction {
        &self.outflow[j.0][e.0]
    }

    pub fn set_inflow(&mut self, j: CommodityId, e: ArcId, f: StepFunction) {
        self.inflow[j.0][e.0] = f;
    }

    pub fn set_outflow(&mut self, j: CommodityId, e: ArcId, f: StepFunction) {
        self.outflow[j.0][e.0] = f;
    }

    pub fn total_inflow(&self, e: ArcId) -> StepFunction {
        StepFunction::sum(self.inflow.iter().map(|row| &row[e.0]))
    }

    pub fn total_outflow(&self, e: ArcId) -> StepFunction {
        StepFunction::sum(self.outflow.iter().map(|row| &row[e.0]))
    }

    pub fn cumulative_inflow(&self, j: CommodityId, e: ArcId) -> PwlFunction {
        cumulative(self.inflow(j, e))
    }

    pub fn cumulative_outflow(&self, j: CommodityId, e: ArcId) -> PwlFunction {
        cumulative(self.outflow(j, e))
    }

    /// Keeps only the listed arcs, in the given order.
    pub fn restrict_arcs(&self, arcs: &[ArcId]) -> FlowOverTime {
        let pick = |rows: &Vec<Vec<StepFunction>>| {
            rows.iter()
                .map(|row| arcs.iter().map(|e| row[e.0].clone()).collect())
                .collect()
        };
        FlowOverTime {
            inflow: pick(&self.inflow),
            outflow: pick(&self.outflow),
        }
    }

    /// Largest breakpoint of any rate function, if any.
    pub fn last_breakpoint(&self) -> Option<Q> {
        self.inflow
            .iter()
            .chain(self.outflow.iter())
            .flatten()
            .filter_map(|f| f.breakpoints().last().cloned())
            .max()
    }
}

/// Queue volume `z`, waiting time `q` and exit time `T` of one arc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcQueue {
    pub volume: PwlFunction,
    pub waiting: PwlFunction,
    pub exit: PwlFunction,
}

impl ArcQueue {
    pub fn from_volume(volume: PwlFunction, transit: &Q, capacity: &Q) -> Self {
        let waiting = volume.shift(&-transit).scale(&(Q::one() / capacity));
        let exit = PwlFunction::identity().add_const(transit).add(&waiting);
        ArcQueue {
            volume,
            waiting,
            exit,
        }
    }
}

/// Queue data for every arc; exact up to `valid_until` (everywhere if `None`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueProfile {
    arcs: Vec<ArcQueue>,
    valid_until: Option<Q>,
}

impl QueueProfile {
    pub fn new(arcs: Vec<ArcQueue>, valid_until: Option<Q>) -> Self {
        QueueProfile { arcs, valid_until }
    }

    /// Profile implied by the flow itself: `z_e(t) = F+_e(t - tau_e) - F-_e(t)`.
    pub fn from_flow(inst: &Instance, flow: &FlowOverTime) -> Self {
        let arcs = inst
            .arc_ids()
            .map(|e| {
                let a = inst.arc(e);
                let volume = cumulative(&flow.total_inflow(e))
                    .shift(&a.transit)
                    .sub(&cumulative(&flow.total_outflow(e)));
                ArcQueue::from_volume(volume, &a.transit, &a.capacity)
            })
            .collect();
        QueueProfile {
            arcs,
            valid_until: None,
        }
    }

    pub fn arc(&self, e: ArcId) -> &ArcQueue {
        &self.arcs[e.0]
    }

    pub fn arcs(&self) -> &[ArcQueue] {
        &self.arcs
    }

    pub fn valid_until(&self) -> Option<&Q> {
        self.valid_until.as_ref()
    }

    fn guard(&self, theta: &Q) -> Result<(), LoadError> {
        match &self.valid_until {
            Some(h) if theta > h => Err(LoadError::BeyondHorizon {
                theta: theta.clone(),
                valid_until: h.clone(),
            }),
            _ => Ok(()),
        }
    }

    pub fn queue_size(&self, e: ArcId, theta: &Q) -> Result<Q, LoadError> {
        self.guard(theta)?;
        Ok(self.arcs[e.0].volume.eval(theta))
    }

    pub fn waiting_time(&self, e: ArcId, theta: &Q) -> Result<Q, LoadError> {
        self.guard(theta)?;
        Ok(self.arcs[e.0].waiting.eval(theta))
    }

    pub fn exit_time(&self, e: ArcId, theta: &Q) -> Result<Q, LoadError> {
        self.guard(theta)?;
        Ok(self.arcs[e.0].exit.eval(theta))
    }
}

pub fn queue_size(profile: &QueueProfile, e: ArcId, theta: &Q) -> Result<Q, LoadError> {
    profile.queue_size(e, theta)
}

pub fn waiting_time(profile: &QueueProfile, e: ArcId, theta: &Q) -> Result<Q, LoadError> {
    profile.waiting_time(e, theta)
}

pub fn exit_time(profile: &QueueProfile, e: ArcId, theta: &Q) -> Result<Q, LoadError> {
    profile.exit_time(e, theta)
}

/// Earliest entry time `min { x | T(x) = theta }` for a non-decreasing exit
/// time function whose left tail is increasing.
pub fn entry_time(exit: &PwlFunction, theta: &Q) -> Option<Q> {
    let first = exit.breakpoints()[0].clone();
    let start = if *theta < exit.eval(&first) {
        if exit.slope_before() <= &Q::zero() {
            return None;
        }
        return Some(&first + (theta - exit.eval(&first)) / exit.slope_before());
    } else {
        first
    };
    exit.min_preimage(theta, &start).ok()
}
