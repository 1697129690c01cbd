//! Phase-by-phase construction of Nash flows over time for one commodity and
//! for the common-destination and common-origin cases, the reconstruction of
//! arc flows from thin flows, and the equilibrium verifier.

mod construct;
mod phases;
mod reconstruct;
mod verify;

use serde_json::json;

pub use construct::{construct_common_destination, construct_common_origin, construct_nash_single};
pub use reconstruct::reconstruct_flow;
pub use verify::{check_derivatives_thinflow, verify_nash, NashCertificate, NashViolation};

use crate::labels::{LabelError, LabelSet};
use crate::loading::{FlowFile, FlowOverTime, Interval, LoadError};
use crate::netmodel::{Instance, Mode, NetError};
use crate::rational::{format, Q};
use crate::thinflow::{ThinFlow, ThinFlowError};
use crate::timefn::{pwl_to_json, step_to_json, PwlFunction, StepFunction, TimeFnError};

/// Default cap on the number of phases.
pub const DEFAULT_MAX_PHASES: usize = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum NashError {
    #[error("more than {limit} phases needed")]
    PhaseBudgetExceeded { limit: usize },
    #[error("a particle horizon is required for unbounded inflow")]
    HorizonRequired,
    #[error("the horizon must be positive")]
    InvalidHorizon,
    #[error("expected an instance in mode {expected}, found {found}")]
    WrongMode { expected: Mode, found: Mode },
    #[error("expected exactly one commodity, found {count}")]
    NotSingleCommodity { count: usize },
    #[error("commodity {commodity} must start its inflow at time 0")]
    InflowStartNonZero { commodity: String },
    #[error("commodity {commodity} must have unbounded inflow")]
    BoundedInflow { commodity: String },
    #[error("commodities {first} and {second} share their origin")]
    SharedSource { first: String, second: String },
    #[error("commodity {commodity} receives no particles before the horizon")]
    HorizonTooShort { commodity: String },
    #[error("a directed cycle has zero total transit time")]
    CycleWithZeroTransit,
    #[error("node {node} has a label but no thin-flow derivative")]
    UncoveredNode { node: String },
    #[error("new arc of commodity {commodity} carries {} instead of its rate share", format(.found))]
    SupplyIdentityViolated { commodity: String, found: Q },
    #[error(transparent)]
    ThinFlow(#[from] ThinFlowError),
    #[error(transparent)]
    Labels(#[from] LabelError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Time(#[from] TimeFnError),
    #[error(transparent)]
    Network(#[from] NetError),
}

/// Limits for the phase loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NashOptions {
    /// Last particle to construct; defaults to the particle bound when finite.
    pub horizon: Option<Q>,
    pub max_phases: usize,
}

impl Default for NashOptions {
    fn default() -> Self {
        NashOptions {
            horizon: None,
            max_phases: DEFAULT_MAX_PHASES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    Single,
    CommonDestination,
    CommonOrigin,
}

impl Construction {
    pub fn name(self) -> &'static str {
        match self {
            Construction::Single => "single",
            Construction::CommonDestination => "commonDestination",
            Construction::CommonOrigin => "commonOrigin",
        }
    }
}

/// Particles `[start, end)` on which one thin flow describes the derivatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    pub start: Q,
    pub end: Q,
    pub thinflow: ThinFlow,
    /// `x'_{j,e}` per commodity, indexed by the arcs of `instance`.
    pub decomposition: Vec<Vec<Q>>,
}

impl Phase {
    pub fn interval(&self) -> Interval {
        Interval::new(Some(self.start.clone()), Some(self.end.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NashFlowOverTime {
    pub construction: Construction,
    /// The input instance with every inflow interval cut at the horizon.
    pub instance: Instance,
    /// Network the phases live on; the extended graph for common origins.
    pub network: Instance,
    pub horizon: Q,
    pub phases: Vec<Phase>,
    /// Labels `l_v` of the construction's particles on `network`.
    pub node_labels: Vec<Option<PwlFunction>>,
    /// Earliest-arrival labels per commodity of `flow` on `instance`.
    pub labels: LabelSet,
    pub flow: FlowOverTime,
    /// Share `f_j` of each particle entering at source `j`.
    pub inflow_distribution: Option<Vec<StepFunction>>,
}

impl NashFlowOverTime {
    pub fn to_json(&self) -> serde_json::Value {
        let phases: Vec<_> = self
            .phases
            .iter()
            .map(|p| {
                let decomposition: serde_json::Map<_, _> = self
                    .instance
                    .commodity_ids()
                    .zip(&p.decomposition)
                    .map(|(j, row)| {
                        let arcs: serde_json::Map<_, _> = self
                            .instance
                            .arc_ids()
                            .filter(|e| !num::Zero::is_zero(&row[e.0]))
                            .map(|e| (self.instance.arc(e).id.clone(), json!(format(&row[e.0]))))
                            .collect();
                        (self.instance.commodity(j).id.clone(), json!(arcs))
                    })
                    .collect();
                json!({
                    "interval": p.interval(),
                    "thinflow": p.thinflow.to_json(&self.network),
                    "decomposition": decomposition,
                })
            })
            .collect();
        let node_labels: serde_json::Map<_, _> = self
            .network
            .nodes()
            .filter_map(|v| {
                self.node_labels[v.0]
                    .as_ref()
                    .map(|l| (self.network.node_name(v).to_string(), pwl_to_json(l)))
            })
            .collect();
        let mut out = json!({
            "construction": self.construction.name(),
            "horizon": format(&self.horizon),
            "phases": phases,
            "node_labels": node_labels,
            "labels": self.labels.to_json(&self.instance),
            "flow": FlowFile::from_flow(&self.instance, &self.flow),
        });
        if let Some(dist) = &self.inflow_distribution {
            let dist: serde_json::Map<_, _> = self
                .instance
                .commodities()
                .iter()
                .zip(dist)
                .map(|(c, f)| (c.id.clone(), step_to_json(f)))
                .collect();
            out["inflow_distribution"] = json!(dist);
        }
        out
    }
}
