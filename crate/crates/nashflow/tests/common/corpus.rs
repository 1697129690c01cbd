//! The fixed construction corpus: networks with the particle horizon used
//! for each (`None` = up to the inflow bound).

use std::path::{Path, PathBuf};

use nashflow::nash::{
    construct_common_destination, construct_common_origin, construct_nash_single, NashError,
    NashFlowOverTime, NashOptions,
};
use nashflow::netmodel::{Instance, Mode};
use nashflow::rational::{q, Q};

pub const CORPUS: [(&str, Option<i64>); 12] = [
    ("single_arc", None),
    ("path_bottleneck", None),
    ("parallel_links", None),
    ("wheatstone", None),
    ("braess_tight", None),
    ("evacuation_pair", Some(4)),
    ("evacuation_corridor", Some(6)),
    ("evacuation_three", Some(8)),
    ("two_sinks", Some(6)),
    ("two_sinks_parallel", Some(6)),
    ("three_sinks", Some(6)),
    ("one_sink_origin", Some(6)),
];

pub fn path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(format!("{name}.json"))
}

pub fn load(name: &str) -> Instance {
    Instance::load(path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn construct(inst: &Instance, horizon: Option<i64>) -> Result<NashFlowOverTime, NashError> {
    let opts = NashOptions {
        horizon: horizon.map(q),
        ..NashOptions::default()
    };
    match inst.mode() {
        Mode::General => construct_nash_single(inst, &opts),
        Mode::CommonDestination => construct_common_destination(inst, &opts),
        Mode::CommonOrigin => construct_common_origin(inst, &opts),
    }
}

/// Every corpus entry with its construction result.
pub fn constructed() -> Vec<(&'static str, Instance, Result<NashFlowOverTime, NashError>)> {
    CORPUS
        .iter()
        .map(|&(name, h)| {
            let inst = load(name);
            let nash = construct(&inst, h);
            (name, inst, nash)
        })
        .collect()
}

pub fn horizon_of(name: &str) -> Option<Q> {
    CORPUS.iter().find(|c| c.0 == name).and_then(|c| c.1.map(q))
}
