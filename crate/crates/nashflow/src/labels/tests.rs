use std::collections::BinaryHeap;
use std::cmp::Reverse;

use proptest::prelude::*;

use super::*;
use crate::loading::{load_network, LoadOptions};
use crate::netmodel::{ArcId, CommodityId, Instance, NodeId};
use crate::rational::{frac, q, Q};
use crate::timefn::{PwlFunction, StepFunction};

const J: CommodityId = CommodityId(0);

fn instance(json: &str) -> Instance {
    Instance::from_json_str(json).unwrap()
}

fn single_arc() -> Instance {
    instance(
        r#"{"nodes": ["s", "t"],
            "arcs": [{"id": "e", "tail": "s", "head": "t", "transit": 1, "capacity": 1}],
            "commodities": [
              {"id": "1", "origin": "s", "destination": "t", "rate": 2, "inflow_start": 0, "inflow_end": 1}]}"#,
    )
}

fn shared_arc() -> Instance {
    instance(
        r#"{"nodes": ["s", "t"],
            "arcs": [{"id": "e", "tail": "s", "head": "t", "transit": 1, "capacity": 1}],
            "commodities": [
              {"id": "a", "origin": "s", "destination": "t", "rate": 1, "inflow_start": 0, "inflow_end": 1},
              {"id": "b", "origin": "s", "destination": "t", "rate": 1, "inflow_start": 0, "inflow_end": 1}]}"#,
    )
}

fn path() -> Instance {
    instance(
        r#"{"nodes": ["s", "u", "t"],
            "arcs": [{"id": "a", "tail": "s", "head": "u", "transit": 2, "capacity": 1},
                     {"id": "b", "tail": "u", "head": "t", "transit": 3, "capacity": 1},
                     {"id": "c", "tail": "s", "head": "t", "transit": 7, "capacity": 1}],
            "commodities": [
              {"id": "1", "origin": "s", "destination": "t", "rate": 4, "inflow_start": 1, "inflow_end": 2}]}"#,
    )
}

fn zero_table(inst: &Instance) -> Vec<Vec<StepFunction>> {
    vec![vec![StepFunction::zero(); inst.arc_count()]; inst.commodity_count()]
}

fn loaded(inst: &Instance, inflows: Vec<Vec<StepFunction>>, horizon: i64) -> QueueProfile {
    load_network(inst, &inflows, &q(horizon), &LoadOptions::default())
        .unwrap()
        .1
}

#[test]
fn empty_network_labels_are_shifted_distances() {
    let inst = path();
    let profile = loaded(&inst, zero_table(&inst), 1);
    let labels = earliest_arrival(&inst, &profile, J, None).unwrap();
    for (v, d) in [(0, 0), (1, 2), (2, 5)] {
        let expected = PwlFunction::linear(frac(1, 4), q(1 + d));
        assert_eq!(labels.label(NodeId(v)).unwrap(), &expected);
    }
    let status = arc_status(&inst, &labels, &profile, &q(0));
    assert_eq!(status.active, vec![ArcId(0), ArcId(1)]);
    assert!(status.resetting.is_empty());
}

#[test]
fn single_arc_label_and_status() {
    let inst = single_arc();
    let fin = vec![vec![StepFunction::indicator(q(0), Some(q(1)), q(2))]];
    let profile = loaded(&inst, fin, 1);
    let labels = earliest_arrival(&inst, &profile, J, Some(q(2))).unwrap();
    let lt = labels.label(NodeId(1)).unwrap();
    for k in 0..=8 {
        let phi = frac(k, 4);
        assert_eq!(lt.eval(&phi), &phi + q(1));
    }
    let status = arc_status(&inst, &labels, &profile, &frac(1, 2));
    assert_eq!(status.active, vec![ArcId(0)]);
    assert_eq!(status.resetting, vec![ArcId(0)]);
}

#[test]
fn slower_parallel_arc_is_never_active() {
    let inst = instance(
        r#"{"nodes": ["s", "t"],
            "arcs": [{"id": "fast", "tail": "s", "head": "t", "transit": 1, "capacity": 1},
                     {"id": "slow", "tail": "s", "head": "t", "transit": 3, "capacity": 1}],
            "commodities": [
              {"id": "1", "origin": "s", "destination": "t", "rate": 1, "inflow_start": 0, "inflow_end": 1}]}"#,
    );
    let mut fin = zero_table(&inst);
    fin[0][1] = StepFunction::indicator(q(0), Some(q(1)), q(2));
    let profile = loaded(&inst, fin, 1);
    let labels = earliest_arrival(&inst, &profile, J, Some(q(1))).unwrap();
    for k in 0..=4 {
        let status = arc_status(&inst, &labels, &profile, &frac(k, 4));
        assert_eq!(status.active, vec![ArcId(0)]);
        if k > 0 {
            assert_eq!(status.resetting, vec![ArcId(1)]);
        }
    }
}

#[test]
fn waiting_times_recovered_from_labels() {
    let inst = single_arc();
    let fin = vec![vec![StepFunction::indicator(q(0), Some(q(1)), q(2))]];
    let profile = loaded(&inst, fin, 1);
    let labels = LabelSet {
        commodities: vec![earliest_arrival(&inst, &profile, J, Some(q(2))).unwrap()],
    };
    let waiting = &profile.arc(ArcId(0)).waiting;
    let mut thetas: Vec<Q> = waiting.breakpoints().to_vec();
    thetas.extend(labels.label(J, NodeId(0)).unwrap().values().iter().cloned());
    thetas.extend([frac(1, 4), frac(3, 4), q(5)]);
    for theta in thetas {
        let got = waiting_from_labels(&inst, &labels, ArcId(0), &theta).unwrap();
        assert_eq!(got, waiting.eval(&theta), "theta {theta}");
    }
}

#[test]
fn foreign_flow_of_identical_commodities() {
    let inst = shared_arc();
    let x = vec![vec![StepFunction::indicator(q(0), Some(q(1)), q(1))]; 2];
    let labels = extend_labels(&inst, &x, &q(1), &ExtendOptions::default()).unwrap();
    let y = foreign_flow(&inst, &labels, &x, J, ArcId(0)).unwrap();
    assert_eq!(y.rate, StepFunction::indicator(q(0), Some(q(1)), q(1)));
    assert_eq!(y.cumulative.eval(&frac(1, 2)), frac(1, 2));

    let single = single_arc();
    let xs = vec![vec![StepFunction::indicator(q(0), Some(q(2)), q(1))]];
    let labels = extend_labels(&single, &xs, &q(2), &ExtendOptions::default()).unwrap();
    let y = foreign_flow(&single, &labels, &xs, J, ArcId(0)).unwrap();
    assert!(y.rate.is_zero());
}

#[test]
fn foreign_flow_vanishes_where_the_tail_label_is_flat() {
    let inst = shared_arc();
    let flat = PwlFunction::new(vec![(q(0), q(0)), (q(1), q(0)), (q(2), q(1))], q(1), q(1)).unwrap();
    let line = PwlFunction::linear(q(1), q(0));
    let labels = LabelSet {
        commodities: vec![
            CommodityLabels {
                commodity: CommodityId(0),
                nodes: vec![Some(flat), None],
                domain_end: Some(q(2)),
            },
            CommodityLabels {
                commodity: CommodityId(1),
                nodes: vec![Some(line), None],
                domain_end: Some(q(2)),
            },
        ],
    };
    let x = vec![vec![StepFunction::indicator(q(0), Some(q(2)), q(1))]; 2];
    let y = foreign_flow(&inst, &labels, &x, J, ArcId(0)).unwrap();
    assert_eq!(y.rate.eval(&frac(1, 2)), q(0));
    assert_eq!(y.rate.eval(&frac(3, 2)), q(1));
}

#[test]
fn extension_reproduces_single_arc_labels() {
    let inst = single_arc();
    let x = vec![vec![StepFunction::indicator(q(0), Some(q(2)), q(1))]];
    let labels = extend_labels(&inst, &x, &q(2), &ExtendOptions::default()).unwrap();
    let fin = vec![vec![StepFunction::indicator(q(0), Some(q(1)), q(2))]];
    let profile = loaded(&inst, fin, 1);
    let reference = earliest_arrival(&inst, &profile, J, Some(q(2))).unwrap();
    let lt = labels.label(J, NodeId(1)).unwrap();
    for k in 0..=8 {
        let phi = frac(k, 4);
        assert_eq!(lt.eval(&phi), reference.label(NodeId(1)).unwrap().eval(&phi));
        assert_eq!(lt.eval(&phi), &phi + q(1));
    }
}

#[test]
fn extension_on_shared_arc() {
    let inst = shared_arc();
    let x = vec![vec![StepFunction::indicator(q(0), Some(q(1)), q(1))]; 2];
    let labels = extend_labels(&inst, &x, &q(1), &ExtendOptions::default()).unwrap();
    for j in 0..2 {
        let lt = labels.label(CommodityId(j), NodeId(1)).unwrap();
        for k in 0..=4 {
            let phi = frac(k, 4);
            assert_eq!(lt.eval(&phi), q(2) * &phi + q(1));
        }
        assert_eq!(labels.label(CommodityId(j), NodeId(0)).unwrap(), &PwlFunction::identity());
    }
}

#[test]
fn extension_without_flow_gives_distances() {
    let inst = path();
    let labels = extend_labels(&inst, &zero_table(&inst), &q(3), &ExtendOptions::default()).unwrap();
    for (v, d) in [(0, 0), (1, 2), (2, 5)] {
        let l = labels.label(J, NodeId(v)).unwrap();
        for k in 0..=6 {
            let phi = frac(k, 2);
            assert_eq!(l.eval(&phi), &phi / q(4) + q(1 + d));
        }
    }
}

#[test]
fn extension_errors() {
    let inst = instance(
        r#"{"nodes": ["s", "t"],
            "arcs": [{"id": "e", "tail": "s", "head": "t", "transit": 0, "capacity": 1}],
            "commodities": [{"id": "1", "origin": "s", "destination": "t", "rate": 1, "inflow_start": 0}]}"#,
    );
    assert!(matches!(
        extend_labels(&inst, &zero_table(&inst), &q(1), &ExtendOptions::default()),
        Err(LabelError::ZeroTransitArc { .. })
    ));
    let inst = single_arc();
    let x = vec![vec![StepFunction::indicator(q(0), Some(q(2)), q(1))]];
    let tight = ExtendOptions { max_breakpoints: 1 };
    assert!(matches!(
        extend_labels(&inst, &x, &q(2), &tight),
        Err(LabelError::BreakpointBudgetExceeded { .. })
    ));
}

#[test]
fn zero_transit_cycle_is_rejected() {
    let inst = instance(
        r#"{"nodes": ["s", "u", "t"],
            "arcs": [{"id": "a", "tail": "s", "head": "u", "transit": 0, "capacity": 1},
                     {"id": "b", "tail": "u", "head": "s", "transit": 0, "capacity": 1},
                     {"id": "c", "tail": "u", "head": "t", "transit": 1, "capacity": 1}],
            "commodities": [{"id": "1", "origin": "s", "destination": "t", "rate": 1, "inflow_start": 0}]}"#,
    );
    let profile = loaded(&inst, zero_table(&inst), 1);
    assert_eq!(
        earliest_arrival(&inst, &profile, J, None),
        Err(LabelError::CyclicZeroTransit)
    );
}

/// Time-dependent Dijkstra for a single particle.
fn oracle_arrival(inst: &Instance, profile: &QueueProfile, phi: &Q) -> Vec<Option<Q>> {
    let c = inst.commodity(J);
    let mut best: Vec<Option<Q>> = vec![None; inst.node_count()];
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((phi / &c.rate + &c.inflow_start, c.origin.0)));
    while let Some(Reverse((t, v))) = heap.pop() {
        if best[v].is_some() {
            continue;
        }
        best[v] = Some(t.clone());
        for &e in inst.out_arcs(NodeId(v)) {
            let head = inst.arc(e).head.0;
            if best[head].is_none() {
                heap.push(Reverse((profile.arc(e).exit.eval(&t), head)));
            }
        }
    }
    best
}

fn arb_network() -> impl Strategy<Value = (Instance, Vec<Vec<StepFunction>>)> {
    let arcs = proptest::collection::vec((1i64..=3, 1i64..=4, any::<bool>()), 6);
    let rates = proptest::collection::vec(proptest::collection::vec(0i64..=4, 3), 6);
    (arcs, rates).prop_map(|(arcs, rates)| {
        let pairs = [(0, 1), (1, 2), (2, 3), (0, 2), (1, 3), (0, 3)];
        let mut arc_json = Vec::new();
        let mut kept = Vec::new();
        for (k, ((tau, nu, keep), (a, b))) in arcs.iter().zip(pairs).enumerate() {
            if k < 3 || *keep {
                arc_json.push(format!(
                    r#"{{"id": "e{k}", "tail": "v{a}", "head": "v{b}", "transit": {tau}, "capacity": "{nu}/2"}}"#
                ));
                kept.push(k);
            }
        }
        let inst = Instance::from_json_str(&format!(
            r#"{{"nodes": ["v0", "v1", "v2", "v3"], "arcs": [{}],
                "commodities": [{{"id": "1", "origin": "v0", "destination": "v3", "rate": 1, "inflow_start": 0, "inflow_end": 2}}]}}"#,
            arc_json.join(",")
        ))
        .unwrap();
        let row = kept
            .iter()
            .map(|&k| {
                let steps = rates[k]
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (q(i as i64), q(*r)))
                    .chain(std::iter::once((q(3), q(0))))
                    .collect();
                StepFunction::new(q(0), steps).unwrap()
            })
            .collect();
        (inst, vec![row])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn labels_match_time_dependent_dijkstra((inst, fin) in arb_network()) {
        let profile = loaded(&inst, fin, 3);
        let labels = earliest_arrival(&inst, &profile, J, Some(q(2))).unwrap();
        for k in -2..=10 {
            let phi = frac(k, 4);
            let oracle = oracle_arrival(&inst, &profile, &phi);
            for v in inst.nodes() {
                let got = labels.label(v).map(|l| l.eval(&phi));
                prop_assert_eq!(got, oracle[v.0].clone());
            }
            let status = arc_status(&inst, &labels, &profile, &phi);
            for e in inst.arc_ids() {
                let a = inst.arc(e);
                let through = profile.arc(e).exit.eval(&labels.label(a.tail).unwrap().eval(&phi));
                let at_head = labels.label(a.head).unwrap().eval(&phi);
                prop_assert!(at_head <= through);
                prop_assert_eq!(at_head == through, status.active.contains(&e));
            }
        }
    }
}
