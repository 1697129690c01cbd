//! Brute-force thin flows: every assignment of arc states and label-attaining
//! arcs is turned into a linear system and decided exactly.

use nashflow::netmodel::{ArcId, Instance, NodeId};
use nashflow::rational::{one, Q};
use nashflow::thinflow::ThinFlow;
use num::{Signed, Zero};

use super::fm::System;

#[derive(Debug, Clone)]
pub struct TfQuery {
    pub active: Vec<ArcId>,
    pub resetting: Vec<ArcId>,
    /// `(node, rate)`; a single entry with `single` set fixes `l'_s = 1/r`.
    pub sources: Vec<(NodeId, Q)>,
    pub sink: NodeId,
    pub single: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Idle,
    /// Positive flow, stress equals the tail label.
    Pass,
    /// Positive flow, stress equals `x'/nu`.
    Congested,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    /// The query violates the solver's preconditions.
    Unsupported,
    NoSolution,
    /// The label derivatives shared by every solution, and the number of
    /// feasible assignments found.
    Labels { labels: Vec<Option<Q>>, cells: usize },
    /// Two solutions disagree on a label, or one assignment leaves it free.
    Ambiguous { node: NodeId },
}

/// Nodes reached from the sources over active arcs.
pub fn reached(inst: &Instance, active: &[ArcId], sources: &[NodeId]) -> Vec<bool> {
    let mut seen = vec![false; inst.node_count()];
    let mut stack: Vec<NodeId> = sources.to_vec();
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut seen[v.0], true) {
            continue;
        }
        for &e in active {
            if inst.arc(e).tail == v {
                stack.push(inst.arc(e).head);
            }
        }
    }
    seen
}

struct Layout {
    arc_col: Vec<usize>,
    node_col: Vec<Option<usize>>,
    cols: usize,
}

pub fn enumerate(inst: &Instance, query: &TfQuery) -> OracleOutcome {
    let source_nodes: Vec<NodeId> = query.sources.iter().map(|s| s.0).collect();
    let seen = reached(inst, &query.active, &source_nodes);
    let touches_unseen = query
        .active
        .iter()
        .any(|&e| !seen[inst.arc(e).tail.0] || !seen[inst.arc(e).head.0]);
    if touches_unseen || !seen[query.sink.0] {
        return OracleOutcome::Unsupported;
    }
    let m = query.active.len();
    let mut node_col = vec![None; inst.node_count()];
    let mut cols = m;
    for v in inst.nodes() {
        if seen[v.0] {
            node_col[v.0] = Some(cols);
            cols += 1;
        }
    }
    let layout = Layout {
        arc_col: (0..m).collect(),
        node_col,
        cols,
    };

    let mut found: Option<Vec<Option<Q>>> = None;
    let mut cells = 0;
    let mut states = vec![State::Idle; m];
    let mut stop = None;
    walk_states(inst, query, &layout, &mut states, 0, &mut |sys, states| {
        if stop.is_some() || !sys.is_feasible() {
            return;
        }
        for_each_attainer(inst, query, &layout, states, sys, &mut |sys| {
            if stop.is_some() || !sys.is_feasible() {
                return;
            }
            cells += 1;
            let mut labels = vec![None; inst.node_count()];
            for v in inst.nodes() {
                let Some(c) = layout.node_col[v.0] else { continue };
                match sys.range(&[(c, one())]) {
                    Some((Some((lo, true)), Some((hi, true)))) if lo == hi => labels[v.0] = Some(lo),
                    _ => {
                        stop = Some(v);
                        return;
                    }
                }
            }
            match &found {
                None => found = Some(labels),
                Some(prev) => {
                    if let Some(v) = inst.nodes().find(|v| prev[v.0] != labels[v.0]) {
                        stop = Some(v);
                    }
                }
            }
        });
    });
    match (stop, found) {
        (Some(node), _) => OracleOutcome::Ambiguous { node },
        (None, Some(labels)) => OracleOutcome::Labels { labels, cells },
        (None, None) => OracleOutcome::NoSolution,
    }
}

fn is_source(query: &TfQuery, v: NodeId) -> bool {
    query.sources.iter().any(|s| s.0 == v)
}

/// Linear expression of the stress of active arc `k` under `state`.
fn stress(inst: &Instance, query: &TfQuery, layout: &Layout, k: usize, state: State) -> Vec<(usize, Q)> {
    let e = query.active[k];
    let a = inst.arc(e);
    let tail = layout.node_col[a.tail.0].unwrap();
    let reset = query.resetting.contains(&e);
    match (state, reset) {
        (State::Idle, true) => vec![],
        (State::Idle, false) | (State::Pass, _) => vec![(tail, one())],
        (State::Congested, _) => vec![(layout.arc_col[k], one() / &a.capacity)],
    }
}

fn base_system(inst: &Instance, query: &TfQuery, layout: &Layout, states: &[State]) -> System {
    let mut sys = System::new(layout.cols);
    let mut balance: Vec<Vec<(usize, Q)>> = vec![Vec::new(); inst.node_count()];
    for (k, &e) in query.active.iter().enumerate() {
        let a = inst.arc(e);
        let x = layout.arc_col[k];
        balance[a.tail.0].push((x, one()));
        balance[a.head.0].push((x, -one()));
        let rho = stress(inst, query, layout, k, states[k]);
        let head = layout.node_col[a.head.0].unwrap();
        let tail = layout.node_col[a.tail.0].unwrap();
        let nu_inv = one() / &a.capacity;
        match states[k] {
            State::Idle => sys.eq(&[(x, one())], Q::zero()),
            State::Pass => {
                sys.gt(&[(x, one())], Q::zero());
                sys.le(&[(x, nu_inv.clone()), (tail, -one())], Q::zero());
            }
            State::Congested => {
                sys.gt(&[(x, one())], Q::zero());
                if !query.resetting.contains(&e) {
                    sys.ge(&[(x, nu_inv.clone()), (tail, -one())], Q::zero());
                }
            }
        }
        let mut diff = rho.clone();
        diff.push((head, -one()));
        if states[k] == State::Idle {
            sys.ge(&diff, Q::zero());
        } else {
            sys.eq(&diff, Q::zero());
        }
    }
    let mut supply_total = Vec::new();
    for v in inst.nodes() {
        let Some(lv) = layout.node_col[v.0] else { continue };
        let mut terms = balance[v.0].clone();
        let mut rhs = Q::zero();
        if let Some((_, rate)) = query.sources.iter().find(|s| s.0 == v) {
            if query.single {
                rhs += one();
                sys.eq(&[(lv, one())], one() / rate);
            } else {
                terms.push((lv, -rate.clone()));
                supply_total.push((lv, rate.clone()));
                sys.ge(&[(lv, one())], Q::zero());
            }
        }
        if v == query.sink {
            rhs -= one();
        }
        sys.eq(&terms, rhs);
    }
    if !query.single {
        sys.eq(&supply_total, one());
    }
    sys
}

fn walk_states(
    inst: &Instance,
    query: &TfQuery,
    layout: &Layout,
    states: &mut Vec<State>,
    k: usize,
    visit: &mut dyn FnMut(&mut System, &[State]),
) {
    if k == states.len() {
        let mut sys = base_system(inst, query, layout, states);
        visit(&mut sys, states);
        return;
    }
    let reset = query.resetting.contains(&query.active[k]);
    for s in [State::Idle, State::Pass, State::Congested] {
        if reset && s == State::Pass {
            continue;
        }
        states[k] = s;
        walk_states(inst, query, layout, states, k + 1, visit);
    }
}

/// Adds, for every non-source node without a loaded incoming arc, the
/// equality of its label with the stress of one chosen incoming arc.
fn for_each_attainer(
    inst: &Instance,
    query: &TfQuery,
    layout: &Layout,
    states: &[State],
    sys: &mut System,
    visit: &mut dyn FnMut(&mut System),
) {
    let mut open: Vec<(usize, Vec<usize>)> = Vec::new();
    for v in inst.nodes() {
        let Some(lv) = layout.node_col[v.0] else { continue };
        if is_source(query, v) {
            continue;
        }
        let incoming: Vec<usize> = (0..query.active.len())
            .filter(|&k| inst.arc(query.active[k]).head == v)
            .collect();
        if incoming.iter().all(|&k| states[k] == State::Idle) {
            open.push((lv, incoming));
        }
    }
    fn go(
        inst: &Instance,
        query: &TfQuery,
        layout: &Layout,
        states: &[State],
        open: &[(usize, Vec<usize>)],
        sys: &System,
        visit: &mut dyn FnMut(&mut System),
    ) {
        let Some(((lv, incoming), rest)) = open.split_first() else {
            visit(&mut sys.clone());
            return;
        };
        for &k in incoming {
            let mut next = sys.clone();
            let mut diff = stress(inst, query, layout, k, states[k]);
            diff.push((*lv, -one()));
            next.eq(&diff, Q::zero());
            if next.is_feasible() {
                go(inst, query, layout, states, rest, &next, visit);
            }
        }
    }
    go(inst, query, layout, states, &open, sys, visit);
}

/// Checks a solver result against the thin-flow conditions directly.
pub fn check_conditions(inst: &Instance, query: &TfQuery, tf: &ThinFlow) -> Result<(), String> {
    let mut net = vec![Q::zero(); inst.node_count()];
    for e in inst.arc_ids() {
        let x = &tf.flow[e.0];
        if x.is_negative() {
            return Err(format!("negative flow on {}", inst.arc(e).id));
        }
        if !query.active.contains(&e) && !x.is_zero() {
            return Err(format!("flow on inactive arc {}", inst.arc(e).id));
        }
        net[inst.arc(e).tail.0] += x;
        net[inst.arc(e).head.0] -= x;
    }
    let mut total = Q::zero();
    for (node, rate) in &query.sources {
        let l = tf.labels[node.0].clone().ok_or("source without label")?;
        let supply = if query.single {
            if l != one() / rate {
                return Err("source label differs from 1/r".into());
            }
            one()
        } else {
            rate * &l
        };
        net[node.0] -= &supply;
        total += supply;
    }
    if total != one() {
        return Err(format!("total supply {total}"));
    }
    net[query.sink.0] += one();
    if net.iter().any(|v| !v.is_zero()) {
        return Err("conservation".into());
    }
    for v in inst.nodes() {
        let Some(lv) = &tf.labels[v.0] else { continue };
        let mut rhos = Vec::new();
        for &e in &query.active {
            let a = inst.arc(e);
            if a.head != v {
                continue;
            }
            let lu = tf.labels[a.tail.0].as_ref().ok_or("active arc from unlabelled node")?;
            let w = &tf.flow[e.0] / &a.capacity;
            let rho = if query.resetting.contains(&e) || w > *lu { w } else { lu.clone() };
            if tf.flow[e.0].is_positive() && rho != *lv {
                return Err(format!("loaded arc {} is not tight", a.id));
            }
            rhos.push(rho);
        }
        let Some(min) = rhos.into_iter().min() else { continue };
        if is_source(query, v) {
            if *lv > min {
                return Err(format!("source {} label above incoming stress", inst.node_name(v)));
            }
        } else if *lv != min {
            return Err(format!("label of {} is not the minimal stress", inst.node_name(v)));
        }
    }
    Ok(())
}
