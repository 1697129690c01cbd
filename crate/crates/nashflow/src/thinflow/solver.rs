use num::Zero;

use super::{ThinFlow, ThinFlowError};
use crate::lp::{LinearProgram, Relation};
use crate::netmodel::{ArcId, Instance, NodeId};
use crate::rational::{one, Q};

/// Largest active set the exact search accepts.
pub const MAX_ACTIVE_ARCS: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThinFlowSource {
    pub node: NodeId,
    pub rate: Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ArcState {
    /// Resetting arc: `l'_v = x'/nu`.
    Reset,
    /// Capacity sets the label: `l'_v = x'/nu >= l'_u`.
    Capacity,
    /// Label passes through: `l'_v = l'_u >= x'/nu`.
    Pass,
    /// Idle and slack: `x' = 0`, `l'_v <= l'_u`.
    Slack,
}

#[derive(Debug, Clone)]
enum Supply {
    /// One source with `l'_s = 1/r` and the given flow value.
    Fixed(Q),
    /// Unit supply split with `l'_{s_j} = x'_j / r_j`.
    Split,
}

struct Problem<'a> {
    inst: &'a Instance,
    /// Active arcs ordered by the topological position of their tails.
    arcs: Vec<ArcId>,
    resetting: Vec<bool>,
    sources: Vec<ThinFlowSource>,
    sink: NodeId,
    supply: Supply,
    /// Column of `l'_v` for nodes reached by active arcs.
    node_col: Vec<Option<usize>>,
    cols: usize,
}

impl<'a> Problem<'a> {
    fn new(
        inst: &'a Instance,
        active: &[ArcId],
        resetting: &[ArcId],
        sources: Vec<ThinFlowSource>,
        sink: NodeId,
        supply: Supply,
    ) -> Result<Self, ThinFlowError> {
        let mut arcs: Vec<ArcId> = active.to_vec();
        arcs.sort();
        arcs.dedup();
        if arcs.len() > MAX_ACTIVE_ARCS {
            return Err(ThinFlowError::SizeLimitExceeded {
                arcs: arcs.len(),
                limit: MAX_ACTIVE_ARCS,
            });
        }
        if let Some(&e) = resetting.iter().find(|e| !arcs.contains(e)) {
            return Err(ThinFlowError::ResettingInactive {
                arc: inst.arc(e).id.clone(),
            });
        }
        let order = inst
            .topological_order(|a| arcs.iter().any(|&e| std::ptr::eq(inst.arc(e), a)))
            .ok_or(ThinFlowError::Cyclic)?;
        let mut position = vec![0; inst.node_count()];
        for (k, v) in order.iter().enumerate() {
            position[v.0] = k;
        }
        arcs.sort_by_key(|&e| (position[inst.arc(e).tail.0], position[inst.arc(e).head.0], e));

        let mut reached = vec![false; inst.node_count()];
        for s in &sources {
            reached[s.node.0] = true;
        }
        for v in &order {
            if reached[v.0] {
                for &e in &arcs {
                    if inst.arc(e).tail == *v {
                        reached[inst.arc(e).head.0] = true;
                    }
                }
            }
        }
        for &e in &arcs {
            let a = inst.arc(e);
            for v in [a.tail, a.head] {
                if !reached[v.0] {
                    return Err(ThinFlowError::UnreachableNode {
                        node: inst.node_name(v).to_string(),
                    });
                }
            }
        }
        let needs_sink = !matches!(&supply, Supply::Fixed(v) if v.is_zero());
        if needs_sink && !reached[sink.0] {
            return Err(ThinFlowError::NoSinkPath);
        }

        let m = arcs.len();
        let mut node_col = vec![None; inst.node_count()];
        let mut cols = m;
        for v in inst.nodes() {
            if reached[v.0] {
                node_col[v.0] = Some(cols);
                cols += 1;
            }
        }
        if matches!(supply, Supply::Split) {
            cols += sources.len();
        }
        let resetting = arcs.iter().map(|e| resetting.contains(e)).collect();
        Ok(Problem {
            inst,
            arcs,
            resetting,
            sources,
            sink,
            supply,
            node_col,
            cols,
        })
    }

    fn label_col(&self, v: NodeId) -> usize {
        self.node_col[v.0].expect("node reached by active arcs")
    }

    fn supply_col(&self, j: usize) -> usize {
        self.cols - self.sources.len() + j
    }

    fn is_source(&self, v: NodeId) -> bool {
        self.sources.iter().any(|s| s.node == v)
    }

    /// Conservation and source conditions shared by every assignment.
    fn base(&self) -> LinearProgram {
        let inst = self.inst;
        let mut lp = LinearProgram::new(self.cols);
        for v in inst.nodes().filter(|v| self.node_col[v.0].is_some()) {
            let mut terms = Vec::new();
            for (k, &e) in self.arcs.iter().enumerate() {
                let a = inst.arc(e);
                if a.tail == v {
                    terms.push((k, one()));
                }
                if a.head == v {
                    terms.push((k, -one()));
                }
            }
            let mut rhs = Q::zero();
            for (j, s) in self.sources.iter().enumerate() {
                if s.node == v {
                    match &self.supply {
                        Supply::Fixed(value) => rhs += value,
                        Supply::Split => terms.push((self.supply_col(j), -one())),
                    }
                }
            }
            if v == self.sink {
                rhs -= match &self.supply {
                    Supply::Fixed(value) => value.clone(),
                    Supply::Split => one(),
                };
            }
            lp.add(terms, Relation::Eq, rhs);
        }
        for (j, s) in self.sources.iter().enumerate() {
            let col = self.label_col(s.node);
            match &self.supply {
                Supply::Fixed(_) => lp.add(vec![(col, one())], Relation::Eq, one() / &s.rate),
                Supply::Split => lp.add(
                    vec![(col, s.rate.clone()), (self.supply_col(j), -one())],
                    Relation::Eq,
                    Q::zero(),
                ),
            }
        }
        if matches!(self.supply, Supply::Split) {
            let terms = (0..self.sources.len())
                .map(|j| (self.supply_col(j), one()))
                .collect();
            lp.add(terms, Relation::Eq, one());
        }
        lp
    }

    fn add_state(&self, lp: &mut LinearProgram, k: usize, state: ArcState) {
        let a = self.inst.arc(self.arcs[k]);
        let (lu, lv) = (self.label_col(a.tail), self.label_col(a.head));
        let inv = one() / &a.capacity;
        match state {
            ArcState::Reset => {
                lp.add(vec![(lv, one()), (k, -inv)], Relation::Eq, Q::zero());
            }
            ArcState::Capacity => {
                lp.add(vec![(lv, one()), (k, -inv.clone())], Relation::Eq, Q::zero());
                lp.add(vec![(k, inv), (lu, -one())], Relation::Ge, Q::zero());
            }
            ArcState::Pass => {
                lp.add(vec![(lv, one()), (lu, -one())], Relation::Eq, Q::zero());
                lp.add(vec![(k, inv), (lu, -one())], Relation::Le, Q::zero());
            }
            ArcState::Slack => {
                lp.add(vec![(k, one())], Relation::Eq, Q::zero());
                lp.add(vec![(lv, one()), (lu, -one())], Relation::Le, Q::zero());
            }
        }
    }

    /// Depth-first search over arc states, pruning with exact feasibility.
    fn search(&self) -> Result<Vec<Q>, ThinFlowError> {
        let mut states = Vec::with_capacity(self.arcs.len());
        let base = self.base();
        if base.feasible_point().is_none() {
            return Err(ThinFlowError::NoSolution);
        }
        self.descend(&base, &mut states)
            .ok_or(ThinFlowError::NoSolution)
    }

    fn descend(&self, lp: &LinearProgram, states: &mut Vec<ArcState>) -> Option<Vec<Q>> {
        let k = states.len();
        if k == self.arcs.len() {
            return lp.feasible_point();
        }
        let options: &[ArcState] = if self.resetting[k] {
            &[ArcState::Reset]
        } else {
            &[ArcState::Capacity, ArcState::Pass, ArcState::Slack]
        };
        for &state in options {
            states.push(state);
            if self.min_condition_holds(states) {
                let mut next = lp.clone();
                self.add_state(&mut next, k, state);
                if next.feasible_point().is_some() {
                    if let Some(point) = self.descend(&next, states) {
                        return Some(point);
                    }
                }
            }
            states.pop();
        }
        None
    }

    /// A non-source node whose incoming arcs are all decided needs one of
    /// them to attain its label.
    fn min_condition_holds(&self, states: &[ArcState]) -> bool {
        let k = states.len() - 1;
        let v = self.inst.arc(self.arcs[k]).head;
        if self.is_source(v) {
            return true;
        }
        let incoming: Vec<usize> = (0..self.arcs.len())
            .filter(|&i| self.inst.arc(self.arcs[i]).head == v)
            .collect();
        if incoming.iter().any(|&i| i >= states.len()) {
            return true;
        }
        incoming.iter().any(|&i| states[i] != ArcState::Slack)
    }

    /// Given the unique labels, picks the flow maximizing `x'` in arc order.
    fn flow_for(&self, labels: &[Q]) -> Option<Vec<Q>> {
        let inst = self.inst;
        let mut lp = LinearProgram::new(self.cols);
        for (col, l) in self.node_col.iter().flatten().zip(labels) {
            lp.add(vec![(*col, one())], Relation::Eq, l.clone());
        }
        let base = self.base();
        for c in base.constraints() {
            lp.add(c.terms.clone(), c.relation, c.rhs.clone());
        }
        let label = |v: NodeId| &labels[self.label_col(v) - self.arcs.len()];
        for (k, &e) in self.arcs.iter().enumerate() {
            let a = inst.arc(e);
            let (lu, lv) = (label(a.tail), label(a.head));
            let cap = &a.capacity;
            if self.resetting[k] || lv > lu {
                lp.add(vec![(k, one())], Relation::Eq, cap * lv);
            } else if lv == lu {
                lp.add(vec![(k, one())], Relation::Le, cap * lu);
            } else {
                lp.add(vec![(k, one())], Relation::Eq, Q::zero());
            }
        }
        let mut order: Vec<usize> = (0..self.arcs.len()).collect();
        order.sort_by_key(|&k| self.arcs[k]);
        lp.lexicographic_max(&order)
    }

    fn solve(self) -> Result<ThinFlow, ThinFlowError> {
        let point = self.search()?;
        let m = self.arcs.len();
        let labels: Vec<Q> = self.node_col.iter().flatten().map(|&c| point[c].clone()).collect();
        let x = self.flow_for(&labels).ok_or(ThinFlowError::NoSolution)?;
        let inst = self.inst;
        let mut flow = vec![Q::zero(); inst.arc_count()];
        for (k, &e) in self.arcs.iter().enumerate() {
            flow[e.0] = x[k].clone();
        }
        let node_labels = self
            .node_col
            .iter()
            .map(|c| c.map(|c| labels[c - m].clone()))
            .collect();
        let supplies = match &self.supply {
            Supply::Fixed(value) => vec![value.clone()],
            Supply::Split => (0..self.sources.len())
                .map(|j| x[self.supply_col(j)].clone())
                .collect(),
        };
        let mut active = self.arcs.clone();
        active.sort();
        let resetting = active
            .iter()
            .copied()
            .filter(|e| self.resetting[self.arcs.iter().position(|a| a == e).unwrap()])
            .collect();
        Ok(ThinFlow {
            active,
            resetting,
            flow,
            labels: node_labels,
            sources: self.sources,
            supplies,
            sink: self.sink,
        })
    }
}

/// Single-source thin flow of value 1 with resetting on `active`.
pub fn solve_thinflow_single(
    inst: &Instance,
    active: &[ArcId],
    resetting: &[ArcId],
    source: NodeId,
    sink: NodeId,
    rate: &Q,
) -> Result<ThinFlow, ThinFlowError> {
    solve_single_with_value(inst, active, resetting, source, sink, rate, &one())
}

/// Single-source thin flow of the given value; value 0 describes particles
/// outside the inflow interval.
pub(crate) fn solve_single_with_value(
    inst: &Instance,
    active: &[ArcId],
    resetting: &[ArcId],
    source: NodeId,
    sink: NodeId,
    rate: &Q,
    value: &Q,
) -> Result<ThinFlow, ThinFlowError> {
    let sources = vec![ThinFlowSource {
        node: source,
        rate: rate.clone(),
    }];
    Problem::new(inst, active, resetting, sources, sink, Supply::Fixed(value.clone()))?.solve()
}

/// Multi-source thin flow with resetting: a unit supply split among the
/// sources with `l'_{s_j} = x'_j / r_j`.
pub fn solve_thinflow_multisource(
    inst: &Instance,
    active: &[ArcId],
    resetting: &[ArcId],
    sources: &[ThinFlowSource],
    sink: NodeId,
) -> Result<ThinFlow, ThinFlowError> {
    Problem::new(inst, active, resetting, sources.to_vec(), sink, Supply::Split)?.solve()
}
