use num::{Signed, Zero};

use super::{CommodityLabels, LabelError, LabelSet};
use crate::netmodel::{transit_distances, ArcId, CommodityId, Instance, NodeId};
use crate::rational::{one, Q};
use crate::timefn::{PwlFunction, StepFunction};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendOptions {
    /// Maximal number of integration steps over all labels.
    pub max_breakpoints: usize,
}

impl Default for ExtendOptions {
    fn default() -> Self {
        ExtendOptions {
            max_breakpoints: 100_000,
        }
    }
}

/// Label under construction, known on `(-inf, last x]`, or everywhere when
/// `open` holds the slope beyond the last point.
#[derive(Debug, Clone)]
struct Track {
    xs: Vec<Q>,
    ys: Vec<Q>,
    slope_before: Q,
    open: Option<Q>,
}

impl Track {
    fn anchored(y0: Q, slope: Q, open: bool) -> Self {
        Track {
            xs: vec![Q::zero()],
            ys: vec![y0],
            open: open.then(|| slope.clone()),
            slope_before: slope,
        }
    }

    fn last_x(&self) -> &Q {
        self.xs.last().unwrap()
    }

    fn last_y(&self) -> &Q {
        self.ys.last().unwrap()
    }

    fn finished(&self, horizon: &Q) -> bool {
        self.open.is_some() || self.last_x() >= horizon
    }

    fn known_right(&self, x: &Q) -> bool {
        self.open.is_some() || x < self.last_x()
    }

    fn piece(&self, x: &Q) -> usize {
        self.xs.partition_point(|p| p <= x)
    }

    fn piece_slope(&self, k: usize) -> Q {
        let n = self.xs.len();
        if k == 0 {
            self.slope_before.clone()
        } else if k == n {
            self.open.clone().unwrap_or_else(Q::zero)
        } else {
            (&self.ys[k] - &self.ys[k - 1]) / (&self.xs[k] - &self.xs[k - 1])
        }
    }

    fn eval(&self, x: &Q) -> Q {
        let k = self.piece(x);
        if k == 0 {
            &self.ys[0] + &self.slope_before * (x - &self.xs[0])
        } else {
            &self.ys[k - 1] + self.piece_slope(k) * (x - &self.xs[k - 1])
        }
    }

    fn slope_right(&self, x: &Q) -> Q {
        self.piece_slope(self.piece(x))
    }

    fn next_break(&self, x: &Q) -> Option<Q> {
        self.xs.get(self.piece(x)).cloned()
    }

    /// Last particle with label at most `theta`, if known.
    fn last_preimage(&self, theta: &Q) -> Option<Q> {
        let n = self.xs.len();
        let k = self.ys.partition_point(|y| y <= theta);
        if k == 0 {
            return Some(&self.xs[0] + (theta - &self.ys[0]) / &self.slope_before);
        }
        if k == n {
            return match &self.open {
                Some(s) if s.is_positive() => Some(self.last_x() + (theta - self.last_y()) / s),
                _ => None,
            };
        }
        Some(&self.xs[k - 1] + (theta - &self.ys[k - 1]) / self.piece_slope(k))
    }

    fn push(&mut self, x: Q, y: Q) {
        let n = self.xs.len();
        if n >= 2 {
            let (x1, y1) = (&self.xs[n - 1], &self.ys[n - 1]);
            let (x0, y0) = (&self.xs[n - 2], &self.ys[n - 2]);
            if (&y - y1) * (x1 - x0) == (y1 - y0) * (&x - x1) {
                self.xs[n - 1] = x;
                self.ys[n - 1] = y;
                return;
            }
        }
        self.xs.push(x);
        self.ys.push(y);
    }

    fn into_pwl(self) -> PwlFunction {
        let n = self.xs.len();
        let after = match &self.open {
            Some(s) => s.clone(),
            None if n >= 2 => self.piece_slope(n - 1),
            None => self.slope_before.clone(),
        };
        let points = self.xs.into_iter().zip(self.ys).collect();
        PwlFunction::new(points, self.slope_before, after).expect("increasing particles")
    }
}

type Tracks = Vec<Vec<Option<Track>>>;

struct Sweep<'a> {
    inst: &'a Instance,
    strategies: &'a [Vec<StepFunction>],
    horizon: &'a Q,
    limit: usize,
    used: usize,
}

fn earlier(next: &mut Q, phi: &Q, candidate: Q) {
    if candidate > *phi && candidate < *next {
        *next = candidate;
    }
}

/// Builds labels of all commodities over particles `[0, horizon]` from
/// per-particle strategies `x'` indexed `[commodity][arc]`, so that sources
/// advance at rate `1/r_j` and every other label grows at the smallest
/// exit rate among its active incoming arcs.
///
/// The sweep proceeds in time windows of the smallest transit time: inside a
/// window every active arc reads its tail label only at times already fixed by
/// earlier windows.
pub fn extend_labels(
    inst: &Instance,
    strategies: &[Vec<StepFunction>],
    horizon: &Q,
    opts: &ExtendOptions,
) -> Result<LabelSet, LabelError> {
    if strategies.len() != inst.commodity_count()
        || strategies.iter().any(|row| row.len() != inst.arc_count())
    {
        return Err(LabelError::Shape);
    }
    if let Some(a) = inst.arcs().iter().find(|a| !a.transit.is_positive()) {
        return Err(LabelError::ZeroTransitArc { arc: a.id.clone() });
    }
    let tau_min = inst.min_transit().unwrap_or_else(Q::zero);

    let mut tracks: Tracks = inst
        .commodity_ids()
        .map(|j| {
            let c = inst.commodity(j);
            let slope = one() / &c.rate;
            transit_distances(inst, c.origin)
                .into_iter()
                .enumerate()
                .map(|(v, d)| {
                    d.map(|d| {
                        Track::anchored(&c.inflow_start + d, slope.clone(), v == c.origin.0)
                    })
                })
                .collect()
        })
        .collect();

    let mut sweep = Sweep {
        inst,
        strategies,
        horizon,
        limit: opts.max_breakpoints,
        used: 0,
    };
    loop {
        let theta0 = tracks
            .iter()
            .flatten()
            .flatten()
            .filter(|t| !t.finished(horizon))
            .map(|t| t.last_y())
            .min()
            .cloned();
        let Some(theta0) = theta0 else { break };
        let theta1 = theta0 + &tau_min;
        for j in inst.commodity_ids() {
            for v in inst.nodes() {
                let Some(mut me) = tracks[j.0][v.0].take() else {
                    continue;
                };
                let result = sweep.advance(&tracks, j, v, &mut me, &theta1);
                tracks[j.0][v.0] = Some(me);
                result?;
            }
        }
    }

    let commodities = tracks
        .into_iter()
        .enumerate()
        .map(|(j, row)| CommodityLabels {
            commodity: CommodityId(j),
            nodes: row.into_iter().map(|t| t.map(Track::into_pwl)).collect(),
            domain_end: Some(horizon.clone()),
        })
        .collect();
    Ok(LabelSet { commodities })
}

impl Sweep<'_> {
    /// Integrates `l_{j,v}` until it reaches `theta1` or the horizon.
    fn advance(
        &mut self,
        tracks: &Tracks,
        j: CommodityId,
        v: NodeId,
        me: &mut Track,
        theta1: &Q,
    ) -> Result<(), LabelError> {
        let inst = self.inst;
        loop {
            if me.finished(self.horizon) || me.last_y() >= theta1 {
                return Ok(());
            }
            self.used += 1;
            if self.used > self.limit {
                return Err(LabelError::BreakpointBudgetExceeded { limit: self.limit });
            }
            let phi = me.last_x().clone();
            let ell = me.last_y().clone();
            let mut next = self.horizon.clone();
            let mut slope: Option<Q> = None;
            let mut arrivals = Vec::new();

            for &e in inst.in_arcs(v) {
                let a = inst.arc(e);
                let Some(tu) = &tracks[j.0][a.tail.0] else {
                    continue;
                };
                if !tu.known_right(&phi) {
                    continue;
                }
                let arrival = tu.eval(&phi) + &a.transit;
                let rise = tu.slope_right(&phi);
                if let Some(b) = tu.next_break(&phi) {
                    earlier(&mut next, &phi, b);
                }
                if arrival <= ell {
                    let xj = &self.strategies[j.0][e.0];
                    let k = xj.breakpoints().partition_point(|b| *b <= phi);
                    if let Some(b) = xj.breakpoints().get(k) {
                        earlier(&mut next, &phi, b.clone());
                    }
                    let (yj, event) = self.foreign_rate(tracks, j, e, &phi);
                    if let Some(b) = event {
                        earlier(&mut next, &phi, b);
                    }
                    let w = (xj.eval(&phi) + yj) / &a.capacity;
                    let rho = if arrival < ell { w } else { w.max(rise.clone()) };
                    slope = Some(match slope {
                        Some(s) if s <= rho => s,
                        _ => rho,
                    });
                }
                arrivals.push((arrival, rise));
            }

            let slope = slope.ok_or_else(|| LabelError::NoActiveArc {
                commodity: inst.commodity(j).id.clone(),
                node: inst.node_name(v).to_string(),
            })?;
            for (arrival, rise) in arrivals {
                let gap = &arrival - &ell;
                if gap.is_positive() && rise < slope {
                    earlier(&mut next, &phi, &phi + gap / (&slope - &rise));
                } else if gap.is_negative() && rise > slope {
                    earlier(&mut next, &phi, &phi - gap / (&rise - &slope));
                }
            }
            if slope.is_positive() {
                earlier(&mut next, &phi, &phi + (theta1 - &ell) / &slope);
            }
            let value = &ell + &slope * (&next - &phi);
            me.push(next, value);
        }
    }

    /// Right-limit of `y'_{j,e}` at `phi`, and the next particle where it may
    /// change because another commodity's label or strategy breaks.
    fn foreign_rate(
        &self,
        tracks: &Tracks,
        j: CommodityId,
        e: ArcId,
        phi: &Q,
    ) -> (Q, Option<Q>) {
        let u = self.inst.arc(e).tail;
        let tj = tracks[j.0][u.0].as_ref().expect("active arc has a tail label");
        let slope = tj.slope_right(phi);
        if slope.is_zero() {
            return (Q::zero(), None);
        }
        let theta = tj.eval(phi);
        let mut rate = Q::zero();
        let mut next_theta: Option<Q> = None;
        for i in self.inst.commodity_ids().filter(|&i| i != j) {
            let xi = &self.strategies[i.0][e.0];
            let Some(ti) = &tracks[i.0][u.0] else { continue };
            if xi.is_zero() {
                continue;
            }
            let Some(psi) = ti.last_preimage(&theta) else {
                continue;
            };
            let k = xi.breakpoints().partition_point(|b| *b <= psi);
            let marks = [
                ti.next_break(&psi),
                xi.breakpoints().get(k).cloned(),
                psi.is_negative().then(Q::zero),
            ];
            if let Some(b) = marks.into_iter().flatten().min() {
                let tb = ti.eval(&b);
                if next_theta.as_ref().map_or(true, |t| tb < *t) {
                    next_theta = Some(tb);
                }
            }
            if psi.is_negative() {
                continue;
            }
            rate += xi.eval(&psi) * &slope / ti.slope_right(&psi);
        }
        let event = next_theta.map(|t| phi + (t - theta) / slope);
        (rate, event)
    }
}
