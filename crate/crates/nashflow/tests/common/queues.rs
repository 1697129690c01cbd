//! Direct checks of the point-queue identities on loaded arcs, evaluated at
//! every breakpoint and every midpoint between them.

use nashflow::loading::{cumulative, FlowOverTime, QueueProfile};
use nashflow::netmodel::{ArcId, Instance};
use nashflow::rational::{midpoint, one, Q};
use nashflow::timefn::{integrate, PwlFunction, StepFunction};
use num::{Signed, Zero};

fn grid(inst: &Instance, flow: &FlowOverTime, profile: &QueueProfile, e: ArcId) -> Vec<Q> {
    let tau = &inst.arc(e).transit;
    let q = profile.arc(e);
    let mut xs: Vec<Q> = vec![Q::zero()];
    let mut add = |pts: &[Q]| {
        for p in pts {
            xs.push(p.clone());
            xs.push(p - tau);
            xs.push(p + tau);
        }
    };
    add(q.volume.breakpoints());
    add(q.waiting.breakpoints());
    add(q.exit.breakpoints());
    add(flow.total_inflow(e).breakpoints());
    add(flow.total_outflow(e).breakpoints());
    for j in 0..flow.commodity_count() {
        let j = nashflow::netmodel::CommodityId(j);
        add(flow.inflow(j, e).breakpoints());
        add(flow.outflow(j, e).breakpoints());
    }
    xs.retain(|x| !x.is_negative());
    xs.sort();
    xs.dedup();
    let last = xs.last().cloned().unwrap_or_else(Q::zero);
    xs.push(last + one());
    let mids: Vec<Q> = xs.windows(2).map(|w| midpoint(&w[0], &w[1])).collect();
    xs.extend(mids);
    xs.sort();
    xs
}

fn same_function(f: &PwlFunction, g: &PwlFunction, xs: &[Q]) -> bool {
    xs.iter().all(|x| f.eval(x) == g.eval(x))
}

fn rebuilt(f: &PwlFunction, from: &Q) -> PwlFunction {
    integrate(&f.differentiate(), from).add_const(&f.eval(from))
}

/// Lists every failed identity on arc `e`; empty when all hold.
pub fn arc_failures(inst: &Instance, flow: &FlowOverTime, profile: &QueueProfile, e: ArcId) -> Vec<String> {
    let a = inst.arc(e);
    let (tau, nu) = (&a.transit, &a.capacity);
    let queue = profile.arc(e);
    let (z, q, t) = (&queue.volume, &queue.waiting, &queue.exit);
    let f_in: StepFunction = flow.total_inflow(e);
    let f_out: StepFunction = flow.total_outflow(e);
    let (cap_in, cap_out) = (cumulative(&f_in), cumulative(&f_out));
    let xs = grid(inst, flow, profile, e);
    let mut bad = Vec::new();
    let mut fail = |what: &str, x: &Q| bad.push(format!("arc {} {what} at {x}", a.id));

    for x in &xs {
        let qx = q.eval(x);
        let tx = t.eval(x);
        if z.eval(x).is_negative() {
            fail("negative volume", x);
        }
        if z.eval(&(x + tau)) != cap_in.eval(x) - cap_out.eval(&(x + tau)) {
            fail("volume differs from inflow minus outflow", x);
        }
        if qx != z.eval(&(x + tau)) / nu || tx != x + tau + &qx {
            fail("waiting or exit time off definition", x);
        }
        // (1) waiting is positive exactly when the queue is.
        if qx.is_positive() != z.eval(&(x + tau)).is_positive() {
            fail("waiting and queue disagree on positivity", x);
        }
        // (2) the queue stays up until the particle leaves.
        if qx.is_positive() {
            let (lo, hi) = (x + tau, tx.clone());
            let mut pts: Vec<Q> = z.breakpoints().iter().filter(|b| **b > lo && **b < hi).cloned().collect();
            pts.push(lo.clone());
            pts.sort();
            let mut probes = pts.clone();
            probes.extend(pts.windows(2).map(|w| midpoint(&w[0], &w[1])));
            probes.push(midpoint(pts.last().unwrap(), &hi));
            if probes.iter().any(|p| !z.eval(p).is_positive()) {
                fail("queue empties before the particle leaves", x);
            }
        }
        // (3) cumulative inflow reappears at the exit time.
        if cap_in.eval(x) != cap_out.eval(&tx) {
            fail("cumulative flow not carried to the exit time", x);
        }
        for j in 0..flow.commodity_count() {
            let j = nashflow::netmodel::CommodityId(j);
            let (fj_in, fj_out) = (flow.cumulative_inflow(j, e), flow.cumulative_outflow(j, e));
            if fj_in.eval(x) != fj_out.eval(&tx) {
                fail(&format!("commodity {} not carried to the exit time", j.0), x);
            }
        }
        if f_out.eval(x) > *nu {
            fail("outflow above capacity", x);
        }
    }
    for w in xs.windows(2) {
        let (l, r) = (&w[0], &w[1]);
        // (5) exit times never decrease.
        if t.eval(l) > t.eval(r) {
            fail("exit time decreases", l);
        }
        let m = midpoint(l, r);
        let rate = f_in.eval(&m);
        // (4) no inflow and a queue: the exit time stands still.
        if rate.is_zero() && q.eval(r).is_positive() && t.eval(l) != t.eval(r) {
            fail("exit time moves without inflow", l);
        }
        // (7) waiting-time slope from the inflow rate.
        let load = &rate / nu - one();
        let expected = if q.eval(&m).is_positive() {
            load
        } else if load.is_positive() {
            load
        } else {
            Q::zero()
        };
        if q.slope_right(&m) != expected {
            fail("waiting-time slope", &m);
        }
        // Outflow law: capacity while queued, otherwise the arriving rate.
        let arriving = f_in.eval(&(&m - tau));
        let out = f_out.eval(&m);
        let law = if z.eval(&m).is_positive() {
            nu.clone()
        } else if arriving < *nu {
            arriving
        } else {
            nu.clone()
        };
        if out != law {
            fail("outflow law", &m);
        }
    }
    // (6) the piecewise-linear functions are their integrated derivatives.
    for (name, f) in [("volume", z), ("waiting", q), ("exit", t), ("inflow", &cap_in), ("outflow", &cap_out)] {
        if !same_function(f, &rebuilt(f, &xs[0]), &xs) {
            bad.push(format!("arc {} {name} differs from its integrated derivative", a.id));
        }
    }
    bad
}
