use num::{Signed, Zero};

use super::NashError;
use crate::labels::LabelSet;
use crate::loading::FlowOverTime;
use crate::netmodel::Instance;
use crate::rational::{min_q, Q};
use crate::timefn::{PwlFunction, StepFunction, TimeFnError};

/// Step function spreading each `mass` uniformly over its time span
/// `[t0, t1)`; empty spans carry nothing.
pub(super) fn spread(segments: Vec<(Q, Q, Q)>) -> Result<StepFunction, TimeFnError> {
    let pieces = segments
        .into_iter()
        .filter(|(t0, t1, mass)| t1 > t0 && !mass.is_zero())
        .map(|(t0, t1, mass)| {
            let rate = mass / (&t1 - &t0);
            (t0, t1, rate)
        })
        .collect();
    StepFunction::from_pieces(pieces)
}

/// Arc in- and outflows of one commodity on one arc given its particle
/// pieces `(phi_a, phi_b, x')` and the labels at the arc's ends, both linear
/// on every piece.
pub(super) fn arc_rates(
    pieces: &[(Q, Q, Q)],
    tail: &PwlFunction,
    head: &PwlFunction,
) -> Result<(StepFunction, StepFunction), TimeFnError> {
    let along = |l: &PwlFunction| {
        pieces
            .iter()
            .map(|(a, b, x)| (l.eval(a), l.eval(b), x * (b - a)))
            .collect::<Vec<_>>()
    };
    Ok((spread(along(tail))?, spread(along(head))?))
}

/// Flow over time with `f+_{j,e}(l_{j,u}(phi)) = x'_{j,e}(phi) / l'_{j,u}(phi)`
/// and `f-_{j,e}(l_{j,v}(phi)) = x'_{j,e}(phi) / l'_{j,v}(phi)` for the
/// particles of each commodity up to `horizon` (or the commodity's domain end,
/// whichever is smaller). `strategies` is indexed `[commodity][arc]`.
pub fn reconstruct_flow(
    inst: &Instance,
    strategies: &[Vec<StepFunction>],
    labels: &LabelSet,
    horizon: &Q,
) -> Result<FlowOverTime, NashError> {
    if strategies.len() != inst.commodity_count()
        || strategies.iter().any(|row| row.len() != inst.arc_count())
    {
        return Err(crate::loading::LoadError::Shape.into());
    }
    let mut flow = FlowOverTime::zero(inst.commodity_count(), inst.arc_count());
    for j in inst.commodity_ids() {
        let own = labels.commodity(j);
        let end = own
            .domain_end
            .as_ref()
            .map_or(horizon, |d| min_q(d, horizon))
            .clone();
        for e in inst.arc_ids() {
            let a = inst.arc(e);
            let x = &strategies[j.0][e.0];
            let (Some(lu), Some(lv)) = (own.label(a.tail), own.label(a.head)) else {
                continue;
            };
            let mut cuts: Vec<Q> = vec![Q::zero(), end.clone()];
            cuts.extend(x.breakpoints().iter().cloned());
            cuts.extend(lu.breakpoints().iter().chain(lv.breakpoints()).cloned());
            cuts.retain(|c| !c.is_negative() && *c <= end);
            cuts.sort();
            cuts.dedup();
            let pieces: Vec<(Q, Q, Q)> = cuts
                .windows(2)
                .map(|w| (w[0].clone(), w[1].clone(), x.eval(&w[0])))
                .collect();
            let (fin, fout) = arc_rates(&pieces, lu, lv)?;
            flow.set_inflow(j, e, fin);
            flow.set_outflow(j, e, fout);
        }
    }
    Ok(flow)
}
