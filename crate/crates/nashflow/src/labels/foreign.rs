use num::Zero;

use super::{LabelError, LabelSet};
use crate::netmodel::{ArcId, CommodityId, Instance};
use crate::rational::Q;
use crate::timefn::{piece_samples, PwlFunction, StepFunction};

/// Flow of the other commodities entering an arc, measured in the particles
/// of one commodity at the arc's tail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForeignFlow {
    /// `y'` over particles.
    pub rate: StepFunction,
    /// `y` over particles.
    pub cumulative: PwlFunction,
}

/// First particle `>= 0` of a label reaching `theta`; `Ok(None)` before the
/// label's value at 0.
fn first_particle(
    inst: &Instance,
    label: &PwlFunction,
    i: CommodityId,
    theta: &Q,
) -> Result<Option<Q>, LabelError> {
    if *theta < label.eval(&Q::zero()) {
        return Ok(None);
    }
    label
        .min_preimage(theta, &Q::zero())
        .map(Some)
        .map_err(|_| LabelError::ValueNotAttained {
            commodity: inst.commodity(i).id.clone(),
            theta: theta.clone(),
        })
}

/// Foreign flow `y_{j,e}` from labels and per-particle strategies `x'`
/// indexed `[commodity][arc]`.
pub fn foreign_flow(
    inst: &Instance,
    labels: &LabelSet,
    strategies: &[Vec<StepFunction>],
    j: CommodityId,
    e: ArcId,
) -> Result<ForeignFlow, LabelError> {
    if strategies.len() != inst.commodity_count()
        || strategies.iter().any(|row| row.len() != inst.arc_count())
    {
        return Err(LabelError::Shape);
    }
    let u = inst.arc(e).tail;
    let zero = ForeignFlow {
        rate: StepFunction::zero(),
        cumulative: PwlFunction::constant(Q::zero()),
    };
    let Some(lj) = labels.label(j, u) else {
        return Ok(zero);
    };
    let others: Vec<(CommodityId, &PwlFunction, &StepFunction)> = inst
        .commodity_ids()
        .filter(|&i| i != j && !strategies[i.0][e.0].is_zero())
        .filter_map(|i| labels.label(i, u).map(|l| (i, l, &strategies[i.0][e.0])))
        .collect();
    if others.is_empty() {
        return Ok(zero);
    }

    let origin = Q::zero();
    let mut cuts: Vec<Q> = lj.breakpoints().to_vec();
    for (_, li, xi) in &others {
        let marks = li
            .breakpoints()
            .iter()
            .chain(xi.breakpoints())
            .chain(std::iter::once(&origin));
        cuts.extend(marks.filter_map(|b| lj.first_preimage(&li.eval(b))));
    }

    let mut pieces = Vec::new();
    for (lo, _, m) in piece_samples(cuts) {
        let slope = lj.slope_right(&m);
        let mut rate = Q::zero();
        if !slope.is_zero() {
            let theta = lj.eval(&m);
            for &(i, li, xi) in &others {
                let Some(phi) = first_particle(inst, li, i, &theta)? else {
                    continue;
                };
                let si = li.slope_right(&phi);
                if !si.is_zero() {
                    rate += xi.eval(&phi) * &slope / si;
                }
            }
        }
        pieces.push((lo, rate));
    }
    let initial = pieces[0].1.clone();
    let steps = pieces
        .into_iter()
        .filter_map(|(lo, v)| lo.map(|x| (x, v)))
        .collect();
    let rate = StepFunction::new(initial, steps).expect("cuts are sorted");

    let theta0 = lj.eval(&Q::zero());
    let mut start = Q::zero();
    for &(i, li, xi) in &others {
        if let Some(phi) = first_particle(inst, li, i, &theta0)? {
            start += xi.integrate(&Q::zero()).eval(&phi);
        }
    }
    let cumulative = rate.integrate(&Q::zero()).add_const(&start);
    Ok(ForeignFlow { rate, cumulative })
}
