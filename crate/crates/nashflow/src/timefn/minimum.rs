use num::Zero;

use super::PwlFunction;
use crate::rational::{self, Q};

/// Piece of a lower envelope together with the indices attaining it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgminSegment {
    pub start: Option<Q>,
    pub end: Option<Q>,
    pub argmin: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinComposition {
    pub function: PwlFunction,
    pub segments: Vec<ArgminSegment>,
}

impl MinComposition {
    /// Indices attaining the minimum on the segment containing `x` (right side).
    pub fn argmin_at(&self, x: &Q) -> &[usize] {
        let k = self
            .segments
            .partition_point(|s| s.end.as_ref().map_or(false, |e| e <= x));
        &self.segments[k.min(self.segments.len() - 1)].argmin
    }
}

fn sample(lo: Option<&Q>, hi: Option<&Q>) -> Q {
    match (lo, hi) {
        (Some(a), Some(b)) => rational::midpoint(a, b),
        (Some(a), None) => a + rational::one(),
        (None, Some(b)) => b - rational::one(),
        (None, None) => Q::zero(),
    }
}

/// Lower envelope of `candidates`; `None` for an empty list.
pub fn min_compose(candidates: &[PwlFunction]) -> Option<MinComposition> {
    if candidates.is_empty() {
        return None;
    }
    let mut base: Vec<Q> = candidates
        .iter()
        .flat_map(|f| f.breakpoints().iter().cloned())
        .collect();
    base.sort();
    base.dedup();

    let mut all = base.clone();
    for k in 0..=base.len() {
        let lo = k.checked_sub(1).map(|i| &base[i]);
        let hi = base.get(k);
        let x = sample(lo, hi);
        let lines: Vec<(Q, Q)> = candidates
            .iter()
            .map(|f| (f.eval(&x), f.slope_right(&x)))
            .collect();
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let ds = &lines[i].1 - &lines[j].1;
                if ds.is_zero() {
                    continue;
                }
                let c = &x + (&lines[j].0 - &lines[i].0) / ds;
                if lo.map_or(true, |l| c > *l) && hi.map_or(true, |h| c < *h) {
                    all.push(c);
                }
            }
        }
    }
    all.sort();
    all.dedup();

    let mut segments: Vec<ArgminSegment> = Vec::with_capacity(all.len() + 1);
    let mut slopes: Vec<Q> = Vec::with_capacity(all.len() + 1);
    for k in 0..=all.len() {
        let lo = k.checked_sub(1).map(|i| &all[i]);
        let hi = all.get(k);
        let x = sample(lo, hi);
        let vals: Vec<Q> = candidates.iter().map(|f| f.eval(&x)).collect();
        let m = vals.iter().min().unwrap().clone();
        let argmin: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] == m).collect();
        slopes.push(candidates[argmin[0]].slope_right(&x));
        match segments.last_mut() {
            Some(prev) if prev.argmin == argmin => prev.end = hi.cloned(),
            _ => segments.push(ArgminSegment {
                start: lo.cloned(),
                end: hi.cloned(),
                argmin,
            }),
        }
    }

    let function = if all.is_empty() {
        let x = Q::zero();
        let y = candidates.iter().map(|f| f.eval(&x)).min().unwrap();
        PwlFunction::linear(slopes[0].clone(), y)
    } else {
        let pts = all
            .iter()
            .map(|x| {
                let y = candidates.iter().map(|f| f.eval(x)).min().unwrap();
                (x.clone(), y)
            })
            .collect();
        PwlFunction::from_parts(pts, slopes[0].clone(), slopes.last().unwrap().clone())
    };
    Some(MinComposition { function, segments })
}

impl PwlFunction {
    pub fn pointwise_min(&self, other: &PwlFunction) -> PwlFunction {
        min_compose(&[self.clone(), other.clone()]).unwrap().function
    }

    pub fn pointwise_max(&self, other: &PwlFunction) -> PwlFunction {
        let m = -rational::one();
        self.scale(&m).pointwise_min(&other.scale(&m)).scale(&m)
    }
}
