use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{PwlFunction, TimeFnError};
use crate::rational::{self, serde_q, serde_vec_q, Q};

/// Right-continuous piecewise-constant function on the whole real line.
///
/// The value is `initial` before the first breakpoint and `values[k]` on
/// `[breakpoints[k], breakpoints[k+1])`. Adjacent equal values are always
/// merged, so derived `PartialEq` is function equality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StepRepr", into = "StepRepr")]
pub struct StepFunction {
    initial: Q,
    breaks: Vec<Q>,
    values: Vec<Q>,
}

#[derive(Serialize, Deserialize)]
struct StepRepr {
    #[serde(with = "serde_q")]
    initial: Q,
    #[serde(with = "serde_vec_q")]
    breakpoints: Vec<Q>,
    #[serde(with = "serde_vec_q")]
    values: Vec<Q>,
}

impl From<StepFunction> for StepRepr {
    fn from(f: StepFunction) -> Self {
        StepRepr {
            initial: f.initial,
            breakpoints: f.breaks,
            values: f.values,
        }
    }
}

impl TryFrom<StepRepr> for StepFunction {
    type Error = TimeFnError;

    fn try_from(r: StepRepr) -> Result<Self, Self::Error> {
        if r.breakpoints.len() != r.values.len() {
            return Err(TimeFnError::LengthMismatch);
        }
        StepFunction::new(r.initial, r.breakpoints.into_iter().zip(r.values).collect())
    }
}

impl StepFunction {
    /// Builds from `(breakpoint, value)` pairs with strictly increasing breakpoints.
    pub fn new(initial: Q, steps: Vec<(Q, Q)>) -> Result<Self, TimeFnError> {
        if steps.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(TimeFnError::NotIncreasing);
        }
        Ok(Self::from_sorted(initial, steps))
    }

    pub(crate) fn from_sorted(initial: Q, steps: Vec<(Q, Q)>) -> Self {
        let mut breaks = Vec::with_capacity(steps.len());
        let mut values: Vec<Q> = Vec::with_capacity(steps.len());
        for (b, v) in steps {
            let prev = values.last().unwrap_or(&initial);
            if *prev != v {
                breaks.push(b);
                values.push(v);
            }
        }
        StepFunction {
            initial,
            breaks,
            values,
        }
    }

    pub fn constant(v: Q) -> Self {
        StepFunction {
            initial: v,
            breaks: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(Q::zero())
    }

    /// `v` on `[a, b)` and zero elsewhere; `b = None` means unbounded.
    pub fn indicator(a: Q, b: Option<Q>, v: Q) -> Self {
        let mut steps = vec![(a, v)];
        if let Some(b) = b {
            if b <= steps[0].0 {
                return Self::zero();
            }
            steps.push((b, Q::zero()));
        }
        Self::from_sorted(Q::zero(), steps)
    }

    /// Assembles a function from disjoint half-open pieces `[a, b)` with values.
    /// Pieces must be sorted and non-overlapping; gaps are filled with zero.
    pub fn from_pieces(pieces: Vec<(Q, Q, Q)>) -> Result<Self, TimeFnError> {
        let mut steps: Vec<(Q, Q)> = Vec::new();
        let mut last_end: Option<Q> = None;
        for (a, b, v) in pieces {
            if a >= b {
                continue;
            }
            if let Some(e) = &last_end {
                if a < *e {
                    return Err(TimeFnError::NotIncreasing);
                }
                if a > *e {
                    steps.push((e.clone(), Q::zero()));
                }
            }
            steps.push((a, v));
            last_end = Some(b);
        }
        if let Some(e) = last_end {
            steps.push((e, Q::zero()));
        }
        Self::new(Q::zero(), steps)
    }

    pub fn initial(&self) -> &Q {
        &self.initial
    }

    pub fn final_value(&self) -> &Q {
        self.values.last().unwrap_or(&self.initial)
    }

    pub fn breakpoints(&self) -> &[Q] {
        &self.breaks
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn steps(&self) -> impl Iterator<Item = (&Q, &Q)> {
        self.breaks.iter().zip(self.values.iter())
    }

    pub fn is_constant(&self) -> bool {
        self.breaks.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.breaks.is_empty() && self.initial.is_zero()
    }

    pub fn eval(&self, x: &Q) -> Q {
        let k = self.breaks.partition_point(|b| b <= x);
        if k == 0 {
            self.initial.clone()
        } else {
            self.values[k - 1].clone()
        }
    }

    /// Value just left of `x`.
    pub fn eval_left(&self, x: &Q) -> Q {
        let k = self.breaks.partition_point(|b| b < x);
        if k == 0 {
            self.initial.clone()
        } else {
            self.values[k - 1].clone()
        }
    }

    /// Maximal constant pieces as `(start, end, value)`; `None` is unbounded.
    pub fn pieces(&self) -> Vec<(Option<Q>, Option<Q>, Q)> {
        let mut out = Vec::with_capacity(self.breaks.len() + 1);
        let mut start: Option<Q> = None;
        let mut value = self.initial.clone();
        for (b, v) in self.steps() {
            out.push((start.take(), Some(b.clone()), value));
            start = Some(b.clone());
            value = v.clone();
        }
        out.push((start, None, value));
        out
    }

    /// Pointwise combination over the merged breakpoint set.
    pub fn combine(&self, other: &StepFunction, op: impl Fn(&Q, &Q) -> Q) -> StepFunction {
        let initial = op(&self.initial, &other.initial);
        let mut steps = Vec::with_capacity(self.breaks.len() + other.breaks.len());
        let (mut i, mut j) = (0, 0);
        let mut a = &self.initial;
        let mut b = &other.initial;
        while i < self.breaks.len() || j < other.breaks.len() {
            let x = match (self.breaks.get(i), other.breaks.get(j)) {
                (Some(p), Some(q)) => p.min(q).clone(),
                (Some(p), None) => p.clone(),
                (None, Some(q)) => q.clone(),
                (None, None) => unreachable!(),
            };
            if i < self.breaks.len() && self.breaks[i] == x {
                a = &self.values[i];
                i += 1;
            }
            if j < other.breaks.len() && other.breaks[j] == x {
                b = &other.values[j];
                j += 1;
            }
            steps.push((x, op(a, b)));
        }
        Self::from_sorted(initial, steps)
    }

    pub fn map(&self, op: impl Fn(&Q) -> Q) -> StepFunction {
        Self::from_sorted(
            op(&self.initial),
            self.steps().map(|(b, v)| (b.clone(), op(v))).collect(),
        )
    }

    pub fn add(&self, other: &StepFunction) -> StepFunction {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &StepFunction) -> StepFunction {
        self.combine(other, |a, b| a - b)
    }

    pub fn scale(&self, c: &Q) -> StepFunction {
        self.map(|v| v * c)
    }

    pub fn sum<'a>(fs: impl IntoIterator<Item = &'a StepFunction>) -> StepFunction {
        fs.into_iter()
            .fold(StepFunction::zero(), |acc, f| acc.add(f))
    }

    /// `g(x) = f(x - d)`.
    pub fn shift(&self, d: &Q) -> StepFunction {
        StepFunction {
            initial: self.initial.clone(),
            breaks: self.breaks.iter().map(|b| b + d).collect(),
            values: self.values.clone(),
        }
    }

    /// Some point where the function is negative, if any.
    pub fn any_negative(&self) -> Option<Q> {
        if self.initial.is_negative() {
            return Some(
                self.breaks
                    .first()
                    .map(|b| b - rational::one())
                    .unwrap_or_else(Q::zero),
            );
        }
        self.steps().find(|(_, v)| v.is_negative()).map(|(b, _)| b.clone())
    }

    /// Antiderivative anchored at `from`, i.e. `F(from) = 0`.
    pub fn integrate(&self, from: &Q) -> PwlFunction {
        let mut xs: Vec<Q> = self.breaks.clone();
        let pos = xs.partition_point(|b| b < from);
        if xs.get(pos) != Some(from) {
            xs.insert(pos, from.clone());
        }
        let mut ys = vec![Q::zero(); xs.len()];
        for k in pos + 1..xs.len() {
            let slope = self.eval(&xs[k - 1]);
            ys[k] = &ys[k - 1] + slope * (&xs[k] - &xs[k - 1]);
        }
        for k in (0..pos).rev() {
            let slope = self.eval(&xs[k]);
            ys[k] = &ys[k + 1] - slope * (&xs[k + 1] - &xs[k]);
        }
        PwlFunction::from_parts(
            xs.into_iter().zip(ys).collect(),
            self.initial.clone(),
            self.final_value().clone(),
        )
    }
}

pub fn integrate(f: &StepFunction, from: &Q) -> PwlFunction {
    f.integrate(from)
}
