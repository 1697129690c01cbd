use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{StepFunction, TimeFnError};
use crate::rational::{self, serde_q, serde_vec_q, Q};

/// Continuous piecewise-linear function on the whole real line.
///
/// Linear through the listed points and extended by `slope_before` left of
/// the first point and `slope_after` right of the last. Only genuine kinks
/// are stored; a globally affine function keeps the single anchor `x = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PwlRepr", into = "PwlRepr")]
pub struct PwlFunction {
    xs: Vec<Q>,
    ys: Vec<Q>,
    slope_before: Q,
    slope_after: Q,
}

#[derive(Serialize, Deserialize)]
struct PwlRepr {
    #[serde(with = "serde_vec_q")]
    breakpoints: Vec<Q>,
    #[serde(with = "serde_vec_q")]
    values: Vec<Q>,
    #[serde(with = "serde_q")]
    slope_before: Q,
    #[serde(with = "serde_q")]
    slope_after: Q,
}

impl From<PwlFunction> for PwlRepr {
    fn from(f: PwlFunction) -> Self {
        PwlRepr {
            breakpoints: f.xs,
            values: f.ys,
            slope_before: f.slope_before,
            slope_after: f.slope_after,
        }
    }
}

impl TryFrom<PwlRepr> for PwlFunction {
    type Error = TimeFnError;

    fn try_from(r: PwlRepr) -> Result<Self, Self::Error> {
        if r.breakpoints.len() != r.values.len() {
            return Err(TimeFnError::LengthMismatch);
        }
        PwlFunction::new(
            r.breakpoints.into_iter().zip(r.values).collect(),
            r.slope_before,
            r.slope_after,
        )
    }
}

/// A maximal linear piece; `None` bounds are infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub start: Option<Q>,
    pub end: Option<Q>,
    pub slope: Q,
}

impl PwlFunction {
    pub fn new(points: Vec<(Q, Q)>, slope_before: Q, slope_after: Q) -> Result<Self, TimeFnError> {
        if points.is_empty() {
            return Err(TimeFnError::EmptyPoints);
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(TimeFnError::NotIncreasing);
        }
        Ok(Self::from_parts(points, slope_before, slope_after))
    }

    /// Same as [`PwlFunction::new`] for input already known to be valid.
    pub(crate) fn from_parts(points: Vec<(Q, Q)>, slope_before: Q, slope_after: Q) -> Self {
        debug_assert!(!points.is_empty());
        let n = points.len();
        let (xs, ys): (Vec<Q>, Vec<Q>) = points.into_iter().unzip();
        let mut slopes = Vec::with_capacity(n + 1);
        slopes.push(slope_before.clone());
        for k in 1..n {
            slopes.push((&ys[k] - &ys[k - 1]) / (&xs[k] - &xs[k - 1]));
        }
        slopes.push(slope_after.clone());
        let mut kx = Vec::new();
        let mut ky = Vec::new();
        for k in 0..n {
            if slopes[k] != slopes[k + 1] {
                kx.push(xs[k].clone());
                ky.push(ys[k].clone());
            }
        }
        if kx.is_empty() {
            let y0 = &ys[0] - &slope_before * &xs[0];
            kx.push(Q::zero());
            ky.push(y0);
        }
        PwlFunction {
            xs: kx,
            ys: ky,
            slope_before,
            slope_after,
        }
    }

    pub fn linear(slope: Q, intercept: Q) -> Self {
        PwlFunction {
            xs: vec![Q::zero()],
            ys: vec![intercept],
            slope_before: slope.clone(),
            slope_after: slope,
        }
    }

    pub fn constant(c: Q) -> Self {
        Self::linear(Q::zero(), c)
    }

    pub fn identity() -> Self {
        Self::linear(rational::one(), Q::zero())
    }

    pub fn breakpoints(&self) -> &[Q] {
        &self.xs
    }

    pub fn values(&self) -> &[Q] {
        &self.ys
    }

    pub fn points(&self) -> impl Iterator<Item = (&Q, &Q)> {
        self.xs.iter().zip(self.ys.iter())
    }

    pub fn slope_before(&self) -> &Q {
        &self.slope_before
    }

    pub fn slope_after(&self) -> &Q {
        &self.slope_after
    }

    pub fn is_affine(&self) -> bool {
        self.slope_before == self.slope_after && self.xs.len() == 1
    }

    /// Slope of piece `k`: piece 0 is left of the first point, piece `n` right of the last.
    fn piece_slope(&self, k: usize) -> Q {
        let n = self.xs.len();
        if k == 0 {
            self.slope_before.clone()
        } else if k == n {
            self.slope_after.clone()
        } else {
            (&self.ys[k] - &self.ys[k - 1]) / (&self.xs[k] - &self.xs[k - 1])
        }
    }

    pub fn eval(&self, x: &Q) -> Q {
        let n = self.xs.len();
        let k = self.xs.partition_point(|p| p <= x);
        if k == 0 {
            &self.ys[0] + &self.slope_before * (x - &self.xs[0])
        } else if k == n {
            &self.ys[n - 1] + &self.slope_after * (x - &self.xs[n - 1])
        } else {
            let (x0, y0) = (&self.xs[k - 1], &self.ys[k - 1]);
            y0 + (&self.ys[k] - y0) * (x - x0) / (&self.xs[k] - x0)
        }
    }

    /// Right derivative at `x`.
    pub fn slope_right(&self, x: &Q) -> Q {
        self.piece_slope(self.xs.partition_point(|p| p <= x))
    }

    /// Left derivative at `x`.
    pub fn slope_left(&self, x: &Q) -> Q {
        self.piece_slope(self.xs.partition_point(|p| p < x))
    }

    pub fn segments(&self) -> Vec<Segment> {
        let n = self.xs.len();
        (0..=n)
            .map(|k| Segment {
                start: k.checked_sub(1).map(|i| self.xs[i].clone()),
                end: self.xs.get(k).cloned(),
                slope: self.piece_slope(k),
            })
            .collect()
    }

    fn merged_breakpoints(&self, other: &PwlFunction) -> Vec<Q> {
        let mut xs: Vec<Q> = self.xs.iter().chain(other.xs.iter()).cloned().collect();
        xs.sort();
        xs.dedup();
        xs
    }

    pub fn add(&self, other: &PwlFunction) -> PwlFunction {
        let pts = self
            .merged_breakpoints(other)
            .into_iter()
            .map(|x| {
                let y = self.eval(&x) + other.eval(&x);
                (x, y)
            })
            .collect();
        Self::from_parts(
            pts,
            &self.slope_before + &other.slope_before,
            &self.slope_after + &other.slope_after,
        )
    }

    pub fn sub(&self, other: &PwlFunction) -> PwlFunction {
        self.add(&other.scale(&-rational::one()))
    }

    pub fn scale(&self, c: &Q) -> PwlFunction {
        Self::from_parts(
            self.points().map(|(x, y)| (x.clone(), y * c)).collect(),
            &self.slope_before * c,
            &self.slope_after * c,
        )
    }

    pub fn add_const(&self, c: &Q) -> PwlFunction {
        PwlFunction {
            xs: self.xs.clone(),
            ys: self.ys.iter().map(|y| y + c).collect(),
            slope_before: self.slope_before.clone(),
            slope_after: self.slope_after.clone(),
        }
    }

    /// `g(x) = f(x - d)`.
    pub fn shift(&self, d: &Q) -> PwlFunction {
        PwlFunction {
            xs: self.xs.iter().map(|x| x + d).collect(),
            ys: self.ys.clone(),
            slope_before: self.slope_before.clone(),
            slope_after: self.slope_after.clone(),
        }
    }

    /// `g(x) = f(c * x)` for `c > 0`.
    pub fn rescale_argument(&self, c: &Q) -> PwlFunction {
        assert!(c.is_positive(), "argument scale must be positive");
        PwlFunction {
            xs: self.xs.iter().map(|x| x / c).collect(),
            ys: self.ys.clone(),
            slope_before: &self.slope_before * c,
            slope_after: &self.slope_after * c,
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &PwlFunction) -> PwlFunction {
        let f = self;
        let g = inner;
        let n = g.xs.len();
        let mut cand: Vec<Q> = g.xs.clone();
        let mut preimages = |x0: &Q, y0: &Q, s: &Q, lo: Option<&Q>, hi: Option<&Q>| {
            let from = lo.map_or(0, |l| f.xs.partition_point(|b| b <= l));
            let to = hi.map_or(f.xs.len(), |h| f.xs.partition_point(|b| b < h));
            for b in &f.xs[from..to.max(from)] {
                cand.push(x0 + (b - y0) / s);
            }
        };
        let (x0, y0) = (&g.xs[0], &g.ys[0]);
        match g.slope_before.sign_class() {
            1 => preimages(x0, y0, &g.slope_before, None, Some(y0)),
            -1 => preimages(x0, y0, &g.slope_before, Some(y0), None),
            _ => {}
        }
        for k in 1..n {
            let s = g.piece_slope(k);
            let (a, b) = (&g.ys[k - 1], &g.ys[k]);
            match s.sign_class() {
                1 => preimages(&g.xs[k - 1], a, &s, Some(a), Some(b)),
                -1 => preimages(&g.xs[k - 1], a, &s, Some(b), Some(a)),
                _ => {}
            }
        }
        let (xl, yl) = (&g.xs[n - 1], &g.ys[n - 1]);
        match g.slope_after.sign_class() {
            1 => preimages(xl, yl, &g.slope_after, Some(yl), None),
            -1 => preimages(xl, yl, &g.slope_after, None, Some(yl)),
            _ => {}
        }
        cand.sort();
        cand.dedup();

        let inner_vals: Vec<Q> = cand.iter().map(|x| g.eval(x)).collect();
        let tail = |s: &Q, y: &Q, rightward: bool| -> Q {
            match (s.sign_class(), rightward) {
                (0, _) => Q::zero(),
                (1, true) | (-1, false) => s * f.slope_right(y),
                _ => s * f.slope_left(y),
            }
        };
        let sb = tail(&g.slope_before, &inner_vals[0], false);
        let sa = tail(&g.slope_after, inner_vals.last().unwrap(), true);
        let pts = cand
            .into_iter()
            .zip(inner_vals.iter())
            .map(|(x, y)| (x, f.eval(y)))
            .collect();
        Self::from_parts(pts, sb, sa)
    }

    /// Right derivative as a step function.
    pub fn differentiate(&self) -> StepFunction {
        let n = self.xs.len();
        StepFunction::from_sorted(
            self.slope_before.clone(),
            (0..n)
                .map(|k| (self.xs[k].clone(), self.piece_slope(k + 1)))
                .collect(),
        )
    }

    pub fn is_non_decreasing(&self) -> bool {
        (0..=self.xs.len()).all(|k| !self.piece_slope(k).is_negative())
    }

    pub fn is_increasing(&self) -> bool {
        (0..=self.xs.len()).all(|k| self.piece_slope(k).is_positive())
    }

    /// Smallest `x >= start` with `f(x) = value`.
    pub fn min_preimage(&self, value: &Q, start: &Q) -> Result<Q, TimeFnError> {
        let mut a = start.clone();
        let mut fa = self.eval(start);
        if fa == *value {
            return Ok(a);
        }
        let n = self.xs.len();
        let k0 = self.xs.partition_point(|p| p <= start);
        for k in k0..=n {
            let s = self.piece_slope(k);
            if !s.is_zero() {
                let x = &a + (value - &fa) / &s;
                if x > a && self.xs.get(k).map_or(true, |b| x <= *b) {
                    return Ok(x);
                }
            }
            if k < n {
                a = self.xs[k].clone();
                fa = self.ys[k].clone();
            }
        }
        Err(TimeFnError::ValueNotAttained {
            value: value.clone(),
            start: start.clone(),
        })
    }

    /// Smallest `x` on the whole line with `f(x) = value`; `None` if the value
    /// is never attained or the preimage is unbounded below.
    pub fn first_preimage(&self, value: &Q) -> Option<Q> {
        let (x0, y0) = (&self.xs[0], &self.ys[0]);
        let sb = &self.slope_before;
        let in_tail = match sb.sign_class() {
            1 => value < y0,
            -1 => value > y0,
            _ => {
                if value == y0 {
                    return None;
                }
                false
            }
        };
        if in_tail {
            return Some(x0 + (value - y0) / sb);
        }
        self.min_preimage(value, x0).ok()
    }

    /// First sample point in `[lo, hi]` where the two functions differ, with
    /// `self - other` there. Samples every merged breakpoint and a point inside
    /// every piece between them, which is exhaustive for piecewise-linear input.
    pub fn first_difference_on(
        &self,
        other: &PwlFunction,
        lo: Option<&Q>,
        hi: Option<&Q>,
    ) -> Option<(Q, Q)> {
        let mut pts: Vec<Q> = self
            .merged_breakpoints(other)
            .into_iter()
            .filter(|x| lo.map_or(true, |l| x > l) && hi.map_or(true, |h| x < h))
            .collect();
        if let Some(l) = lo {
            pts.insert(0, l.clone());
        }
        if let Some(h) = hi {
            if pts.last().map_or(true, |p| p < h) {
                pts.push(h.clone());
            }
        }
        let mut samples = Vec::with_capacity(2 * pts.len() + 2);
        match (pts.first(), lo) {
            (Some(p), None) => samples.push(p - rational::one()),
            (None, _) => samples.push(Q::zero()),
            _ => {}
        }
        for (i, p) in pts.iter().enumerate() {
            samples.push(p.clone());
            if let Some(next) = pts.get(i + 1) {
                samples.push(rational::midpoint(p, next));
            }
        }
        if let (Some(p), None) = (pts.last(), hi) {
            samples.push(p + rational::one());
        }
        samples.into_iter().find_map(|x| {
            let gap = self.eval(&x) - other.eval(&x);
            (!gap.is_zero()).then_some((x, gap))
        })
    }

    pub fn first_difference(&self, other: &PwlFunction) -> Option<(Q, Q)> {
        self.first_difference_on(other, None, None)
    }
}

trait SignClass {
    fn sign_class(&self) -> i8;
}

impl SignClass for Q {
    fn sign_class(&self) -> i8 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }
}
