//! Exact piecewise-constant and piecewise-linear functions of time.

mod export;
mod minimum;
mod pwl;
mod step;

pub use export::{pwl_to_csv, pwl_to_json, step_to_csv, step_to_json};
pub use minimum::{min_compose, ArgminSegment, MinComposition};
pub use pwl::{PwlFunction, Segment};
pub use step::{integrate, StepFunction};

use num::Zero;

use crate::rational::{self, Show, Q};

#[derive(Debug, thiserror::Error)]
pub enum TimeFnError {
    #[error("breakpoints must be strictly increasing")]
    NotIncreasing,
    #[error("a piecewise-linear function needs at least one point")]
    EmptyPoints,
    #[error("breakpoint and value lists differ in length")]
    LengthMismatch,
    #[error("value {} is not attained at or after {}", Show(.value), Show(.start))]
    ValueNotAttained { value: Q, start: Q },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
}

/// Open pieces of the partition of the line by `points`, each with a sample
/// point strictly inside. Tails are included.
pub fn piece_samples(mut points: Vec<Q>) -> Vec<(Option<Q>, Option<Q>, Q)> {
    points.sort();
    points.dedup();
    let one = rational::one();
    if points.is_empty() {
        return vec![(None, None, Q::zero())];
    }
    let mut out = Vec::with_capacity(points.len() + 1);
    out.push((None, Some(points[0].clone()), &points[0] - &one));
    for w in points.windows(2) {
        out.push((
            Some(w[0].clone()),
            Some(w[1].clone()),
            rational::midpoint(&w[0], &w[1]),
        ));
    }
    let last = points.last().unwrap();
    out.push((Some(last.clone()), None, last + &one));
    out
}
