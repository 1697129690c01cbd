use std::io::Write;

use super::{PwlFunction, StepFunction, TimeFnError};
use crate::rational::{format, Q};

fn write_rows<'a, W: Write>(
    out: W,
    rows: impl Iterator<Item = (&'a Q, &'a Q)>,
) -> Result<(), TimeFnError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["breakpoint", "value"])?;
    for (x, y) in rows {
        w.write_record([format(x), format(y)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `breakpoint,value` rows; each value holds from its breakpoint on.
pub fn step_to_csv<W: Write>(f: &StepFunction, out: W) -> Result<(), TimeFnError> {
    write_rows(out, f.steps())
}

/// Writes `breakpoint,value` rows at the kinks.
pub fn pwl_to_csv<W: Write>(f: &PwlFunction, out: W) -> Result<(), TimeFnError> {
    write_rows(out, f.points())
}

pub fn step_to_json(f: &StepFunction) -> serde_json::Value {
    serde_json::to_value(f).expect("step function serializes")
}

pub fn pwl_to_json(f: &PwlFunction) -> serde_json::Value {
    serde_json::to_value(f).expect("piecewise-linear function serializes")
}
