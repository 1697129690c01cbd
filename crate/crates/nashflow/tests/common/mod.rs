#![allow(dead_code)]

pub mod corpus;
pub mod fm;
pub mod gen;
pub mod oracle;
pub mod queues;

use std::io::Write;
use std::time::{Duration, Instant};

/// Prints one result line straight to standard output, bypassing the test
/// harness capture.
pub fn report(criterion: u8, title: &str, started: Instant, limit: Duration, failures: &[String]) {
    let elapsed = started.elapsed();
    let ok = failures.is_empty() && elapsed <= limit;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "criterion {criterion} [{}] {title} ({:.2}s, limit {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    for f in failures.iter().take(10) {
        let _ = writeln!(out, "    {f}");
    }
    if failures.len() > 10 {
        let _ = writeln!(out, "    ... {} more", failures.len() - 10);
    }
    assert!(failures.is_empty(), "criterion {criterion}: {} failures", failures.len());
    assert!(elapsed <= limit, "criterion {criterion}: {elapsed:?} exceeds {limit:?}");
}
