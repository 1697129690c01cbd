//! Exact multi-commodity Nash flows over time in the point-queue model.
//!
//! All arithmetic is exact over [`rational::Q`]. The modules build on each
//! other: [`timefn`] for functions of time, [`netmodel`] for instances,
//! [`loading`] for network loading, [`labels`] for earliest-arrival labels,
//! [`thinflow`] for the local equilibrium conditions and [`nash`] for the
//! phase-by-phase construction and verification.

pub mod rational;
pub mod cli;
pub mod labels;
pub mod loading;
pub mod lp;
pub mod nash;
pub mod netmodel;
pub mod thinflow;
pub mod timefn;
