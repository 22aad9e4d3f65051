//! Flows over time on small networks: exact network loading under two edge-delay
//! models, time-varying capacity feasibility, deviation-based equilibrium checks,
//! variational-inequality gaps, and a penalty homotopy solver.
//!
//! All time and flow values are exact rationals ([`timefn::Rat`]), so loading
//! results and check verdicts are bit-reproducible. The crate is organised
//! bottom-up:
//!
//! * [`timefn`]: piecewise-constant rates and piecewise-linear cumulatives.
//! * [`model`]: networks, walks, commodities, demand modes, instances, flows,
//!   and their file formats.
//! * [`loading`]: event-driven exact network loading (linear delays and point
//!   queues), arrival times and effective walk delays.
//! * [`sideconstraints`]: edge loads, capacity feasibility, violation penalties.
//! * [`deviations`]: flow deviations and per-concept admissibility.
//! * [`equilibrium`]: equilibrium verdicts, VI/QVI residuals, flow-difference
//!   decomposition.
//! * [`solver`]: discretized best-response iteration and the penalty homotopy.
//! * [`static_ref`]: a small static traffic assignment reference (Wardrop/LP/BS
//!   checks and a Frank-Wolfe minimizer).
//! * [`random`]: seeded generators for property tests.

pub mod deviations;
pub mod equilibrium;
pub mod loading;
pub mod model;
pub mod random;
pub mod sideconstraints;
pub mod solver;
pub mod static_ref;
pub mod timefn;

pub use timefn::{PwlFn, Rat, StepFn};
