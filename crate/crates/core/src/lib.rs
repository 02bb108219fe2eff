//! Stability analysis for multi-dimensional birth-and-death networks with
//! state-dependent, scale-free transition rates.
//!
//! The crate decides positive recurrence versus transience for Markov
//! chains on the integer orthant whose birth and death rates depend only
//! on the direction of the state. Four analytic routes are implemented,
//! each producing a verdict with an auditable certificate:
//!
//! * [`ode_flow`] — integrate the deterministic flow of the drift field
//!   from every direction of the unit sphere; bounded hitting times of a
//!   small ball certify stability, uniform expansion certifies
//!   transience.
//! * [`gradient_system`] — for conservative fields, the closed-form
//!   potential is itself a Lyapunov function.
//! * [`cone_geometry`] — a separating-vector condition on every boundary
//!   face (a small linear program per direction), sufficient for
//!   stability with discontinuous drifts in any dimension.
//! * [`region2d`] — exact classification of planar piecewise-constant
//!   fields, plus the polygon construction of the whole stability region
//!   in the arrival plane.
//!
//! [`ctmc_sim`] cross-checks every analytic verdict empirically, and
//! [`report`] bundles everything into one machine-readable document.

pub mod catalog;
pub mod cone_geometry;
pub mod ctmc_sim;
pub mod drift_model;
pub mod gradient_system;
pub mod mesh;
pub mod ode_flow;
pub mod rate_dsl;
pub mod region2d;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod vecn;
pub mod verdict;

pub use drift_model::{DriftModel, StateVector};
pub use scenario::{Scenario, load_scenario, parse_scenario};
pub use verdict::Verdict;
