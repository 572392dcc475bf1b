//! GATE: an integrated assessment model of AI-driven economic growth.
//!
//! The crate is organised bottom-up:
//!
//! * [`params`]: exogenous parameters, ranges and the configuration document;
//! * [`ai_development`]: compute stock, hardware/software efficiency, training runs;
//! * [`automation`]: the automation function, runtime requirements and beliefs;
//! * [`economy`]: task composite, production and within-period allocation;
//! * [`planner`]: decision encoding, rollout, objective and the solver;
//! * [`io`]: trajectory tables, run manifests and comparisons.
//!
//! Formulas on the rollout path are generic over [`real::Real`] so the same
//! code evaluates plain values and records reverse-mode derivatives.

pub mod ai_development;
pub mod autodiff;
pub mod automation;
pub mod economy;
pub mod error;
pub mod io;
pub mod params;
pub mod planner;
pub mod real;

pub use error::{GateError, Result};
pub use params::{default_preset, desk_preset, validate, ParameterSet, ValidationMode};
pub use planner::{solve, solve_with, Mode, Solution, SolverSettings};
