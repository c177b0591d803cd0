//! Cell load coupling for LTE network planning.
//!
//! The load of each cell depends on the loads of the others through
//! interference: `rho = f(rho)`. This crate evaluates `f` and its
//! derivatives, decides exactly whether a nonnegative fixed point exists
//! (through the asymptotic linearization `h0`), brackets the fixed point
//! between linear lower and upper bounds, solves for it, and runs
//! scenario-level studies (demand sweeps, feasibility boundaries,
//! configuration comparisons).
//!
//! ```
//! use loadcouple::scenario::{generate, ScenarioSpec};
//! use loadcouple::solver::{solve, SolverConfig, SolveStatus};
//!
//! let inst = generate(&ScenarioSpec::default()).unwrap();
//! let report = solve(&inst.with_demand_scale(0.5), &SolverConfig::default()).unwrap();
//! assert_eq!(report.status, SolveStatus::Converged);
//! ```

pub mod analysis;
pub mod coupling;
mod error;
pub mod linalg;
pub mod linfeas;
pub mod netmodel;
pub mod scenario;
pub mod solver;

pub use coupling::{CouplingCoefficients, LinearizationKind, LinearizedSystem, LoadVector};
pub use error::{Error, Result};
pub use netmodel::NetworkInstance;
