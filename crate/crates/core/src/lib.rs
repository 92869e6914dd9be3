//! Dirichlet-Neumann Schwarz coupling as a fixed-point iteration, with
//! classical relaxation, Aitken and Anderson acceleration, a 1D Laplace model
//! backend and a 2D Neohookean finite-element backend.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod accel;
pub mod elasticity;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod interface;
pub mod laplace1d;
pub mod linalg;
pub mod orchestrator;

pub use accel::{Accelerator, AcceleratorConfig, AcceleratorKind};
pub use engine::{
    evaluate_t, interface_errors, run_schwarz, ConvergenceCriteria, ConvergenceReport,
    CoupledProblem, IterationRecord,
};
pub use error::{Result, SchwarzError};
pub use interface::{InterfaceLayout, InterfaceSlice, InterfaceState};
