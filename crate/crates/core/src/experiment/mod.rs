//! Declarative experiments: sweeps over problems and accelerators, written out
//! as CSV tables and per-run convergence traces.

mod config;
mod order;
mod runner;

pub use config::{
    builtin, AcceleratorSpec, Backend, ExperimentConfig, LaplaceSettings, RunSpec, Sweep, Values,
    BUILTIN_NAMES,
};
pub use order::{estimate_order, order_from_trace, OrderEstimate, OrderWindow};
pub use runner::{
    compare_methods, execute, execute_run, fmt_f64, run_experiment, write_comparison,
    write_outputs, ExperimentResult, RunOutcome,
};
