//! The Schwarz fixed-point loop.

use std::time::Instant;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::accel::Accelerator;
use crate::error::{Result, SchwarzError};
use crate::interface::{InterfaceLayout, InterfaceState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCriteria {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub maxit: usize,
}

impl ConvergenceCriteria {
    pub fn new(eps_abs: f64, eps_rel: f64, maxit: usize) -> Result<Self> {
        let c = Self {
            eps_abs,
            eps_rel,
            maxit,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.eps_abs > 0.0) {
            problems.push(format!("eps_abs must be > 0, got {}", self.eps_abs));
        }
        if !(self.eps_rel > 0.0) {
            problems.push(format!("eps_rel must be > 0, got {}", self.eps_rel));
        }
        if self.maxit < 1 {
            problems.push("maxit must be >= 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SchwarzError::InvalidConfig(problems))
        }
    }

    /// The loop keeps going only while both errors exceed their tolerance.
    pub fn is_satisfied(&self, e_abs: f64, e_rel: f64) -> bool {
        e_abs <= self.eps_abs || e_rel <= self.eps_rel
    }
}

/// What happened in one Schwarz iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub e_abs: f64,
    pub e_rel: f64,
    /// Relaxation parameter(s) applied, one per interface for Aitken.
    /// Empty when not applicable (Anderson).
    pub rho_used: Vec<f64>,
    pub m_k: Option<usize>,
    pub alpha: Option<Vec<f64>>,
    pub wall_time: f64,
}

#[derive(Debug)]
pub struct ConvergenceReport {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub iterations: usize,
    pub final_state: InterfaceState,
    /// Set when the run was aborted by a backend or accelerator failure.
    pub failure: Option<SchwarzError>,
}

impl ConvergenceReport {
    pub fn aborted(&self) -> bool {
        self.failure.is_some()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

/// A discretized coupled problem that can evaluate the Dirichlet-Neumann
/// fixed-point operator `T` on interface data.
pub trait CoupledProblem {
    fn layout(&self) -> InterfaceLayout;

    /// One multiplicative sweep: Dirichlet solves with trace data, then Neumann
    /// solves with the flux of the just-updated neighbour. Returns the new traces.
    fn evaluate(&mut self, g: &InterfaceState) -> Result<InterfaceState>;

    /// Tolerance of the inner subdomain solves, used to judge fixed-point consistency.
    fn solve_tolerance(&self) -> f64 {
        1e-12
    }
}

/// Absolute and relative interface errors between two sets of traces.
///
/// Traces with zero length are skipped. A zero-norm current trace with a
/// nonzero difference makes `e_rel` infinite.
pub fn interface_errors(prev: &[&[f64]], curr: &[&[f64]]) -> Result<(f64, f64)> {
    if prev.len() != curr.len() {
        return Err(SchwarzError::LayoutMismatch {
            expected: prev.len(),
            got: curr.len(),
        });
    }
    let mut abs2 = 0.0;
    let mut rel2 = 0.0;
    for (p, c) in prev.iter().zip(curr) {
        if p.len() != c.len() {
            return Err(SchwarzError::LayoutMismatch {
                expected: p.len(),
                got: c.len(),
            });
        }
        if c.is_empty() {
            continue;
        }
        let diff2: f64 = p.iter().zip(c.iter()).map(|(a, b)| (b - a) * (b - a)).sum();
        let norm2: f64 = c.iter().map(|v| v * v).sum();
        abs2 += diff2;
        if norm2 > 0.0 {
            rel2 += diff2 / norm2;
        } else if diff2 > 0.0 {
            warn!("zero-norm interface trace with nonzero update; relative error is infinite");
            rel2 = f64::INFINITY;
        }
    }
    Ok((abs2.sqrt(), rel2.sqrt()))
}

/// Evaluates `T(g)` after checking the layout.
pub fn evaluate_t<P: CoupledProblem + ?Sized>(
    problem: &mut P,
    g: &InterfaceState,
) -> Result<InterfaceState> {
    g.ensure_layout(&problem.layout())?;
    let tg = problem.evaluate(g)?;
    tg.ensure_layout(g.layout())?;
    Ok(tg)
}

/// Runs the Schwarz iteration `g <- update(g, T(g))` from `g_init`.
///
/// Errors are measured between successive interface iterates. Backend or
/// accelerator failures abort the run; the partial records and the failure are
/// returned in the report.
pub fn run_schwarz<P: CoupledProblem + ?Sized>(
    problem: &mut P,
    accel: &mut Accelerator,
    criteria: &ConvergenceCriteria,
    g_init: InterfaceState,
) -> Result<ConvergenceReport> {
    criteria.validate()?;
    g_init.ensure_layout(&problem.layout())?;
    accel.reset();

    let mut g = g_init;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut e_rel_history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut failure = None;

    for k in 1..=criteria.maxit {
        let start = Instant::now();
        let step = evaluate_t(problem, &g).and_then(|tg| {
            let (values, info) =
                accel.update(k, g.layout(), g.values(), tg.values(), &e_rel_history)?;
            Ok((g.with_values(values)?, info))
        });
        let (g_next, info) = match step {
            Ok(v) => v,
            Err(e) => {
                warn!("Schwarz iteration {k} aborted: {e}");
                failure = Some(e);
                break;
            }
        };
        let (e_abs, e_rel) = interface_errors(&g.slices(), &g_next.slices())?;
        debug!("k = {k}: e_abs = {e_abs:.3e}, e_rel = {e_rel:.3e}");
        records.push(IterationRecord {
            k,
            e_abs,
            e_rel,
            rho_used: info.rho_used,
            m_k: info.m_k,
            alpha: info.alpha,
            wall_time: start.elapsed().as_secs_f64(),
        });
        e_rel_history.push(e_rel);
        g = g_next;
        if criteria.is_satisfied(e_abs, e_rel) {
            converged = true;
            break;
        }
    }

    Ok(ConvergenceReport {
        iterations: records.len(),
        records,
        converged,
        final_state: g,
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accel::AcceleratorConfig;
    use approx::assert_relative_eq;

    #[test]
    fn identical_traces_have_zero_error() {
        let a = [1.0, -2.0, 3.0];
        assert_eq!(interface_errors(&[&a], &[&a]).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn two_trace_hand_example() {
        let p1 = [0.0, 0.0];
        let c1 = [3.0, 4.0];
        let empty: [f64; 0] = [];
        let (ea, er) = interface_errors(&[&p1, &empty], &[&c1, &empty]).unwrap();
        assert_relative_eq!(ea, 5.0);
        assert_relative_eq!(er, 1.0);
    }

    #[test]
    fn single_trace_hand_example() {
        let (ea, er) = interface_errors(&[&[1.0, 0.0]], &[&[1.0, 1.0]]).unwrap();
        assert_relative_eq!(ea, 1.0);
        assert_relative_eq!(er, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn zero_norm_trace_gives_infinite_relative_error() {
        let (ea, er) = interface_errors(&[&[1.0]], &[&[0.0]]).unwrap();
        assert_eq!(ea, 1.0);
        assert!(er.is_infinite());
        let (ea, er) = interface_errors(&[&[0.0]], &[&[0.0]]).unwrap();
        assert_eq!((ea, er), (0.0, 0.0));
    }

    #[test]
    fn criteria_validation() {
        assert!(ConvergenceCriteria::new(0.0, 1e-8, 10).is_err());
        assert!(ConvergenceCriteria::new(1e-8, 1e-8, 0).is_err());
        assert!(ConvergenceCriteria::new(1e-8, 1e-8, 1).is_ok());
    }

    struct Affine {
        a: f64,
        b: f64,
    }

    impl CoupledProblem for Affine {
        fn layout(&self) -> InterfaceLayout {
            InterfaceLayout::single(1)
        }
        fn evaluate(&mut self, g: &InterfaceState) -> Result<InterfaceState> {
            g.with_values(vec![self.a * g.values()[0] + self.b])
        }
    }

    struct Failing;

    impl CoupledProblem for Failing {
        fn layout(&self) -> InterfaceLayout {
            InterfaceLayout::single(1)
        }
        fn evaluate(&mut self, _g: &InterfaceState) -> Result<InterfaceState> {
            Err(SchwarzError::Backend("boom".into()))
        }
    }

    #[test]
    fn stops_at_maxit() {
        let mut p = Affine { a: -1.0, b: 1.0 };
        let mut acc = Accelerator::new(AcceleratorConfig::unrelaxed()).unwrap();
        let crit = ConvergenceCriteria::new(1e-12, 1e-12, 7).unwrap();
        let r = run_schwarz(
            &mut p,
            &mut acc,
            &crit,
            InterfaceState::scalar(0.0).unwrap(),
        )
        .unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 7);
        let ks: Vec<usize> = r.records.iter().map(|r| r.k).collect();
        assert_eq!(ks, (1..=7).collect::<Vec<_>>());
    }

    #[test]
    fn backend_failure_is_reported_not_raised() {
        let mut acc = Accelerator::new(AcceleratorConfig::unrelaxed()).unwrap();
        let crit = ConvergenceCriteria::new(1e-12, 1e-12, 7).unwrap();
        let r = run_schwarz(
            &mut Failing,
            &mut acc,
            &crit,
            InterfaceState::scalar(0.0).unwrap(),
        )
        .unwrap();
        assert!(r.aborted());
        assert!(!r.converged);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let mut p = Affine { a: 0.5, b: 1.0 };
        let mut acc = Accelerator::new(AcceleratorConfig::unrelaxed()).unwrap();
        let crit = ConvergenceCriteria::new(1e-12, 1e-12, 7).unwrap();
        let g = InterfaceState::new(vec![0.0, 0.0], InterfaceLayout::single(2)).unwrap();
        assert!(run_schwarz(&mut p, &mut acc, &crit, g).is_err());
    }
}
