//! Two-subdomain 1D Laplace problem `-u'' = 0` on `(0, 1)`, `u(0) = 0`,
//! `u(1) = 1`, split at `x_bar` into a Dirichlet side `(0, x_bar)` and a
//! Neumann side `(x_bar, 1)`.

use serde::{Deserialize, Serialize};

use crate::engine::CoupledProblem;
use crate::error::{Result, SchwarzError};
use crate::interface::{InterfaceLayout, InterfaceState};
use crate::linalg::solve_tridiagonal;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Laplace1DConfig {
    pub x_bar: f64,
    #[serde(default = "default_points")]
    pub n_points: usize,
    #[serde(default = "default_g_init")]
    pub g_init: f64,
}

fn default_points() -> usize {
    20
}

fn default_g_init() -> f64 {
    0.3
}

impl Laplace1DConfig {
    pub fn new(x_bar: f64) -> Self {
        Self {
            x_bar,
            n_points: default_points(),
            g_init: default_g_init(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        if !(self.x_bar > 0.0 && self.x_bar < 1.0) {
            p.push(format!("x_bar must lie in (0, 1), got {}", self.x_bar));
        }
        if self.n_points < 3 {
            p.push(format!("n_points must be >= 3, got {}", self.n_points));
        }
        if !self.g_init.is_finite() {
            p.push("g_init must be finite".to_string());
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(SchwarzError::InvalidConfig(p))
        }
    }
}

/// Grid function on a uniform 1D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution1D {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl Solution1D {
    fn spacing(&self) -> f64 {
        self.x[1] - self.x[0]
    }
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + i as f64 * h })
        .collect()
}

/// Solves `-u'' = 0` on `(0, x_bar)` with `u(0) = 0`, `u(x_bar) = g` on `n` points.
pub fn solve_dirichlet_1d(x_bar: f64, g: f64, n: usize) -> Solution1D {
    assert!(n >= 3);
    let x = grid(0.0, x_bar, n);
    let m = n - 2;
    let mut rhs = vec![0.0; m];
    rhs[m - 1] = g;
    let inner = solve_tridiagonal(&vec![-1.0; m], &vec![2.0; m], &vec![-1.0; m], &rhs);
    let mut u = Vec::with_capacity(n);
    u.push(0.0);
    u.extend(inner);
    u.push(g);
    Solution1D { x, u }
}

/// Solves `-u'' = 0` on `(x_bar, 1)` with `u'(x_bar) = flux`, `u(1) = 1`.
///
/// The flux condition uses the second-order one-sided stencil
/// `(-3u_0 + 4u_1 - u_2) / 2h`; substituting the first interior equation
/// `u_2 = 2u_1 - u_0` turns it into `u_1 - u_0 = h flux`.
pub fn solve_neumann_1d(x_bar: f64, flux: f64, n: usize) -> Solution1D {
    assert!(n >= 3);
    let x = grid(x_bar, 1.0, n);
    let h = (1.0 - x_bar) / (n - 1) as f64;
    let m = n - 1;
    let mut lower = vec![-1.0; m];
    let mut diag = vec![2.0; m];
    let mut upper = vec![-1.0; m];
    let mut rhs = vec![0.0; m];
    lower[0] = 0.0;
    diag[0] = -1.0;
    upper[0] = 1.0;
    rhs[0] = h * flux;
    rhs[m - 1] += 1.0;
    let mut u = solve_tridiagonal(&lower, &diag, &upper, &rhs);
    u.push(1.0);
    Solution1D { x, u }
}

/// Outward-from-the-left derivative at the right end, one-sided second order.
pub fn right_end_flux(sol: &Solution1D) -> f64 {
    let n = sol.u.len();
    let h = sol.spacing();
    (3.0 * sol.u[n - 1] - 4.0 * sol.u[n - 2] + sol.u[n - 3]) / (2.0 * h)
}

/// Closed-form fixed-point map `(1 - 1/x_bar) g + 1`.
pub fn analytic_t(x_bar: f64, g: f64) -> f64 {
    (1.0 - 1.0 / x_bar) * g + 1.0
}

/// Error reduction factor `|1 - rho / x_bar|` of classical relaxation.
pub fn analytic_convergence_factor(x_bar: f64, rho: f64) -> f64 {
    (1.0 - rho / x_bar).abs()
}

/// Finite-difference Dirichlet-Neumann sweep for the 1D problem.
#[derive(Clone, Debug)]
pub struct Laplace1DProblem {
    config: Laplace1DConfig,
    last: Option<(Solution1D, Solution1D)>,
}

impl Laplace1DProblem {
    pub fn new(config: Laplace1DConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, last: None })
    }

    pub fn config(&self) -> &Laplace1DConfig {
        &self.config
    }

    pub fn initial_state(&self) -> InterfaceState {
        InterfaceState::new(vec![self.config.g_init], self.layout())
            .expect("validated initial value")
    }

    /// Subdomain solutions from the most recent sweep.
    pub fn last_solutions(&self) -> Option<&(Solution1D, Solution1D)> {
        self.last.as_ref()
    }

    /// `T(g)` computed from the discrete subdomain solves.
    pub fn sweep(&mut self, g: f64) -> f64 {
        let n = self.config.n_points;
        let u1 = solve_dirichlet_1d(self.config.x_bar, g, n);
        let flux = right_end_flux(&u1);
        let u2 = solve_neumann_1d(self.config.x_bar, flux, n);
        let trace = u2.u[0];
        self.last = Some((u1, u2));
        trace
    }
}

impl CoupledProblem for Laplace1DProblem {
    fn layout(&self) -> InterfaceLayout {
        InterfaceLayout::single(1)
    }

    fn evaluate(&mut self, g: &InterfaceState) -> Result<InterfaceState> {
        let t = self.sweep(g.values()[0]);
        g.with_values(vec![t])
    }
}
