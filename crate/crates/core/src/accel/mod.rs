//! Interface update strategies.

mod aitken;
mod anderson;
mod classical;
mod lsq;

pub use aitken::{aitken_rho, aitken_safeguard, update_aitken, AitkenState};
pub use anderson::{adapt_memory, predict_geometric_alpha, update_anderson, ResidualHistory};
pub use classical::update_classical;
pub use lsq::solve_constrained_ls;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SchwarzError};
use crate::interface::InterfaceLayout;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcceleratorKind {
    Unrelaxed,
    Classical,
    Aitken,
    Anderson,
}

impl std::fmt::Display for AcceleratorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AcceleratorKind::Unrelaxed => "unrelaxed",
            AcceleratorKind::Classical => "classical",
            AcceleratorKind::Aitken => "aitken",
            AcceleratorKind::Anderson => "anderson",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceleratorConfig {
    pub kind: AcceleratorKind,
    /// Classical relaxation parameter, also the Anderson mixing parameter.
    pub rho: f64,
    /// Aitken starting parameter, used while `k < n0`.
    pub rho_init: f64,
    pub n0: usize,
    pub m_and: usize,
    pub memory_adaptation: bool,
    pub m_bar: usize,
    pub eps_and: f64,
}

impl Default for AcceleratorConfig {
    fn default() -> Self {
        Self {
            kind: AcceleratorKind::Unrelaxed,
            rho: 1.0,
            rho_init: 1.0,
            n0: 2,
            m_and: 20,
            memory_adaptation: false,
            m_bar: 3,
            eps_and: 1e-5,
        }
    }
}

impl AcceleratorConfig {
    pub fn unrelaxed() -> Self {
        Self::default()
    }

    pub fn classical(rho: f64) -> Self {
        Self {
            kind: AcceleratorKind::Classical,
            rho,
            ..Self::default()
        }
    }

    pub fn aitken(rho_init: f64, n0: usize) -> Self {
        Self {
            kind: AcceleratorKind::Aitken,
            rho_init,
            n0,
            ..Self::default()
        }
    }

    pub fn anderson(rho: f64, m_and: usize) -> Self {
        Self {
            kind: AcceleratorKind::Anderson,
            rho,
            m_and,
            m_bar: 3.min(m_and),
            ..Self::default()
        }
    }

    pub fn with_memory_adaptation(mut self, m_bar: usize, eps_and: f64) -> Self {
        self.memory_adaptation = true;
        self.m_bar = m_bar;
        self.eps_and = eps_and;
        self
    }

    /// Checks every field, reporting all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            p.push(format!("rho must lie in (0, 1], got {}", self.rho));
        }
        if !(self.rho_init > 0.0 && self.rho_init <= 1.0) {
            p.push(format!(
                "rho_init must lie in (0, 1], got {}",
                self.rho_init
            ));
        }
        if self.n0 < 2 {
            p.push(format!("n0 must be >= 2, got {}", self.n0));
        }
        if self.m_and < 1 {
            p.push("m_and must be >= 1".to_string());
        }
        if self.m_bar < 1 {
            p.push("m_bar must be >= 1".to_string());
        }
        if self.m_bar > self.m_and {
            p.push(format!(
                "m_bar ({}) must not exceed m_and ({})",
                self.m_bar, self.m_and
            ));
        }
        if !(self.eps_and > 0.0) {
            p.push(format!("eps_and must be > 0, got {}", self.eps_and));
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(SchwarzError::InvalidConfig(p))
        }
    }

    /// Short human-readable label, e.g. `aitken(rho1=0.5,N0=2)`.
    pub fn label(&self) -> String {
        match self.kind {
            AcceleratorKind::Unrelaxed => "unrelaxed".to_string(),
            AcceleratorKind::Classical => format!("classical(rho={})", self.rho),
            AcceleratorKind::Aitken => {
                format!("aitken(rho1={},N0={})", self.rho_init, self.n0)
            }
            AcceleratorKind::Anderson if self.memory_adaptation => format!(
                "anderson(rho={},m={},mbar={},eps={:e})",
                self.rho, self.m_and, self.m_bar, self.eps_and
            ),
            AcceleratorKind::Anderson => format!("anderson(rho={},m={})", self.rho, self.m_and),
        }
    }
}

/// Per-iteration diagnostics from an accelerator.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateInfo {
    pub rho_used: Vec<f64>,
    pub m_k: Option<usize>,
    pub alpha: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
enum State {
    Stateless,
    /// One Aitken state per interface (diagonal Aitken).
    Aitken(Vec<AitkenState>),
    Anderson(ResidualHistory),
}

/// A configured interface update strategy together with its iteration state.
#[derive(Clone, Debug)]
pub struct Accelerator {
    config: AcceleratorConfig,
    state: State,
}

impl Accelerator {
    pub fn new(config: AcceleratorConfig) -> Result<Self> {
        config.validate()?;
        let mut a = Self {
            config,
            state: State::Stateless,
        };
        a.reset();
        Ok(a)
    }

    pub fn config(&self) -> &AcceleratorConfig {
        &self.config
    }

    /// Forgets all iteration history.
    pub fn reset(&mut self) {
        self.state = match self.config.kind {
            AcceleratorKind::Unrelaxed | AcceleratorKind::Classical => State::Stateless,
            AcceleratorKind::Aitken => State::Aitken(Vec::new()),
            AcceleratorKind::Anderson => {
                State::Anderson(ResidualHistory::new(self.config.m_and + 1))
            }
        };
    }

    /// Computes `g^(k+1)` from `g^(k)` and `T(g^(k))`.
    ///
    /// `e_rel_history` holds the relative errors of iterations `1..k`, used by
    /// Anderson memory adaptation.
    pub fn update(
        &mut self,
        k: usize,
        layout: &InterfaceLayout,
        g: &[f64],
        tg: &[f64],
        e_rel_history: &[f64],
    ) -> Result<(Vec<f64>, UpdateInfo)> {
        if g.len() != layout.len() || tg.len() != layout.len() {
            return Err(SchwarzError::LayoutMismatch {
                expected: layout.len(),
                got: if g.len() != layout.len() {
                    g.len()
                } else {
                    tg.len()
                },
            });
        }
        let cfg = self.config;
        match (&mut self.state, cfg.kind) {
            (State::Stateless, AcceleratorKind::Unrelaxed) => Ok((
                tg.to_vec(),
                UpdateInfo {
                    rho_used: vec![1.0],
                    ..Default::default()
                },
            )),
            (State::Stateless, _) => Ok((
                update_classical(g, tg, cfg.rho),
                UpdateInfo {
                    rho_used: vec![cfg.rho],
                    ..Default::default()
                },
            )),
            (State::Aitken(states), _) => {
                if states.len() != layout.num_interfaces() {
                    *states = vec![AitkenState::new(cfg.rho_init); layout.num_interfaces()];
                }
                let mut next = vec![0.0; g.len()];
                let mut rhos = Vec::with_capacity(states.len());
                for (slice, st) in layout.slices().iter().zip(states.iter_mut()) {
                    let r = slice.range();
                    let (part, ns) =
                        update_aitken(st, &g[r.clone()], &tg[r.clone()], k, cfg.rho_init, cfg.n0);
                    next[r].copy_from_slice(&part);
                    rhos.push(ns.rho_current);
                    *st = ns;
                }
                Ok((
                    next,
                    UpdateInfo {
                        rho_used: rhos,
                        ..Default::default()
                    },
                ))
            }
            (State::Anderson(history), _) => {
                history.push(g, tg)?;
                let m_rule = if cfg.memory_adaptation && k > 2 && e_rel_history.len() >= 2 {
                    let n = e_rel_history.len();
                    adapt_memory(k, e_rel_history[n - 1], e_rel_history[n - 2], &cfg)
                } else {
                    k.min(cfg.m_and)
                };
                let m_eff = m_rule.min(history.len() - 1);
                let (next, alpha) = update_anderson(history, cfg.rho, m_eff)?;
                Ok((
                    next,
                    UpdateInfo {
                        rho_used: Vec::new(),
                        m_k: Some(m_eff),
                        alpha: Some(alpha),
                    },
                ))
            }
        }
    }
}
