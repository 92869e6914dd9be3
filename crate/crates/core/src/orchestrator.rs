//! Chains of elasticity subdomains coupled by Dirichlet-Neumann sweeps.
//!
//! The global strip `[0, n_dd] x [0, 1]` is cut into unit squares. Subdomain 0
//! takes Dirichlet data on its right interface; interior subdomains take
//! Neumann data on the left and Dirichlet data on the right; the last one takes
//! Neumann data on the left. Interface `i` sits between subdomains `i` and
//! `i + 1` and holds `[ux, uy]` per node, bottom to top.

use serde::{Deserialize, Serialize};

use crate::elasticity::{
    e_max, solve_monolithic, BoundaryTag, DisplacementField, MaterialParams, SideRole,
    SubdomainProblem, TriMesh,
};
use crate::engine::CoupledProblem;
use crate::error::{Result, SchwarzError};
use crate::interface::{InterfaceLayout, InterfaceState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElasticityConfig {
    pub n_dd: usize,
    /// Nodes per subdomain along x.
    pub nx: usize,
    /// Nodes per subdomain along y.
    pub ny: usize,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// Prescribed `u_x` on the right end of the strip.
    pub stretch: f64,
    pub newton_tol: f64,
    pub newton_maxit: usize,
    pub warm_start: bool,
}

impl Default for ElasticityConfig {
    fn default() -> Self {
        Self {
            n_dd: 2,
            nx: 21,
            ny: 21,
            youngs_modulus: 1440.0,
            poisson_ratio: 0.25,
            stretch: 1.0,
            newton_tol: 1e-8,
            newton_maxit: 25,
            warm_start: true,
        }
    }
}

impl ElasticityConfig {
    /// Fine resolution: 101 x 101 nodes per subdomain.
    pub fn full_scale(n_dd: usize) -> Self {
        Self {
            n_dd,
            nx: 101,
            ny: 101,
            ..Self::default()
        }
    }

    pub fn material(&self) -> MaterialParams {
        MaterialParams {
            youngs_modulus: self.youngs_modulus,
            poisson_ratio: self.poisson_ratio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        if self.n_dd < 2 {
            p.push(format!("n_dd must be >= 2, got {}", self.n_dd));
        }
        if self.nx < 2 || self.ny < 2 {
            p.push(format!(
                "need at least 2x2 nodes per subdomain, got {}x{}",
                self.nx, self.ny
            ));
        }
        if let Err(e) = self.material().validate() {
            p.push(e);
        }
        if !self.stretch.is_finite() {
            p.push("stretch must be finite".into());
        }
        if !(self.newton_tol > 0.0) {
            p.push(format!("newton_tol must be > 0, got {}", self.newton_tol));
        }
        if self.newton_maxit < 1 {
            p.push("newton_maxit must be >= 1".into());
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(SchwarzError::InvalidConfig(p))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InterfaceLink {
    pub left: usize,
    pub right: usize,
}

/// Subdomains of a linear chain with their role assignment.
#[derive(Clone, Debug)]
pub struct DecompositionPlan {
    pub config: ElasticityConfig,
    pub subdomains: Vec<SubdomainProblem>,
    pub interfaces: Vec<InterfaceLink>,
}

impl DecompositionPlan {
    pub fn chain(config: ElasticityConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_dd;
        let mut subdomains = Vec::with_capacity(n);
        for i in 0..n {
            let (left, left_tag) = if i == 0 {
                (
                    SideRole::ExternalDirichlet { normal_value: 0.0 },
                    BoundaryTag::Sigma1,
                )
            } else {
                (SideRole::InterfaceNeumann, BoundaryTag::InterfaceLeft)
            };
            let (right, right_tag) = if i + 1 == n {
                (
                    SideRole::ExternalDirichlet {
                        normal_value: config.stretch,
                    },
                    BoundaryTag::Sigma2,
                )
            } else {
                (SideRole::InterfaceDirichlet, BoundaryTag::InterfaceRight)
            };
            let mesh = TriMesh::rectangle(
                (i as f64, (i + 1) as f64),
                (0.0, 1.0),
                config.nx,
                config.ny,
                left_tag,
                right_tag,
            )?;
            let mut sub =
                SubdomainProblem::new(mesh, config.material(), left, right).map_err(|source| {
                    SchwarzError::Subdomain {
                        subdomain: i,
                        source,
                    }
                })?;
            sub.newton_tol = config.newton_tol;
            sub.newton_maxit = config.newton_maxit;
            sub.warm_start = config.warm_start;
            subdomains.push(sub);
        }
        let interfaces = (0..n - 1)
            .map(|i| InterfaceLink {
                left: i,
                right: i + 1,
            })
            .collect();
        Ok(Self {
            config,
            subdomains,
            interfaces,
        })
    }

    pub fn n_dd(&self) -> usize {
        self.subdomains.len()
    }

    pub fn layout(&self) -> InterfaceLayout {
        InterfaceLayout::from_lengths(&vec![2 * self.config.ny; self.interfaces.len()])
    }
}

/// The multi-domain fixed-point operator with the last sweep's subdomain fields.
#[derive(Clone, Debug)]
pub struct ChainProblem {
    plan: DecompositionPlan,
    fields: Vec<Option<DisplacementField>>,
}

impl ChainProblem {
    pub fn new(config: ElasticityConfig) -> Result<Self> {
        let plan = DecompositionPlan::chain(config)?;
        let fields = vec![None; plan.n_dd()];
        Ok(Self { plan, fields })
    }

    pub fn plan(&self) -> &DecompositionPlan {
        &self.plan
    }

    /// `g = 0` on every interface.
    pub fn zero_state(&self) -> InterfaceState {
        InterfaceState::zeros(self.plan.layout())
    }

    /// Subdomain fields from the most recent sweep.
    pub fn fields(&self) -> &[Option<DisplacementField>] {
        &self.fields
    }

    /// Left-to-right sweep: Dirichlet data from `g`, Neumann data from the
    /// neighbour solved just before. Returns the new Neumann-side traces.
    pub fn sweep_t(&mut self, g: &InterfaceState) -> Result<InterfaceState> {
        g.ensure_layout(&self.plan.layout())?;
        let n = self.plan.n_dd();
        let mut out = Vec::with_capacity(g.len());
        let mut traction: Option<Vec<f64>> = None;
        for i in 0..n {
            let wrap = |source| SchwarzError::Subdomain {
                subdomain: i,
                source,
            };
            let dirichlet = (i + 1 < n).then(|| g.slice(i));
            let neumann = traction.take();
            let sub = &mut self.plan.subdomains[i];
            let u = sub
                .solve(dirichlet, neumann.as_deref(), None)
                .map_err(wrap)?;
            if i > 0 {
                out.extend(
                    sub.extract_trace(&u, BoundaryTag::InterfaceLeft)
                        .map_err(wrap)?,
                );
            }
            if i + 1 < n {
                traction = Some(
                    sub.extract_traction(&u, BoundaryTag::InterfaceRight)
                        .map_err(wrap)?,
                );
            }
            self.fields[i] = Some(u);
        }
        g.with_values(out)
    }

    /// Displacement jump between the Dirichlet data `g` and the Neumann-side
    /// traces of the last sweep, per interface (Euclidean norm).
    pub fn trace_mismatch(&self, g: &InterfaceState) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (i, link) in self.plan.interfaces.iter().enumerate() {
            let u = self.fields[link.right]
                .as_ref()
                .ok_or_else(|| SchwarzError::Backend("no sweep has been run".into()))?;
            let t = self.plan.subdomains[link.right]
                .extract_trace(u, BoundaryTag::InterfaceLeft)
                .map_err(|source| SchwarzError::Subdomain {
                    subdomain: link.right,
                    source,
                })?;
            let d: f64 = t.iter().zip(g.slice(i)).map(|(a, b)| (a - b).powi(2)).sum();
            out.push(d.sqrt());
        }
        Ok(out)
    }

    /// Nodal force imbalance `|f_int^left + f_int^right|` across each interface.
    pub fn flux_mismatch(&self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for link in &self.plan.interfaces {
            let get = |s: usize| {
                self.fields[s]
                    .as_ref()
                    .ok_or_else(|| SchwarzError::Backend("no sweep has been run".into()))
            };
            let wrap = |s: usize| {
                move |source| SchwarzError::Subdomain {
                    subdomain: s,
                    source,
                }
            };
            let left = &self.plan.subdomains[link.left];
            let right = &self.plan.subdomains[link.right];
            let handed = left
                .extract_traction(get(link.left)?, BoundaryTag::InterfaceRight)
                .map_err(wrap(link.left))?;
            let f_right = right
                .internal_forces(&get(link.right)?.values)
                .map_err(wrap(link.right))?;
            let nodes = right.neumann_interface_nodes().unwrap_or(&[]);
            let d: f64 = nodes
                .iter()
                .enumerate()
                .flat_map(|(k, &n)| {
                    [
                        f_right[2 * n] - handed[2 * k],
                        f_right[2 * n + 1] - handed[2 * k + 1],
                    ]
                })
                .map(|v| v * v)
                .sum();
            out.push(d.sqrt());
        }
        Ok(out)
    }
}

impl CoupledProblem for ChainProblem {
    fn layout(&self) -> InterfaceLayout {
        self.plan.layout()
    }

    fn evaluate(&mut self, g: &InterfaceState) -> Result<InterfaceState> {
        self.sweep_t(g)
    }

    fn solve_tolerance(&self) -> f64 {
        self.plan.config.newton_tol
    }
}

/// Single-domain solution of the whole strip, split into per-subdomain fields
/// with the chain's node numbering.
pub fn monolithic_reference(config: &ElasticityConfig) -> Result<Vec<DisplacementField>> {
    config.validate()?;
    let nx_global = config.n_dd * (config.nx - 1) + 1;
    let (_, u) = solve_monolithic(
        config.n_dd as f64,
        nx_global,
        config.ny,
        config.material(),
        config.stretch,
        config.newton_tol,
        config.newton_maxit,
    )
    .map_err(|e| SchwarzError::Backend(format!("monolithic solve failed: {e}")))?;
    Ok((0..config.n_dd)
        .map(|i| u.node_range(i * (config.nx - 1) * config.ny, config.nx * config.ny))
        .collect())
}

/// `e_max` of each subdomain field against the restricted reference.
pub fn subdomain_errors(
    fields: &[Option<DisplacementField>],
    reference: &[DisplacementField],
) -> Result<Vec<f64>> {
    fields
        .iter()
        .zip(reference)
        .enumerate()
        .map(|(i, (f, r))| {
            let f = f
                .as_ref()
                .ok_or_else(|| SchwarzError::Backend(format!("subdomain {i} has no solution")))?;
            e_max(f, r).map_err(|source| SchwarzError::Subdomain {
                subdomain: i,
                source,
            })
        })
        .collect()
}
