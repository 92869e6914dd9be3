use log::{debug, trace};
use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::material::MaterialParams;
use super::mesh::{BoundaryTag, TriMesh};
use super::{DisplacementField, SolverError};
use crate::linalg::{BandLu, BandMatrix};

/// Boundary condition on the left or right side of a subdomain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SideRole {
    /// Prescribed normal displacement `u_x`; tangential component free.
    ExternalDirichlet {
        normal_value: f64,
    },
    ExternalNeumannZero,
    /// Full displacement prescribed by interface data.
    InterfaceDirichlet,
    /// Nodal forces prescribed by interface data.
    InterfaceNeumann,
}

#[derive(Clone, Copy, Debug)]
struct Element {
    nodes: [usize; 3],
    /// Shape function gradients, `grads[a] = dN_a/dX`.
    grads: [[f64; 2]; 3],
    area: f64,
}

/// Summary of one nonlinear solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewtonStats {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub warm_started: bool,
}

#[derive(Clone, Debug)]
struct LinearCache {
    k0: BandMatrix,
    lu: BandLu,
}

/// One subdomain's discrete Neohookean problem, its boundary roles and solve state.
///
/// Degrees of freedom are interleaved, `2 * node + component`. The bottom edge
/// always carries `u_y = 0`; the top edge is traction free.
#[derive(Clone, Debug)]
pub struct SubdomainProblem {
    pub mesh: TriMesh,
    pub material: MaterialParams,
    pub role_left: SideRole,
    pub role_right: SideRole,
    pub newton_tol: f64,
    pub newton_maxit: usize,
    pub warm_start: bool,
    elements: Vec<Element>,
    left_nodes: Vec<usize>,
    right_nodes: Vec<usize>,
    bottom_nodes: Vec<usize>,
    band: usize,
    linear: Option<LinearCache>,
    last: Option<DisplacementField>,
    last_stats: NewtonStats,
}

impl SubdomainProblem {
    pub fn new(
        mesh: TriMesh,
        material: MaterialParams,
        role_left: SideRole,
        role_right: SideRole,
    ) -> Result<Self, SolverError> {
        material.validate().map_err(SolverError::Setup)?;
        mesh.validate()
            .map_err(|e| SolverError::Setup(e.to_string()))?;
        let side = |role: SideRole, ext: BoundaryTag, int: BoundaryTag| match role {
            SideRole::InterfaceDirichlet | SideRole::InterfaceNeumann => mesh.tagged_nodes(int),
            _ => mesh.tagged_nodes(ext),
        };
        let left_nodes = side(role_left, BoundaryTag::Sigma1, BoundaryTag::InterfaceLeft);
        let right_nodes = side(role_right, BoundaryTag::Sigma2, BoundaryTag::InterfaceRight);
        let bottom_nodes = mesh.tagged_nodes(BoundaryTag::Sigma3);
        for (role, nodes, name) in [
            (role_left, &left_nodes, "left"),
            (role_right, &right_nodes, "right"),
        ] {
            if !matches!(role, SideRole::ExternalNeumannZero) && nodes.is_empty() {
                return Err(SolverError::Setup(format!(
                    "{name} side has no tagged nodes"
                )));
            }
        }
        if role_left == role_right
            && matches!(
                role_left,
                SideRole::InterfaceDirichlet | SideRole::InterfaceNeumann
            )
        {
            return Err(SolverError::Setup(
                "left and right sides cannot share the same interface role".into(),
            ));
        }

        let elements = (0..mesh.triangles.len())
            .map(|t| {
                let nodes = mesh.triangles[t];
                let [p0, p1, p2] = nodes.map(|n| mesh.nodes[n]);
                let a2 = mesh.signed_area2(t);
                let grads = [
                    [(p1[1] - p2[1]) / a2, (p2[0] - p1[0]) / a2],
                    [(p2[1] - p0[1]) / a2, (p0[0] - p2[0]) / a2],
                    [(p0[1] - p1[1]) / a2, (p1[0] - p0[0]) / a2],
                ];
                Element {
                    nodes,
                    grads,
                    area: a2 / 2.0,
                }
            })
            .collect();
        let band = 2 * mesh.node_bandwidth() + 1;
        Ok(Self {
            mesh,
            material,
            role_left,
            role_right,
            newton_tol: 1e-8,
            newton_maxit: 25,
            warm_start: true,
            elements,
            left_nodes,
            right_nodes,
            bottom_nodes,
            band,
            linear: None,
            last: None,
            last_stats: NewtonStats::default(),
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_dofs()
    }

    pub fn last_solution(&self) -> Option<&DisplacementField> {
        self.last.as_ref()
    }

    pub fn last_stats(&self) -> &NewtonStats {
        &self.last_stats
    }

    fn side_nodes(&self, role: SideRole) -> Option<&[usize]> {
        if self.role_left == role {
            Some(&self.left_nodes)
        } else if self.role_right == role {
            Some(&self.right_nodes)
        } else {
            None
        }
    }

    /// Nodes of the interface with Dirichlet role, sorted by `y`.
    pub fn dirichlet_interface_nodes(&self) -> Option<&[usize]> {
        self.side_nodes(SideRole::InterfaceDirichlet)
    }

    /// Nodes of the interface with Neumann role, sorted by `y`.
    pub fn neumann_interface_nodes(&self) -> Option<&[usize]> {
        self.side_nodes(SideRole::InterfaceNeumann)
    }

    /// Nodes on the boundary with the given tag, sorted by `y`.
    pub fn nodes_with_tag(&self, tag: BoundaryTag) -> Result<Vec<usize>, SolverError> {
        if !self.mesh.has_tag(tag) {
            return Err(SolverError::UnknownTag(tag.as_str().into()));
        }
        Ok(self.mesh.tagged_nodes(tag))
    }

    fn check_len(nodes: Option<&[usize]>, data: Option<&[f64]>) -> Result<(), SolverError> {
        let expected = nodes.map_or(0, |n| 2 * n.len());
        let got = data.map_or(0, |d| d.len());
        if expected != got {
            return Err(SolverError::DataLength { expected, got });
        }
        Ok(())
    }

    /// Prescribed value for each constrained dof. The constrained set depends
    /// only on the roles, never on the data.
    pub fn constraints(&self, dirichlet: Option<&[f64]>) -> Result<Vec<Option<f64>>, SolverError> {
        Self::check_len(self.dirichlet_interface_nodes(), dirichlet)?;
        let mut c = vec![None; self.num_dofs()];
        for &n in &self.bottom_nodes {
            c[2 * n + 1] = Some(0.0);
        }
        for (role, nodes) in [
            (self.role_left, &self.left_nodes),
            (self.role_right, &self.right_nodes),
        ] {
            if let SideRole::ExternalDirichlet { normal_value } = role {
                for &n in nodes {
                    c[2 * n] = Some(normal_value);
                }
            }
        }
        if let (Some(nodes), Some(data)) = (self.dirichlet_interface_nodes(), dirichlet) {
            for (k, &n) in nodes.iter().enumerate() {
                c[2 * n] = Some(data[2 * k]);
                c[2 * n + 1] = Some(data[2 * k + 1]);
            }
        }
        Ok(c)
    }

    /// External nodal forces from Neumann interface data.
    pub fn external_forces(&self, neumann: Option<&[f64]>) -> Result<Vec<f64>, SolverError> {
        Self::check_len(self.neumann_interface_nodes(), neumann)?;
        let mut f = vec![0.0; self.num_dofs()];
        if let (Some(nodes), Some(data)) = (self.neumann_interface_nodes(), neumann) {
            for (k, &n) in nodes.iter().enumerate() {
                f[2 * n] += data[2 * k];
                f[2 * n + 1] += data[2 * k + 1];
            }
        }
        Ok(f)
    }

    fn deformation_gradient(&self, e: &Element, u: &[f64]) -> Matrix2<f64> {
        let mut f = Matrix2::identity();
        for (a, &n) in e.nodes.iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    f[(i, j)] += u[2 * n + i] * e.grads[a][j];
                }
            }
        }
        f
    }

    /// Internal force vector `f_int(u)` with no boundary conditions applied.
    pub fn internal_forces(&self, u: &[f64]) -> Result<Vec<f64>, SolverError> {
        assert_eq!(u.len(), self.num_dofs());
        let mut r = vec![0.0; u.len()];
        for (t, e) in self.elements.iter().enumerate() {
            let f = self.deformation_gradient(e, u);
            let p = self
                .material
                .piola_stress(&f)
                .map_err(|err| err.at_element(t))?;
            for (a, &n) in e.nodes.iter().enumerate() {
                for i in 0..2 {
                    r[2 * n + i] +=
                        e.area * (p[(i, 0)] * e.grads[a][0] + p[(i, 1)] * e.grads[a][1]);
                }
            }
        }
        Ok(r)
    }

    /// Unconstrained residual `f_int(u) - f_ext`.
    pub fn residual(&self, u: &[f64], f_ext: &[f64]) -> Result<Vec<f64>, SolverError> {
        let mut r = self.internal_forces(u)?;
        for (ri, fi) in r.iter_mut().zip(f_ext) {
            *ri -= fi;
        }
        Ok(r)
    }

    /// Consistent tangent of the internal forces, no boundary conditions applied.
    pub fn tangent(&self, u: &[f64]) -> Result<BandMatrix, SolverError> {
        let n = self.num_dofs();
        let mut k = BandMatrix::zeros(n, self.band, self.band);
        for (t, e) in self.elements.iter().enumerate() {
            let f = self.deformation_gradient(e, u);
            let a = self.material.tangent(&f).map_err(|err| err.at_element(t))?;
            for (ia, &na) in e.nodes.iter().enumerate() {
                let ga = e.grads[ia];
                for (ib, &nb) in e.nodes.iter().enumerate() {
                    let gb = e.grads[ib];
                    for i in 0..2 {
                        for kk in 0..2 {
                            let mut v = 0.0;
                            for jj in 0..2 {
                                for ll in 0..2 {
                                    v += ga[jj] * a[(2 * i + jj, 2 * kk + ll)] * gb[ll];
                                }
                            }
                            k.add(2 * na + i, 2 * nb + kk, e.area * v);
                        }
                    }
                }
            }
        }
        Ok(k)
    }

    fn free_norm(r: &[f64], c: &[Option<f64>]) -> f64 {
        r.iter()
            .zip(c)
            .filter(|(_, c)| c.is_none())
            .map(|(v, _)| v * v)
            .sum::<f64>()
            .sqrt()
    }

    fn apply_constraints(u: &mut [f64], c: &[Option<f64>]) {
        for (ui, ci) in u.iter_mut().zip(c) {
            if let Some(v) = ci {
                *ui = *v;
            }
        }
    }

    fn eliminate(k: &mut BandMatrix, c: &[Option<f64>]) {
        for (i, ci) in c.iter().enumerate() {
            if ci.is_some() {
                k.eliminate(i, 1.0);
            }
        }
    }

    fn linear_cache(&mut self, c: &[Option<f64>]) -> Result<&LinearCache, SolverError> {
        if self.linear.is_none() {
            let k0 = self.tangent(&vec![0.0; self.num_dofs()])?;
            let mut kc = k0.clone();
            Self::eliminate(&mut kc, c);
            let lu = kc
                .factor()
                .map_err(|s| SolverError::SingularMatrix { column: s.column })?;
            self.linear = Some(LinearCache { k0, lu });
        }
        Ok(self.linear.as_ref().unwrap())
    }

    /// Linear-elasticity solution with the same boundary data.
    pub fn solve_linear(
        &mut self,
        dirichlet: Option<&[f64]>,
        neumann: Option<&[f64]>,
    ) -> Result<DisplacementField, SolverError> {
        let c = self.constraints(dirichlet)?;
        let f_ext = self.external_forces(neumann)?;
        let cache = self.linear_cache(&c)?;
        let mut uc = vec![0.0; c.len()];
        Self::apply_constraints(&mut uc, &c);
        let ku = cache.k0.matvec(&uc);
        let rhs: Vec<f64> = (0..c.len())
            .map(|i| match c[i] {
                Some(v) => v,
                None => f_ext[i] - ku[i],
            })
            .collect();
        Ok(DisplacementField::new(cache.lu.solve(&rhs)))
    }

    /// Solves the nonlinear subdomain problem.
    ///
    /// With `warm_start` the Newton iteration starts from the linear-elasticity
    /// solution for the current data; otherwise from `guess` (or the previous
    /// solution). Either way the start is made to satisfy the constraints.
    pub fn solve(
        &mut self,
        dirichlet: Option<&[f64]>,
        neumann: Option<&[f64]>,
        guess: Option<&DisplacementField>,
    ) -> Result<DisplacementField, SolverError> {
        let c = self.constraints(dirichlet)?;
        let f_ext = self.external_forces(neumann)?;

        let mut starts: Vec<(Vec<f64>, bool)> = Vec::new();
        if self.warm_start {
            starts.push((self.solve_linear(dirichlet, neumann)?.values, true));
        }
        if let Some(g) = guess.or(self.last.as_ref()) {
            starts.push((g.values.clone(), false));
        }
        starts.push((vec![0.0; self.num_dofs()], false));

        let mut start = None;
        for (mut u, warm) in starts {
            Self::apply_constraints(&mut u, &c);
            if let Ok(r) = self.residual(&u, &f_ext) {
                start = Some((u, r, warm));
                break;
            }
        }
        let (mut u, mut r, warm) = match start {
            Some(s) => s,
            None => {
                let mut u = vec![0.0; self.num_dofs()];
                Self::apply_constraints(&mut u, &c);
                return Err(self.residual(&u, &f_ext).unwrap_err());
            }
        };

        let mut norm = Self::free_norm(&r, &c);
        let mut history = vec![norm];
        for it in 0..=self.newton_maxit {
            if !norm.is_finite() {
                break;
            }
            if norm <= self.newton_tol {
                debug!("Newton converged in {it} iterations, |R| = {norm:.3e}");
                self.last_stats = NewtonStats {
                    iterations: it,
                    residuals: history,
                    warm_started: warm,
                };
                let field = DisplacementField::new(u);
                self.last = Some(field.clone());
                return Ok(field);
            }
            if it == self.newton_maxit {
                break;
            }
            let mut k = self.tangent(&u)?;
            Self::eliminate(&mut k, &c);
            let rhs: Vec<f64> = r
                .iter()
                .zip(&c)
                .map(|(v, ci)| if ci.is_some() { 0.0 } else { -v })
                .collect();
            let du = k
                .factor()
                .map_err(|s| SolverError::SingularMatrix { column: s.column })?
                .solve(&rhs);

            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..=20 {
                let trial: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + step * b).collect();
                if let Ok(rt) = self.residual(&trial, &f_ext) {
                    let nt = Self::free_norm(&rt, &c);
                    if nt < norm {
                        accepted = Some((trial, rt, nt));
                        break;
                    }
                }
                step *= 0.5;
            }
            match accepted {
                Some((ut, rt, nt)) => {
                    trace!("Newton {it}: step {step}, |R| {norm:.3e} -> {nt:.3e}");
                    u = ut;
                    r = rt;
                    norm = nt;
                    history.push(norm);
                }
                None => {
                    return Err(SolverError::LineSearchFailed {
                        iteration: it,
                        residuals: history,
                    })
                }
            }
        }
        Err(SolverError::NewtonDiverged {
            iterations: history.len() - 1,
            residuals: history,
        })
    }

    /// Nodal displacements on the given side, `[ux, uy]` per node, sorted by `y`.
    pub fn extract_trace(
        &self,
        u: &DisplacementField,
        tag: BoundaryTag,
    ) -> Result<Vec<f64>, SolverError> {
        let nodes = self.nodes_with_tag(tag)?;
        Ok(u.gather(&nodes))
    }

    /// Nodal interface forces to hand to the Neumann neighbour across `tag`:
    /// the negated unconstrained residual rows at the interface nodes.
    pub fn extract_traction(
        &self,
        u: &DisplacementField,
        tag: BoundaryTag,
    ) -> Result<Vec<f64>, SolverError> {
        let nodes = self.nodes_with_tag(tag)?;
        if Some(nodes.as_slice()) == self.neumann_interface_nodes() {
            return Err(SolverError::Setup(
                "traction must be extracted on a side without applied forces".into(),
            ));
        }
        let r = self.internal_forces(&u.values)?;
        Ok(nodes
            .iter()
            .flat_map(|&n| [-r[2 * n], -r[2 * n + 1]])
            .collect())
    }
}

/// Single-domain reference solve of the stretched strip `[0, length] x [0, 1]`:
/// `u_x = 0` on the left, `u_x = stretch` on the right, `u_y = 0` at the bottom.
pub fn solve_monolithic(
    length: f64,
    nx: usize,
    ny: usize,
    material: MaterialParams,
    stretch: f64,
    newton_tol: f64,
    newton_maxit: usize,
) -> Result<(SubdomainProblem, DisplacementField), SolverError> {
    let mesh = TriMesh::rectangle(
        (0.0, length),
        (0.0, 1.0),
        nx,
        ny,
        BoundaryTag::Sigma1,
        BoundaryTag::Sigma2,
    )
    .map_err(|e| SolverError::Setup(e.to_string()))?;
    let mut p = SubdomainProblem::new(
        mesh,
        material,
        SideRole::ExternalDirichlet { normal_value: 0.0 },
        SideRole::ExternalDirichlet {
            normal_value: stretch,
        },
    )?;
    p.newton_tol = newton_tol;
    p.newton_maxit = newton_maxit;
    let u = p.solve(None, None, None)?;
    Ok((p, u))
}
