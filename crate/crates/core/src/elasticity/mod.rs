//! Plane-strain Neohookean elasticity with linear triangles.

mod material;
mod mesh;
mod problem;

pub use material::MaterialParams;
pub use mesh::{BoundaryTag, TriMesh};
pub use problem::{solve_monolithic, NewtonStats, SideRole, SubdomainProblem};

use std::io::Write;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("inverted element{} (det F = {det:.3e})", .element.map(|e| format!(" {e}")).unwrap_or_default())]
    InvertedElement { element: Option<usize>, det: f64 },

    #[error("Newton did not converge in {iterations} iterations (residuals {residuals:?})")]
    NewtonDiverged {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("line search failed in Newton iteration {iteration} (residuals {residuals:?})")]
    LineSearchFailed {
        iteration: usize,
        residuals: Vec<f64>,
    },

    #[error("singular tangent at column {column}")]
    SingularMatrix { column: usize },

    #[error("unknown boundary tag {0}")]
    UnknownTag(String),

    #[error("interface data has {got} values, expected {expected}")]
    DataLength { expected: usize, got: usize },

    #[error("{0}")]
    Setup(String),
}

impl SolverError {
    pub(crate) fn at_element(self, element: usize) -> Self {
        match self {
            SolverError::InvertedElement { det, .. } => SolverError::InvertedElement {
                element: Some(element),
                det,
            },
            other => other,
        }
    }

    /// Newton residual history, when the failure carries one.
    pub fn residual_history(&self) -> Option<&[f64]> {
        match self {
            SolverError::NewtonDiverged { residuals, .. }
            | SolverError::LineSearchFailed { residuals, .. } => Some(residuals),
            _ => None,
        }
    }
}

/// Nodal displacements, interleaved as `[ux_0, uy_0, ux_1, uy_1, ...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    pub values: Vec<f64>,
}

impl DisplacementField {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(
            values.len().is_multiple_of(2),
            "odd displacement vector length"
        );
        Self { values }
    }

    pub fn zeros(num_nodes: usize) -> Self {
        Self::new(vec![0.0; 2 * num_nodes])
    }

    pub fn num_nodes(&self) -> usize {
        self.values.len() / 2
    }

    pub fn node(&self, n: usize) -> [f64; 2] {
        [self.values[2 * n], self.values[2 * n + 1]]
    }

    /// `[ux, uy]` of the given nodes, in order.
    pub fn gather(&self, nodes: &[usize]) -> Vec<f64> {
        nodes.iter().flat_map(|&n| self.node(n)).collect()
    }

    /// Contiguous block of nodes `first..first + count`.
    pub fn node_range(&self, first: usize, count: usize) -> DisplacementField {
        DisplacementField::new(self.values[2 * first..2 * (first + count)].to_vec())
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.num_nodes())
            .map(|n| {
                let [x, y] = self.node(n);
                x.hypot(y)
            })
            .fold(0.0, f64::max)
    }

    /// Writes `node,x,y,ux,uy` rows.
    pub fn write_csv(&self, mesh: &TriMesh, path: &Path) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "node,x,y,ux,uy")?;
        for (n, p) in mesh.nodes.iter().enumerate() {
            let [ux, uy] = self.node(n);
            writeln!(w, "{n},{:.15e},{:.15e},{ux:.15e},{uy:.15e}", p[0], p[1])?;
        }
        w.flush()
    }
}

/// Largest nodal displacement-vector difference between two fields on the same mesh.
pub fn e_max(a: &DisplacementField, b: &DisplacementField) -> Result<f64, SolverError> {
    if a.values.len() != b.values.len() {
        return Err(SolverError::DataLength {
            expected: a.values.len(),
            got: b.values.len(),
        });
    }
    Ok((0..a.num_nodes())
        .map(|n| {
            let ([ax, ay], [bx, by]) = (a.node(n), b.node(n));
            (ax - bx).hypot(ay - by)
        })
        .fold(0.0, f64::max))
}
