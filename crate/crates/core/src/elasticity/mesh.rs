//! Structured triangular meshes of rectangles.
//!
//! Plain-text format:
//!
//! ```text
//! nodes <N>
//! <x> <y>            (N lines, node id = line index)
//! triangles <M>
//! <a> <b> <c>        (M lines, counter-clockwise)
//! edges <K>
//! <a> <b> <tag>      (K lines, tag one of sigma1..sigma4, gamma_left, gamma_right)
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Result, SchwarzError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Left end of the global domain.
    Sigma1,
    /// Right end of the global domain.
    Sigma2,
    /// Bottom.
    Sigma3,
    /// Top.
    Sigma4,
    InterfaceLeft,
    InterfaceRight,
}

impl BoundaryTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryTag::Sigma1 => "sigma1",
            BoundaryTag::Sigma2 => "sigma2",
            BoundaryTag::Sigma3 => "sigma3",
            BoundaryTag::Sigma4 => "sigma4",
            BoundaryTag::InterfaceLeft => "gamma_left",
            BoundaryTag::InterfaceRight => "gamma_right",
        }
    }
}

impl FromStr for BoundaryTag {
    type Err = SchwarzError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sigma1" => BoundaryTag::Sigma1,
            "sigma2" => BoundaryTag::Sigma2,
            "sigma3" => BoundaryTag::Sigma3,
            "sigma4" => BoundaryTag::Sigma4,
            "gamma_left" => BoundaryTag::InterfaceLeft,
            "gamma_right" => BoundaryTag::InterfaceRight,
            other => {
                return Err(SchwarzError::Parse(format!(
                    "unknown boundary tag {other:?}"
                )))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Boundary edges with their tag.
    pub edges: Vec<([usize; 2], BoundaryTag)>,
}

impl TriMesh {
    /// Rectangle `[x0, x1] x [y0, y1]` with `nx x ny` nodes. Node `(i, j)` has
    /// id `i * ny + j`; each cell is split along its rising diagonal.
    pub fn rectangle(
        x: (f64, f64),
        y: (f64, f64),
        nx: usize,
        ny: usize,
        left: BoundaryTag,
        right: BoundaryTag,
    ) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(SchwarzError::invalid(format!(
                "mesh needs at least 2x2 nodes, got {nx}x{ny}"
            )));
        }
        if !(x.1 > x.0 && y.1 > y.0) {
            return Err(SchwarzError::invalid("degenerate rectangle"));
        }
        let coord = |a: f64, b: f64, i: usize, n: usize| {
            if i + 1 == n {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        };
        let id = |i: usize, j: usize| i * ny + j;
        let mut nodes = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                nodes.push([coord(x.0, x.1, i, nx), coord(y.0, y.1, j, ny)]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
        for i in 0..nx - 1 {
            for j in 0..ny - 1 {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let mut edges = Vec::new();
        for j in 0..ny - 1 {
            edges.push(([id(0, j), id(0, j + 1)], left));
            edges.push(([id(nx - 1, j), id(nx - 1, j + 1)], right));
        }
        for i in 0..nx - 1 {
            edges.push(([id(i, 0), id(i + 1, 0)], BoundaryTag::Sigma3));
            edges.push(([id(i, ny - 1), id(i + 1, ny - 1)], BoundaryTag::Sigma4));
        }
        let mesh = Self {
            nodes,
            triangles,
            edges,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    /// Twice the signed area of triangle `t`.
    pub fn signed_area2(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])
    }

    /// Checks orientation, index ranges, tagged interfaces and interface sizes.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        let mut problems = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                problems.push(format!("triangle {t} references a missing node"));
            } else if !(self.signed_area2(t) > 0.0) {
                problems.push(format!("triangle {t} is not positively oriented"));
            }
        }
        for (e, (pair, _)) in self.edges.iter().enumerate() {
            if pair.iter().any(|&v| v >= n) {
                problems.push(format!("edge {e} references a missing node"));
            }
        }
        if problems.is_empty() {
            for tag in [BoundaryTag::InterfaceLeft, BoundaryTag::InterfaceRight] {
                let k = self.tagged_nodes(tag).len();
                if k == 1 {
                    problems.push(format!("interface {} has a single node", tag.as_str()));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SchwarzError::InvalidConfig(problems))
        }
    }

    /// Nodes on edges carrying `tag`, sorted by `y` (then `x`).
    pub fn tagged_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .edges
            .iter()
            .filter(|(_, t)| *t == tag)
            .flat_map(|(p, _)| p.iter().copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v.sort_by(|&a, &b| {
            let (pa, pb) = (self.nodes[a], self.nodes[b]);
            pa[1].total_cmp(&pb[1]).then(pa[0].total_cmp(&pb[0]))
        });
        v
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.edges.iter().any(|(_, t)| *t == tag)
    }

    /// Largest difference between node ids sharing a triangle.
    pub fn node_bandwidth(&self) -> usize {
        self.triangles
            .iter()
            .map(|t| {
                let mx = *t.iter().max().unwrap();
                let mn = *t.iter().min().unwrap();
                mx - mn
            })
            .max()
            .unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "nodes {}", self.nodes.len()).unwrap();
        for p in &self.nodes {
            writeln!(s, "{:.17e} {:.17e}", p[0], p[1]).unwrap();
        }
        writeln!(s, "triangles {}", self.triangles.len()).unwrap();
        for t in &self.triangles {
            writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        writeln!(s, "edges {}", self.edges.len()).unwrap();
        for (p, tag) in &self.edges {
            writeln!(s, "{} {} {}", p[0], p[1], tag.as_str()).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let mut pos = 0;
        let perr = |m: String| SchwarzError::Parse(format!("mesh: {m}"));
        let mut next = || -> Result<Vec<&str>> {
            let l = lines
                .get(pos)
                .ok_or_else(|| perr("unexpected end of file".into()))?;
            pos += 1;
            Ok(l.split_whitespace().collect())
        };
        let num =
            |s: &str| -> Result<f64> { s.parse().map_err(|_| perr(format!("bad number {s:?}"))) };
        let idx =
            |s: &str| -> Result<usize> { s.parse().map_err(|_| perr(format!("bad index {s:?}"))) };
        let header = |f: &[&str], name: &str| -> Result<usize> {
            match f {
                [h, c] if *h == name => idx(c),
                _ => Err(perr(format!("expected '{name} <count>', got {f:?}"))),
            }
        };
        let fields = |f: &[&str], k: usize| -> Result<()> {
            if f.len() == k {
                Ok(())
            } else {
                Err(perr(format!("expected {k} fields, got {f:?}")))
            }
        };

        let n = header(&next()?, "nodes")?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let f = next()?;
            fields(&f, 2)?;
            nodes.push([num(f[0])?, num(f[1])?]);
        }
        let m = header(&next()?, "triangles")?;
        let mut triangles = Vec::with_capacity(m);
        for _ in 0..m {
            let f = next()?;
            fields(&f, 3)?;
            triangles.push([idx(f[0])?, idx(f[1])?, idx(f[2])?]);
        }
        let k = header(&next()?, "edges")?;
        let mut edges = Vec::with_capacity(k);
        for _ in 0..k {
            let f = next()?;
            fields(&f, 3)?;
            edges.push(([idx(f[0])?, idx(f[1])?], f[2].parse()?));
        }
        let mesh = Self {
            nodes,
            triangles,
            edges,
        };
        mesh.validate()?;
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(nx: usize, ny: usize) -> TriMesh {
        TriMesh::rectangle(
            (0.0, 1.0),
            (0.0, 1.0),
            nx,
            ny,
            BoundaryTag::Sigma1,
            BoundaryTag::InterfaceRight,
        )
        .unwrap()
    }

    #[test]
    fn structured_counts_and_orientation() {
        let m = unit(4, 3);
        assert_eq!(m.num_nodes(), 12);
        assert_eq!(m.triangles.len(), 12);
        assert_eq!(m.edges.len(), 2 * 2 + 2 * 3);
        for t in 0..m.triangles.len() {
            assert!(m.signed_area2(t) > 0.0);
        }
        let total: f64 = (0..m.triangles.len())
            .map(|t| m.signed_area2(t) / 2.0)
            .sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert_eq!(m.node_bandwidth(), 3 + 1);
    }

    #[test]
    fn interface_nodes_sorted_by_y() {
        let m = unit(3, 5);
        let r = m.tagged_nodes(BoundaryTag::InterfaceRight);
        assert_eq!(r.len(), 5);
        for w in r.windows(2) {
            assert!(m.nodes[w[0]][1] < m.nodes[w[1]][1]);
        }
        assert!(r.iter().all(|&n| m.nodes[n][0] == 1.0));
    }

    #[test]
    fn text_roundtrip() {
        let m = unit(3, 3);
        let back = TriMesh::from_text(&m.to_text()).unwrap();
        assert_eq!(m, back);
        assert!(TriMesh::from_text("nodes 1\n0 0\ntriangles 0\nedges 1\n0 0 nowhere\n").is_err());
    }

    #[test]
    fn rejects_bad_meshes() {
        assert!(TriMesh::rectangle(
            (0.0, 1.0),
            (0.0, 1.0),
            1,
            3,
            BoundaryTag::Sigma1,
            BoundaryTag::Sigma2
        )
        .is_err());
        let mut m = unit(2, 2);
        m.triangles[0].swap(1, 2);
        assert!(m.validate().is_err());
        let single = TriMesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            edges: vec![([1, 1], BoundaryTag::InterfaceRight)],
        };
        assert!(single.validate().is_err());
    }
}
