//! Triangle meshes: text I/O, a jittered square generator, and P1 assembly.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::structured::AnisotropyParams;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub nodes: Vec<(f64, f64)>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_nodes: BTreeSet<usize>,
}

fn signed_area2(m: &TriMesh, t: &[usize; 3]) -> f64 {
    let (x0, y0) = m.nodes[t[0]];
    let (x1, y1) = m.nodes[t[1]];
    let (x2, y2) = m.nodes[t[2]];
    (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
}

impl TriMesh {
    /// Checks index ranges and orients every triangle counter-clockwise.
    pub fn validated(mut self) -> Result<Self> {
        let n = self.nodes.len();
        for (k, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(Error::InvalidArgument(format!("triangle {k} references a missing node")));
            }
        }
        if let Some(&b) = self.boundary_nodes.iter().next_back() {
            if b >= n {
                return Err(Error::InvalidArgument(format!("boundary node {b} out of range")));
            }
        }
        for k in 0..self.triangles.len() {
            let a = signed_area2(&self, &self.triangles[k]);
            if a == 0.0 {
                return Err(Error::DegenerateTriangle(k));
            }
            if a < 0.0 {
                self.triangles[k].swap(1, 2);
            }
        }
        Ok(self)
    }

    pub fn n_dofs(&self) -> usize {
        self.nodes.len() - self.boundary_nodes.len()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nodes {}", self.nodes.len());
        for &(x, y) in &self.nodes {
            let _ = writeln!(s, "{x:?} {y:?}");
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "boundary {}", self.boundary_nodes.len());
        for b in &self.boundary_nodes {
            let _ = writeln!(s, "{b}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut toks = text
            .lines()
            .enumerate()
            .flat_map(|(k, l)| l.split_whitespace().map(move |t| (k + 1, t)));
        let mut last_line = 1;
        let mut next = |what: &str| -> Result<(usize, String)> {
            match toks.next() {
                Some((ln, t)) => {
                    last_line = ln;
                    Ok((ln, t.to_string()))
                }
                None => Err(Error::Parse { line: last_line, msg: format!("unexpected end of file, expected {what}") }),
            }
        };
        fn num<T: std::str::FromStr>(ln: usize, t: &str) -> Result<T> {
            t.parse().map_err(|_| Error::Parse { line: ln, msg: format!("bad number `{t}`") })
        }
        let section = |name: &str, next: &mut dyn FnMut(&str) -> Result<(usize, String)>| -> Result<usize> {
            let (ln, kw) = next(name)?;
            if kw != name {
                return Err(Error::Parse { line: ln, msg: format!("expected `{name}`, found `{kw}`") });
            }
            let (ln, c) = next("count")?;
            num(ln, &c)
        };
        let nn = section("nodes", &mut next)?;
        let mut nodes = Vec::with_capacity(nn);
        for _ in 0..nn {
            let (l1, x) = next("x")?;
            let (l2, y) = next("y")?;
            nodes.push((num(l1, &x)?, num(l2, &y)?));
        }
        let nt = section("triangles", &mut next)?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let mut t = [0usize; 3];
            for v in &mut t {
                let (ln, s) = next("node index")?;
                *v = num(ln, &s)?;
                if *v >= nn {
                    return Err(Error::Parse { line: ln, msg: format!("node index {v} out of range") });
                }
            }
            triangles.push(t);
        }
        let nb = section("boundary", &mut next)?;
        let mut boundary_nodes = BTreeSet::new();
        for _ in 0..nb {
            let (ln, s) = next("boundary node")?;
            let b: usize = num(ln, &s)?;
            if b >= nn {
                return Err(Error::Parse { line: ln, msg: format!("boundary node {b} out of range") });
            }
            boundary_nodes.insert(b);
        }
        TriMesh { nodes, triangles, boundary_nodes }.validated()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Triangulation of the unit square from an `m × m` cell grid.
///
/// Interior nodes are displaced uniformly by up to `jitter · h` per axis and
/// each cell is cut along its shorter diagonal (ties cut from lower-left to
/// upper-right). With `jitter = 0` every cell is cut the same way.
pub fn square_mesh(m: usize, jitter: f64, seed: u64) -> Result<TriMesh> {
    if m < 2 {
        return Err(Error::InvalidArgument("mesh needs at least 2 cells per side".into()));
    }
    if !(0.0..0.5).contains(&jitter) {
        return Err(Error::InvalidArgument("jitter must lie in [0, 0.5)".into()));
    }
    let h = 1.0 / m as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |i: usize, j: usize| j * (m + 1) + i;
    let mut nodes = Vec::with_capacity((m + 1) * (m + 1));
    let mut boundary_nodes = BTreeSet::new();
    for j in 0..=m {
        for i in 0..=m {
            let on_boundary = i == 0 || j == 0 || i == m || j == m;
            let (mut x, mut y) = (i as f64 * h, j as f64 * h);
            if on_boundary {
                boundary_nodes.insert(id(i, j));
            } else if jitter > 0.0 {
                x += rng.gen_range(-jitter..=jitter) * h;
                y += rng.gen_range(-jitter..=jitter) * h;
            }
            nodes.push((x, y));
        }
    }
    let d2 = |a: usize, b: usize| {
        let (p, q): ((f64, f64), (f64, f64)) = (nodes[a], nodes[b]);
        (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)
    };
    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if d2(b, d) < d2(a, c) {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            } else {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
    }
    TriMesh { nodes, triangles, boundary_nodes }.validated()
}

/// Exact P1 element stiffness `|T| Gᵀ K G` for a counter-clockwise triangle.
pub fn p1_element(p: [(f64, f64); 3], k: &[[f64; 2]; 2]) -> Option<[[f64; 3]; 3]> {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let a2 = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    if a2 == 0.0 {
        return None;
    }
    let g = [
        [(y1 - y2) / a2, (x2 - x1) / a2],
        [(y2 - y0) / a2, (x0 - x2) / a2],
        [(y0 - y1) / a2, (x1 - x0) / a2],
    ];
    let area = 0.5 * a2.abs();
    let mut ke = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let kg = [k[0][0] * g[b][0] + k[0][1] * g[b][1], k[1][0] * g[b][0] + k[1][1] * g[b][1]];
            ke[a][b] = area * (g[a][0] * kg[0] + g[a][1] * kg[1]);
        }
    }
    Some(ke)
}

/// Assembles `-∇·K∇u` with P1 elements, eliminating boundary nodes. Unknowns
/// are the non-boundary nodes in increasing node order.
pub fn assemble_p1(mesh: &TriMesh, p: AnisotropyParams) -> Result<CsrMatrix> {
    p.validate()?;
    let k = p.tensor();
    let mut dof = vec![usize::MAX; mesh.nodes.len()];
    let mut n = 0;
    for (v, d) in dof.iter_mut().enumerate() {
        if !mesh.boundary_nodes.contains(&v) {
            *d = n;
            n += 1;
        }
    }
    let mut t = Vec::with_capacity(9 * mesh.triangles.len());
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let ke = p1_element(tri.map(|v| mesh.nodes[v]), &k).ok_or(Error::DegenerateTriangle(e))?;
        for a in 0..3 {
            for b in 0..3 {
                let (i, j) = (dof[tri[a]], dof[tri[b]]);
                if i != usize::MAX && j != usize::MAX {
                    t.push((i, j, ke[a][b]));
                }
            }
        }
    }
    let raw = CsrMatrix::from_triplets(n, n, &t)?;
    // Remove cancellation noise (e.g. right-angle couplings that vanish exactly in theory).
    let mut clean = Vec::with_capacity(raw.nnz());
    for i in 0..n {
        let d = raw.get(i, i).abs();
        for (j, v) in raw.row(i) {
            if v.abs() > 1e-13 * d {
                clean.push((i, j, v));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &clean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::structured::fd_laplacian_5pt;

    fn unit_square() -> TriMesh {
        TriMesh {
            nodes: vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            boundary_nodes: [0, 1].into_iter().collect(),
        }
    }

    #[test]
    fn reference_element() {
        let ke = p1_element([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], &[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for a in 0..3 {
            for b in 0..3 {
                assert!((ke[a][b] - want[a][b]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn structured_mesh_reproduces_five_point() {
        let m = 6;
        let mesh = square_mesh(m, 0.0, 0).unwrap();
        let a = assemble_p1(&mesh, AnisotropyParams::ISOTROPIC).unwrap();
        let l = fd_laplacian_5pt(m - 1).unwrap();
        assert_eq!(a.nnz(), l.nnz());
        for i in 0..a.n_rows() {
            for (j, v) in a.row(i) {
                assert!((v - l.get(i, j)).abs() < 1e-13, "({i},{j}) {v}");
            }
        }
    }

    #[test]
    fn all_boundary_gives_empty_matrix() {
        let mut m = unit_square();
        m.boundary_nodes = (0..4).collect();
        let a = assemble_p1(&m, AnisotropyParams::ISOTROPIC).unwrap();
        assert_eq!((a.n_rows(), a.nnz()), (0, 0));
    }

    #[test]
    fn text_round_trip_and_errors() {
        let mesh = square_mesh(4, 0.2, 3).unwrap();
        assert_eq!(TriMesh::parse(&mesh.to_text()).unwrap(), mesh);
        let sq = TriMesh::parse(&unit_square().to_text()).unwrap();
        assert_eq!((sq.nodes.len(), sq.triangles.len()), (4, 2));
        let bad = "nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 7\nboundary 0\n";
        assert!(matches!(TriMesh::parse(bad), Err(Error::Parse { line: 6, .. })));
        let flat = "nodes 3\n0 0\n1 0\n2 0\ntriangles 1\n0 1 2\nboundary 0\n";
        assert!(matches!(TriMesh::parse(flat), Err(Error::DegenerateTriangle(0))));
    }

    #[test]
    fn clockwise_triangles_are_reoriented() {
        let mut m = unit_square();
        m.triangles[0] = [0, 2, 1];
        let v = m.validated().unwrap();
        assert!(v.triangles.iter().all(|t| signed_area2(&v, t) > 0.0));
    }

    #[test]
    fn jittered_mesh_is_spd_like() {
        let mesh = square_mesh(10, 0.25, 11).unwrap();
        let a = assemble_p1(&mesh, AnisotropyParams::ISOTROPIC).unwrap();
        assert_eq!(a.n_rows(), 81);
        assert!(a.is_symmetric(1e-12));
        let d = a.to_dense();
        assert!(d.cholesky().is_some());
    }
}
