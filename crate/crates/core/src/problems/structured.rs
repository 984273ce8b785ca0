//! Operators on uniform N×N grids of interior unknowns with eliminated
//! Dirichlet boundary. Unknown `(x, y)` has index `y * N + x`.
//!
//! Diffusion stencils carry no `1/h²` factor; the dominance ratios and the
//! multigrid quantities measured here are invariant under that scaling.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Anisotropic diffusion tensor `K = Q diag(delta, 1) Qᵀ`, `Q` the rotation by `angle`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnisotropyParams {
    pub delta: f64,
    pub angle: f64,
}

impl AnisotropyParams {
    pub const ISOTROPIC: AnisotropyParams = AnisotropyParams { delta: 1.0, angle: 0.0 };

    pub fn new(delta: f64, angle: f64) -> Result<Self> {
        let p = AnisotropyParams { delta, angle };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "anisotropy delta must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if !self.angle.is_finite() {
            return Err(Error::InvalidArgument("anisotropy angle must be finite".into()));
        }
        Ok(())
    }

    /// `[[k11, k12], [k12, k22]]`. Entries below 1e-14 of the largest are
    /// flushed to zero so that `angle = π/2` yields an exactly axis-aligned tensor.
    pub fn tensor(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.angle.sin_cos();
        let d = self.delta;
        let mut k = [[d * c * c + s * s, (d - 1.0) * c * s], [(d - 1.0) * c * s, d * s * s + c * c]];
        let big = k.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for v in k.iter_mut().flatten() {
            if v.abs() < 1e-14 * big {
                *v = 0.0;
            }
        }
        k
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Fd,
    Fe,
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidArgument(format!("grid size N must be at least {min}, got {n}")));
    }
    Ok(())
}

/// Assembles a constant-coefficient stencil `(dx, dy) -> value` over the grid,
/// dropping neighbours that fall on the eliminated boundary.
fn stencil_matrix(n: usize, stencil: &[(i64, i64, f64)]) -> CsrMatrix {
    let mut t = Vec::with_capacity(n * n * stencil.len());
    let ni = n as i64;
    for y in 0..ni {
        for x in 0..ni {
            let r = (y * ni + x) as usize;
            for &(dx, dy, v) in stencil {
                let (a, b) = (x + dx, y + dy);
                if v != 0.0 && (0..ni).contains(&a) && (0..ni).contains(&b) {
                    t.push((r, (b * ni + a) as usize, v));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n * n, n * n, &t).expect("stencil indices in range")
}

/// Five-point Laplacian: 4 on the diagonal, -1 to the four cardinal neighbours.
pub fn fd_laplacian_5pt(n: usize) -> Result<CsrMatrix> {
    check_n(n, 1)?;
    Ok(stencil_matrix(
        n,
        &[(0, 0, 4.0), (-1, 0, -1.0), (1, 0, -1.0), (0, -1, -1.0), (0, 1, -1.0)],
    ))
}

/// Bilinear finite-element Laplacian: 8/3 on the diagonal, -1/3 to all eight neighbours.
pub fn fe_bilinear_9pt(n: usize) -> Result<CsrMatrix> {
    check_n(n, 1)?;
    let mut st = vec![(0, 0, 8.0 / 3.0)];
    for dy in -1..=1 {
        for dx in -1..=1 {
            if (dx, dy) != (0, 0) {
                st.push((dx, dy, -1.0 / 3.0));
            }
        }
    }
    Ok(stencil_matrix(n, &st))
}

/// Rotated anisotropic diffusion `-∇·K∇u`.
///
/// `Fd` uses central differences with the four-point cross difference for
/// the mixed term; `Fe` assembles bilinear quads with 2×2 Gauss quadrature.
pub fn anisotropic(n: usize, p: AnisotropyParams, scheme: Scheme) -> Result<CsrMatrix> {
    p.validate()?;
    check_n(n, 2)?;
    let k = p.tensor();
    match scheme {
        Scheme::Fd => {
            let (k11, k12, k22) = (k[0][0], k[0][1], k[1][1]);
            Ok(stencil_matrix(
                n,
                &[
                    (0, 0, 2.0 * k11 + 2.0 * k22),
                    (-1, 0, -k11),
                    (1, 0, -k11),
                    (0, -1, -k22),
                    (0, 1, -k22),
                    (1, 1, -0.5 * k12),
                    (-1, -1, -0.5 * k12),
                    (-1, 1, 0.5 * k12),
                    (1, -1, 0.5 * k12),
                ],
            ))
        }
        Scheme::Fe => Ok(assemble_bilinear(n, &bilinear_element(&k))),
    }
}

/// Local corner order: (0,0), (1,0), (1,1), (0,1).
const CORNERS: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];

/// Element stiffness of a square bilinear element; independent of its size in 2D.
pub fn bilinear_element(k: &[[f64; 2]; 2]) -> [[f64; 4]; 4] {
    let g = 0.5 / 3f64.sqrt();
    let pts = [0.5 - g, 0.5 + g];
    let mut ke = [[0.0; 4]; 4];
    for &qx in &pts {
        for &qy in &pts {
            let grad = |a: usize| {
                let (cx, cy) = CORNERS[a];
                let fx = if cx == 0.0 { 1.0 - qx } else { qx };
                let fy = if cy == 0.0 { 1.0 - qy } else { qy };
                let sx = if cx == 0.0 { -1.0 } else { 1.0 };
                let sy = if cy == 0.0 { -1.0 } else { 1.0 };
                [sx * fy, sy * fx]
            };
            for a in 0..4 {
                let ga = grad(a);
                for b in 0..4 {
                    let gb = grad(b);
                    let kg = [k[0][0] * gb[0] + k[0][1] * gb[1], k[1][0] * gb[0] + k[1][1] * gb[1]];
                    ke[a][b] += 0.25 * (ga[0] * kg[0] + ga[1] * kg[1]);
                }
            }
        }
    }
    ke
}

fn assemble_bilinear(n: usize, ke: &[[f64; 4]; 4]) -> CsrMatrix {
    // Nodes include the boundary ring: (n+2)^2, interior node (x+1, y+1) is unknown y*n+x.
    let dof = |gx: usize, gy: usize| -> Option<usize> {
        if gx == 0 || gy == 0 || gx > n || gy > n {
            None
        } else {
            Some((gy - 1) * n + (gx - 1))
        }
    };
    let mut t = Vec::with_capacity(16 * (n + 1) * (n + 1));
    for ey in 0..=n {
        for ex in 0..=n {
            let nodes: Vec<Option<usize>> = CORNERS
                .iter()
                .map(|&(cx, cy)| dof(ex + cx as usize, ey + cy as usize))
                .collect();
            for a in 0..4 {
                for b in 0..4 {
                    if let (Some(i), Some(j)) = (nodes[a], nodes[b]) {
                        t.push((i, j, ke[a][b]));
                    }
                }
            }
        }
    }
    let m = CsrMatrix::from_triplets(n * n, n * n, &t).expect("indices in range");
    flush_roundoff(&m)
}

/// Drops entries that are pure cancellation noise relative to their row's diagonal.
fn flush_roundoff(m: &CsrMatrix) -> CsrMatrix {
    let mut t = Vec::with_capacity(m.nnz());
    for i in 0..m.n_rows() {
        let d = m.get(i, i).abs();
        for (j, v) in m.row(i) {
            if v.abs() > 1e-13 * d {
                t.push((i, j, v));
            }
        }
    }
    CsrMatrix::from_triplets(m.n_rows(), m.n_cols(), &t).expect("indices in range")
}

/// Upwind convection–diffusion `-eps Δu + b·∇u` with physical `1/h²`, `1/h`
/// scaling, `h = 1/(N+1)`.
pub fn convection_diffusion(n: usize, eps: f64, b: (f64, f64)) -> Result<CsrMatrix> {
    check_n(n, 1)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let h = 1.0 / (n as f64 + 1.0);
    let dif = eps / (h * h);
    let mut center = 4.0 * dif;
    let mut st = vec![(-1i64, 0i64, -dif), (1, 0, -dif), (0, -1, -dif), (0, 1, -dif)];
    for (comp, dx, dy) in [(b.0, 1i64, 0i64), (b.1, 0, 1)] {
        let c = comp / h;
        if comp > 0.0 {
            center += c;
            st.push((-dx, -dy, -c));
        } else if comp < 0.0 {
            center -= c;
            st.push((dx, dy, c));
        }
    }
    st.push((0, 0, center));
    // Merge duplicate offsets before assembly so each entry is summed once, in order.
    let mut merged: Vec<(i64, i64, f64)> = Vec::new();
    for (dx, dy, v) in st {
        match merged.iter_mut().find(|e| e.0 == dx && e.1 == dy) {
            Some(e) => e.2 += v,
            None => merged.push((dx, dy, v)),
        }
    }
    Ok(stencil_matrix(n, &merged))
}
