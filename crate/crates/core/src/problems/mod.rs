//! Test operators: structured Laplacians, rotated anisotropic diffusion,
//! upwind convection–diffusion and P1 assembly on triangle meshes.

pub mod mesh;
pub mod structured;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use mesh::{assemble_p1, square_mesh, TriMesh};
pub use structured::{
    anisotropic, convection_diffusion, fd_laplacian_5pt, fe_bilinear_9pt, AnisotropyParams, Scheme,
};

use crate::error::Result;
use crate::mmio::read_matrix_market;
use crate::sparse::CsrMatrix;

/// A named, fully parameterized operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemSpec {
    /// Unit diagonal of size `n`.
    Identity { n: usize },
    Fd5 { n: usize },
    Fe9 { n: usize },
    AnisoFd { n: usize, delta: f64, angle: f64 },
    AnisoFe { n: usize, delta: f64, angle: f64 },
    Convdiff { n: usize, eps: f64, bx: f64, by: f64 },
    Mesh { path: PathBuf, delta: f64, angle: f64 },
    /// Jittered triangulation of the unit square with `m` cells per side.
    JitteredMesh { m: usize, jitter: f64, seed: u64, delta: f64, angle: f64 },
    Matrix { path: PathBuf },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<CsrMatrix> {
        match self {
            ProblemSpec::Identity { n } => Ok(CsrMatrix::identity(*n)),
            ProblemSpec::Fd5 { n } => fd_laplacian_5pt(*n),
            ProblemSpec::Fe9 { n } => fe_bilinear_9pt(*n),
            ProblemSpec::AnisoFd { n, delta, angle } => {
                anisotropic(*n, AnisotropyParams::new(*delta, *angle)?, Scheme::Fd)
            }
            ProblemSpec::AnisoFe { n, delta, angle } => {
                anisotropic(*n, AnisotropyParams::new(*delta, *angle)?, Scheme::Fe)
            }
            ProblemSpec::Convdiff { n, eps, bx, by } => convection_diffusion(*n, *eps, (*bx, *by)),
            ProblemSpec::Mesh { path, delta, angle } => {
                assemble_p1(&TriMesh::load(path)?, AnisotropyParams::new(*delta, *angle)?)
            }
            ProblemSpec::JitteredMesh { m, jitter, seed, delta, angle } => {
                assemble_p1(&square_mesh(*m, *jitter, *seed)?, AnisotropyParams::new(*delta, *angle)?)
            }
            ProblemSpec::Matrix { path } => read_matrix_market(path),
        }
    }

    /// Side length of the structured grid, if the operator lives on one.
    pub fn grid_size(&self) -> Option<usize> {
        match self {
            ProblemSpec::Fd5 { n }
            | ProblemSpec::Fe9 { n }
            | ProblemSpec::AnisoFd { n, .. }
            | ProblemSpec::AnisoFe { n, .. }
            | ProblemSpec::Convdiff { n, .. } => Some(*n),
            _ => None,
        }
    }

    /// Whether the operator is symmetric by construction.
    pub fn symmetric(&self) -> Option<bool> {
        match self {
            ProblemSpec::Convdiff { bx, by, .. } => Some(*bx == 0.0 && *by == 0.0),
            ProblemSpec::Matrix { .. } => None,
            _ => Some(true),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ProblemSpec::Identity { n } => format!("identity:{n}"),
            ProblemSpec::Fd5 { n } => format!("fd5:{n}"),
            ProblemSpec::Fe9 { n } => format!("fe9:{n}"),
            ProblemSpec::AnisoFd { n, delta, angle } => format!("aniso-fd:{n}:{delta:e}:{angle}"),
            ProblemSpec::AnisoFe { n, delta, angle } => format!("aniso-fe:{n}:{delta:e}:{angle}"),
            ProblemSpec::Convdiff { n, eps, bx, by } => format!("convdiff:{n}:{eps:e}:{bx}:{by}"),
            ProblemSpec::Mesh { path, .. } => format!("mesh:{}", path.display()),
            ProblemSpec::JitteredMesh { m, seed, .. } => format!("jittered-mesh:{m}:{seed}"),
            ProblemSpec::Matrix { path } => format!("matrix:{}", path.display()),
        }
    }
}
