use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dff::{build_dff_with, Dff, DffRule};
use super::strength::{second_pass, strength_graph};
use super::transfer::{build_interpolation, build_restriction, classical_interpolation, galerkin_coarse};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::splitting::{check_feasible, CfSplitting, Label};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleKind {
    #[default]
    V,
    W,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpolationKind {
    /// `P = [−D_FF⁻¹ A_FC; I]`.
    #[default]
    Amgr,
    /// Ruge–Stüben interpolation on the strength graph of the second pass.
    Classical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmgrOptions {
    pub theta: f64,
    pub dff: DffRule,
    pub interpolation: InterpolationKind,
    /// `None` detects symmetry of each level's operator.
    pub symmetric: Option<bool>,
    pub cycle: CycleKind,
    pub nu: usize,
    pub max_levels: usize,
    pub coarse_cap: usize,
    /// Strength threshold of the second pass; `None` skips it.
    pub second_pass: Option<f64>,
    /// Coarsening stops once `|C| ≥ stall_ratio · n`.
    pub stall_ratio: f64,
}

impl Default for AmgrOptions {
    fn default() -> Self {
        AmgrOptions {
            theta: 0.56,
            dff: DffRule::RowDominance,
            interpolation: InterpolationKind::Amgr,
            symmetric: None,
            cycle: CycleKind::V,
            nu: 1,
            max_levels: 2,
            coarse_cap: 16,
            second_pass: None,
            stall_ratio: 0.9,
        }
    }
}

/// One fine level: operator, splitting and transfer operators to the next level.
#[derive(Clone, Debug)]
pub struct AmgrLevel {
    pub a: CsrMatrix,
    pub splitting: CfSplitting,
    pub dff: Dff,
    pub p: CsrMatrix,
    pub r: CsrMatrix,
    /// `σ / (D_FF)_ii` on F-points, zero on C-points.
    relax_weight: Vec<f64>,
    /// F-count before the second pass, when one ran.
    pub n_f_before_second_pass: Option<usize>,
}

impl AmgrLevel {
    pub fn build(a: CsrMatrix, splitting: CfSplitting, opts: &AmgrOptions) -> Result<Self> {
        let symmetric = opts.symmetric.unwrap_or_else(|| a.is_symmetric(1e-12));
        let dff = build_dff_with(&a, &splitting, opts.theta, opts.dff)?;
        let p = match opts.interpolation {
            InterpolationKind::Amgr => build_interpolation(&a, &splitting, &dff)?,
            InterpolationKind::Classical => {
                classical_interpolation(&a, &splitting, &strength_graph(&a, opts.second_pass.unwrap_or(0.25)))?
            }
        };
        let r = match opts.interpolation {
            InterpolationKind::Amgr => build_restriction(&a, &splitting, &dff, symmetric)?,
            InterpolationKind::Classical => p.transpose(),
        };
        let mut relax_weight = vec![0.0; a.n_rows()];
        for (k, i) in splitting.f_indices().into_iter().enumerate() {
            relax_weight[i] = dff.sigma / dff.diag[k];
        }
        Ok(AmgrLevel { a, splitting, dff, p, r, relax_weight, n_f_before_second_pass: None })
    }

    pub fn n(&self) -> usize {
        self.a.n_rows()
    }

    /// `x_F ← x_F + σ D_FF⁻¹ (b − A x)_F`.
    pub fn f_relax(&self, x: &mut [f64], b: &[f64]) {
        let r = residual(&self.a, x, b);
        for i in 0..x.len() {
            x[i] += self.relax_weight[i] * r[i];
        }
    }

    /// Dense `I − σ diag(D_FF⁻¹, 0) A`.
    pub fn dense_relaxation(&self) -> DMatrix<f64> {
        let n = self.n();
        let a = self.a.to_dense();
        DMatrix::identity(n, n) - DMatrix::from_diagonal(&DVector::from_vec(self.relax_weight.clone())) * a
    }
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; x.len()];
    a.spmv_into(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    r
}

/// Levels plus the directly solved coarsest operator.
#[derive(Clone, Debug)]
pub struct AmgrHierarchy {
    pub levels: Vec<AmgrLevel>,
    pub coarsest: CsrMatrix,
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    pub cycle: CycleKind,
    pub nu: usize,
}

impl AmgrHierarchy {
    pub fn from_levels(levels: Vec<AmgrLevel>, cycle: CycleKind, nu: usize) -> Result<Self> {
        let coarsest = match levels.last() {
            Some(l) => galerkin_coarse(&l.r, &l.a, &l.p)?,
            None => return Err(Error::InvalidArgument("a hierarchy needs at least one level".into())),
        };
        for w in levels.windows(2) {
            if w[1].n() != w[0].splitting.n_c() {
                return Err(Error::Dimension("consecutive levels do not match".into()));
            }
        }
        Self::with_coarsest(levels, coarsest, cycle, nu)
    }

    fn with_coarsest(levels: Vec<AmgrLevel>, coarsest: CsrMatrix, cycle: CycleKind, nu: usize) -> Result<Self> {
        let lu = if coarsest.n_rows() == 0 {
            None
        } else {
            let lu = coarsest.to_dense().lu();
            if !lu.is_invertible() {
                return Err(Error::Singular);
            }
            Some(lu)
        };
        Ok(AmgrHierarchy { levels, coarsest, lu, cycle, nu })
    }

    /// Two-level hierarchy on a given splitting.
    pub fn two_level(a: CsrMatrix, splitting: CfSplitting, opts: &AmgrOptions) -> Result<Self> {
        let level = AmgrLevel::build(a, splitting, opts)?;
        Self::from_levels(vec![level], opts.cycle, opts.nu)
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.n()).chain([self.coarsest.n_rows()]).collect()
    }

    pub fn level_nnz(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.a.nnz()).chain([self.coarsest.nnz()]).collect()
    }

    fn coarse_solve(&self, b: &[f64]) -> Vec<f64> {
        match &self.lu {
            None => Vec::new(),
            Some(lu) => lu.solve(&DVector::from_column_slice(b)).expect("invertible").as_slice().to_vec(),
        }
    }

    /// One cycle on level `l`, updating `x` in place.
    pub fn cycle_at(&self, l: usize, x: &mut [f64], b: &[f64]) {
        if l == self.levels.len() {
            let sol = self.coarse_solve(b);
            x.copy_from_slice(&sol);
            return;
        }
        let lev = &self.levels[l];
        for _ in 0..self.nu {
            lev.f_relax(x, b);
        }
        let r = residual(&lev.a, x, b);
        let rc = lev.r.spmv(&r).expect("dimensions checked at build");
        let mut ec = vec![0.0; rc.len()];
        let visits = match self.cycle {
            CycleKind::V => 1,
            CycleKind::W => 2,
        };
        if !rc.is_empty() {
            for _ in 0..visits {
                self.cycle_at(l + 1, &mut ec, &rc);
            }
            let corr = lev.p.spmv(&ec).expect("dimensions checked at build");
            for (xi, ci) in x.iter_mut().zip(&corr) {
                *xi += ci;
            }
        }
        for _ in 0..self.nu {
            lev.f_relax(x, b);
        }
    }

    pub fn cycle(&self, x: &mut [f64], b: &[f64]) {
        self.cycle_at(0, x, b);
    }

    /// Dense error propagation of the finest two levels with an exact coarse
    /// solve: `S^ν (I − P (R A P)⁻¹ R A) S^ν`.
    pub fn dense_two_level_operator(&self) -> Result<DMatrix<f64>> {
        let lev = self.levels.first().ok_or_else(|| Error::InvalidArgument("no fine level".into()))?;
        let n = lev.n();
        let a = lev.a.to_dense();
        let p = lev.p.to_dense();
        let r = lev.r.to_dense();
        let t = if p.ncols() == 0 {
            DMatrix::identity(n, n)
        } else {
            let ac = &r * &a * &p;
            let inv = ac.lu().solve(&(&r * &a)).ok_or(Error::Singular)?;
            DMatrix::identity(n, n) - &p * inv
        };
        let s = lev.dense_relaxation();
        let mut m = t;
        for _ in 0..self.nu {
            m = &s * m * &s;
        }
        Ok(m)
    }
}

/// Supplies a splitting for each level that gets coarsened.
pub trait LevelCoarsener {
    fn coarsen_level(&mut self, level: usize, a: &CsrMatrix) -> Result<CfSplitting>;
}

impl<F: FnMut(usize, &CsrMatrix) -> Result<CfSplitting>> LevelCoarsener for F {
    fn coarsen_level(&mut self, level: usize, a: &CsrMatrix) -> Result<CfSplitting> {
        self(level, a)
    }
}

/// Coarsens recursively until `max_levels`, the coarse-size cap, or a stall.
///
/// Every splitting is checked for θ-feasibility before the optional second
/// pass. Level 0 failing to produce any F-point is an error; later stalls
/// end the hierarchy.
pub fn build_hierarchy(a: CsrMatrix, coarsener: &mut dyn LevelCoarsener, opts: &AmgrOptions) -> Result<AmgrHierarchy> {
    if opts.max_levels < 2 {
        return Err(Error::InvalidArgument("a hierarchy needs at least two levels".into()));
    }
    let mut levels: Vec<AmgrLevel> = Vec::new();
    let mut current = a;
    while levels.len() + 1 < opts.max_levels {
        let n = current.n_rows();
        if !levels.is_empty() && n <= opts.coarse_cap {
            break;
        }
        let s = coarsener.coarsen_level(levels.len(), &current)?;
        if s.len() != n {
            return Err(Error::Dimension(format!("splitting has {} labels for {n} points", s.len())));
        }
        check_feasible(&current, &s, opts.theta)?;
        let (s, before) = match opts.second_pass {
            Some(ts) => {
                let out = second_pass(&current, &s, ts);
                debug_assert!(out.f_indices().iter().all(|&i| s.label(i) == Label::F));
                let before = s.n_f();
                (out, Some(before))
            }
            None => (s, None),
        };
        let n_c = s.n_c();
        if n_c == n {
            if levels.is_empty() {
                return Err(Error::Stalled { level: 0, n, n_coarse: n_c });
            }
            break;
        }
        if !levels.is_empty() && n_c as f64 >= opts.stall_ratio * n as f64 {
            break;
        }
        let mut level = AmgrLevel::build(current, s, opts)?;
        level.n_f_before_second_pass = before;
        let next = galerkin_coarse(&level.r, &level.a, &level.p)?;
        levels.push(level);
        current = next;
    }
    AmgrHierarchy::with_coarsest(levels, current, opts.cycle, opts.nu)
}
