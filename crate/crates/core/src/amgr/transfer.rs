use super::dff::Dff;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::splitting::{CfSplitting, Label};

/// Position of every point within its own set (F or C).
fn local_index(s: &CfSplitting) -> Vec<usize> {
    let (mut nf, mut nc) = (0, 0);
    s.labels()
        .iter()
        .map(|l| {
            let k = if *l == Label::F { &mut nf } else { &mut nc };
            *k += 1;
            *k - 1
        })
        .collect()
}

fn check(a: &CsrMatrix, s: &CfSplitting, d: &Dff) -> Result<()> {
    if a.n_rows() != s.len() || a.n_cols() != s.len() {
        return Err(Error::Dimension(format!("matrix is {}x{}, splitting has {}", a.n_rows(), a.n_cols(), s.len())));
    }
    s.ensure_finalized()?;
    if d.diag.len() != s.n_f() {
        return Err(Error::Dimension(format!("D_FF has {} entries for {} F-points", d.diag.len(), s.n_f())));
    }
    if let Some(k) = d.diag.iter().position(|&x| x == 0.0) {
        return Err(Error::NonpositiveDiagonal { row: s.f_indices()[k], value: 0.0 });
    }
    Ok(())
}

/// `P_{i,c} = −a_ic / (D_FF)_ii` on F-rows, unit rows on C-points.
pub fn build_interpolation(a: &CsrMatrix, s: &CfSplitting, d: &Dff) -> Result<CsrMatrix> {
    check(a, s, d)?;
    let loc = local_index(s);
    let mut t = Vec::new();
    for i in 0..s.len() {
        if s.label(i) == Label::C {
            t.push((i, loc[i], 1.0));
            continue;
        }
        let di = d.diag[loc[i]];
        for (j, v) in a.row(i) {
            if s.label(j) == Label::C {
                t.push((i, loc[j], -v / di));
            }
        }
    }
    CsrMatrix::from_triplets(s.len(), s.n_c(), &t)
}

/// `Pᵀ` in symmetric mode, otherwise `[−A_CF D_FF⁻¹  I]` in original ordering.
pub fn build_restriction(a: &CsrMatrix, s: &CfSplitting, d: &Dff, symmetric: bool) -> Result<CsrMatrix> {
    if symmetric {
        return Ok(build_interpolation(a, s, d)?.transpose());
    }
    check(a, s, d)?;
    let loc = local_index(s);
    let mut t = Vec::new();
    for c in s.c_indices() {
        t.push((loc[c], c, 1.0));
        for (j, v) in a.row(c) {
            if s.label(j) == Label::F {
                t.push((loc[c], j, -v / d.diag[loc[j]]));
            }
        }
    }
    CsrMatrix::from_triplets(s.n_c(), s.len(), &t)
}

/// Classical Ruge–Stüben interpolation.
///
/// For an F-point `i` with strong C-neighbours `C_i`, strong F-neighbours
/// `D_i^s` and all remaining neighbours lumped into the diagonal:
/// `w_ij = −(a_ij + Σ_{m∈D_i^s} a_im ā_mj / Σ_{k∈C_i} ā_mk) / (a_ii + Σ_weak a_ik)`,
/// where `ā_mk` keeps only entries of sign opposite to `a_mm`. A strong
/// F-neighbour with no such connection into `C_i` is lumped as weak.
pub fn classical_interpolation(a: &CsrMatrix, s: &CfSplitting, strength: &[Vec<usize>]) -> Result<CsrMatrix> {
    if a.n_rows() != s.len() || strength.len() != s.len() {
        return Err(Error::Dimension("matrix, splitting and strength graph disagree".into()));
    }
    s.ensure_finalized()?;
    let n = s.len();
    let loc = local_index(s);
    let mut strong = vec![usize::MAX; n];
    let mut w = vec![0.0; n];
    let mut t = Vec::new();
    for i in 0..n {
        if s.label(i) == Label::C {
            t.push((i, loc[i], 1.0));
            continue;
        }
        for &j in &strength[i] {
            strong[j] = i;
        }
        let ci: Vec<usize> = strength[i].iter().copied().filter(|&j| s.label(j) == Label::C).collect();
        for &c in &ci {
            w[c] = 0.0;
        }
        let mut denom = 0.0;
        for (k, v) in a.row(i) {
            if k == i {
                denom += v;
            } else if strong[k] == i && s.label(k) == Label::C {
                w[k] += v;
            } else if strong[k] == i {
                let am = a.get(k, k);
                let bar = |x: f64| if x * am < 0.0 { x } else { 0.0 };
                let total: f64 = ci.iter().map(|&c| bar(a.get(k, c))).sum();
                if total == 0.0 {
                    denom += v;
                } else {
                    for &c in &ci {
                        w[c] += v * bar(a.get(k, c)) / total;
                    }
                }
            } else {
                denom += v;
            }
        }
        if denom == 0.0 {
            return Err(Error::Singular);
        }
        for &c in &ci {
            if w[c] != 0.0 {
                t.push((i, loc[c], -w[c] / denom));
            }
        }
    }
    CsrMatrix::from_triplets(n, s.n_c(), &t)
}

/// `R · A · P`.
pub fn galerkin_coarse(r: &CsrMatrix, a: &CsrMatrix, p: &CsrMatrix) -> Result<CsrMatrix> {
    r.matmul(&a.matmul(p)?)
}
