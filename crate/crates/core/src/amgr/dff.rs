use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::splitting::CfSplitting;

/// How the diagonal approximation of `A_FF` is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DffRule {
    /// `(2 − 1/θ) a_ii` on every F-row.
    Uniform,
    /// `a_ii − Σ_{j∈F, j≠i} |a_ij|`, the row's own dominance margin. It is
    /// never smaller than the uniform value on a θ-feasible splitting.
    #[default]
    RowDominance,
}

/// Diagonal `D_FF` (in the order of `f_indices`) with its equivalence
/// parameter and relaxation weight.
#[derive(Clone, Debug, PartialEq)]
pub struct Dff {
    pub diag: Vec<f64>,
    pub epsilon: f64,
    pub sigma: f64,
}

pub fn epsilon_for(theta: f64) -> f64 {
    (2.0 - 2.0 * theta) / (2.0 * theta - 1.0)
}

pub fn sigma_for(theta: f64) -> f64 {
    2.0 / (2.0 + epsilon_for(theta))
}

/// `(D_FF)_ii = (2 − 1/θ) a_ii`, `ε = (2−2θ)/(2θ−1)`, `σ = 2/(2+ε)`.
pub fn build_dff(a: &CsrMatrix, s: &CfSplitting, theta: f64) -> Result<Dff> {
    build_dff_with(a, s, theta, DffRule::Uniform)
}

pub fn build_dff_with(a: &CsrMatrix, s: &CfSplitting, theta: f64, rule: DffRule) -> Result<Dff> {
    if !(theta > 0.5 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("theta must lie in (1/2, 1], got {theta}")));
    }
    if a.n_rows() != s.len() {
        return Err(Error::Dimension(format!("matrix has {} rows, splitting {}", a.n_rows(), s.len())));
    }
    s.ensure_finalized()?;
    let in_f = s.f_mask();
    let mut diag = Vec::with_capacity(s.n_f());
    for i in s.f_indices() {
        let aii = a.get(i, i);
        if aii <= 0.0 {
            return Err(Error::NonpositiveDiagonal { row: i, value: aii });
        }
        let d = match rule {
            DffRule::Uniform => (2.0 - 1.0 / theta) * aii,
            DffRule::RowDominance => {
                let off: f64 = a.row(i).filter(|&(j, _)| j != i && in_f[j]).map(|(_, v)| v.abs()).sum();
                aii - off
            }
        };
        if d <= 0.0 {
            return Err(Error::NonpositiveDiagonal { row: i, value: d });
        }
        diag.push(d);
    }
    Ok(Dff { diag, epsilon: epsilon_for(theta), sigma: sigma_for(theta) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lap1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn constants() {
        assert_relative_eq!(epsilon_for(0.56), 22.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(sigma_for(0.56), 3.0 / 14.0, max_relative = 1e-14);
        assert_eq!(epsilon_for(1.0), 0.0);
        assert_eq!(sigma_for(1.0), 1.0);
        // The relaxation weight equals the uniform D_FF factor.
        assert_relative_eq!(sigma_for(0.7), 2.0 - 1.0 / 0.7, max_relative = 1e-14);
    }

    #[test]
    fn uniform_examples() {
        let a = CsrMatrix::from_triplets(1, 1, &[(0, 0, 4.0)]).unwrap();
        let d = build_dff(&a, &CfSplitting::from_f_indices(1, &[0]).unwrap(), 0.56).unwrap();
        assert_relative_eq!(d.diag[0], 6.0 / 7.0, max_relative = 1e-14);
        let d1 = build_dff(&a, &CfSplitting::from_f_indices(1, &[0]).unwrap(), 1.0).unwrap();
        assert_eq!(d1.diag[0], 4.0);
    }

    #[test]
    fn row_rule_dominates_uniform_on_feasible_splittings() {
        let a = lap1d(6);
        let s = CfSplitting::from_f_indices(6, &[0, 1, 3, 4]).unwrap();
        let u = build_dff(&a, &s, 0.56).unwrap();
        let r = build_dff_with(&a, &s, 0.56, DffRule::RowDominance).unwrap();
        assert_eq!(r.diag, vec![1.0, 1.0, 1.0, 1.0]);
        for (x, y) in r.diag.iter().zip(&u.diag) {
            assert!(x >= y);
        }
    }

    #[test]
    fn rejects_bad_diagonals() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, -1.0), (1, 1, 1.0)]).unwrap();
        let s = CfSplitting::from_f_indices(2, &[0]).unwrap();
        assert!(matches!(build_dff(&a, &s, 0.56), Err(Error::NonpositiveDiagonal { row: 0, .. })));
        assert!(build_dff(&lap1d(3), &CfSplitting::from_f_indices(3, &[0]).unwrap(), 0.5).is_err());
    }
}
