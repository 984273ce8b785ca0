use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Largest problem the exhaustive oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteForceResult {
    pub best_f: Vec<usize>,
    pub best_size: usize,
    /// Number of feasible F-sets, the empty set included.
    pub feasible_count: u64,
}

/// Exact maximizer of `|F|` subject to the dominance constraint, by
/// enumeration of all `2ⁿ` subsets in Gray-code order.
///
/// Each step toggles one point and re-evaluates only the rows that see it,
/// each with a fresh column-order sum, so every verdict equals the exact
/// feasibility check. Among maximizers the lexicographically smallest sorted
/// index list is returned.
pub fn brute_force_optimal_f(a: &CsrMatrix, theta: f64) -> Result<BruteForceResult> {
    let n = a.n_rows();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    let at = a.transpose();
    let diag: Vec<f64> = a.diagonal().iter().map(|d| d.abs()).collect();
    let mut in_f = vec![false; n];
    let mut bad = vec![false; n];
    let mut n_bad = 0usize;
    let eval = |in_f: &[bool], i: usize| -> bool {
        if !in_f[i] {
            return false;
        }
        let mut s = 0.0;
        for (j, v) in a.row(i) {
            if j == i || in_f[j] {
                s += v.abs();
            }
        }
        diag[i] == 0.0 || diag[i] < theta * s
    };

    let mut best_mask: u32 = 0;
    let mut best_size = 0usize;
    let mut feasible_count = 1u64;
    let mut mask: u32 = 0;
    for step in 1u64..(1u64 << n) {
        let p = step.trailing_zeros() as usize;
        mask ^= 1 << p;
        in_f[p] = !in_f[p];
        let touch = |i: usize, in_f: &[bool], bad: &mut [bool], n_bad: &mut usize| {
            let now = eval(in_f, i);
            if now != bad[i] {
                bad[i] = now;
                if now {
                    *n_bad += 1;
                } else {
                    *n_bad -= 1;
                }
            }
        };
        touch(p, &in_f, &mut bad, &mut n_bad);
        for &i in at.row_cols(p) {
            if i != p {
                touch(i, &in_f, &mut bad, &mut n_bad);
            }
        }
        if n_bad == 0 {
            feasible_count += 1;
            let size = mask.count_ones() as usize;
            let diff = mask ^ best_mask;
            let lex_smaller = diff != 0 && mask & (diff & diff.wrapping_neg()) != 0;
            if size > best_size || (size == best_size && lex_smaller) {
                best_size = size;
                best_mask = mask;
            }
        }
    }
    let best_f = (0..n).filter(|&i| best_mask >> i & 1 == 1).collect();
    Ok(BruteForceResult { best_f, best_size, feasible_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::fd_laplacian_5pt;
    use crate::splitting::{is_feasible, CfSplitting};

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

    /// Plain enumeration with the library feasibility check.
    fn naive(a: &CsrMatrix, theta: f64) -> (usize, u64) {
        let n = a.n_rows();
        let mut best = 0;
        let mut count = 0;
        for m in 0u32..(1 << n) {
            let f: Vec<usize> = (0..n).filter(|&i| m >> i & 1 == 1).collect();
            if is_feasible(a, &CfSplitting::from_f_indices(n, &f).unwrap(), theta) {
                count += 1;
                best = best.max(f.len());
            }
        }
        (best, count)
    }

    #[test]
    fn identity_takes_everything() {
        let r = brute_force_optimal_f(&CsrMatrix::identity(4), 0.9).unwrap();
        assert_eq!(r.best_size, 4);
        assert_eq!(r.feasible_count, 16);
    }

    #[test]
    fn path_of_six() {
        let r = brute_force_optimal_f(&lap1d(6), 0.56).unwrap();
        assert_eq!(r.best_size, 4);
        assert_eq!(r.best_f, vec![0, 1, 3, 4]);
        let f = CfSplitting::from_f_indices(6, &[0, 1, 2]).unwrap();
        assert!(!is_feasible(&lap1d(6), &f, 0.56));
    }

    #[test]
    fn agrees_with_naive_enumeration() {
        for a in [lap1d(7), lap1d(10), fd_laplacian_5pt(3).unwrap()] {
            let r = brute_force_optimal_f(&a, 0.56).unwrap();
            assert_eq!((r.best_size, r.feasible_count), naive(&a, 0.56));
            let s = CfSplitting::from_f_indices(a.n_rows(), &r.best_f).unwrap();
            assert!(is_feasible(&a, &s, 0.56));
        }
    }

    #[test]
    fn refuses_large_inputs() {
        assert!(matches!(
            brute_force_optimal_f(&lap1d(25), 0.56),
            Err(Error::TooLarge { n: 25, .. })
        ));
    }
}
