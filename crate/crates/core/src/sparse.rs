//! Compressed sparse row matrices and the handful of kernels the rest of the
//! crate needs: products, transposes, block extraction and the dominance
//! factor that defines the coarsening constraint.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::splitting::CfSplitting;

/// Square or rectangular sparse matrix in CSR layout.
///
/// Column indices are strictly increasing within each row and explicit zeros
/// are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Validates raw CSR arrays. Stored zeros are dropped.
    pub fn try_from_parts(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 || row_offsets[0] != 0 {
            return Err(Error::Dimension(format!(
                "row_offsets has length {} for {} rows",
                row_offsets.len(),
                n_rows
            )));
        }
        if col_indices.len() != values.len() || *row_offsets.last().unwrap() != values.len() {
            return Err(Error::Dimension("column/value arrays disagree with offsets".into()));
        }
        for i in 0..n_rows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return Err(Error::InvalidArgument(format!("row_offsets decrease at row {i}")));
            }
            for p in lo..hi {
                if col_indices[p] >= n_cols {
                    return Err(Error::Dimension(format!(
                        "column {} out of range in row {i}",
                        col_indices[p]
                    )));
                }
                if p > lo && col_indices[p] <= col_indices[p - 1] {
                    return Err(Error::InvalidArgument(format!(
                        "columns not strictly increasing in row {i}"
                    )));
                }
            }
        }
        let mut m = CsrMatrix { n_rows, n_cols, row_offsets, col_indices, values };
        m.drop_zeros();
        Ok(m)
    }

    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; n_rows + 1];
        for &(i, j, _) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::Dimension(format!(
                    "entry ({i}, {j}) outside {n_rows}x{n_cols}"
                )));
            }
            counts[i + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..n_rows {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|p| (cols[p], vals[p])));
            // Stable sort keeps the accumulation order of duplicates deterministic.
            scratch.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < scratch.len() {
                let c = scratch[k].0;
                let mut s = 0.0;
                while k < scratch.len() && scratch[k].0 == c {
                    s += scratch[k].1;
                    k += 1;
                }
                if s != 0.0 {
                    col_indices.push(c);
                    values.push(s);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix { n_rows, n_cols, row_offsets, col_indices, values })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CsrMatrix {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_dense(d: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                if d[(i, j)] != 0.0 {
                    t.push((i, j, d[(i, j)]));
                }
            }
        }
        Self::from_triplets(d.nrows(), d.ncols(), &t).expect("indices in range")
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut w = 0;
        let mut new_offsets = Vec::with_capacity(self.n_rows + 1);
        new_offsets.push(0);
        for i in 0..self.n_rows {
            for p in self.row_offsets[i]..self.row_offsets[i + 1] {
                if self.values[p] != 0.0 {
                    self.col_indices[w] = self.col_indices[p];
                    self.values[w] = self.values[p];
                    w += 1;
                }
            }
            new_offsets.push(w);
        }
        self.col_indices.truncate(w);
        self.values.truncate(w);
        self.row_offsets = new_offsets;
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices of row `i`.
    pub fn row_cols(&self, i: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    /// Values of row `i`, aligned with [`row_cols`](Self::row_cols).
    pub fn row_vals(&self, i: usize) -> &[f64] {
        &self.values[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row_cols(i).iter().copied().zip(self.row_vals(i).iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.row_cols(i).binary_search(&j) {
            Ok(p) => self.row_vals(i)[p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::Dimension(format!(
                "spmv: matrix has {} columns, vector has {} entries",
                self.n_cols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without allocation. Panics on dimension mismatch.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_offsets[i]..self.row_offsets[i + 1] {
                s += self.values[p] * x[self.col_indices[p]];
            }
            *yi = s;
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                cols[next[j]] = i;
                vals[next[j]] = v;
                next[j] += 1;
            }
        }
        CsrMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices: cols,
            values: vals,
        }
    }

    /// Sparse product `self * other` (row-by-row accumulation).
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::Dimension(format!(
                "matmul: {}x{} times {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut acc = vec![0.0; other.n_cols];
        let mut seen = vec![usize::MAX; other.n_cols];
        let mut pattern: Vec<usize> = Vec::new();
        let mut row_offsets = vec![0usize];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n_rows {
            pattern.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if seen[j] != i {
                        seen[j] = i;
                        acc[j] = 0.0;
                        pattern.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            pattern.sort_unstable();
            for &j in &pattern {
                if acc[j] != 0.0 {
                    col_indices.push(j);
                    values.push(acc[j]);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            n_rows: self.n_rows,
            n_cols: other.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Submatrix with the given (sorted or unsorted) row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n_cols];
        for (k, &c) in cols.iter().enumerate() {
            map[c] = k;
        }
        let mut t = Vec::new();
        for (r, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                if map[j] != usize::MAX {
                    t.push((r, map[j], v));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), &t).expect("indices in range")
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn asymmetry(&self) -> f64 {
        if self.n_rows != self.n_cols {
            return f64::INFINITY;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.asymmetry() <= rel_tol
    }

    /// Structural neighbours of every row in the pattern of `A + Aᵀ`,
    /// excluding the diagonal.
    pub fn symmetric_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.n_rows];
        for i in 0..self.n_rows {
            for &j in self.row_cols(i) {
                if j != i {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}

/// The four blocks of a matrix under an F/C splitting, F rows/columns first.
#[derive(Clone, Debug)]
pub struct Blocks {
    pub ff: CsrMatrix,
    pub fc: CsrMatrix,
    pub cf: CsrMatrix,
    pub cc: CsrMatrix,
}

/// Extracts `A_FF`, `A_FC`, `A_CF`, `A_CC` carrying the stored (signed) entries.
pub fn extract_blocks(a: &CsrMatrix, s: &CfSplitting) -> Result<Blocks> {
    if a.n_rows() != s.len() || a.n_cols() != s.len() {
        return Err(Error::Dimension(format!(
            "matrix is {}x{}, splitting has {} labels",
            a.n_rows(),
            a.n_cols(),
            s.len()
        )));
    }
    s.ensure_finalized()?;
    let f = s.f_indices();
    let c = s.c_indices();
    Ok(Blocks {
        ff: a.submatrix(&f, &f),
        fc: a.submatrix(&f, &c),
        cf: a.submatrix(&c, &f),
        cc: a.submatrix(&c, &c),
    })
}

/// Inverse of [`extract_blocks`]: scatters the blocks back to original ordering.
pub fn assemble_blocks(b: &Blocks, s: &CfSplitting) -> Result<CsrMatrix> {
    s.ensure_finalized()?;
    let f = s.f_indices();
    let c = s.c_indices();
    let mut t = Vec::new();
    let mut put = |m: &CsrMatrix, rows: &[usize], cols: &[usize]| {
        for (r, &i) in rows.iter().enumerate() {
            for (k, v) in m.row(r) {
                t.push((i, cols[k], v));
            }
        }
    };
    put(&b.ff, &f, &f);
    put(&b.fc, &f, &c);
    put(&b.cf, &c, &f);
    put(&b.cc, &c, &c);
    CsrMatrix::from_triplets(s.len(), s.len(), &t)
}

/// Sum of `|a_ij|` over `j` with `in_f[j]`, always counting the diagonal.
///
/// Row `i` is treated as an F-point whether or not `in_f[i]` is set, so the
/// same routine serves membership checks and candidate evaluation. Summation
/// runs in column order, which makes the result reproducible bit for bit.
pub fn f_row_sum(a: &CsrMatrix, in_f: &[bool], i: usize) -> f64 {
    let mut s = 0.0;
    for (j, v) in a.row(i) {
        if j == i || in_f[j] {
            s += v.abs();
        }
    }
    s
}

/// `|a_ii| / Σ_{j∈F} |a_ij|`, with row `i` counted as part of F.
pub fn dominance_factor(a: &CsrMatrix, s: &CfSplitting, i: usize) -> Result<f64> {
    let d = a.get(i, i).abs();
    if d == 0.0 {
        return Err(Error::ZeroDiagonal(i));
    }
    let in_f = s.f_mask();
    let den = f_row_sum(a, &in_f, i);
    Ok(if den == 0.0 { f64::INFINITY } else { d / den })
}

/// The exact constraint test `|a_ii| >= theta * Σ_{j∈F}|a_ij|`.
pub fn row_satisfies(a: &CsrMatrix, in_f: &[bool], i: usize, theta: f64) -> bool {
    let d = a.get(i, i).abs();
    d != 0.0 && d >= theta * f_row_sum(a, in_f, i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::Label;

    fn lap1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn spmv_identity_and_laplacian() {
        let i3 = CsrMatrix::identity(3);
        assert_eq!(i3.spmv(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(lap1d(3).spmv(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn spmv_empty_row_and_mismatch() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (2, 1, 5.0)]).unwrap();
        let y = a.spmv(&[3.0, 4.0, 5.0]).unwrap();
        assert_eq!(y[1], 0.0);
        assert!(a.spmv(&[1.0]).is_err());
    }

    #[test]
    fn transpose_single_entry() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 2, 5.0)]).unwrap();
        let t = a.transpose();
        assert_eq!((t.n_rows(), t.n_cols()), (3, 2));
        assert_eq!(t.get(2, 0), 5.0);
        assert_eq!(t.nnz(), 1);
        let l = lap1d(4);
        assert_eq!(l.transpose(), l);
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 1.0), (1, 0, -1.0)])
            .unwrap();
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.nnz(), 1);
    }

    #[test]
    fn try_from_parts_rejects_bad_layout() {
        assert!(CsrMatrix::try_from_parts(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
        assert!(CsrMatrix::try_from_parts(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::try_from_parts(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        let m = CsrMatrix::try_from_parts(1, 2, vec![0, 2], vec![0, 1], vec![0.0, 1.0]).unwrap();
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn blocks_of_1d_laplacian() {
        let a = lap1d(3);
        let s = CfSplitting::from_labels(vec![Label::F, Label::C, Label::F]);
        let b = extract_blocks(&a, &s).unwrap();
        assert_eq!(b.ff.to_dense(), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));
        assert_eq!(b.fc.to_dense(), DMatrix::from_row_slice(2, 1, &[-1.0, -1.0]));
        assert_eq!(assemble_blocks(&b, &s).unwrap(), a);
    }

    #[test]
    fn blocks_degenerate_all_f() {
        let a = lap1d(4);
        let s = CfSplitting::all(4, Label::F);
        let b = extract_blocks(&a, &s).unwrap();
        assert_eq!(b.ff, a);
        assert_eq!(b.fc.nnz() + b.cf.nnz() + b.cc.nnz(), 0);
        let u = CfSplitting::all(4, Label::U);
        assert!(matches!(extract_blocks(&a, &u), Err(Error::Unfinalized(0))));
    }

    #[test]
    fn dominance_examples() {
        let a = lap1d(5);
        let all_f = CfSplitting::all(5, Label::F);
        assert_eq!(dominance_factor(&a, &all_f, 2).unwrap(), 0.5);
        let one = CfSplitting::from_labels(vec![Label::F, Label::C, Label::F, Label::F, Label::F]);
        assert!((dominance_factor(&a, &one, 2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let i = CsrMatrix::identity(3);
        assert_eq!(dominance_factor(&i, &CfSplitting::all(3, Label::F), 1).unwrap(), 1.0);
        let z = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(
            dominance_factor(&z, &CfSplitting::all(2, Label::F), 0),
            Err(Error::ZeroDiagonal(0))
        ));
    }

    #[test]
    fn matmul_matches_dense() {
        let a = lap1d(5);
        let p = CsrMatrix::from_triplets(5, 2, &[(0, 0, 1.0), (1, 0, 0.5), (3, 1, 2.0), (4, 1, -1.0)])
            .unwrap();
        let got = a.matmul(&p).unwrap().to_dense();
        assert_eq!(got, a.to_dense() * p.to_dense());
        assert!(p.matmul(&a).is_err());
    }
}
