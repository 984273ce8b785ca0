use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::sparse::{f_row_sum, CsrMatrix};
use crate::splitting::{CfSplitting, Label};

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.5 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("theta must lie in (1/2, 1], got {theta}")));
    }
    Ok(())
}

/// Greedy coarsening: admit every row that is already dominant over `F ∪ U`,
/// then repeatedly move the least dominant undecided row to C and re-admit.
///
/// Ties in the argmin go to the lowest index. Dominance estimates are
/// refreshed for every undecided row whose sum contains the new C-point.
pub fn greedy_coarsen(a: &CsrMatrix, theta: f64) -> Result<CfSplitting> {
    check_theta(theta)?;
    let n = a.n_rows();
    let diag: Vec<f64> = a.diagonal().iter().map(|d| d.abs()).collect();
    if let Some(i) = diag.iter().position(|&d| d == 0.0) {
        return Err(Error::ZeroDiagonal(i));
    }
    // Rows whose sum contains column j.
    let at = a.transpose();
    let mut labels = vec![Label::U; n];
    let mut not_c = vec![true; n];
    let mut that = vec![0.0; n];
    let mut heap = BinaryHeap::new();
    for i in 0..n {
        that[i] = diag[i] / f_row_sum(a, &not_c, i);
        if diag[i] >= theta * f_row_sum(a, &not_c, i) {
            labels[i] = Label::F;
        } else {
            heap.push(Reverse((OrderedFloat(that[i]), i)));
        }
    }
    while let Some(Reverse((OrderedFloat(t), j))) = heap.pop() {
        if labels[j] != Label::U || t != that[j] {
            continue;
        }
        labels[j] = Label::C;
        not_c[j] = false;
        for &i in at.row_cols(j) {
            if labels[i] != Label::U {
                continue;
            }
            let s = f_row_sum(a, &not_c, i);
            that[i] = diag[i] / s;
            if diag[i] >= theta * s {
                labels[i] = Label::F;
            } else {
                heap.push(Reverse((OrderedFloat(that[i]), i)));
            }
        }
    }
    Ok(CfSplitting::from_labels(labels))
}

/// Rows whose full-row dominance already meets `theta`; they can join any
/// feasible F-set without breaking it.
pub fn prepin_safe_f(a: &CsrMatrix, theta: f64) -> Vec<usize> {
    let all = vec![true; a.n_cols()];
    (0..a.n_rows())
        .filter(|&i| {
            let d = a.get(i, i).abs();
            d != 0.0 && d >= theta * f_row_sum(a, &all, i)
        })
        .collect()
}
