//! Hand-designed splittings for the structured Laplacians: X-pentomino
//! centers for the five-point stencil and two-per-brick C-points on 3×3
//! bricks for the nine-point stencil, each followed by local clean-up near
//! the boundary.

use super::greedy::prepin_safe_f;
use crate::problems::{fd_laplacian_5pt, fe_bilinear_9pt};
use crate::sparse::{row_satisfies, CsrMatrix};
use crate::splitting::CfSplitting;

/// Threshold the constructions are certified against; any θ in (1/2, 4/7] works.
const THETA: f64 = 0.56;

struct Work<'a> {
    a: &'a CsrMatrix,
    n: usize,
    in_f: Vec<bool>,
}

impl<'a> Work<'a> {
    fn new(a: &'a CsrMatrix, c: &[bool]) -> Self {
        Work { a, n: (a.n_rows() as f64).sqrt() as usize, in_f: c.iter().map(|&x| !x).collect() }
    }

    fn row_ok(&self, i: usize) -> bool {
        !self.in_f[i] || row_satisfies(self.a, &self.in_f, i, THETA)
    }

    fn all_ok(&self, rows: impl IntoIterator<Item = usize>) -> bool {
        rows.into_iter().all(|i| self.row_ok(i))
    }

    fn closed_nbhd(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.a.row_cols(i).iter().copied()
    }

    /// Promotes neighbours of infeasible F-rows until every row passes. The
    /// promoted neighbour is the one adjacent to the most infeasible rows.
    fn repair(&mut self) {
        loop {
            let bad: Vec<usize> = (0..self.a.n_rows()).filter(|&i| !self.row_ok(i)).collect();
            let Some(&i) = bad.first() else { return };
            let mut is_bad = vec![false; self.a.n_rows()];
            for &b in &bad {
                is_bad[b] = true;
            }
            let best = self
                .closed_nbhd(i)
                .filter(|&j| j != i && self.in_f[j])
                .max_by_key(|&j| (self.closed_nbhd(j).filter(|&k| is_bad[k]).count(), std::cmp::Reverse(j)))
                .unwrap_or(i);
            self.in_f[best] = false;
        }
    }

    /// Turns C-points back into F wherever that keeps every affected row feasible.
    fn prune(&mut self) {
        for p in 0..self.a.n_rows() {
            if self.in_f[p] {
                continue;
            }
            self.in_f[p] = true;
            let rows: Vec<usize> = self.closed_nbhd(p).collect();
            if !self.all_ok(rows) {
                self.in_f[p] = false;
            }
        }
    }

    /// Exhaustively re-places the C-points inside a `w × w` window at each
    /// grid corner, keeping the rest fixed, if fewer C-points suffice.
    fn corner_windows(&mut self, w: usize) {
        let n = self.n;
        if n < w {
            return;
        }
        for (cx, cy) in [(0, 0), (n - w, 0), (0, n - w), (n - w, n - w)] {
            let win: Vec<usize> = (cy..cy + w).flat_map(|y| (cx..cx + w).map(move |x| y * n + x)).collect();
            let mut check: Vec<usize> = win.iter().flat_map(|&p| self.a.row_cols(p).iter().copied()).collect();
            check.sort_unstable();
            check.dedup();
            let cur = win.iter().filter(|&&p| !self.in_f[p]).count();
            let saved: Vec<bool> = win.iter().map(|&p| self.in_f[p]).collect();
            let mut found = false;
            for k in 0..cur {
                if self.search(&win, &check, 0, k) {
                    found = true;
                    break;
                }
            }
            if !found {
                for (&p, &f) in win.iter().zip(&saved) {
                    self.in_f[p] = f;
                }
            }
        }
    }

    /// Tries every way of choosing `k` C-points among `win[from..]`.
    fn search(&mut self, win: &[usize], check: &[usize], from: usize, k: usize) -> bool {
        if from == 0 {
            for &p in win {
                self.in_f[p] = true;
            }
        }
        if k == 0 {
            return self.all_ok(check.iter().copied());
        }
        for t in from..=win.len() - k {
            self.in_f[win[t]] = false;
            if self.search(win, check, t + 1, k - 1) {
                return true;
            }
            self.in_f[win[t]] = true;
        }
        false
    }

    fn n_c(&self) -> usize {
        self.in_f.iter().filter(|&&f| !f).count()
    }
}

fn best_of(candidates: Vec<Vec<bool>>) -> CfSplitting {
    let best = candidates.into_iter().min_by_key(|m| m.iter().filter(|&&f| !f).count()).expect("nonempty");
    CfSplitting::from_f_mask(&best)
}

/// X-pentomino splitting of the `N × N` five-point grid.
///
/// C-points sit on one of the ten lattices `x + 2y ≡ s` or `2x + y ≡ s (mod 5)`;
/// redundant C-points are dropped and the corners re-optimized exhaustively.
/// The lattice with the fewest C-points wins (first one on ties).
pub fn by_hand_fd(n: usize) -> CfSplitting {
    let a = fd_laplacian_5pt(n.max(1)).expect("n >= 1");
    let mut out = Vec::new();
    for form in 0..2 {
        for s in 0..5 {
            let c: Vec<bool> = (0..n * n)
                .map(|k| {
                    let (x, y) = (k % n, k / n);
                    let v = if form == 0 { x + 2 * y } else { 2 * x + y };
                    v % 5 == s
                })
                .collect();
            let mut w = Work::new(&a, &c);
            w.prune();
            w.repair();
            w.corner_windows(5);
            out.push(w.in_f);
        }
    }
    best_of(out)
}

/// 3×3-brick splitting of the `N × N` nine-point grid.
///
/// The points off the safe boundary ring are tiled by 3×3 bricks with two
/// C-points in the middle row or column of each brick, for each of the nine
/// brick offsets and both orientations. Rows left infeasible where bricks are
/// cut by the boundary get extra C-points, redundant ones are dropped, and the
/// variant with the fewest C-points is returned.
pub fn by_hand_fe(n: usize) -> CfSplitting {
    let a = fe_bilinear_9pt(n.max(1)).expect("n >= 1");
    let mut safe = vec![false; n * n];
    for i in prepin_safe_f(&a, THETA) {
        safe[i] = true;
    }
    let mut out = Vec::new();
    for vertical in [false, true] {
        for ox in 0..3 {
            for oy in 0..3 {
                let c: Vec<bool> = (0..n * n)
                    .map(|k| {
                        if safe[k] {
                            return false;
                        }
                        let (x, y) = ((k % n + 3 - ox) % 3, (k / n + 3 - oy) % 3);
                        if vertical {
                            x == 1 && y != 1
                        } else {
                            y == 1 && x != 1
                        }
                    })
                    .collect();
                let mut w = Work::new(&a, &c);
                w.repair();
                w.prune();
                if w.n_c() > 0 {
                    w.corner_windows(4);
                }
                out.push(w.in_f);
            }
        }
    }
    best_of(out)
}
