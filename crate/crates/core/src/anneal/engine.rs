use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{temperature_schedule, AnnealConfig, Exchange};
use super::moves::pick;
use crate::error::{Error, Result};
use crate::partition::SubdomainDecomposition;
use crate::sparse::{row_satisfies, CsrMatrix};
use crate::splitting::{check_feasible, CfSplitting};

/// A subdomain together with the labels assumed on its halo.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HaloView {
    pub interior: Vec<usize>,
    pub halo: Vec<usize>,
    pub halo_f: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub global_step: u64,
    pub temperature: f64,
    pub best_f_size: usize,
    pub sweep: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[0].best_f_size <= w[1].best_f_size)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("global_step,temperature,best_f_size,sweep\n");
        for r in &self.records {
            s.push_str(&format!("{},{:.9e},{},{}\n", r.global_step, r.temperature, r.best_f_size, r.sweep));
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SaStats {
    pub steps: u64,
    pub guard_skips: u64,
    pub accepted_uphill: u64,
    pub accepted_downhill: u64,
    pub rejected: u64,
    pub splices: u64,
    /// Locally feasible states whose splice would have broken the global best.
    pub splice_refusals: u64,
}

#[derive(Clone, Debug)]
pub struct SaOutcome {
    pub splitting: CfSplitting,
    pub trace: Trace,
    pub stats: SaStats,
}

/// Number of rows of `rows` that are in F and satisfy the constraint, with
/// sums taken over the global label vector `in_f`.
pub fn fitness(a: &CsrMatrix, in_f: &[bool], rows: &[usize], theta: f64) -> usize {
    rows.iter().filter(|&&i| in_f[i] && row_satisfies(a, in_f, i, theta)).count()
}

/// Annealing state over the whole index set.
///
/// `in_f` holds the tentative labels every subdomain sees: points of
/// subdomains that were never visited and prepinned points read as F.
/// `off_f[i]` caches `Σ_{j∈F, j≠i} |a_ij|` and is updated incrementally; the
/// global best set is kept separately and only changed after an exact check.
pub struct SaEngine<'a> {
    a: &'a CsrMatrix,
    at: CsrMatrix,
    diag: Vec<f64>,
    decomp: &'a SubdomainDecomposition,
    cfg: AnnealConfig,
    halos: Vec<Vec<usize>>,
    owner: Vec<Option<usize>>,
    in_f: Vec<bool>,
    off_f: Vec<f64>,
    ok: Vec<bool>,
    visited: Vec<bool>,
    f_list: Vec<Vec<usize>>,
    c_list: Vec<Vec<usize>>,
    pos: Vec<usize>,
    best: Vec<bool>,
    best_size: usize,
    nbar: Vec<usize>,
    snapshot: Vec<bool>,
    ring: Vec<Vec<usize>>,
    t: f64,
    alpha: f64,
    step: u64,
    sweep: u64,
    rng: ChaCha8Rng,
    trace: Trace,
    stats: SaStats,
}

impl<'a> SaEngine<'a> {
    pub fn new(a: &'a CsrMatrix, decomp: &'a SubdomainDecomposition, cfg: &AnnealConfig) -> Result<Self> {
        cfg.validate()?;
        let n = a.n_rows();
        if a.n_cols() != n || decomp.n != n {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, decomposition covers {}",
                n,
                a.n_cols(),
                decomp.n
            )));
        }
        decomp.validate()?;
        let diag: Vec<f64> = a.diagonal().iter().map(|d| d.abs()).collect();
        if let Some(i) = diag.iter().position(|&d| d == 0.0) {
            return Err(Error::ZeroDiagonal(i));
        }
        let mut best = vec![false; n];
        for &i in &decomp.prepinned_f {
            best[i] = true;
        }
        check_feasible(a, &CfSplitting::from_f_mask(&best), cfg.theta)?;

        let adj = a.symmetric_adjacency();
        let owner = decomp.owner();
        let mut mark = vec![usize::MAX; n];
        let mut halos = Vec::with_capacity(decomp.subdomains.len());
        let mut ring = Vec::with_capacity(decomp.subdomains.len());
        for (k, dom) in decomp.subdomains.iter().enumerate() {
            let mut halo = Vec::new();
            for &i in dom {
                for &j in &adj[i] {
                    if owner[j] != Some(k) && mark[j] != k {
                        mark[j] = k;
                        halo.push(j);
                    }
                }
            }
            halo.sort_unstable();
            // Points whose labels enter the sums of halo rows.
            let mut r = halo.clone();
            if cfg.exchange == Exchange::Additive {
                for &h in &halo {
                    for &j in &adj[h] {
                        if owner[j] != Some(k) && mark[j] != k {
                            mark[j] = k;
                            r.push(j);
                        }
                    }
                }
                r.sort_unstable();
            }
            halos.push(halo);
            ring.push(r);
        }

        let in_f = vec![true; n];
        let mut off_f = vec![0.0; n];
        let mut ok = vec![false; n];
        for i in 0..n {
            off_f[i] = exact_off_sum(a, &in_f, i);
            ok[i] = diag[i] >= cfg.theta * (diag[i] + off_f[i]);
        }
        let n_ts: u64 = cfg.sweeps() * cfg.steps_per_dof_per_sweep * decomp.subdomains.iter().map(|d| d.len() as u64).sum::<u64>();
        let alpha = if n_ts == 0 { 1.0 } else { temperature_schedule(cfg.t_final_fraction, n_ts)? };
        let best_size = decomp.prepinned_f.len();
        let s = decomp.subdomains.len();
        let mut engine = SaEngine {
            a,
            at: a.transpose(),
            diag,
            decomp,
            cfg: cfg.clone(),
            halos,
            owner,
            snapshot: in_f.clone(),
            in_f,
            off_f,
            ok,
            visited: vec![false; s],
            f_list: vec![Vec::new(); s],
            c_list: vec![Vec::new(); s],
            pos: vec![0; n],
            best,
            best_size,
            nbar: vec![0; s],
            ring,
            t: cfg.t_initial,
            alpha,
            step: 0,
            sweep: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            trace: Trace::default(),
            stats: SaStats::default(),
        };
        engine.record();
        Ok(engine)
    }

    pub fn temperature(&self) -> f64 {
        self.t
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn best_size(&self) -> usize {
        self.best_size
    }

    pub fn stats(&self) -> &SaStats {
        &self.stats
    }

    /// Tentative labels as currently seen by the next subdomain visit.
    pub fn tentative(&self) -> &[bool] {
        &self.in_f
    }

    pub fn halo_assumptions(&self, k: usize) -> HaloView {
        let halo = self.halos[k].clone();
        let halo_f = halo
            .iter()
            .map(|&j| match self.owner[j] {
                None => true,
                Some(l) if !self.visited[l] => true,
                Some(_) => self.in_f[j],
            })
            .collect();
        HaloView { interior: self.decomp.subdomains[k].clone(), halo, halo_f }
    }

    /// Largest deviation of the cached sums from a fresh computation.
    pub fn verify_cache(&self) -> f64 {
        (0..self.a.n_rows())
            .map(|i| (self.off_f[i] - exact_off_sum(self.a, &self.in_f, i)).abs())
            .fold(0.0, f64::max)
    }

    fn record(&mut self) {
        self.trace.records.push(TraceRecord {
            global_step: self.step,
            temperature: self.t,
            best_f_size: self.best_size,
            sweep: self.sweep,
        });
    }

    fn eval(&self, i: usize) -> bool {
        self.in_f[i] && self.diag[i] >= self.cfg.theta * (self.diag[i] + self.off_f[i])
    }

    /// Flips point `p` and returns the resulting change in `Σ ok` over the
    /// rows that see `p`.
    fn toggle(&mut self, p: usize) -> isize {
        let now_f = !self.in_f[p];
        self.in_f[p] = now_f;
        let mut delta = 0isize;
        let (start, end) = (self.at.row_offsets()[p], self.at.row_offsets()[p + 1]);
        for idx in start..end {
            let i = self.at.col_indices()[idx];
            if i != p {
                let v = self.at.values()[idx].abs();
                if now_f {
                    self.off_f[i] += v;
                } else {
                    self.off_f[i] -= v;
                }
            }
            let new_ok = self.eval(i);
            delta += new_ok as isize - self.ok[i] as isize;
            self.ok[i] = new_ok;
        }
        let new_ok = self.eval(p);
        delta += new_ok as isize - self.ok[p] as isize;
        self.ok[p] = new_ok;
        delta
    }

    /// Moves `p` between the local F and C lists of subdomain `k`.
    fn relist(&mut self, k: usize, p: usize) {
        let (from, to) = if self.in_f[p] {
            (&mut self.c_list[k], &mut self.f_list[k])
        } else {
            (&mut self.f_list[k], &mut self.c_list[k])
        };
        let at = self.pos[p];
        from.swap_remove(at);
        if at < from.len() {
            self.pos[from[at]] = at;
        }
        self.pos[p] = to.len();
        to.push(p);
    }

    fn flip(&mut self, k: usize, p: usize) -> isize {
        let d = self.toggle(p);
        self.relist(k, p);
        d
    }

    fn resync(&mut self, rows: &[usize]) {
        for &i in rows {
            self.off_f[i] = exact_off_sum(self.a, &self.in_f, i);
            self.ok[i] = self.eval(i);
        }
    }

    fn decay(&mut self) {
        self.t *= self.alpha;
        self.step += 1;
        self.stats.steps += 1;
    }

    /// Splices the local labels of `Ω_k` into the global best set if the
    /// result stays feasible and does not shrink.
    fn try_splice(&mut self, k: usize) -> bool {
        let decomp = self.decomp;
        let dom = &decomp.subdomains[k];
        let old = dom.iter().filter(|&&i| self.best[i]).count();
        let new = self.f_list[k].len();
        if new < old {
            self.stats.splice_refusals += 1;
            return false;
        }
        let saved: Vec<bool> = dom.iter().map(|&i| self.best[i]).collect();
        for &i in dom {
            self.best[i] = self.in_f[i];
        }
        let feasible = dom
            .iter()
            .chain(self.halos[k].iter())
            .all(|&i| !self.best[i] || row_satisfies(self.a, &self.best, i, self.cfg.theta));
        if !feasible {
            for (&i, &b) in dom.iter().zip(&saved) {
                self.best[i] = b;
            }
            self.stats.splice_refusals += 1;
            return false;
        }
        self.best_size = self.best_size - old + new;
        self.stats.splices += 1;
        if new > old {
            self.record();
        }
        true
    }

    /// Runs `n_steps` annealing steps on subdomain `k`.
    pub fn anneal_subdomain(&mut self, k: usize, n_steps: u64) {
        let decomp = self.decomp;
        let dom = &decomp.subdomains[k];
        if dom.is_empty() {
            return;
        }
        let halo = self.halos[k].clone();
        let ring = self.ring[k].clone();
        let mut restore = Vec::new();
        if self.cfg.exchange == Exchange::Additive {
            for &q in &ring {
                if self.in_f[q] != self.snapshot[q] {
                    restore.push(q);
                    self.toggle(q);
                }
            }
        }
        if !self.visited[k] {
            self.visited[k] = true;
            for &p in dom {
                if self.in_f[p] {
                    self.toggle(p);
                }
                self.pos[p] = self.c_list[k].len();
                self.c_list[k].push(p);
            }
        }
        let closure: Vec<usize> = dom.iter().chain(halo.iter()).copied().collect();
        self.resync(&closure);
        let mut z: isize = closure.iter().filter(|&&i| self.ok[i]).count() as isize;

        let (x, y) = (self.cfg.x, self.cfg.y);
        let mut moved: Vec<usize> = Vec::with_capacity(2 * (x + y));
        for _ in 0..n_steps {
            let (nf, nc) = (self.f_list[k].len(), self.c_list[k].len());
            let r = self.rng.gen_range(0..3u8);
            let (to_f, to_c) = match r {
                0 => (x + y, y),
                1 => (x, x),
                _ => (y, x + y),
            };
            let legal = match r {
                0 => nc >= x + y && nf >= y,
                1 => nf.min(nc) > x,
                _ => nf >= x + y && nc >= y,
            };
            if !legal {
                self.stats.guard_skips += 1;
                self.decay();
                continue;
            }
            moved.clear();
            let leave_f = pick(&mut self.rng, nf, to_c);
            let leave_c = pick(&mut self.rng, nc, to_f);
            moved.extend(leave_f.iter().map(|&q| self.f_list[k][q]));
            moved.extend(leave_c.iter().map(|&q| self.c_list[k][q]));
            let mut z_new = z;
            for &p in &moved {
                z_new += self.flip(k, p);
            }
            if z_new >= z {
                self.stats.accepted_uphill += 1;
                z = z_new;
                let fbar = self.f_list[k].len() + halo.iter().filter(|&&h| self.in_f[h]).count();
                if z as usize == fbar && z as usize >= self.nbar[k] && self.try_splice(k) {
                    self.nbar[k] = z as usize;
                }
            } else {
                let u: f64 = self.rng.gen();
                if u < (-((z - z_new) as f64) / self.t).exp() {
                    self.stats.accepted_downhill += 1;
                    z = z_new;
                } else {
                    self.stats.rejected += 1;
                    for &p in moved.iter().rev() {
                        self.flip(k, p);
                    }
                }
            }
            self.decay();
        }
        for q in restore {
            self.toggle(q);
        }
    }

    /// One pass over all subdomains in sweep order.
    pub fn run_sweep(&mut self) {
        if self.cfg.exchange == Exchange::Additive {
            self.snapshot.clone_from(&self.in_f);
        }
        for k in self.decomp.sweep_order() {
            let steps = self.cfg.steps_per_dof_per_sweep * self.decomp.subdomains[k].len() as u64;
            self.anneal_subdomain(k, steps);
        }
        self.sweep += 1;
        self.record();
    }

    pub fn best_splitting(&self) -> CfSplitting {
        CfSplitting::from_f_mask(&self.best)
    }

    pub fn finish(self) -> Result<SaOutcome> {
        let splitting = self.best_splitting();
        check_feasible(self.a, &splitting, self.cfg.theta)?;
        Ok(SaOutcome { splitting, trace: self.trace, stats: self.stats })
    }
}

fn exact_off_sum(a: &CsrMatrix, in_f: &[bool], i: usize) -> f64 {
    let mut s = 0.0;
    for (j, v) in a.row(i) {
        if j != i && in_f[j] {
            s += v.abs();
        }
    }
    s
}

/// Simulated-annealing coarsening over the subdomains of `decomp`.
pub fn sa_coarsen(a: &CsrMatrix, decomp: &SubdomainDecomposition, cfg: &AnnealConfig) -> Result<SaOutcome> {
    let mut engine = SaEngine::new(a, decomp, cfg)?;
    for _ in 0..cfg.sweeps() {
        engine.run_sweep();
    }
    engine.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{brute_force_optimal_f, by_hand_fd, geometric_blocks, global_subdomain};
    use crate::problems::fd_laplacian_5pt;
    use crate::splitting::is_feasible;

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
    fn fitness_examples() {
        let a = lap1d(5);
        let all: Vec<usize> = (0..5).collect();
        assert_eq!(fitness(&a, &[false; 5], &all, 0.56), 0);
        assert_eq!(fitness(&a, &[true, false, true, false, true], &all, 0.56), 3);
        assert_eq!(fitness(&a, &[true; 5], &all, 0.56), 2);
    }

    #[test]
    fn first_visit_sees_f_halo() {
        let a = fd_laplacian_5pt(8).unwrap();
        let d = geometric_blocks(8, (2, 2), &a, 0.56).unwrap();
        let cfg = AnnealConfig::new(0.56, 10, 1, 3);
        let mut e = SaEngine::new(&a, &d, &cfg).unwrap();
        let k = d.sweep_order()[0];
        let v = e.halo_assumptions(k);
        assert!(!v.halo.is_empty() && v.halo_f.iter().all(|&f| f));
        e.run_sweep();
        let v = e.halo_assumptions(k);
        for (&h, &f) in v.halo.iter().zip(&v.halo_f) {
            assert_eq!(f, e.tentative()[h]);
        }
    }

    #[test]
    fn zero_budget_returns_prepinned() {
        let a = fd_laplacian_5pt(6).unwrap();
        let d = global_subdomain(&a, Some(0.56));
        let out = sa_coarsen(&a, &d, &AnnealConfig::new(0.56, 0, 0, 1)).unwrap();
        assert_eq!(out.splitting.f_indices(), d.prepinned_f);
        assert_eq!(out.stats.steps, 0);
    }

    #[test]
    fn budget_and_cache_accounting() {
        let a = fd_laplacian_5pt(10).unwrap();
        let d = geometric_blocks(10, (3, 3), &a, 0.56).unwrap();
        let cfg = AnnealConfig::new(0.56, 40, 8, 11);
        let mut e = SaEngine::new(&a, &d, &cfg).unwrap();
        for _ in 0..cfg.sweeps() {
            e.run_sweep();
            assert!(e.verify_cache() < 1e-12);
        }
        let dofs: u64 = d.subdomains.iter().map(|s| s.len() as u64).sum();
        assert_eq!(e.stats().steps, 40 * dofs);
        let expected_t = 0.1;
        assert!((e.temperature() - expected_t).abs() < 1e-9, "{}", e.temperature());
        let out = e.finish().unwrap();
        assert!(out.trace.is_monotone());
        assert!(is_feasible(&a, &out.splitting, 0.56));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = fd_laplacian_5pt(8).unwrap();
        let d = geometric_blocks(8, (3, 3), &a, 0.56).unwrap();
        let cfg = AnnealConfig::new(0.56, 50, 5, 42);
        let r1 = sa_coarsen(&a, &d, &cfg).unwrap();
        let r2 = sa_coarsen(&a, &d, &cfg).unwrap();
        assert_eq!(r1.splitting, r2.splitting);
        assert_eq!(r1.trace, r2.trace);
    }

    #[test]
    fn single_point_chain_toggles() {
        // One free point with a dominant row: the optimum is F.
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 4.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 4.0)]).unwrap();
        let d = SubdomainDecomposition { n: 2, subdomains: vec![vec![0]], colors: vec![vec![0]], prepinned_f: vec![1] };
        let mut e = SaEngine::new(&a, &d, &AnnealConfig::new(0.56, 20, 20, 9)).unwrap();
        e.run_sweep();
        assert_eq!(e.stats().steps, 20);
        // Every non-skipped step toggles the point; skipped steps are those
        // whose move needs two points.
        assert!(e.stats().guard_skips >= 1);
        assert_eq!(e.best_size(), 2);
    }

    #[test]
    fn reaches_small_optima() {
        let a = fd_laplacian_5pt(3).unwrap();
        let opt = brute_force_optimal_f(&a, 0.56).unwrap().best_size;
        let d = global_subdomain(&a, None);
        let hits = (0..10)
            .filter(|&s| sa_coarsen(&a, &d, &AnnealConfig::new(0.56, 2000, 100, s)).unwrap().splitting.n_f() == opt)
            .count();
        assert!(hits >= 9, "{hits}");
    }

    #[test]
    fn additive_mode_is_feasible() {
        let a = fd_laplacian_5pt(12).unwrap();
        let d = geometric_blocks(12, (4, 4), &a, 0.56).unwrap();
        let mut cfg = AnnealConfig::new(0.56, 200, 10, 5);
        cfg.exchange = Exchange::Additive;
        let out = sa_coarsen(&a, &d, &cfg).unwrap();
        assert!(is_feasible(&a, &out.splitting, 0.56));
        assert!(out.splitting.n_f() * 10 > 6 * 144, "{}", out.splitting.n_f());
    }

    #[test]
    fn small_grid_matches_hand_splitting() {
        let a = fd_laplacian_5pt(8).unwrap();
        let d = global_subdomain(&a, Some(0.56));
        let target = by_hand_fd(8).n_f();
        let out = sa_coarsen(&a, &d, &AnnealConfig::new(0.56, 2000, 20, 1)).unwrap();
        assert!(out.splitting.n_f() + 1 >= target, "{} vs {target}", out.splitting.n_f());
    }
}
