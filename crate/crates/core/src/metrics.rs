//! Convergence factors, complexities and run reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::amgr::AmgrHierarchy;
use crate::error::{Error, Result};
use crate::splitting::CfSplitting;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoMeasurement {
    pub rho: f64,
    pub k_used: usize,
    /// Total growth `‖x_k‖ / ‖x_0‖` exceeded 10.
    pub diverged: bool,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn initial_guess(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// `(‖x_k‖/‖x_0‖)^{1/k}` for `k` cycles on `Ax = 0` from a seeded uniform
/// `[−1, 1]` start. The iterate is renormalized every cycle and the factors
/// are summed in log space.
pub fn asymptotic_rho(h: &AmgrHierarchy, k: usize, seed: u64) -> Result<RhoMeasurement> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let n = h.levels.first().map_or(h.coarsest.n_rows(), |l| l.n());
    let b = vec![0.0; n];
    let mut x = initial_guess(n, seed);
    let x0 = norm(&x);
    if x0 == 0.0 {
        return Ok(RhoMeasurement { rho: 0.0, k_used: 0, diverged: false });
    }
    x.iter_mut().for_each(|v| *v /= x0);
    let mut log_sum = 0.0;
    for it in 0..k {
        h.cycle(&mut x, &b);
        let nx = norm(&x);
        if nx == 0.0 {
            return Ok(RhoMeasurement { rho: 0.0, k_used: it + 1, diverged: false });
        }
        if !nx.is_finite() {
            return Ok(RhoMeasurement { rho: f64::INFINITY, k_used: it + 1, diverged: true });
        }
        log_sum += nx.ln();
        x.iter_mut().for_each(|v| *v /= nx);
    }
    Ok(RhoMeasurement { rho: (log_sum / k as f64).exp(), k_used: k, diverged: log_sum > 10f64.ln() })
}

/// The same quantity without renormalization; only usable while `‖x_k‖`
/// stays representable.
pub fn direct_rho(h: &AmgrHierarchy, k: usize, seed: u64) -> f64 {
    let n = h.levels.first().map_or(h.coarsest.n_rows(), |l| l.n());
    let b = vec![0.0; n];
    let mut x = initial_guess(n, seed);
    let x0 = norm(&x);
    for _ in 0..k {
        h.cycle(&mut x, &b);
    }
    (norm(&x) / x0).powf(1.0 / k as f64)
}

/// `(Σ n_ℓ / n_0, Σ nnz_ℓ / nnz_0)`.
pub fn complexities(h: &AmgrHierarchy) -> (f64, f64) {
    let sizes = h.level_sizes();
    let nnz = h.level_nnz();
    let ratio = |v: &[usize]| {
        if v[0] == 0 {
            1.0
        } else {
            v.iter().sum::<usize>() as f64 / v[0] as f64
        }
    };
    (ratio(&sizes), ratio(&nnz))
}

pub fn f_ratio(s: &CfSplitting) -> f64 {
    s.f_ratio()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub n: usize,
    pub nnz: usize,
    pub n_f: usize,
    /// F-count before the second pass turned some F-points into C-points.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_f_before_second_pass: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub format_version: u32,
    pub problem: String,
    pub method: String,
    pub theta: f64,
    pub rho: f64,
    pub diverged: bool,
    pub c_grid: f64,
    pub c_op: f64,
    pub f_ratio: f64,
    pub k_used: usize,
    pub seed: u64,
    pub cycle: String,
    pub nu: usize,
    pub levels: Vec<LevelReport>,
}

impl SolveReport {
    pub fn new(h: &AmgrHierarchy, rho: RhoMeasurement, problem: &str, method: &str, theta: f64, seed: u64) -> Self {
        let (c_grid, c_op) = complexities(h);
        let levels = h
            .levels
            .iter()
            .map(|l| LevelReport {
                n: l.n(),
                nnz: l.a.nnz(),
                n_f: l.splitting.n_f(),
                n_f_before_second_pass: l.n_f_before_second_pass,
            })
            .chain([LevelReport { n: h.coarsest.n_rows(), nnz: h.coarsest.nnz(), n_f: 0, n_f_before_second_pass: None }])
            .collect();
        SolveReport {
            format_version: REPORT_FORMAT_VERSION,
            problem: problem.to_string(),
            method: method.to_string(),
            theta,
            rho: rho.rho,
            diverged: rho.diverged,
            c_grid,
            c_op,
            f_ratio: h.levels.first().map_or(0.0, |l| l.splitting.f_ratio()),
            k_used: rho.k_used,
            seed,
            cycle: format!("{:?}", h.cycle),
            nu: h.nu,
            levels,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// One row of a side-by-side method comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub problem: String,
    pub method: String,
    pub f_ratio: f64,
    pub rho: f64,
    pub c_grid: f64,
    pub c_op: f64,
}

impl From<&SolveReport> for ComparisonRow {
    fn from(r: &SolveReport) -> Self {
        ComparisonRow {
            problem: r.problem.clone(),
            method: r.method.clone(),
            f_ratio: r.f_ratio,
            rho: r.rho,
            c_grid: r.c_grid,
            c_op: r.c_op,
        }
    }
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("problem,method,f_ratio,rho,c_grid,c_op\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.4},{:.3},{:.3},{:.3}\n",
            r.problem, r.method, r.f_ratio, r.rho, r.c_grid, r.c_op
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amgr::{AmgrOptions, CycleKind};
    use crate::partition::{by_hand_fd, greedy_coarsen};
    use crate::problems::fd_laplacian_5pt;
    use crate::splitting::Label;
    use crate::CsrMatrix;

    #[test]
    fn exact_cycle_gives_zero() {
        let a = fd_laplacian_5pt(4).unwrap();
        let h = AmgrHierarchy::two_level(a, CfSplitting::all(16, Label::C), &AmgrOptions::default()).unwrap();
        let m = asymptotic_rho(&h, 10, 1).unwrap();
        assert!(m.rho < 1e-8);
        assert!(!m.diverged);
        assert!(asymptotic_rho(&h, 0, 1).is_err());
    }

    #[test]
    fn log_space_matches_direct() {
        let a = fd_laplacian_5pt(6).unwrap();
        let h = AmgrHierarchy::two_level(a.clone(), by_hand_fd(6), &AmgrOptions::default()).unwrap();
        for k in [1, 7, 50] {
            let r = asymptotic_rho(&h, k, 3).unwrap().rho;
            let d = direct_rho(&h, k, 3);
            assert!(((r - d) / d).abs() < 1e-10, "k {k}: {r} vs {d}");
        }
        let again = asymptotic_rho(&h, 50, 3).unwrap();
        assert_eq!(again, asymptotic_rho(&h, 50, 3).unwrap());
    }

    #[test]
    fn rho_matches_spectral_radius() {
        let a = fd_laplacian_5pt(6).unwrap();
        let h = AmgrHierarchy::two_level(a, by_hand_fd(6), &AmgrOptions::default()).unwrap();
        let m = h.dense_two_level_operator().unwrap();
        let spec = m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let r = asymptotic_rho(&h, 800, 5).unwrap().rho;
        assert!((r - spec).abs() < 0.01, "{r} vs {spec}");
    }

    #[test]
    fn divergence_is_flagged() {
        // Indefinite operator: with the uniform rule σ D⁻¹ = I, so each
        // relaxation applies I − A, whose eigenvalues are ±2.
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, -2.0), (1, 0, -2.0)]).unwrap();
        let mut o = AmgrOptions::default();
        o.dff = crate::amgr::DffRule::Uniform;
        let h = AmgrHierarchy::two_level(a, CfSplitting::all(2, Label::F), &o).unwrap();
        let m = asymptotic_rho(&h, 20, 0).unwrap();
        assert!(m.diverged);
        assert!((m.rho - 4.0).abs() < 1e-12, "{}", m.rho);
    }

    #[test]
    fn complexity_examples() {
        let a = fd_laplacian_5pt(8).unwrap();
        let s = greedy_coarsen(&a, 0.56).unwrap();
        let h = AmgrHierarchy::two_level(a.clone(), s.clone(), &AmgrOptions::default()).unwrap();
        let (cg, co) = complexities(&h);
        assert_eq!(cg, (64 + s.n_c()) as f64 / 64.0);
        assert_eq!(co, (a.nnz() + h.coarsest.nnz()) as f64 / a.nnz() as f64);
        assert!(cg >= 1.0 && co >= 1.0);
        let all_f = AmgrHierarchy::two_level(CsrMatrix::identity(5), CfSplitting::all(5, Label::F), &AmgrOptions::default()).unwrap();
        assert_eq!(complexities(&all_f), (1.0, 1.0));
        assert_eq!(f_ratio(&CfSplitting::all(5, Label::F)), 1.0);
    }

    #[test]
    fn report_round_trip() {
        let a = fd_laplacian_5pt(5).unwrap();
        let mut o = AmgrOptions::default();
        o.cycle = CycleKind::W;
        let h = AmgrHierarchy::two_level(a.clone(), greedy_coarsen(&a, 0.56).unwrap(), &o).unwrap();
        let rho = asymptotic_rho(&h, 20, 9).unwrap();
        let r = SolveReport::new(&h, rho, "fd5:5", "greedy", 0.56, 9);
        let back: SolveReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.format_version, REPORT_FORMAT_VERSION);
        assert_eq!(back.levels.len(), 2);
        let csv = comparison_csv(&[ComparisonRow::from(&r)]);
        assert!(csv.starts_with("problem,method,f_ratio,rho,c_grid,c_op\nfd5:5,greedy,"));
    }
}
