use crate::sparse::CsrMatrix;
use crate::splitting::{CfSplitting, Label};

/// Classical strength of connection: `S[i]` lists the `j` that strongly
/// influence `i`, i.e. `−a_ij ≥ θ_s · max_{k≠i}(−a_ik)` with a positive maximum.
pub fn strength_graph(a: &CsrMatrix, theta_s: f64) -> Vec<Vec<usize>> {
    (0..a.n_rows())
        .map(|i| {
            let m = a.row(i).filter(|&(j, _)| j != i).map(|(_, v)| -v).fold(f64::NEG_INFINITY, f64::max);
            if !(m > 0.0) {
                return Vec::new();
            }
            a.row(i).filter(|&(j, v)| j != i && -v >= theta_s * m).map(|(j, _)| j).collect()
        })
        .collect()
}

fn sorted_contains(v: &[usize], x: usize) -> bool {
    v.binary_search(&x).is_ok()
}

/// Strongly connected F-pairs `(i, j)`, `j ∈ S_i`, that share no C-point
/// strongly influencing both.
pub fn second_pass_violations(s_graph: &[Vec<usize>], s: &CfSplitting) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..s.len() {
        if s.label(i) != Label::F {
            continue;
        }
        for &j in &s_graph[i] {
            if s.label(j) != Label::F {
                continue;
            }
            let shared = s_graph[i].iter().any(|&c| s.label(c) == Label::C && sorted_contains(&s_graph[j], c));
            if !shared {
                out.push((i, j));
            }
        }
    }
    out
}

/// Ruge–Stüben second pass.
///
/// F-points are scanned in index order. For each strong F-neighbour `j` of `i`
/// lacking a common strong C-point, `j` becomes a tentative C-point; a second
/// such neighbour makes `i` itself a C-point instead and releases `j`.
pub fn second_pass(a: &CsrMatrix, s: &CfSplitting, theta_s: f64) -> CfSplitting {
    let g = strength_graph(a, theta_s);
    let n = s.len();
    let mut is_c: Vec<bool> = (0..n).map(|i| s.label(i) == Label::C).collect();
    let mut in_ci = vec![usize::MAX; n];
    for i in 0..n {
        if is_c[i] {
            continue;
        }
        for &c in &g[i] {
            if is_c[c] {
                in_ci[c] = i;
            }
        }
        let mut tentative: Option<usize> = None;
        let mut promote_self = false;
        for &j in &g[i] {
            if is_c[j] {
                continue;
            }
            if g[j].iter().any(|&c| in_ci[c] == i) {
                continue;
            }
            if tentative.is_some() {
                promote_self = true;
                break;
            }
            tentative = Some(j);
            is_c[j] = true;
            in_ci[j] = i;
        }
        if promote_self {
            let j = tentative.expect("set before a second violation");
            is_c[j] = false;
            in_ci[j] = usize::MAX;
            is_c[i] = true;
        }
    }
    CfSplitting::from_labels(is_c.into_iter().map(|c| if c { Label::C } else { Label::F }).collect())
}
