use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::greedy::prepin_safe_f;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Disjoint subdomains plus the points pinned to F outside all of them.
///
/// `colors` lists subdomain ids in sweep order, grouped so that subdomains in
/// one group share no matrix adjacency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubdomainDecomposition {
    pub n: usize,
    pub subdomains: Vec<Vec<usize>>,
    pub colors: Vec<Vec<usize>>,
    pub prepinned_f: Vec<usize>,
}

impl SubdomainDecomposition {
    /// Ids in the order a multiplicative sweep visits them.
    pub fn sweep_order(&self) -> Vec<usize> {
        self.colors.iter().flatten().copied().collect()
    }

    /// Owner subdomain of every point, `None` for prepinned points.
    pub fn owner(&self) -> Vec<Option<usize>> {
        let mut o = vec![None; self.n];
        for (k, d) in self.subdomains.iter().enumerate() {
            for &i in d {
                o[i] = Some(k);
            }
        }
        o
    }

    /// Checks the covering and disjointness invariants.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.n];
        for &i in self.subdomains.iter().flatten().chain(self.prepinned_f.iter()) {
            if i >= self.n || seen[i] {
                return Err(Error::InvalidArgument(format!(
                    "point {i} is out of range or covered twice"
                )));
            }
            seen[i] = true;
        }
        if let Some(i) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidArgument(format!("point {i} is not covered")));
        }
        let mut ids: Vec<usize> = self.sweep_order();
        ids.sort_unstable();
        if ids != (0..self.subdomains.len()).collect::<Vec<_>>() {
            return Err(Error::InvalidArgument("sweep order must list every subdomain once".into()));
        }
        Ok(())
    }

    /// True if no two subdomains in one color group are structurally adjacent
    /// (in the pattern of `A + Aᵀ`).
    pub fn colors_independent(&self, a: &CsrMatrix) -> bool {
        let owner = self.owner();
        let adj = a.symmetric_adjacency();
        for group in &self.colors {
            let mut color_of = vec![false; self.subdomains.len()];
            for &k in group {
                color_of[k] = true;
            }
            for &k in group {
                for &i in &self.subdomains[k] {
                    for &j in &adj[i] {
                        if let Some(l) = owner[j] {
                            if l != k && color_of[l] {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }
}

/// Everything outside the prepinned set in one subdomain.
pub fn global_subdomain(a: &CsrMatrix, theta: Option<f64>) -> SubdomainDecomposition {
    let n = a.n_rows();
    let prepinned_f = theta.map(|t| prepin_safe_f(a, t)).unwrap_or_default();
    let mut pinned = vec![false; n];
    for &i in &prepinned_f {
        pinned[i] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !pinned[i]).collect();
    let (subdomains, colors) = if rest.is_empty() { (vec![], vec![]) } else { (vec![rest], vec![vec![0]]) };
    SubdomainDecomposition { n, subdomains, colors, prepinned_f }
}

/// Rectangular tiling of an `N × N` row-major grid.
///
/// Safe rows are pinned to F; the bounding box of the rest is tiled with
/// `block = (bx, by)` rectangles from its lower-left corner, leaving smaller
/// remainder blocks on the far edges. Colors follow (block row, block column) parity.
pub fn geometric_blocks(
    n_side: usize,
    block: (usize, usize),
    a: &CsrMatrix,
    theta: f64,
) -> Result<SubdomainDecomposition> {
    let n = n_side * n_side;
    if a.n_rows() != n {
        return Err(Error::Dimension(format!("grid {n_side}x{n_side} but matrix has {} rows", a.n_rows())));
    }
    if block.0 == 0 || block.1 == 0 {
        return Err(Error::InvalidArgument("block dimensions must be positive".into()));
    }
    let prepinned_f = prepin_safe_f(a, theta);
    let mut pinned = vec![false; n];
    for &i in &prepinned_f {
        pinned[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !pinned[i]).collect();
    if free.is_empty() {
        return Ok(SubdomainDecomposition { n, subdomains: vec![], colors: vec![], prepinned_f });
    }
    let x0 = free.iter().map(|&i| i % n_side).min().unwrap();
    let y0 = free.iter().map(|&i| i / n_side).min().unwrap();
    let x1 = free.iter().map(|&i| i % n_side).max().unwrap();
    let y1 = free.iter().map(|&i| i / n_side).max().unwrap();
    let nbx = (x1 - x0) / block.0 + 1;
    let nby = (y1 - y0) / block.1 + 1;
    let mut tiles: Vec<Vec<usize>> = vec![Vec::new(); nbx * nby];
    for &i in &free {
        let (x, y) = (i % n_side, i / n_side);
        let (bi, bj) = ((x - x0) / block.0, (y - y0) / block.1);
        tiles[bj * nbx + bi].push(i);
    }
    let mut subdomains = Vec::new();
    let mut color_of = Vec::new();
    for (t, pts) in tiles.into_iter().enumerate() {
        if !pts.is_empty() {
            let (bi, bj) = (t % nbx, t / nbx);
            color_of.push((bj % 2) * 2 + bi % 2);
            subdomains.push(pts);
        }
    }
    let mut colors = vec![Vec::new(); 4];
    for (k, &c) in color_of.iter().enumerate() {
        colors[c].push(k);
    }
    colors.retain(|g| !g.is_empty());
    Ok(SubdomainDecomposition { n, subdomains, colors, prepinned_f })
}

/// Unit-distance multi-source search. Each reached point gets the smallest
/// (distance, source rank) pair; `None` marks unreached points.
fn nearest_source(adj: &[Vec<usize>], active: &[bool], sources: &[usize]) -> Vec<Option<(usize, usize)>> {
    let mut best: Vec<Option<(usize, usize)>> = vec![None; adj.len()];
    let mut frontier: Vec<usize> = Vec::new();
    for (r, &s) in sources.iter().enumerate() {
        if best[s].is_none() {
            best[s] = Some((0, r));
            frontier.push(s);
        }
    }
    let mut d = 0;
    while !frontier.is_empty() {
        d += 1;
        let mut next: Vec<usize> = Vec::new();
        for &u in &frontier {
            let r = best[u].unwrap().1;
            for &v in &adj[u] {
                if !active[v] {
                    continue;
                }
                match best[v] {
                    None => {
                        best[v] = Some((d, r));
                        next.push(v);
                    }
                    Some((dv, rv)) if dv == d && r < rv => best[v] = Some((d, r)),
                    _ => {}
                }
            }
        }
        frontier = next;
    }
    best
}

/// Lloyd aggregation on the unit-distance graph of `A` (pattern of `A + Aᵀ`).
///
/// Starts from `ceil(n / avg_size)` seeded random centers and alternates
/// nearest-center assignment with re-centering at a point of maximum distance
/// from the subdomain boundary (lowest index among ties), for at most 20
/// rounds or until the assignment repeats. A subdomain's boundary consists of
/// its points that touch another subdomain or the eliminated Dirichlet
/// boundary (rows with `|a_ii| > Σ_{j≠i}|a_ij|`). Points no center can reach
/// form extra subdomains, one per connected piece.
pub fn lloyd_aggregate(a: &CsrMatrix, avg_size: usize, seed: u64) -> Result<SubdomainDecomposition> {
    lloyd_on(a, avg_size, seed, &[])
}

/// [`lloyd_aggregate`] over the points left after pinning safe rows to F.
pub fn lloyd_aggregate_pinned(
    a: &CsrMatrix,
    avg_size: usize,
    seed: u64,
    theta: f64,
) -> Result<SubdomainDecomposition> {
    lloyd_on(a, avg_size, seed, &prepin_safe_f(a, theta))
}

const LLOYD_MAX_ITERS: usize = 20;

fn lloyd_on(a: &CsrMatrix, avg_size: usize, seed: u64, pinned: &[usize]) -> Result<SubdomainDecomposition> {
    if avg_size == 0 {
        return Err(Error::InvalidArgument("average subdomain size must be positive".into()));
    }
    let n = a.n_rows();
    let mut active = vec![true; n];
    for &i in pinned {
        active[i] = false;
    }
    let free: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
    let prepinned_f = pinned.to_vec();
    if free.is_empty() {
        return Ok(SubdomainDecomposition { n, subdomains: vec![], colors: vec![], prepinned_f });
    }
    let adj = a.symmetric_adjacency();
    let touches_dirichlet = dirichlet_rows(a);

    let s = free.len().div_ceil(avg_size).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<usize> = sample(&mut rng, free.len(), s).into_iter().map(|k| free[k]).collect();
    centers.sort_unstable();
    let subdomains = lloyd_iterate(&adj, &active, &touches_dirichlet, centers);
    let colors = (0..subdomains.len()).map(|k| vec![k]).collect();
    Ok(SubdomainDecomposition { n, subdomains, colors, prepinned_f })
}

/// Runs the assign/re-center loop from the given centers over the `active` points.
fn lloyd_iterate(
    adj: &[Vec<usize>],
    active: &[bool],
    touches_dirichlet: &[bool],
    mut centers: Vec<usize>,
) -> Vec<Vec<usize>> {
    let n = adj.len();
    let free: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
    let mut assign: Vec<usize> = Vec::new();
    for _ in 0..LLOYD_MAX_ITERS {
        let near = nearest_source(adj, active, &centers);
        let mut new_assign = vec![usize::MAX; n];
        for &i in &free {
            if let Some((_, r)) = near[i] {
                new_assign[i] = r;
            }
        }
        // Unreached pieces become their own subdomains.
        for &i in &free {
            if new_assign[i] == usize::MAX {
                let r = centers.len();
                centers.push(i);
                let mut q = VecDeque::from([i]);
                new_assign[i] = r;
                while let Some(u) = q.pop_front() {
                    for &v in &adj[u] {
                        if active[v] && new_assign[v] == usize::MAX {
                            new_assign[v] = r;
                            q.push_back(v);
                        }
                    }
                }
            }
        }
        if new_assign == assign {
            break;
        }
        assign = new_assign;
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); centers.len()];
        for &i in &free {
            members[assign[i]].push(i);
        }
        let mut in_sub = vec![false; n];
        for (r, c) in centers.iter_mut().enumerate() {
            let boundary: Vec<usize> = members[r]
                .iter()
                .copied()
                .filter(|&i| touches_dirichlet[i] || adj[i].iter().any(|&j| active[j] && assign[j] != r))
                .collect();
            if boundary.is_empty() {
                continue;
            }
            for &i in &members[r] {
                in_sub[i] = true;
            }
            let dist = nearest_source(adj, &in_sub, &boundary);
            for &i in &members[r] {
                in_sub[i] = false;
            }
            let mut best = (0usize, usize::MAX);
            for &i in &members[r] {
                if let Some((d, _)) = dist[i] {
                    if d > best.0 || (d == best.0 && i < best.1) {
                        best = (d, i);
                    }
                }
            }
            *c = best.1;
        }
    }
    let mut subdomains = vec![Vec::new(); centers.len()];
    for &i in &free {
        subdomains[assign[i]].push(i);
    }
    subdomains.retain(|d| !d.is_empty());
    subdomains
}

fn dirichlet_rows(a: &CsrMatrix) -> Vec<bool> {
    (0..a.n_rows())
        .map(|i| {
            let off: f64 = a.row(i).filter(|&(j, _)| j != i).map(|(_, v)| v.abs()).sum();
            a.get(i, i).abs() > off
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{fd_laplacian_5pt, fe_bilinear_9pt};

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
    fn geometric_32_by_4() {
        let a = fd_laplacian_5pt(32).unwrap();
        let d = geometric_blocks(32, (4, 4), &a, 0.56).unwrap();
        d.validate().unwrap();
        assert_eq!(d.prepinned_f.len(), 32 * 32 - 30 * 30);
        assert_eq!(d.subdomains.len(), 64);
        let mut sizes: Vec<usize> = d.subdomains.iter().map(|s| s.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes[0], 4);
        assert_eq!(sizes.iter().filter(|&&s| s == 16).count(), 49);
        assert_eq!(sizes.iter().filter(|&&s| s == 8).count(), 14);
        assert!(d.colors_independent(&a));
        assert!(d.colors_independent(&fe_bilinear_9pt(32).unwrap()));
        assert_eq!(d.colors.len(), 4);
    }

    #[test]
    fn geometric_block_covering_grid_is_global() {
        let a = fd_laplacian_5pt(8).unwrap();
        let d = geometric_blocks(8, (8, 8), &a, 0.56).unwrap();
        assert_eq!(d.subdomains.len(), 1);
        assert_eq!(d.subdomains[0].len(), 36);
    }

    #[test]
    fn lloyd_single_center_is_everything() {
        let a = fd_laplacian_5pt(5).unwrap();
        let d = lloyd_aggregate(&a, 25, 1).unwrap();
        assert_eq!(d.subdomains, vec![(0..25).collect::<Vec<_>>()]);
        let big = lloyd_aggregate(&a, 100, 1).unwrap();
        assert_eq!(big.subdomains.len(), 1);
    }

    /// Every placement of three initial centers on a 9-point path settles on
    /// three contiguous intervals; equal thirds is a fixed point, but with
    /// lowest-index re-centering only some placements reach it. The count of
    /// those is pinned against an independent enumeration.
    #[test]
    fn lloyd_path_graph_exhaustive() {
        let a = lap1d(9);
        let adj = a.symmetric_adjacency();
        let active = vec![true; 9];
        let dir = dirichlet_rows(&a);
        let thirds = vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]];
        let mut reached = 0;
        for c0 in 0..9 {
            for c1 in c0 + 1..9 {
                for c2 in c1 + 1..9 {
                    let d = lloyd_iterate(&adj, &active, &dir, vec![c0, c1, c2]);
                    assert_eq!(d.len(), 3, "start {c0},{c1},{c2}");
                    let flat: Vec<usize> = d.iter().flatten().copied().collect();
                    assert_eq!(flat, (0..9).collect::<Vec<_>>(), "start {c0},{c1},{c2}");
                    reached += (d == thirds) as usize;
                }
            }
        }
        assert_eq!(reached, 21);
        assert_eq!(lloyd_iterate(&adj, &active, &dir, vec![1, 4, 7]), thirds);
        assert_eq!(lloyd_iterate(&adj, &active, &dir, vec![0, 4, 8]), thirds);
    }

    #[test]
    fn lloyd_covers_and_is_connected() {
        let a = fe_bilinear_9pt(12).unwrap();
        let adj = a.symmetric_adjacency();
        for seed in 0..5 {
            let d = lloyd_aggregate(&a, 20, seed).unwrap();
            d.validate().unwrap();
            for sub in &d.subdomains {
                let set: std::collections::HashSet<usize> = sub.iter().copied().collect();
                let mut seen = std::collections::HashSet::from([sub[0]]);
                let mut stack = vec![sub[0]];
                while let Some(u) = stack.pop() {
                    for &v in &adj[u] {
                        if set.contains(&v) && seen.insert(v) {
                            stack.push(v);
                        }
                    }
                }
                assert_eq!(seen.len(), sub.len());
            }
        }
    }

    #[test]
    fn lloyd_disconnected_pieces_become_subdomains() {
        // Two disjoint 1D chains.
        let mut t = Vec::new();
        for off in [0usize, 4] {
            for i in 0..4 {
                t.push((off + i, off + i, 2.0));
                if i > 0 {
                    t.push((off + i, off + i - 1, -1.0));
                    t.push((off + i - 1, off + i, -1.0));
                }
            }
        }
        let a = CsrMatrix::from_triplets(8, 8, &t).unwrap();
        let d = lloyd_aggregate(&a, 8, 3).unwrap();
        d.validate().unwrap();
        assert_eq!(d.subdomains.len(), 2);
    }
}
