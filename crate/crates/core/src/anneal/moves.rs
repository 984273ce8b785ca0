use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

/// `amount` distinct positions in `0..len`, uniformly at random.
pub(crate) fn pick<R: Rng + ?Sized>(rng: &mut R, len: usize, amount: usize) -> Vec<usize> {
    match amount {
        0 => Vec::new(),
        1 => vec![rng.gen_range(0..len)],
        _ => sample(rng, len, amount).into_vec(),
    }
}

/// Moves `n_f` random points from `C` to `F` and `n_c` random points from `F`
/// to `C`. Both selections are drawn from the sets as they were on entry.
pub fn swap_fc<R: Rng + ?Sized>(
    f: &[usize],
    c: &[usize],
    n_f: usize,
    n_c: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if f.len() < n_c || c.len() < n_f {
        return Err(Error::InvalidArgument(format!(
            "cannot move {n_c} of {} F-points and {n_f} of {} C-points",
            f.len(),
            c.len()
        )));
    }
    let to_c = pick(rng, f.len(), n_c);
    let to_f = pick(rng, c.len(), n_f);
    let mut out_f: Vec<usize> = f.to_vec();
    let mut out_c: Vec<usize> = c.to_vec();
    let mut leave_f = vec![false; f.len()];
    let mut leave_c = vec![false; c.len()];
    for &p in &to_c {
        leave_f[p] = true;
        out_c.push(f[p]);
    }
    for &p in &to_f {
        leave_c[p] = true;
        out_f.push(c[p]);
    }
    let mut k = 0;
    out_f.retain(|_| {
        k += 1;
        k > f.len() || !leave_f[k - 1]
    });
    let mut k = 0;
    out_c.retain(|_| {
        k += 1;
        k > c.len() || !leave_c[k - 1]
    });
    Ok((out_f, out_c))
}

/// Probability of accepting a move from fitness `z` to `z_tilde` at temperature `t`.
pub fn acceptance_probability(z: usize, z_tilde: usize, t: f64) -> f64 {
    if z_tilde >= z {
        1.0
    } else {
        (-((z - z_tilde) as f64) / t).exp()
    }
}
