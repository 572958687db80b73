//! Bounded-overlap covers, partitions of unity and discrete convolution.

use crate::error::{Error, Result};
use crate::space::DiscreteSpace;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Cover {
    pub eps: f64,
    pub centers: Vec<usize>,
    /// Largest number of doubled balls `B(c, 2 eps)` containing a single point.
    pub overlap_bound: usize,
}

/// Maximal `eps`-separated net chosen by farthest-point insertion from point 0.
pub fn bounded_overlap_cover(space: &DiscreteSpace, eps: f64) -> Result<Cover> {
    let h = space.resolution_h();
    if !(eps >= 2.0 * h) || !eps.is_finite() {
        return Err(Error::InvalidScale { scale: eps, lo: 2.0 * h, hi: f64::INFINITY });
    }
    let n = space.len();
    let mut dmin = vec![f64::INFINITY; n];
    let mut centers = Vec::new();
    let mut next = 0usize;
    loop {
        centers.push(next);
        let c = next;
        dmin[c] = 0.0;
        for j in 0..n {
            if dmin[j] > 0.0 {
                let d = space.distance(c, j);
                if d < dmin[j] {
                    dmin[j] = d;
                }
            }
        }
        let mut far = 0usize;
        let mut far_d = -1.0;
        for (j, &d) in dmin.iter().enumerate() {
            if d > far_d {
                far_d = d;
                far = j;
            }
        }
        if far_d < eps {
            break;
        }
        next = far;
    }
    let mut count = vec![0usize; n];
    for &c in &centers {
        space.for_each_in_ball(c, 2.0 * eps, |j, _| count[j] += 1);
    }
    let overlap_bound = count.into_iter().max().unwrap_or(0);
    Ok(Cover { eps, centers, overlap_bound })
}

/// Sparse partition of unity subordinate to a cover: `rows[x]` lists `(k, phi_k(x))`
/// with `k` indexing `cover.centers`.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    pub rows: Vec<Vec<(usize, f64)>>,
}

fn bump(d: f64, eps: f64) -> f64 {
    (1.0 - (d - eps).max(0.0) / eps).max(0.0)
}

pub fn partition_of_unity(space: &DiscreteSpace, cover: &Cover) -> Result<PartitionOfUnity> {
    let n = space.len();
    let eps = cover.eps;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (k, &c) in cover.centers.iter().enumerate() {
        space.for_each_in_ball(c, 2.0 * eps, |j, d| {
            let v = bump(d, eps);
            if v > 0.0 {
                rows[j].push((k, v));
            }
        });
    }
    for (x, row) in rows.iter_mut().enumerate() {
        row.sort_by_key(|e| e.0);
        let s: f64 = row.iter().map(|e| e.1).sum();
        if !(s > 0.0) {
            return Err(Error::InvalidInput(format!("point {x} is not covered")));
        }
        for e in row.iter_mut() {
            e.1 /= s;
        }
    }
    Ok(PartitionOfUnity { rows })
}

/// `f_eps = sum_k (mean of f over B(c_k, eps)) * phi_k`.
pub fn discrete_convolution(
    space: &DiscreteSpace,
    f: &[f64],
    cover: &Cover,
    pou: &PartitionOfUnity,
) -> Result<Vec<f64>> {
    if f.len() != space.len() {
        return Err(Error::InvalidInput("function length does not match space".into()));
    }
    let means: Vec<f64> = cover
        .centers
        .iter()
        .map(|&c| {
            let (mut num, mut den) = (0.0, 0.0);
            space.for_each_in_ball(c, cover.eps, |j, _| {
                num += f[j] * space.weight(j);
                den += space.weight(j);
            });
            num / den
        })
        .collect();
    Ok(pou
        .rows
        .iter()
        .map(|row| row.iter().map(|&(k, p)| means[k] * p).sum())
        .collect())
}
