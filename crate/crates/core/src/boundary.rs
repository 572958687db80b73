//! Finite-scale boundaries, Minkowski and Hausdorff contents and codimension estimates.

use crate::balls::masked_ball_masses;
use crate::error::{invalid, Error, Result};
use crate::index::BucketIndex;
use crate::space::{dyadic_scales, DiscreteSpace};
use serde::{Deserialize, Serialize};
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub scale_min: f64,
    pub scale_max: f64,
    pub delta: f64,
}

impl BoundarySpec {
    /// `[8h, diameter / 8]` with density threshold 0.2.
    pub fn default_for(space: &DiscreteSpace) -> Self {
        BoundarySpec {
            scale_min: 8.0 * space.resolution_h(),
            scale_max: space.diameter() / 8.0,
            delta: 0.2,
        }
    }

    pub fn validate(&self, space: &DiscreteSpace) -> Result<()> {
        let h = space.resolution_h();
        if !(self.scale_min >= 4.0 * h * (1.0 - 1e-12)) {
            return Err(Error::InvalidScale { scale: self.scale_min, lo: 4.0 * h, hi: space.diameter() });
        }
        if !(self.scale_min < self.scale_max && self.scale_max <= space.diameter()) {
            return Err(Error::InvalidScale { scale: self.scale_max, lo: self.scale_min, hi: space.diameter() });
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return invalid(format!("density threshold must lie in (0, 1/2], got {}", self.delta));
        }
        Ok(())
    }
}

fn members(set: &[u8]) -> Vec<usize> {
    set.iter().enumerate().filter(|(_, &v)| v == 1).map(|(i, _)| i).collect()
}

/// Points whose `scale_min`-ball meets both `E` and its complement in positive measure.
pub fn regularized_boundary(space: &DiscreteSpace, set: &[u8], spec: &BoundarySpec) -> Result<Vec<u8>> {
    space.check_set(set)?;
    spec.validate(space)?;
    let inside = masked_ball_masses(space, Some(set), spec.scale_min);
    let total = masked_ball_masses(space, None, spec.scale_min);
    Ok(inside
        .iter()
        .zip(&total)
        .map(|(&a, &t)| (a > 0.0 && t - a > 1e-12 * t) as u8)
        .collect())
}

/// Points of the regularized boundary where `min(theta, 1 - theta) >= delta` at some
/// dyadic radius in `[scale_min, scale_max]`, `theta` being the relative mass of `E` in the ball.
pub fn measure_theoretic_boundary(space: &DiscreteSpace, set: &[u8], spec: &BoundarySpec) -> Result<Vec<u8>> {
    let reg = regularized_boundary(space, set, spec)?;
    let mut out = vec![0u8; space.len()];
    for r in dyadic_scales(spec.scale_min, spec.scale_max) {
        let inside = masked_ball_masses(space, Some(set), r);
        let total = masked_ball_masses(space, None, r);
        for i in 0..out.len() {
            let theta = inside[i] / total[i];
            if reg[i] == 1 && theta.min(1.0 - theta) >= spec.delta {
                out[i] = 1;
            }
        }
    }
    Ok(out)
}

fn hilbert_key(bits: u32, mut x: u64, mut y: u64) -> u64 {
    let mut d = 0;
    let mut s = 1u64 << (bits - 1);
    while s > 0 {
        let rx = (x & s > 0) as u64;
        let ry = (y & s > 0) as u64;
        d += s * s * ((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                let m = (1u64 << bits) - 1;
                x = m - x;
                y = m - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s >>= 1;
    }
    d
}

/// `pts` in a locality-preserving order: by position on a line, along a Hilbert curve in the plane.
pub fn coherent_order(space: &DiscreteSpace, pts: &[usize]) -> Vec<usize> {
    let mut out = pts.to_vec();
    match space.dim() {
        Some(1) => out.sort_by(|&a, &b| space.coords(a).unwrap()[0].total_cmp(&space.coords(b).unwrap()[0])),
        Some(2) if !pts.is_empty() => {
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for &p in pts {
                let c = space.coords(p).unwrap();
                for a in 0..2 {
                    lo[a] = lo[a].min(c[a]);
                    hi[a] = hi[a].max(c[a]);
                }
            }
            let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
            let q = |v: f64, a: usize| (((v - lo[a]) / span) * 65535.0).round() as u64;
            out.sort_by_cached_key(|&p| {
                let c = space.coords(p).unwrap();
                (hilbert_key(16, q(c[0], 0), q(c[1], 1)), p)
            });
        }
        _ => {}
    }
    out
}

/// Greedy maximal `r`-separated subset of `pts`, scanned in the given order.
pub fn greedy_net(space: &DiscreteSpace, pts: &[usize], r: f64) -> Vec<usize> {
    let mut centers: Vec<usize> = Vec::new();
    match space.dim() {
        Some(dim) if dim <= 3 => {
            let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
            let key = |p: &[f64]| {
                let mut k = [0i64; 3];
                for (a, v) in p.iter().enumerate() {
                    k[a] = (v / r).floor() as i64;
                }
                k
            };
            for &p in pts {
                let c = space.coords(p).unwrap();
                let k = key(c);
                let mut free = true;
                'scan: for dz in -1..=1i64 {
                    for dy in -1..=1i64 {
                        for dx in -1..=1i64 {
                            let kk = [k[0] + dx, k[1] + dy, k[2] + dz];
                            if (dim < 2 && dy != 0) || (dim < 3 && dz != 0) {
                                continue;
                            }
                            if let Some(list) = grid.get(&kk) {
                                if list.iter().any(|&q| space.distance(p, q) < r) {
                                    free = false;
                                    break 'scan;
                                }
                            }
                        }
                    }
                }
                if free {
                    centers.push(p);
                    grid.entry(k).or_default().push(p);
                }
            }
        }
        _ => {
            for &p in pts {
                if centers.iter().all(|&q| space.distance(p, q) >= r) {
                    centers.push(p);
                }
            }
        }
    }
    centers
}

#[derive(Debug, Clone, Serialize)]
pub struct ContentResult {
    pub value: f64,
    /// Cover used for the bound, as `(center, radius)` pairs.
    pub cover: Vec<(usize, f64)>,
}

fn check_radius(space: &DiscreteSpace, r: f64) -> Result<()> {
    let lo = 4.0 * space.resolution_h();
    if !(r >= lo * (1.0 - 1e-12)) || !r.is_finite() {
        return Err(Error::InvalidScale { scale: r, lo, hi: f64::INFINITY });
    }
    Ok(())
}

/// `sum_i mu(B(x_i, r))` over a greedy `r`-net of `S`.
pub fn minkowski_sum(space: &DiscreteSpace, set: &[u8], r: f64) -> Result<ContentResult> {
    space.check_set(set)?;
    check_radius(space, r)?;
    let pts = members(set);
    if pts.is_empty() {
        return invalid("empty set has no content");
    }
    let net = greedy_net(space, &coherent_order(space, &pts), r);
    let value = net.iter().map(|&c| space.ball_measure_unchecked(c, r)).sum();
    Ok(ContentResult { value, cover: net.into_iter().map(|c| (c, r)).collect() })
}

/// Minkowski content `r^(-t) sum_i mu(B(x_i, r))`.
pub fn minkowski_content(space: &DiscreteSpace, set: &[u8], t: f64, r: f64) -> Result<ContentResult> {
    let base = minkowski_sum(space, set, r)?;
    Ok(ContentResult { value: r.powf(-t) * base.value, cover: base.cover })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Score(f64);
impl Eq for Score {}
impl PartialOrd for Score {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Score {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Range counting of uncovered members of `S`.
enum Coverage<'a> {
    Line { pos: Vec<f64>, slot: Vec<usize>, fenwick: Vec<i64> },
    Buckets { space: &'a DiscreteSpace, pts: Vec<usize>, indices: Vec<BucketIndex>, covered: Vec<bool> },
    Scan { space: &'a DiscreteSpace, pts: Vec<usize>, covered: Vec<bool> },
}

impl<'a> Coverage<'a> {
    fn new(space: &'a DiscreteSpace, pts: &[usize], radii: &[f64]) -> Self {
        match space.dim() {
            Some(1) => {
                let mut order: Vec<usize> = (0..pts.len()).collect();
                let x = |k: usize| space.coords(pts[k]).unwrap()[0];
                order.sort_by(|&a, &b| x(a).total_cmp(&x(b)));
                let pos: Vec<f64> = order.iter().map(|&k| x(k)).collect();
                let mut slot = vec![0; pts.len()];
                for (s, &k) in order.iter().enumerate() {
                    slot[k] = s;
                }
                let m = pts.len();
                let mut fenwick = vec![0i64; m + 1];
                for i in 1..=m {
                    fenwick[i] += 1;
                    let j = i + (i & i.wrapping_neg());
                    if j <= m {
                        fenwick[j] += fenwick[i];
                    }
                }
                Coverage::Line { pos, slot, fenwick }
            }
            Some(dim) if dim <= 3 => {
                let coords: Vec<f64> = pts.iter().flat_map(|&p| space.coords(p).unwrap().to_vec()).collect();
                let indices = radii.iter().map(|&r| BucketIndex::build(&coords, dim, r)).collect();
                Coverage::Buckets { space, pts: pts.to_vec(), indices, covered: vec![false; pts.len()] }
            }
            _ => Coverage::Scan { space, pts: pts.to_vec(), covered: vec![false; pts.len()] },
        }
    }

    fn prefix(fenwick: &[i64], mut i: usize) -> i64 {
        let mut s = 0;
        while i > 0 {
            s += fenwick[i];
            i &= i - 1;
        }
        s
    }

    /// Uncovered members in `B(pts[k], r)`; with `mark` they become covered.
    fn count(&mut self, k: usize, ri: usize, r: f64, mark: bool) -> usize {
        match self {
            Coverage::Line { pos, slot, fenwick } => {
                let c = pos[slot[k]];
                let lo = pos.partition_point(|&v| c - v >= r);
                let hi = pos.partition_point(|&v| v - c < r);
                let n = (Self::prefix(fenwick, hi) - Self::prefix(fenwick, lo)) as usize;
                if mark {
                    for s in lo..hi {
                        let cur = Self::prefix(fenwick, s + 1) - Self::prefix(fenwick, s);
                        if cur == 1 {
                            let m = fenwick.len() - 1;
                            let mut i = s + 1;
                            while i <= m {
                                fenwick[i] -= 1;
                                i += i & i.wrapping_neg();
                            }
                        }
                    }
                }
                n
            }
            Coverage::Buckets { space, pts, indices, covered } => {
                let p = space.coords(pts[k]).unwrap();
                let mut n = 0;
                let mut hits = Vec::new();
                indices[ri].for_each_candidate(p, r, |j| {
                    if !covered[j] && space.distance(pts[k], pts[j]) < r {
                        n += 1;
                        if mark {
                            hits.push(j);
                        }
                    }
                });
                for j in hits {
                    covered[j] = true;
                }
                n
            }
            Coverage::Scan { space, pts, covered } => {
                let mut n = 0;
                for j in 0..pts.len() {
                    if !covered[j] && space.distance(pts[k], pts[j]) < r {
                        n += 1;
                        if mark {
                            covered[j] = true;
                        }
                    }
                }
                n
            }
        }
    }
}

/// Radii `r_max 2^(-k)` down to the resolution scale.
pub fn hausdorff_radii(space: &DiscreteSpace, r_max: f64) -> Vec<f64> {
    let h = space.resolution_h();
    let mut out = Vec::new();
    let mut r = r_max;
    while r >= h * (1.0 - 1e-12) {
        out.push(r);
        r /= 2.0;
    }
    out
}

/// Greedy multiscale cover of `S` by balls centred in `S` with dyadic radii at
/// most `r_max`, each step minimising `mu(B) / rad^t` per newly covered point.
/// The single-scale net at `r_max` is also a valid cover; the cheaper one is returned.
pub fn hausdorff_content(space: &DiscreteSpace, set: &[u8], t: f64, r_max: f64) -> Result<ContentResult> {
    space.check_set(set)?;
    check_radius(space, r_max)?;
    let pts = members(set);
    if pts.is_empty() {
        return invalid("empty set has no content");
    }
    let radii = hausdorff_radii(space, r_max);
    let masses: Vec<Vec<f64>> = if pts.len() > 2000 && space.grid().is_some() {
        radii
            .iter()
            .map(|&r| {
                let all = masked_ball_masses(space, None, r);
                pts.iter().map(|&p| all[p]).collect()
            })
            .collect()
    } else {
        radii
            .iter()
            .map(|&r| pts.iter().map(|&p| space.ball_measure_unchecked(p, r)).collect())
            .collect()
    };
    let mut cov = Coverage::new(space, &pts, &radii);
    let mut heap = BinaryHeap::new();
    for (ri, &r) in radii.iter().enumerate() {
        let cost = r.powf(-t);
        for k in 0..pts.len() {
            let fresh = cov.count(k, ri, r, false);
            let score = masses[ri][k] * cost / fresh as f64;
            heap.push(Reverse((Score(score), k, ri)));
        }
    }
    let mut remaining = pts.len();
    let mut value = 0.0;
    let mut cover = Vec::new();
    while remaining > 0 {
        let Some(Reverse((_, k, ri))) = heap.pop() else { break };
        let r = radii[ri];
        let fresh = cov.count(k, ri, r, false);
        if fresh == 0 {
            continue;
        }
        let cost = masses[ri][k] * r.powf(-t);
        let score = Score(cost / fresh as f64);
        if let Some(Reverse((top, _, _))) = heap.peek() {
            if score > *top {
                heap.push(Reverse((score, k, ri)));
                continue;
            }
        }
        cov.count(k, ri, r, true);
        remaining -= fresh;
        value += cost;
        cover.push((pts[k], r));
    }
    let single = minkowski_content(space, set, t, r_max)?;
    if single.value < value {
        return Ok(single);
    }
    Ok(ContentResult { value, cover })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodimStatus {
    Bracketed,
    /// Every grid value was classified finite.
    AboveGrid,
    /// Every grid value was classified divergent.
    BelowGrid,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct CodimEstimate {
    pub estimate: f64,
    pub bracket: [f64; 2],
    pub status: CodimStatus,
    /// Range of zero crossings of the two-point slopes between neighbouring middle scales.
    pub spread: [f64; 2],
    /// Decreasing radii.
    pub scales: Vec<f64>,
    /// Contents at the estimate, matching `scales`.
    pub contents: Vec<f64>,
    /// Regression slope at the estimate.
    pub slope: f64,
    pub t_grid: Vec<f64>,
    pub slopes: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CodimParams {
    /// Slopes at or above `-slope_tol` count as bounded contents.
    pub slope_tol: f64,
    pub bisection_steps: usize,
}

impl Default for CodimParams {
    fn default() -> Self {
        CodimParams { slope_tol: 0.01, bisection_steps: 6 }
    }
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Codimension from contents over a scale grid: the exponent `t` at which the
/// log-log slope of the content in `r` changes from bounded to divergent.
pub fn estimate_codimension(
    scales: &[f64],
    t_grid: &[f64],
    params: &CodimParams,
    mut content: impl FnMut(f64) -> Result<Vec<f64>>,
) -> Result<CodimEstimate> {
    if scales.len() < 4 {
        return invalid("codimension estimates need at least 4 scales");
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("t grid must be nonempty and increasing");
    }
    let mut order: Vec<usize> = (0..scales.len()).collect();
    order.sort_by(|&a, &b| scales[b].total_cmp(&scales[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| scales[i]).collect();
    let logs: Vec<f64> = sorted[1..sorted.len() - 1].iter().map(|r| r.ln()).collect();
    let mut eval = |t: f64| -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let c = content(t)?;
        if c.len() != scales.len() {
            return invalid("content function returned the wrong number of values");
        }
        let cs: Vec<f64> = order.iter().map(|&i| c[i]).collect();
        if cs.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain("contents must be positive and finite".into()));
        }
        let ly: Vec<f64> = cs[1..cs.len() - 1].iter().map(|v| v.ln()).collect();
        let pair: Vec<f64> = logs.windows(2).zip(ly.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])).collect();
        Ok((ols_slope(&logs, &ly), pair, cs))
    };
    let mut slopes = Vec::with_capacity(t_grid.len());
    let mut pairs = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let (s, p, _) = eval(t)?;
        slopes.push(s);
        pairs.push(p);
    }
    let finite: Vec<bool> = slopes.iter().map(|&s| s >= -params.slope_tol).collect();
    let switches = finite.windows(2).filter(|w| w[0] != w[1]).count();
    let tmax = *t_grid.last().unwrap();
    let (status, bracket) = if switches > 1 || (switches == 1 && !finite[0]) {
        (CodimStatus::Inconclusive, [t_grid[0], tmax])
    } else if switches == 0 && finite[0] {
        (CodimStatus::AboveGrid, [tmax, tmax])
    } else if switches == 0 {
        (CodimStatus::BelowGrid, [t_grid[0].min(0.0), t_grid[0]])
    } else {
        let k = finite.iter().position(|f| !f).unwrap();
        (CodimStatus::Bracketed, [t_grid[k - 1], t_grid[k]])
    };
    let mut estimate = 0.5 * (bracket[0] + bracket[1]);
    if status == CodimStatus::Bracketed {
        let (mut lo, mut hi) = (bracket[0], bracket[1]);
        for _ in 0..params.bisection_steps {
            let mid = 0.5 * (lo + hi);
            let (s, _, _) = eval(mid)?;
            if s >= -params.slope_tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        estimate = 0.5 * (lo + hi);
    }
    let npairs = pairs[0].len();
    let mut spread = [f64::INFINITY, f64::NEG_INFINITY];
    for p in 0..npairs {
        let mut cross = None;
        for k in 1..t_grid.len() {
            let (a, b) = (pairs[k - 1][p] + params.slope_tol, pairs[k][p] + params.slope_tol);
            if a >= 0.0 && b < 0.0 {
                cross = Some(t_grid[k - 1] + (t_grid[k] - t_grid[k - 1]) * a / (a - b));
                break;
            }
        }
        let c = cross.unwrap_or(if pairs[0][p] + params.slope_tol < 0.0 { t_grid[0] } else { tmax });
        spread[0] = spread[0].min(c);
        spread[1] = spread[1].max(c);
    }
    let (slope, _, contents) = eval(estimate)?;
    Ok(CodimEstimate {
        estimate,
        bracket,
        status,
        spread,
        scales: sorted,
        contents,
        slope,
        t_grid: t_grid.to_vec(),
        slopes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesClass {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioSample {
    pub s: f64,
    pub ratio: f64,
    pub class: SeriesClass,
    pub partial: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FractionalCodim {
    pub bracket: [f64; 2],
    pub status: CodimStatus,
    pub samples: Vec<RatioSample>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RatioParams {
    /// Ratios within `1 +- margin` are inconclusive.
    pub margin: f64,
    /// Number of trailing successive ratios averaged geometrically; 0 uses all.
    pub tail: usize,
}

impl Default for RatioParams {
    fn default() -> Self {
        RatioParams { margin: 0.02, tail: 3 }
    }
}

/// Geometric mean of the trailing successive ratios of a positive sequence.
pub fn tail_ratio(partial: &[f64], tail: usize) -> Result<f64> {
    if partial.len() < 2 {
        return invalid("need at least two partial energies");
    }
    if partial.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::Domain("partial energies must be positive".into()));
    }
    let ratios: Vec<f64> = partial.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let k = if tail == 0 { ratios.len() } else { tail.min(ratios.len()) };
    let tail = &ratios[ratios.len() - k..];
    Ok((tail.iter().sum::<f64>() / k as f64).exp())
}

/// Ratio test on depth-indexed partial energies over an `s` grid.
/// `codim_F` is bracketed between the largest convergent and the smallest divergent `s`.
pub fn fractional_codimension(
    mut energies: impl FnMut(f64) -> Result<Vec<f64>>,
    s_grid: &[f64],
    params: &RatioParams,
) -> Result<FractionalCodim> {
    if s_grid.is_empty() || s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("s grid must be nonempty and increasing");
    }
    let mut samples = Vec::new();
    for &s in s_grid {
        let partial = energies(s)?;
        let ratio = tail_ratio(&partial, params.tail)?;
        let class = if ratio <= 1.0 - params.margin {
            SeriesClass::Convergent
        } else if ratio >= 1.0 + params.margin {
            SeriesClass::Divergent
        } else {
            SeriesClass::Inconclusive
        };
        samples.push(RatioSample { s, ratio, class, partial });
    }
    let last_conv = samples.iter().rposition(|x| x.class == SeriesClass::Convergent);
    let first_div = samples.iter().position(|x| x.class == SeriesClass::Divergent);
    let (status, bracket) = match (last_conv, first_div) {
        (Some(c), Some(d)) if c < d => (CodimStatus::Bracketed, [samples[c].s, samples[d].s]),
        (Some(_), Some(_)) => (CodimStatus::Inconclusive, [s_grid[0], *s_grid.last().unwrap()]),
        (Some(c), None) => (CodimStatus::AboveGrid, [samples[c].s, 1.0]),
        (None, Some(d)) => (CodimStatus::BelowGrid, [0.0, samples[d].s]),
        (None, None) => (CodimStatus::Inconclusive, [0.0, 1.0]),
    };
    Ok(FractionalCodim { bracket, status, samples })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainParams {
    pub t_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// Radii for the Minkowski estimate of the regularized boundary.
    pub minkowski_scales: Option<Vec<f64>>,
    /// Values of `r_max` for the Hausdorff estimate of the measure-theoretic boundary.
    pub hausdorff_scales: Option<Vec<f64>>,
    /// Shell range `[r_lo, r_hi)` for grid shell energies when no energy function is given.
    pub shell_range: Option<(f64, f64)>,
    /// The Minkowski content at radius `r` is taken of the regularized boundary at
    /// scale `max(scale_min, boundary_ratio * r)`; 0 keeps `scale_min` at every radius.
    pub boundary_ratio: f64,
    pub codim: CodimParams,
    pub ratio: RatioParams,
}

impl ChainParams {
    pub fn new(t_grid: Vec<f64>, s_grid: Vec<f64>) -> Self {
        ChainParams {
            t_grid,
            s_grid,
            minkowski_scales: None,
            hausdorff_scales: None,
            shell_range: None,
            boundary_ratio: 0.125,
            codim: CodimParams::default(),
            ratio: RatioParams::default(),
        }
    }
}

/// `steps + 1` evenly spaced values from `lo` to `hi`.
pub fn uniform_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainStatus {
    Pass,
    Fail,
    /// Some sub-estimate was inconclusive.
    Partial,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub spec: BoundarySpec,
    pub regularized_points: usize,
    pub measure_theoretic_points: usize,
    pub minkowski: CodimEstimate,
    pub fractional: FractionalCodim,
    pub hausdorff: CodimEstimate,
    pub status: ChainStatus,
}

/// Minkowski sums `sum_i mu(B(x_i, r))` of the regularized boundary taken at scale
/// `max(scale_min, ratio * r)`, one per radius.
pub fn regularized_minkowski_sums(
    space: &DiscreteSpace,
    set: &[u8],
    spec: &BoundarySpec,
    scales: &[f64],
    ratio: f64,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&ratio) {
        return invalid(format!("boundary ratio must lie in [0, 1], got {ratio}"));
    }
    scales
        .iter()
        .map(|&r| {
            let sm = spec.scale_min.max(ratio * r);
            let local = BoundarySpec { scale_min: sm, scale_max: spec.scale_max.max(2.0 * sm), delta: spec.delta };
            let reg = regularized_boundary(space, set, &local)?;
            Ok(minkowski_sum(space, &reg, r)?.value)
        })
        .collect()
}

/// Minkowski codimension of the regularized boundary, fractional codimension of `E`
/// and Hausdorff codimension of the measure-theoretic boundary, with the ordering
/// `codim_M <= codim_F <= codim_H` checked up to bracket widths.
///
/// `energies` supplies depth-indexed partial energies; without it grid shell energies are used.
pub fn codim_chain_report(
    space: &DiscreteSpace,
    set: &[u8],
    spec: &BoundarySpec,
    params: &ChainParams,
    energies: Option<&mut dyn FnMut(f64) -> Result<Vec<f64>>>,
) -> Result<ChainReport> {
    space.check_set(set)?;
    spec.validate(space)?;
    if set.iter().all(|&v| v == 0) || set.iter().all(|&v| v == 1) {
        return invalid("chain report needs a nontrivial set");
    }
    let reg = regularized_boundary(space, set, spec)?;
    let mtb = measure_theoretic_boundary(space, set, spec)?;
    let count = |s: &[u8]| s.iter().filter(|&&v| v == 1).count();
    if count(&mtb) == 0 {
        return invalid("measure-theoretic boundary is empty at this resolution");
    }
    let top = space.diameter() / 8.0;
    let mscales = params.minkowski_scales.clone().unwrap_or_else(|| dyadic_scales(8.0 * spec.scale_min, top));
    let hscales = params.hausdorff_scales.clone().unwrap_or_else(|| dyadic_scales(2.0 * spec.scale_min, top));
    let sums = if params.boundary_ratio == 0.0 {
        mscales.iter().map(|&r| minkowski_sum(space, &reg, r).map(|c| c.value)).collect::<Result<Vec<_>>>()?
    } else {
        regularized_minkowski_sums(space, set, spec, &mscales, params.boundary_ratio)?
    };
    let minkowski = estimate_codimension(&mscales, &params.t_grid, &params.codim, |t| {
        Ok(mscales.iter().zip(&sums).map(|(&r, &m)| r.powf(-t) * m).collect())
    })?;
    let hausdorff = estimate_codimension(&hscales, &params.t_grid, &params.codim, |t| {
        hscales.iter().map(|&r| hausdorff_content(space, &mtb, t, r).map(|c| c.value)).collect()
    })?;
    let fractional = match energies {
        Some(f) => fractional_codimension(f, &params.s_grid, &params.ratio)?,
        None => {
            let (lo, hi) = params.shell_range.unwrap_or((8.0 * space.resolution_h(), top));
            let shells = crate::shells::ShellEnergies::new(space, set, lo, hi)?;
            fractional_codimension(|s| shells.energies(s), &params.s_grid, &params.ratio)?
        }
    };
    let inconclusive = [minkowski.status, hausdorff.status, fractional.status].contains(&CodimStatus::Inconclusive);
    let ordered = minkowski.bracket[0] <= fractional.bracket[1] && fractional.bracket[0] <= hausdorff.bracket[1];
    let status = if inconclusive {
        ChainStatus::Partial
    } else if ordered {
        ChainStatus::Pass
    } else {
        ChainStatus::Fail
    };
    Ok(ChainReport {
        spec: *spec,
        regularized_points: count(&reg),
        measure_theoretic_points: count(&mtb),
        minkowski,
        fractional,
        hausdorff,
        status,
    })
}
