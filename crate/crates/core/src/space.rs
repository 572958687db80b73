//! Finite metric measure spaces with a resolution scale.

use crate::error::{invalid, Error, Result};
use crate::index::BucketIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Largest table size accepted for explicit distance matrices.
pub const MAX_TABLE_POINTS: usize = 4096;

#[derive(Debug, Clone)]
enum Metric {
    Euclidean { dim: usize, coords: Vec<f64> },
    Table { dist: Vec<f64> },
}

/// Regular lattice layout: `n` points per axis at cell centres, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridInfo {
    pub dim: usize,
    pub n: usize,
    pub origin: [f64; 2],
    pub spacing: f64,
}

impl GridInfo {
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn coord(&self, idx: usize, axis: usize) -> f64 {
        let i = if axis == 0 { idx % self.n } else { idx / self.n };
        self.origin[axis] + (i as f64 + 0.5) * self.spacing
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteSpace {
    metric: Metric,
    weights: Vec<f64>,
    h: f64,
    diameter: f64,
    total: f64,
    grid: Option<GridInfo>,
    index: Option<BucketIndex>,
    line: Option<LineIndex>,
}

#[derive(Debug, Clone)]
struct LineIndex {
    order: Vec<u32>,
    sorted: Vec<f64>,
    prefix: Vec<f64>,
}

/// On-disk representation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceFile {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub resolution_h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<f64>>,
}

fn check_common(weights: &[f64], h: f64) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidSpace("empty space".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidSpace(format!("resolution_h must be positive, got {h}")));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidSpace(format!("weight {i} must be positive, got {w}")));
        }
    }
    Ok(())
}

impl DiscreteSpace {
    /// Euclidean point cloud. `coords` is row-major with `dim` values per point.
    pub fn from_coords(coords: Vec<f64>, dim: usize, weights: Vec<f64>, h: f64) -> Result<Self> {
        Self::from_coords_with_grid(coords, dim, weights, h, None)
    }

    pub(crate) fn from_coords_with_grid(
        coords: Vec<f64>,
        dim: usize,
        weights: Vec<f64>,
        h: f64,
        grid: Option<GridInfo>,
    ) -> Result<Self> {
        check_common(&weights, h)?;
        if dim == 0 || coords.len() != dim * weights.len() {
            return Err(Error::InvalidSpace(format!(
                "expected {} coordinates of dimension {dim}, got {}",
                weights.len(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpace("non-finite coordinate".into()));
        }
        let n = weights.len();
        let index = if dim <= 3 {
            Some(BucketIndex::build(&coords, dim, h.max(1e-300)))
        } else {
            None
        };
        let line = (dim == 1).then(|| {
            let mut order: Vec<u32> = (0..n as u32).collect();
            order.sort_by(|&a, &b| coords[a as usize].total_cmp(&coords[b as usize]));
            let sorted: Vec<f64> = order.iter().map(|&i| coords[i as usize]).collect();
            let mut prefix = Vec::with_capacity(n + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for &i in &order {
                acc += weights[i as usize];
                prefix.push(acc);
            }
            LineIndex { order, sorted, prefix }
        });
        let total = weights.iter().sum();
        let grid = grid.or_else(|| detect_grid(&coords, dim, &weights, h));
        let mut space = DiscreteSpace {
            metric: Metric::Euclidean { dim, coords },
            weights,
            h,
            diameter: 0.0,
            total,
            grid,
            index,
            line,
        };
        space.check_separation()?;
        space.diameter = space.compute_diameter();
        Ok(space)
    }

    /// Explicit symmetric distance table given as a dense `n * n` matrix.
    pub fn from_table(dist: Vec<f64>, weights: Vec<f64>, h: f64) -> Result<Self> {
        check_common(&weights, h)?;
        let n = weights.len();
        if n > MAX_TABLE_POINTS {
            return Err(Error::InvalidSpace(format!(
                "distance tables are limited to {MAX_TABLE_POINTS} points"
            )));
        }
        if dist.len() != n * n {
            return Err(Error::InvalidSpace("distance table has wrong size".into()));
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::InvalidSpace(format!("d({i},{i}) must be 0")));
            }
            for j in i + 1..n {
                let d = dist[i * n + j];
                if d != dist[j * n + i] {
                    return Err(Error::InvalidSpace(format!("asymmetric distance at ({i},{j})")));
                }
                if !(d > 0.0 && d.is_finite()) {
                    return Err(Error::InvalidSpace(format!("d({i},{j}) must be positive")));
                }
            }
        }
        check_triangle(&dist, n)?;
        let total = weights.iter().sum();
        let mut space = DiscreteSpace {
            metric: Metric::Table { dist },
            weights,
            h,
            diameter: 0.0,
            total,
            grid: None,
            index: None,
            line: None,
        };
        space.check_separation()?;
        space.diameter = space.compute_diameter();
        Ok(space)
    }

    pub fn from_file_struct(f: SpaceFile) -> Result<Self> {
        let n = f.weights.len();
        match f.metric.as_deref().unwrap_or("euclidean") {
            "euclidean" => {
                if f.points.len() != n {
                    return Err(Error::InvalidSpace("points and weights differ in length".into()));
                }
                let dim = f.points.first().map(|p| p.len()).unwrap_or(0);
                if f.points.iter().any(|p| p.len() != dim) {
                    return Err(Error::InvalidSpace("ragged coordinate arrays".into()));
                }
                let coords = f.points.into_iter().flatten().collect();
                Self::from_coords(coords, dim, f.weights, f.resolution_h)
            }
            "table" => {
                let upper = f
                    .distances
                    .ok_or_else(|| Error::InvalidSpace("table metric needs distances".into()))?;
                if upper.len() != n * n.saturating_sub(1) / 2 {
                    return Err(Error::InvalidSpace(format!(
                        "expected {} upper-triangle distances, got {}",
                        n * n.saturating_sub(1) / 2,
                        upper.len()
                    )));
                }
                let mut dist = vec![0.0; n * n];
                let mut k = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        dist[i * n + j] = upper[k];
                        dist[j * n + i] = upper[k];
                        k += 1;
                    }
                }
                Self::from_table(dist, f.weights, f.resolution_h)
            }
            other => Err(Error::InvalidSpace(format!("unknown metric '{other}'"))),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let f: SpaceFile = serde_json::from_str(&text)?;
        Self::from_file_struct(f)
    }

    pub fn to_file_struct(&self) -> SpaceFile {
        match &self.metric {
            Metric::Euclidean { dim, coords } => SpaceFile {
                points: coords.chunks(*dim).map(|c| c.to_vec()).collect(),
                weights: self.weights.clone(),
                resolution_h: self.h,
                metric: None,
                distances: None,
            },
            Metric::Table { dist } => {
                let n = self.len();
                let mut upper = Vec::with_capacity(n * (n - 1) / 2);
                for i in 0..n {
                    for j in i + 1..n {
                        upper.push(dist[i * n + j]);
                    }
                }
                SpaceFile {
                    points: vec![Vec::new(); n],
                    weights: self.weights.clone(),
                    resolution_h: self.h,
                    metric: Some("table".into()),
                    distances: Some(upper),
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn resolution_h(&self) -> f64 {
        self.h
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn grid(&self) -> Option<&GridInfo> {
        self.grid.as_ref()
    }

    /// Coordinate dimension, `None` for table metrics.
    pub fn dim(&self) -> Option<usize> {
        match &self.metric {
            Metric::Euclidean { dim, .. } => Some(*dim),
            Metric::Table { .. } => None,
        }
    }

    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        match &self.metric {
            Metric::Euclidean { dim, coords } => Some(&coords[i * dim..(i + 1) * dim]),
            Metric::Table { .. } => None,
        }
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match &self.metric {
            Metric::Euclidean { dim, coords } => {
                let (a, b) = (&coords[i * dim..(i + 1) * dim], &coords[j * dim..(j + 1) * dim]);
                if *dim == 1 {
                    (a[0] - b[0]).abs()
                } else {
                    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
                }
            }
            Metric::Table { dist } => dist[i * self.weights.len() + j],
        }
    }

    /// Calls `f(j, d(i, j))` for every point of the open ball `B(i, r)`, including `i`.
    pub fn for_each_in_ball(&self, i: usize, r: f64, mut f: impl FnMut(usize, f64)) {
        if let Some(line) = &self.line {
            let x = self.coords(i).unwrap()[0];
            let n = line.sorted.len();
            let start = line.sorted.partition_point(|&v| v <= x - r);
            let start = start.saturating_sub(1);
            for k in start..n {
                let v = line.sorted[k];
                if v - x >= r {
                    break;
                }
                let d = (v - x).abs();
                if d < r {
                    f(line.order[k] as usize, d);
                }
            }
            return;
        }
        if let (Some(index), Metric::Euclidean { .. }) = (&self.index, &self.metric) {
            let p = self.coords(i).unwrap();
            index.for_each_candidate(p, r, |j| {
                let d = self.distance(i, j);
                if d < r {
                    f(j, d);
                }
            });
            return;
        }
        for j in 0..self.len() {
            let d = self.distance(i, j);
            if d < r {
                f(j, d);
            }
        }
    }

    /// Weight of the open ball `B(i, r)`.
    pub fn ball_measure(&self, i: usize, r: f64) -> Result<f64> {
        if i >= self.len() {
            return invalid(format!("point index {i} out of range"));
        }
        if !(r > 0.0) || r.is_nan() {
            return Err(Error::InvalidScale { scale: r, lo: 0.0, hi: f64::INFINITY });
        }
        Ok(self.ball_measure_unchecked(i, r))
    }

    pub(crate) fn ball_measure_unchecked(&self, i: usize, r: f64) -> f64 {
        if r > self.diameter {
            return self.total;
        }
        if let Some(line) = &self.line {
            let x = self.coords(i).unwrap()[0];
            let lo = line.sorted.partition_point(|&v| !(x - v < r) && v < x);
            let hi = line.sorted.partition_point(|&v| v < x || v - x < r);
            return line.prefix[hi] - line.prefix[lo];
        }
        let mut m = 0.0;
        self.for_each_in_ball(i, r, |j, _| m += self.weights[j]);
        m
    }

    fn check_separation(&self) -> Result<()> {
        let half = self.h / 2.0;
        let n = self.len();
        if let Some(line) = &self.line {
            for k in 1..line.sorted.len() {
                if line.sorted[k] - line.sorted[k - 1] < half {
                    return Err(Error::InvalidSpace(format!(
                        "points {} and {} are closer than resolution_h/2",
                        line.order[k - 1],
                        line.order[k]
                    )));
                }
            }
            return Ok(());
        }
        if self.grid.is_some() {
            return Ok(());
        }
        let mut bad = None;
        for i in 0..n {
            self.for_each_in_ball(i, half, |j, _| {
                if j != i && bad.is_none() {
                    bad = Some((i, j));
                }
            });
            if let Some((a, b)) = bad {
                return Err(Error::InvalidSpace(format!(
                    "points {a} and {b} are closer than resolution_h/2"
                )));
            }
        }
        Ok(())
    }

    fn compute_diameter(&self) -> f64 {
        let n = self.len();
        if let Some(line) = &self.line {
            return line.sorted[n - 1] - line.sorted[0];
        }
        if let Some(g) = &self.grid {
            return g.spacing * (g.n as f64 - 1.0) * (g.dim as f64).sqrt();
        }
        match &self.metric {
            Metric::Euclidean { dim: 2, coords } if n > 64 => {
                let hull = convex_hull(coords);
                let mut best = 0.0f64;
                for a in 0..hull.len() {
                    for b in a + 1..hull.len() {
                        best = best.max(self.distance(hull[a], hull[b]));
                    }
                }
                best
            }
            _ => {
                let mut best = 0.0f64;
                for i in 0..n {
                    for j in i + 1..n {
                        best = best.max(self.distance(i, j));
                    }
                }
                best
            }
        }
    }

    /// Validates a 0/1 membership vector.
    pub fn check_set(&self, set: &[u8]) -> Result<()> {
        if set.len() != self.len() {
            return invalid(format!("set has length {}, space has {} points", set.len(), self.len()));
        }
        if set.iter().any(|&v| v > 1) {
            return invalid("set entries must be 0 or 1");
        }
        Ok(())
    }

    pub fn set_measure(&self, set: &[u8]) -> f64 {
        set.iter().zip(&self.weights).filter(|(s, _)| **s == 1).map(|(_, w)| w).sum()
    }
}

fn detect_grid(coords: &[f64], dim: usize, weights: &[f64], h: f64) -> Option<GridInfo> {
    if dim > 2 {
        return None;
    }
    let n_total = weights.len();
    let n = if dim == 1 { n_total } else { (n_total as f64).sqrt().round() as usize };
    if n < 2 || n.pow(dim as u32) != n_total {
        return None;
    }
    let spacing = coords[dim] - coords[0];
    if !(spacing > 0.0) || (spacing - h).abs() > 1e-9 * h {
        return None;
    }
    let w0 = weights[0];
    if weights.iter().any(|&w| (w - w0).abs() > 1e-12 * w0) {
        return None;
    }
    let origin = [coords[0] - 0.5 * spacing, if dim == 2 { coords[1] - 0.5 * spacing } else { 0.0 }];
    let g = GridInfo { dim, n, origin, spacing };
    for idx in 0..n_total {
        for axis in 0..dim {
            if (g.coord(idx, axis) - coords[idx * dim + axis]).abs() > 1e-9 * spacing {
                return None;
            }
        }
    }
    Some(g)
}

fn convex_hull(coords: &[f64]) -> Vec<usize> {
    let n = coords.len() / 2;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        coords[2 * a]
            .total_cmp(&coords[2 * b])
            .then(coords[2 * a + 1].total_cmp(&coords[2 * b + 1]))
    });
    let cross = |o: usize, a: usize, b: usize| {
        (coords[2 * a] - coords[2 * o]) * (coords[2 * b + 1] - coords[2 * o + 1])
            - (coords[2 * a + 1] - coords[2 * o + 1]) * (coords[2 * b] - coords[2 * o])
    };
    let mut hull: Vec<usize> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let seq: Box<dyn Iterator<Item = &usize>> =
            if pass == 0 { Box::new(idx.iter()) } else { Box::new(idx.iter().rev()) };
        for &p in seq {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn check_triangle(dist: &[f64], n: usize) -> Result<()> {
    let tol = 1e-12;
    let test = |i: usize, j: usize, k: usize| -> Result<()> {
        let (a, b, c) = (dist[i * n + j], dist[j * n + k], dist[i * n + k]);
        if c > (a + b) * (1.0 + tol) {
            return Err(Error::InvalidSpace(format!("triangle inequality fails for ({i},{j},{k})")));
        }
        Ok(())
    };
    if n <= 160 {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    test(i, j, k)?;
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7269_616e);
        for _ in 0..400_000 {
            test(rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))?;
        }
    }
    Ok(())
}

/// Largest observed ratio `mu(B(x, 2r)) / mu(B(x, r))` over all centres and the given scales.
pub fn doubling_estimate(space: &DiscreteSpace, scales: &[f64]) -> Result<f64> {
    doubling_estimate_sampled(space, scales, usize::MAX)
}

/// As [`doubling_estimate`], visiting at most `max_centers` evenly strided centres.
pub fn doubling_estimate_sampled(space: &DiscreteSpace, scales: &[f64], max_centers: usize) -> Result<f64> {
    if scales.is_empty() {
        return invalid("no scales given");
    }
    for &r in scales {
        if !(r >= space.h) || r > space.diameter.max(space.h) {
            return Err(Error::InvalidScale { scale: r, lo: space.h, hi: space.diameter });
        }
    }
    let n = space.len();
    let stride = (n / max_centers.max(1)).max(1);
    let mut best = 1.0f64;
    for i in (0..n).step_by(stride) {
        for &r in scales {
            let a = space.ball_measure_unchecked(i, r);
            let b = space.ball_measure_unchecked(i, 2.0 * r);
            best = best.max(b / a);
        }
    }
    Ok(best)
}

/// Dyadic scales `r0 * 2^k` within `[lo, hi]`.
pub fn dyadic_scales(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = lo;
    while r <= hi * (1.0 + 1e-12) {
        out.push(r);
        r *= 2.0;
    }
    out
}
