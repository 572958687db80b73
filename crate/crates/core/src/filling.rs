//! Hyperbolic filling of a finite base space, its uniformized metric and the measure `mu_beta`.
//!
//! Vertices are `(x, n)` with `x` in a maximal `alpha^-n`-separated net `A_n` of the base.
//! Every edge is a unit interval; the uniformized length element is
//! `exp(-eps d_X(., v0))` with `eps = ln(alpha)`, and `mu_beta` spreads
//! `mu_hat(v) + mu_hat(w)` over each edge for both orientations of the pair.

use crate::error::{invalid, Error, Result};
use crate::space::DiscreteSpace;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FillingParams {
    pub alpha: f64,
    pub tau: f64,
    pub levels: usize,
    pub beta: f64,
}

impl FillingParams {
    /// Parameters with `beta = ratio * ln(alpha)`.
    pub fn with_beta_ratio(alpha: f64, tau: f64, levels: usize, ratio: f64) -> Self {
        FillingParams { alpha, tau, levels, beta: ratio * alpha.ln() }
    }

    pub fn epsilon(&self) -> f64 {
        self.alpha.ln()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return invalid(format!("alpha must exceed 1, got {}", self.alpha));
        }
        if !(self.tau > 1.0 && self.tau.is_finite()) {
            return invalid(format!("tau must exceed 1, got {}", self.tau));
        }
        let eps = self.epsilon();
        if !(self.beta > 0.0 && self.beta <= eps * (1.0 + 1e-12)) {
            return invalid(format!("beta must lie in (0, ln alpha], got {}", self.beta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Vertex {
    /// Base point index.
    pub point: usize,
    pub level: usize,
    /// `exp(-beta n) nu(B(z, alpha^-n))`.
    pub weight: f64,
    /// Combinatorial distance to the root.
    pub depth: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FillingEdge {
    pub a: usize,
    pub b: usize,
    /// Uniformized length of the edge.
    pub length: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperbolicFilling {
    pub params: FillingParams,
    /// Factor applied to base distances so that the diameter is below 1.
    pub scale: f64,
    pub nets: Vec<Vec<usize>>,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<FillingEdge>,
    /// `sum_{n >= N} exp(-eps n)(1 - exp(-eps))/eps = exp(-eps N)/eps`.
    pub attach_radius: f64,
    /// Deepest-level vertex attached to each base point.
    pub attach: Vec<usize>,
    #[serde(skip)]
    adj: Vec<Vec<(usize, usize)>>,
    #[serde(skip)]
    base_measure: Vec<f64>,
    /// `nu(B(x, alpha^-n))` along the ray of each base point for `n = N+1 ..`, until only `x` remains.
    #[serde(skip)]
    ray_balls: Vec<Vec<f64>>,
    #[serde(skip)]
    ray_total: Vec<f64>,
}

/// `int_a^b exp(-eps (c + u)) du`.
fn rising(eps: f64, c: f64, a: f64, b: f64) -> f64 {
    (-eps * c).exp() * ((-eps * a).exp() - (-eps * b).exp()) / eps
}

/// Uniformized arc length from the end at combinatorial depth `dv` to parameter `t`,
/// the other end being at depth `dw`.
fn arc(eps: f64, dv: f64, dw: f64, t: f64) -> f64 {
    let m = ((dw - dv + 1.0) / 2.0).clamp(0.0, 1.0);
    if t <= m {
        return rising(eps, dv, 0.0, t);
    }
    // past the midpoint the distance to the root is dw + 1 - u
    let tail = (-eps * (dw + 1.0)).exp() * ((eps * t).exp() - (eps * m).exp()) / eps;
    rising(eps, dv, 0.0, m) + tail
}

/// Largest parameter `t` with `arc(t) <= budget`.
fn arc_inverse(eps: f64, dv: f64, dw: f64, budget: f64) -> f64 {
    if budget <= 0.0 {
        return 0.0;
    }
    if arc(eps, dv, dw, 1.0) <= budget {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if arc(eps, dv, dw, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn greedy_level_net(base: &DiscreteSpace, scale: f64, sep: f64) -> Vec<usize> {
    let mut net: Vec<usize> = Vec::new();
    for p in 0..base.len() {
        if net.iter().all(|&q| scale * base.distance(p, q) >= sep) {
            net.push(p);
        }
    }
    net
}

impl HyperbolicFilling {
    pub fn build(base: &DiscreteSpace, params: FillingParams) -> Result<Self> {
        params.validate()?;
        let diam = base.diameter();
        let scale = if diam < 1.0 { 1.0 } else { 0.5 / diam };
        let a = params.alpha;
        let floor = 2.0 * scale * base.resolution_h();
        if a.powi(-(params.levels as i32)) < floor * (1.0 - 1e-12) {
            return Err(Error::Budget(format!(
                "alpha^-{} is below twice the resolution {}",
                params.levels, floor
            )));
        }
        let mut nets = vec![vec![0usize]];
        for n in 1..=params.levels {
            nets.push(greedy_level_net(base, scale, a.powi(-(n as i32))));
        }
        let mut vertices = Vec::new();
        let mut first = Vec::new();
        for (n, net) in nets.iter().enumerate() {
            first.push(vertices.len());
            let r = a.powi(-(n as i32));
            for &p in net {
                let w = (-params.beta * n as f64).exp() * base.ball_measure_unchecked(p, r / scale);
                vertices.push(Vertex { point: p, level: n, weight: w, depth: 0 });
            }
        }
        let mut pairs = Vec::new();
        for n in 0..nets.len() {
            let rn = a.powi(-(n as i32));
            for (i, &x) in nets[n].iter().enumerate() {
                for (j, &y) in nets[n].iter().enumerate().skip(i + 1) {
                    if scale * base.distance(x, y) <= 2.0 * params.tau * rn {
                        pairs.push((first[n] + i, first[n] + j));
                    }
                }
                if n + 1 < nets.len() {
                    let rm = rn / a;
                    for (j, &y) in nets[n + 1].iter().enumerate() {
                        if scale * base.distance(x, y) < rn + rm {
                            pairs.push((first[n] + i, first[n + 1] + j));
                        }
                    }
                }
            }
        }
        let nv = vertices.len();
        let mut adj = vec![Vec::new(); nv];
        for (e, &(u, v)) in pairs.iter().enumerate() {
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
        let mut depth = vec![usize::MAX; nv];
        depth[0] = 0;
        let mut q = VecDeque::from([0usize]);
        while let Some(u) = q.pop_front() {
            for &(v, _) in &adj[u] {
                if depth[v] == usize::MAX {
                    depth[v] = depth[u] + 1;
                    q.push_back(v);
                }
            }
        }
        if depth.contains(&usize::MAX) {
            return Err(Error::Domain("filling graph is disconnected".into()));
        }
        for (v, d) in vertices.iter_mut().zip(&depth) {
            v.depth = *d;
        }
        let eps = params.epsilon();
        let edges = pairs
            .iter()
            .map(|&(u, v)| FillingEdge { a: u, b: v, length: arc(eps, depth[u] as f64, depth[v] as f64, 1.0) })
            .collect();
        let deep = nets.last().unwrap();
        let deep_first = first[nets.len() - 1];
        let attach = (0..base.len())
            .map(|p| {
                let mut best = (f64::INFINITY, 0usize);
                for (k, &x) in deep.iter().enumerate() {
                    let d = base.distance(p, x);
                    if d < best.0 {
                        best = (d, k);
                    }
                }
                deep_first + best.1
            })
            .collect();
        let ray_balls = (0..base.len())
            .map(|p| {
                let mut out = Vec::new();
                let w = base.weight(p);
                for n in params.levels + 1..params.levels + 200 {
                    let m = base.ball_measure_unchecked(p, a.powi(-(n as i32)) / scale);
                    if m <= w * (1.0 + 1e-12) {
                        break;
                    }
                    out.push(m);
                }
                out
            })
            .collect();
        let mut filling = HyperbolicFilling {
            params,
            scale,
            nets,
            vertices,
            edges,
            attach_radius: (-eps * params.levels as f64).exp() / eps,
            attach,
            adj,
            base_measure: base.weights().to_vec(),
            ray_balls,
            ray_total: Vec::new(),
        };
        filling.ray_total = (0..base.len()).map(|p| filling.ray_tail(p, params.levels as f64)).collect();
        Ok(filling)
    }

    /// Weight `mu_hat` of the ray vertex of base point `p` at level `n >= N`.
    fn ray_weight(&self, p: usize, n: usize) -> f64 {
        let big_n = self.params.levels;
        let decay = (-self.params.beta * n as f64).exp();
        if n == big_n {
            return self.vertices[self.attach[p]].weight;
        }
        decay * self.ray_balls[p].get(n - big_n - 1).copied().unwrap_or(self.base_measure[p])
    }

    /// `mu_beta` of the ray of `p` beyond level `a >= N`.
    fn ray_tail(&self, p: usize, a: f64) -> f64 {
        let big_n = self.params.levels;
        let cap = big_n + 1 + self.ray_balls[p].len();
        let edge = |n: usize| 2.0 * (self.ray_weight(p, n) + self.ray_weight(p, n + 1));
        let n0 = a.floor() as usize;
        let mut acc = edge(n0) * (n0 as f64 + 1.0 - a);
        let mut n = n0 + 1;
        while n < cap {
            acc += edge(n);
            n += 1;
        }
        // beyond the cap every ball is the point itself and the edge masses are geometric
        let q = (-self.params.beta).exp();
        acc + 2.0 * self.base_measure[p] * (1.0 + q) * (-self.params.beta * n as f64).exp() / (1.0 - q)
    }

    /// Level reached at uniformized distance `u` down the ray from the deepest vertex.
    fn ray_level(&self, u: f64) -> f64 {
        let eps = self.epsilon();
        -((-eps * self.params.levels as f64).exp() - eps * u).ln() / eps
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon()
    }

    /// Uniformized distances from a vertex to every vertex.
    pub fn vertex_distances(&self, src: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.vertices.len()];
        dist[src] = 0.0;
        let mut heap = BinaryHeap::from([Reverse((OrdF64(0.0), src))]);
        while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, e) in &self.adj[u] {
                let nd = d + self.edges[e].length;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((OrdF64(nd), v)));
                }
            }
        }
        dist
    }

    /// Uniformized distances from a base point, attached through its deepest vertex.
    pub fn point_distances(&self, zeta: usize) -> Vec<f64> {
        let mut d = self.vertex_distances(self.attach[zeta]);
        d.iter_mut().for_each(|x| *x += self.attach_radius);
        d
    }

    pub fn uniformized_distance(&self, p: Endpoint, q: Endpoint) -> Result<f64> {
        let (src, extra_p) = self.endpoint(p)?;
        let (dst, extra_q) = self.endpoint(q)?;
        if p == q {
            return Ok(0.0);
        }
        Ok(extra_p + extra_q + self.vertex_distances(src)[dst])
    }

    fn endpoint(&self, p: Endpoint) -> Result<(usize, f64)> {
        match p {
            Endpoint::Vertex(v) if v < self.vertices.len() => Ok((v, 0.0)),
            Endpoint::Point(z) if z < self.attach.len() => Ok((self.attach[z], self.attach_radius)),
            _ => invalid("endpoint out of range"),
        }
    }

    /// Unit-parameter length of the part of edge `e` within distance `r`, given vertex distances.
    fn edge_fraction(&self, e: usize, dist: &[f64], r: f64) -> f64 {
        let FillingEdge { a, b, .. } = self.edges[e];
        if dist[a] >= r && dist[b] >= r {
            return 0.0;
        }
        let eps = self.epsilon();
        let (da, db) = (self.vertices[a].depth as f64, self.vertices[b].depth as f64);
        let from_a = arc_inverse(eps, da, db, r - dist[a]);
        let from_b = arc_inverse(eps, db, da, r - dist[b]);
        (from_a + from_b).min(1.0)
    }

    /// `mu_beta` of the ball of radius `r` around the given vertex distances.
    fn mu_beta_from(&self, zeta: usize, dist: &[f64], r: f64) -> f64 {
        let mut acc = crate::sum::Neumaier::new();
        let eps = self.epsilon();
        let own = (1.0 / (eps * r)).ln() / eps;
        acc.add(self.ray_tail(zeta, own.max(self.params.levels as f64)));
        for p in 0..self.attach.len() {
            if p == zeta {
                continue;
            }
            let reach = r - dist[self.attach[p]];
            if reach <= 0.0 {
                continue;
            }
            if reach >= self.attach_radius {
                acc.add(self.ray_total[p]);
            } else {
                acc.add(self.ray_total[p] - self.ray_tail(p, self.ray_level(reach)));
            }
        }
        for (e, edge) in self.edges.iter().enumerate() {
            let f = self.edge_fraction(e, dist, r);
            if f > 0.0 {
                acc.add(2.0 * (self.vertices[edge.a].weight + self.vertices[edge.b].weight) * f);
            }
        }
        acc.value()
    }

    /// `mu_beta(B_eps(zeta, r))` for a base point `zeta`.
    pub fn mu_beta_ball(&self, zeta: usize, r: f64) -> Result<f64> {
        if zeta >= self.attach.len() {
            return invalid("base point out of range");
        }
        if !(r > 0.0) {
            return Err(Error::InvalidScale { scale: r, lo: 0.0, hi: f64::INFINITY });
        }
        Ok(self.mu_beta_from(zeta, &self.point_distances(zeta), r))
    }

    /// Total `mu_beta` mass, rays included.
    pub fn total_mass(&self) -> f64 {
        let edges: f64 = self.edges.iter().map(|e| 2.0 * (self.vertices[e.a].weight + self.vertices[e.b].weight)).sum();
        edges + self.ray_total.iter().sum::<f64>()
    }

    /// Bound `2 sum_n exp(-eps n)(1 - exp(-eps))/eps = 2/eps` on the uniformized diameter.
    pub fn diameter_bound(&self) -> f64 {
        2.0 / self.epsilon()
    }

    pub fn is_connected(&self) -> bool {
        self.vertices.iter().all(|v| v.depth != usize::MAX)
    }

    /// Largest relative violation of the triangle inequality over all vertex triples.
    pub fn triangle_violation(&self) -> Result<f64> {
        let nv = self.vertices.len();
        if nv > 300 {
            return Err(Error::Budget(format!("{nv} vertices exceed the exhaustive triangle check limit 300")));
        }
        let d: Vec<Vec<f64>> = (0..nv).map(|v| self.vertex_distances(v)).collect();
        let mut worst = 0.0f64;
        for i in 0..nv {
            for j in 0..nv {
                if (d[i][j] - d[j][i]).abs() > 1e-12 * d[i][j] {
                    worst = worst.max((d[i][j] - d[j][i]).abs());
                }
                for k in 0..nv {
                    worst = worst.max(d[i][k] - d[i][j] - d[j][k]);
                }
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Vertex(usize),
    /// Base point, attached to its nearest deepest-level vertex.
    Point(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CodimRow {
    pub zeta: usize,
    pub r: f64,
    pub mu_beta: f64,
    pub nu: f64,
    pub ratio: f64,
    /// Radius below twice the attachment radius.
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CodimRelation {
    pub rows: Vec<CodimRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub spread: f64,
}

/// Ratios `mu_beta(B_eps(zeta, r)) r^(-beta/eps) / nu(B_Z(zeta, r))`.
pub fn verify_codim_relation(
    filling: &HyperbolicFilling,
    base: &DiscreteSpace,
    samples: &[usize],
    radii: &[f64],
) -> Result<CodimRelation> {
    if samples.is_empty() || radii.is_empty() {
        return invalid("need at least one sample and one radius");
    }
    let expo = filling.params.beta / filling.epsilon();
    let mut rows = Vec::new();
    for &z in samples {
        if z >= base.len() {
            return invalid("sample out of range");
        }
        let dist = filling.point_distances(z);
        for &r in radii {
            let mu = filling.mu_beta_from(z, &dist, r);
            let nu = base.ball_measure_unchecked(z, r / filling.scale);
            rows.push(CodimRow { zeta: z, r, mu_beta: mu, nu, ratio: mu * r.powf(-expo) / nu, flagged: r < 2.0 * filling.attach_radius });
        }
    }
    let good: Vec<f64> = rows.iter().filter(|r| !r.flagged).map(|r| r.ratio).collect();
    if good.is_empty() {
        return invalid("every radius lies below the attachment scale");
    }
    let min_ratio = good.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_ratio = good.iter().cloned().fold(0.0, f64::max);
    Ok(CodimRelation { rows, min_ratio, max_ratio, spread: max_ratio / min_ratio })
}

/// Empirical doubling ratio `mu_beta(B(zeta, 2r)) / mu_beta(B(zeta, r))`, maximised over samples and radii.
pub fn mu_beta_doubling(filling: &HyperbolicFilling, samples: &[usize], radii: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &z in samples {
        if z >= filling.attach.len() {
            return invalid("sample out of range");
        }
        let dist = filling.point_distances(z);
        for &r in radii {
            let small = filling.mu_beta_from(z, &dist, r);
            if small > 0.0 {
                worst = worst.max(filling.mu_beta_from(z, &dist, 2.0 * r) / small);
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub delta: f64,
    pub nu: f64,
    pub content: f64,
    pub ratio: f64,
    pub violation: bool,
}

/// `nu(A)` against the greedy codimension `beta/eps` Hausdorff content of `A` at scale `delta`
/// in the filling, for each `delta`. Covers use balls centred at points of `A` with dyadic
/// radii between twice the attachment radius and `delta`.
pub fn boundary_trace_check(
    filling: &HyperbolicFilling,
    base: &DiscreteSpace,
    subset: &[u8],
    deltas: &[f64],
) -> Result<Vec<TraceRow>> {
    base.check_set(subset)?;
    let pts: Vec<usize> = (0..subset.len()).filter(|&i| subset[i] == 1).collect();
    if pts.is_empty() {
        return Ok(Vec::new());
    }
    let nu: f64 = pts.iter().map(|&p| filling.base_measure[p]).sum();
    let expo = filling.params.beta / filling.epsilon();
    let dists: Vec<Vec<f64>> = pts.iter().map(|&p| filling.point_distances(p)).collect();
    let floor = 2.0 * filling.attach_radius;
    let mut rows = Vec::new();
    for &delta in deltas {
        let mut radii = Vec::new();
        let mut r = delta;
        while r >= floor * (1.0 - 1e-12) {
            radii.push(r);
            r /= 2.0;
        }
        if radii.is_empty() {
            return Err(Error::InvalidScale { scale: delta, lo: floor, hi: f64::INFINITY });
        }
        let masses: Vec<Vec<f64>> = radii.iter().map(|&r| dists.iter().zip(&pts).map(|(d, &p)| filling.mu_beta_from(p, d, r)).collect()).collect();
        let reach = |k: usize, j: usize, r: f64| {
            k == j || filling.attach_radius + dists[k][filling.attach[pts[j]]] < r
        };
        let mut covered = vec![false; pts.len()];
        let mut left = pts.len();
        let mut content = 0.0;
        while left > 0 {
            let mut best: Option<(f64, usize, usize)> = None;
            for (ri, &r) in radii.iter().enumerate() {
                for k in 0..pts.len() {
                    let fresh = (0..pts.len()).filter(|&j| !covered[j] && reach(k, j, r)).count();
                    if fresh == 0 {
                        continue;
                    }
                    let score = masses[ri][k] * r.powf(-expo) / fresh as f64;
                    if best.is_none_or(|b| score < b.0) {
                        best = Some((score, k, ri));
                    }
                }
            }
            let (_, k, ri) = best.unwrap();
            let r = radii[ri];
            content += masses[ri][k] * r.powf(-expo);
            for j in 0..pts.len() {
                if !covered[j] && reach(k, j, r) {
                    covered[j] = true;
                    left -= 1;
                }
            }
        }
        rows.push(TraceRow { delta, nu, content, ratio: nu / content, violation: !(content > 0.0) });
    }
    Ok(rows)
}
