//! Exact minimizers of the nonlocal functional `J_Omega` with fixed exterior data.
//!
//! For labels `u` fixed outside `Omega`, `J_Omega(u)` is the sum of `w_ij [u_i != u_j]`
//! over unordered pairs meeting `Omega`. That is a cut function, so a minimum cut of the
//! graph on `Omega` with terminal capacities from the exterior gives a global minimizer.

use crate::error::{invalid, Error, Result};
use crate::kernels::{check_s, functional_j, interaction, KernelMode, PairWeights};
use crate::space::{doubling_estimate_sampled, dyadic_scales, DiscreteSpace};
use crate::sum::Neumaier;
use serde::Serialize;
use std::collections::VecDeque;

/// Largest `|Omega|` accepted by the enumeration oracle.
pub const MAX_BRUTE_FORCE: usize = 20;

/// Relative tolerance under which two energies count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct MinimizationProblem<'a> {
    pub space: &'a DiscreteSpace,
    pub omega: Vec<u8>,
    /// `F \ Omega`; entries inside `Omega` must be 0.
    pub exterior: Vec<u8>,
    pub s: f64,
    pub mode: KernelMode,
}

impl<'a> MinimizationProblem<'a> {
    pub fn new(space: &'a DiscreteSpace, omega: Vec<u8>, exterior: Vec<u8>, s: f64, mode: KernelMode) -> Result<Self> {
        check_s(s)?;
        space.check_set(&omega)?;
        space.check_set(&exterior)?;
        let m = omega.iter().filter(|&&o| o == 1).count();
        if m == 0 {
            return invalid("Omega must be nonempty");
        }
        if m == omega.len() {
            return invalid("Omega must have a nonempty complement");
        }
        if omega.iter().zip(&exterior).any(|(&o, &e)| o == 1 && e == 1) {
            return invalid("exterior data must vanish on Omega");
        }
        Ok(MinimizationProblem { space, omega, exterior, s, mode })
    }

    pub fn omega_points(&self) -> Vec<usize> {
        (0..self.omega.len()).filter(|&i| self.omega[i] == 1).collect()
    }

    /// Same problem with complemented exterior data.
    pub fn complemented(&self) -> Self {
        let exterior = self.omega.iter().zip(&self.exterior).map(|(&o, &e)| (1 - o) & (1 - e)).collect();
        MinimizationProblem { exterior, ..self.clone() }
    }
}

/// Cut graph over `Omega`: pair capacities plus terminal capacities folding in the exterior.
#[derive(Debug, Clone)]
pub struct CutGraph {
    /// Space index of each node.
    pub nodes: Vec<usize>,
    pub source_cap: Vec<f64>,
    pub sink_cap: Vec<f64>,
    /// Dense symmetric `m x m` pair capacities.
    pub pair_cap: Vec<f64>,
}

impl CutGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Cut value of a labeling of the nodes (1 = source side), compensated.
    pub fn cut_value(&self, labels: &[u8]) -> f64 {
        let m = self.len();
        let mut acc = Neumaier::new();
        for i in 0..m {
            acc.add(if labels[i] == 1 { self.sink_cap[i] } else { self.source_cap[i] });
            for j in i + 1..m {
                if labels[i] != labels[j] {
                    acc.add(self.pair_cap[i * m + j]);
                }
            }
        }
        acc.value()
    }
}

pub fn build_cut_graph(problem: &MinimizationProblem, pw: &PairWeights) -> Result<CutGraph> {
    let nodes = problem.omega_points();
    let m = nodes.len();
    let mut source_cap = vec![0.0; m];
    let mut sink_cap = vec![0.0; m];
    let mut pair_cap = vec![0.0; m * m];
    for (a, &i) in nodes.iter().enumerate() {
        let row = pw.row(i);
        let mut src = Neumaier::new();
        let mut snk = Neumaier::new();
        for (j, &w) in row.iter().enumerate() {
            if problem.omega[j] == 0 {
                if problem.exterior[j] == 1 {
                    src.add(w);
                } else {
                    snk.add(w);
                }
            }
        }
        source_cap[a] = src.value();
        sink_cap[a] = snk.value();
        for (b, &j) in nodes.iter().enumerate() {
            pair_cap[a * m + b] = row[j];
        }
    }
    if source_cap.iter().chain(&sink_cap).chain(&pair_cap).any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::Domain("cut graph capacity is not finite and nonnegative".into()));
    }
    Ok(CutGraph { nodes, source_cap, sink_cap, pair_cap })
}

struct Edge {
    to: usize,
    cap: f64,
}

/// Dinic max-flow on an adjacency-list residual graph.
struct Dinic {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    level: Vec<i32>,
    iter: Vec<usize>,
    tol: f64,
}

impl Dinic {
    fn new(n: usize, tol: f64) -> Self {
        Dinic { adj: vec![Vec::new(); n], edges: Vec::new(), level: vec![0; n], iter: vec![0; n], tol }
    }

    fn add(&mut self, a: usize, b: usize, ab: f64, ba: f64) {
        self.adj[a].push(self.edges.len());
        self.edges.push(Edge { to: b, cap: ab });
        self.adj[b].push(self.edges.len());
        self.edges.push(Edge { to: a, cap: ba });
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &e in &self.adj[v] {
                let Edge { to, cap } = self.edges[e];
                if cap > self.tol && self.level[to] < 0 {
                    self.level[to] = self.level[v] + 1;
                    q.push_back(to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, f: f64) -> f64 {
        if v == t {
            return f;
        }
        while self.iter[v] < self.adj[v].len() {
            let e = self.adj[v][self.iter[v]];
            let Edge { to, cap } = self.edges[e];
            if cap > self.tol && self.level[v] < self.level[to] {
                let d = self.dfs(to, t, f.min(cap));
                if d > 0.0 {
                    self.edges[e].cap -= d;
                    self.edges[e ^ 1].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = Neumaier::new();
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow.value();
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                flow.add(f);
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub flow: f64,
    /// Compensated re-evaluation of the cut found.
    pub cut: f64,
    /// Constant term of the reduction; zero because terminal capacities carry every exterior pair.
    pub offset: f64,
    pub duality_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizerResult {
    pub set: Vec<u8>,
    pub energy: f64,
    pub certificate: Option<Certificate>,
}

fn assemble(problem: &MinimizationProblem, nodes: &[usize], labels: &[u8]) -> Vec<u8> {
    let mut set = problem.exterior.clone();
    for (a, &i) in nodes.iter().enumerate() {
        set[i] = labels[a];
    }
    set
}

/// Global minimizer by minimum cut; among optimal sets the one with the smallest
/// part in `Omega` (the source side reachable in the final residual graph).
pub fn solve_exact(problem: &MinimizationProblem) -> Result<MinimizerResult> {
    let pw = PairWeights::build(problem.space, problem.s, problem.mode)?;
    solve_with_weights(problem, &pw)
}

pub fn solve_with_weights(problem: &MinimizationProblem, pw: &PairWeights) -> Result<MinimizerResult> {
    let g = build_cut_graph(problem, pw)?;
    let m = g.len();
    let maxcap = g.source_cap.iter().chain(&g.sink_cap).chain(&g.pair_cap).fold(0.0f64, |a, &b| a.max(b));
    let (src, snk) = (m, m + 1);
    let mut d = Dinic::new(m + 2, 1e-13 * maxcap);
    for i in 0..m {
        if g.source_cap[i] > 0.0 {
            d.add(src, i, g.source_cap[i], 0.0);
        }
        if g.sink_cap[i] > 0.0 {
            d.add(i, snk, g.sink_cap[i], 0.0);
        }
        for j in i + 1..m {
            let c = g.pair_cap[i * m + j];
            if c > 0.0 {
                d.add(i, j, c, c);
            }
        }
    }
    let flow = d.max_flow(src, snk);
    d.bfs(src);
    let labels: Vec<u8> = (0..m).map(|i| (d.level[i] >= 0) as u8).collect();
    let cut = g.cut_value(&labels);
    let set = assemble(problem, &g.nodes, &labels);
    let energy = functional_j(pw, &set, &problem.omega)?;
    let gap = (cut - flow).abs();
    if gap > 1e-9 * cut.max(maxcap * f64::EPSILON) {
        return Err(Error::Domain(format!("max-flow did not converge: flow {flow}, cut {cut}")));
    }
    Ok(MinimizerResult {
        set,
        energy,
        certificate: Some(Certificate { flow, cut, offset: 0.0, duality_gap: gap }),
    })
}

/// Exhaustive minimizer over all `2^|Omega|` labelings. Ties within [`TIE_TOL`] go to
/// the labeling with fewest points of `Omega` in `E`, then the lexicographically smallest.
pub fn brute_force_minimizer(problem: &MinimizationProblem) -> Result<MinimizerResult> {
    let pw = PairWeights::build(problem.space, problem.s, problem.mode)?;
    brute_force_with_weights(problem, &pw)
}

pub fn brute_force_with_weights(problem: &MinimizationProblem, pw: &PairWeights) -> Result<MinimizerResult> {
    let g = build_cut_graph(problem, pw)?;
    let m = g.len();
    if m > MAX_BRUTE_FORCE {
        return Err(Error::Budget(format!("|Omega| = {m} exceeds the enumeration limit {MAX_BRUTE_FORCE}")));
    }
    let mut values = Vec::with_capacity(1 << m);
    let mut labels = vec![0u8; m];
    for mask in 0u32..(1u32 << m) {
        for (a, l) in labels.iter_mut().enumerate() {
            *l = ((mask >> a) & 1) as u8;
        }
        values.push(g.cut_value(&labels));
    }
    let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = TIE_TOL * best.abs();
    let key = |mask: u32| {
        let bits: Vec<u8> = (0..m).map(|a| ((mask >> a) & 1) as u8).collect();
        (mask.count_ones(), bits)
    };
    let winner = (0u32..(1u32 << m))
        .filter(|&mask| values[mask as usize] <= best + tol)
        .min_by_key(|&mask| key(mask))
        .unwrap();
    let labels: Vec<u8> = (0..m).map(|a| ((winner >> a) & 1) as u8).collect();
    let set = assemble(problem, &g.nodes, &labels);
    let energy = functional_j(pw, &set, &problem.omega)?;
    Ok(MinimizerResult { set, energy, certificate: None })
}

#[derive(Debug, Clone, Serialize)]
pub struct SupersolutionCheck {
    pub holds: bool,
    /// `L_s(A, X \ E)`.
    pub lhs: f64,
    /// `L_s(E \ A, A)`.
    pub rhs: f64,
}

/// `L_s(A, X \ E) <= L_s(E \ A, A)` for `A` inside `E cap Omega`, up to [`TIE_TOL`].
pub fn check_supersolution(pw: &PairWeights, omega: &[u8], set: &[u8], a: &[u8]) -> Result<SupersolutionCheck> {
    if a.len() != set.len() || omega.len() != set.len() {
        return invalid("set length does not match space");
    }
    if a.iter().zip(set).zip(omega).any(|((&x, &e), &o)| x == 1 && (e == 0 || o == 0)) {
        return invalid("A must be contained in E cap Omega");
    }
    let not_e: Vec<u8> = set.iter().map(|&e| 1 - e).collect();
    let e_minus_a: Vec<u8> = set.iter().zip(a).map(|(&e, &x)| e & (1 - x)).collect();
    let lhs = interaction(pw, a, &not_e)?;
    let rhs = interaction(pw, &e_minus_a, a)?;
    Ok(SupersolutionCheck { holds: lhs <= rhs + TIE_TOL * lhs.abs().max(rhs.abs()), lhs, rhs })
}

/// Points of `Omega` with a differently labelled point within `2h`.
pub fn interface_points(space: &DiscreteSpace, omega: &[u8], set: &[u8]) -> Vec<usize> {
    let r = 2.0 * space.resolution_h() * (1.0 + 1e-9);
    (0..space.len())
        .filter(|&i| {
            if omega[i] == 0 {
                return false;
            }
            let mut hit = false;
            space.for_each_in_ball(i, r, |j, _| hit |= set[j] != set[i]);
            hit
        })
        .collect()
}

/// Interface balls `B(x0, R0)` with dyadic `R0 >= 4h` and `B(x0, 2 R0)` inside `Omega`.
pub fn interface_balls(space: &DiscreteSpace, omega: &[u8], set: &[u8]) -> Vec<(usize, f64)> {
    let h = space.resolution_h();
    let mut out = Vec::new();
    for x0 in interface_points(space, omega, set) {
        for r0 in dyadic_scales(4.0 * h, space.diameter()) {
            let mut inside = true;
            space.for_each_in_ball(x0, 2.0 * r0, |j, _| inside &= omega[j] == 1);
            if !inside {
                break;
            }
            out.push((x0, r0));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityRow {
    pub center: usize,
    pub radius: f64,
    pub inside: f64,
    pub outside: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    pub rows: Vec<DensityRow>,
    pub min_ratio: Option<f64>,
    pub gamma_probe: f64,
    pub passes: bool,
    /// Doubling exponent `Q = log2 C_D` from the sampled doubling constant.
    pub q: f64,
    /// Upper bound `1 / (2^(Q+1) C_Q)` on the theoretical density constant, with `C_Q = C_D^2`.
    pub gamma0_bound: f64,
}

fn doubling_q(space: &DiscreteSpace) -> Result<f64> {
    let h = space.resolution_h();
    let scales = dyadic_scales(h, space.diameter() / 4.0);
    if scales.is_empty() {
        return Ok(1.0);
    }
    Ok(doubling_estimate_sampled(space, &scales, 256)?.log2().max(1.0))
}

pub fn verify_uniform_density(
    space: &DiscreteSpace,
    omega: &[u8],
    result: &MinimizerResult,
    gamma_probe: f64,
) -> Result<DensityReport> {
    space.check_set(omega)?;
    space.check_set(&result.set)?;
    let set = &result.set;
    let rows: Vec<DensityRow> = interface_balls(space, omega, set)
        .into_iter()
        .map(|(c, r)| {
            let mut tot = 0.0;
            let mut inn = 0.0;
            space.for_each_in_ball(c, r, |j, _| {
                tot += space.weight(j);
                if set[j] == 1 {
                    inn += space.weight(j);
                }
            });
            DensityRow { center: c, radius: r, inside: inn / tot, outside: (tot - inn) / tot }
        })
        .collect();
    let min_ratio = rows.iter().map(|r| r.inside.min(r.outside)).reduce(f64::min);
    let q = doubling_q(space)?;
    let cq = 2f64.powf(2.0 * q);
    Ok(DensityReport {
        passes: min_ratio.is_none_or(|m| m >= gamma_probe),
        rows,
        min_ratio,
        gamma_probe,
        q,
        gamma0_bound: 1.0 / (2f64.powf(q + 1.0) * cq),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PorosityRow {
    pub center: usize,
    pub radius: f64,
    /// Witness in `E cap Omega` and the largest radius of a ball around it inside that set.
    pub y: Option<(usize, f64)>,
    pub z: Option<(usize, f64)>,
    /// Smallest `C` such that both witnesses carry balls of radius `R0 / C`.
    pub c: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PorosityReport {
    pub rows: Vec<PorosityRow>,
    pub max_c: Option<f64>,
    pub c_probe: f64,
    pub passes: bool,
}

/// Distance from each point of `target` to the nearest point outside it
/// (infinite when `target` is everything).
fn inner_radius(space: &DiscreteSpace, target: &[u8]) -> Vec<f64> {
    let outside: Vec<usize> = (0..target.len()).filter(|&j| target[j] == 0).collect();
    (0..target.len())
        .map(|i| {
            if target[i] == 0 {
                return 0.0;
            }
            outside.iter().map(|&j| space.distance(i, j)).fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// For each interface ball finds `y, z in B(x0, R0)` with `B(y, R0/C)` inside `E cap Omega`
/// and `B(z, R0/C)` inside `Omega \ E`; inclusion is checked on the points of the space.
pub fn verify_porosity(space: &DiscreteSpace, omega: &[u8], result: &MinimizerResult, c_probe: f64) -> Result<PorosityReport> {
    space.check_set(omega)?;
    space.check_set(&result.set)?;
    let set = &result.set;
    let e_in: Vec<u8> = set.iter().zip(omega).map(|(&e, &o)| e & o).collect();
    let e_out: Vec<u8> = set.iter().zip(omega).map(|(&e, &o)| (1 - e) & o).collect();
    let rad_in = inner_radius(space, &e_in);
    let rad_out = inner_radius(space, &e_out);
    let rows: Vec<PorosityRow> = interface_balls(space, omega, set)
        .into_iter()
        .map(|(c, r)| {
            let mut y: Option<(usize, f64)> = None;
            let mut z: Option<(usize, f64)> = None;
            space.for_each_in_ball(c, r, |j, _| {
                let a = rad_in[j].min(r);
                if a > 0.0 && y.is_none_or(|(_, b)| a > b) {
                    y = Some((j, a));
                }
                let b = rad_out[j].min(r);
                if b > 0.0 && z.is_none_or(|(_, v)| b > v) {
                    z = Some((j, b));
                }
            });
            let cy = y.map_or(f64::INFINITY, |(_, a)| r / a);
            let cz = z.map_or(f64::INFINITY, |(_, b)| r / b);
            PorosityRow { center: c, radius: r, y, z, c: cy.max(cz) }
        })
        .collect();
    let max_c = rows.iter().map(|r| r.c).reduce(f64::max);
    Ok(PorosityReport { passes: max_c.is_none_or(|m| m <= c_probe), rows, max_c, c_probe })
}
