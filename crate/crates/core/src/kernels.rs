//! Fractional kernels, interaction functionals and perimeters.

use crate::error::{invalid, Error, Result};
use crate::interval::interaction_gap;
use crate::space::DiscreteSpace;
use crate::sum::Neumaier;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Upper limit on points for dense pair tables (8 bytes per ordered pair).
pub const MAX_DENSE_POINTS: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    /// `K_s(x, y) = 2 / (d^s [mu(B(x, d)) + mu(B(y, d))])`.
    MetricMeasure,
    /// `|x - y|^(-1-s)` integrated exactly over the cells of a 1-D space.
    Interval1d,
}

impl std::str::FromStr for KernelMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "metric-measure" => Ok(KernelMode::MetricMeasure),
            "interval-1d" => Ok(KernelMode::Interval1d),
            _ => invalid(format!("unknown kernel mode '{s}'")),
        }
    }
}

pub(crate) fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("s must lie in (0, 1), got {s}")));
    }
    Ok(())
}

/// `K_s(x, y)` for the metric-measure kernel.
pub fn kernel_value(space: &DiscreteSpace, x: usize, y: usize, s: f64) -> Result<f64> {
    check_s(s)?;
    if x == y {
        return Err(Error::Domain("kernel is singular on the diagonal".into()));
    }
    let d = space.distance(x, y);
    let mx = space.ball_measure(x, d)?;
    let my = space.ball_measure(y, d)?;
    Ok(2.0 / (d.powf(s) * (mx + my)))
}

/// Open-ball masses `M[i][j] = mu(B(i, d(i, j)))` for all ordered pairs.
fn pair_ball_masses(space: &DiscreteSpace) -> Vec<f64> {
    let n = space.len();
    let w = space.weights();
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let mut idx: Vec<(f64, u32)> = (0..n).map(|j| (space.distance(i, j), j as u32)).collect();
        idx.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        let mut k = 0;
        while k < n {
            let d = idx[k].0;
            let mut e = k;
            let mut group = 0.0;
            while e < n && idx[e].0 == d {
                group += w[idx[e].1 as usize];
                e += 1;
            }
            for t in k..e {
                row[idx[t].1 as usize] = acc;
            }
            acc += group;
            k = e;
        }
    });
    out
}

/// Cells `[x - w/2, x + w/2]` of a 1-D space, ordered by position.
fn cells_1d(space: &DiscreteSpace) -> Result<Vec<(f64, f64)>> {
    if space.dim() != Some(1) {
        return invalid("interval-1d kernel needs a 1-D coordinate space");
    }
    let n = space.len();
    let cells: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = space.coords(i).unwrap()[0];
            (x - 0.5 * space.weight(i), x + 0.5 * space.weight(i))
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cells[a].0.total_cmp(&cells[b].0));
    for k in 1..n {
        let (p, q) = (cells[order[k - 1]], cells[order[k]]);
        if q.0 < p.1 - 1e-12 * (p.1 - p.0) {
            return invalid("interval-1d kernel needs non-overlapping cells");
        }
    }
    Ok(cells)
}

fn cell_interaction(a: (f64, f64), b: (f64, f64), s: f64) -> f64 {
    let (p, q) = if a.0 <= b.0 { (a, b) } else { (b, a) };
    interaction_gap((q.0 - p.1).max(0.0), p.1 - p.0, q.1 - q.0, s)
}

/// Dense symmetric table of pair weights `w_ij = K_s(i, j) w_i w_j`, zero diagonal.
#[derive(Debug, Clone)]
pub struct PairWeights {
    pub n: usize,
    pub s: f64,
    pub mode: KernelMode,
    data: Vec<f64>,
}

impl PairWeights {
    pub fn build(space: &DiscreteSpace, s: f64, mode: KernelMode) -> Result<Self> {
        check_s(s)?;
        let n = space.len();
        if n > MAX_DENSE_POINTS {
            return Err(Error::Budget(format!("{n} points exceed the dense pair limit {MAX_DENSE_POINTS}")));
        }
        let mut data = match mode {
            KernelMode::MetricMeasure => pair_ball_masses(space),
            KernelMode::Interval1d => vec![0.0; n * n],
        };
        match mode {
            KernelMode::MetricMeasure => {
                let w = space.weights();
                for i in 0..n {
                    data[i * n + i] = 0.0;
                    for j in i + 1..n {
                        let d = space.distance(i, j);
                        let v = 2.0 * w[i] * w[j] / (d.powf(s) * (data[i * n + j] + data[j * n + i]));
                        data[i * n + j] = v;
                        data[j * n + i] = v;
                    }
                }
            }
            KernelMode::Interval1d => {
                let cells = cells_1d(space)?;
                data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                    for j in 0..n {
                        if j != i {
                            row[j] = cell_interaction(cells[i], cells[j], s);
                        }
                    }
                });
                for i in 0..n {
                    for j in i + 1..n {
                        data[j * n + i] = data[i * n + j];
                    }
                }
            }
        }
        Ok(PairWeights { n, s, mode, data })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Kernel value `w_ij / (w_i w_j)`.
    pub fn kernel(&self, space: &DiscreteSpace, i: usize, j: usize) -> f64 {
        self.get(i, j) / (space.weight(i) * space.weight(j))
    }
}

/// `L_s(A, B) = sum_{i in A, j in B, j != i} w_ij`, summed over unordered pairs in a
/// fixed order so that `L_s(A, B)` and `L_s(B, A)` agree bit for bit.
pub fn interaction(pw: &PairWeights, a: &[u8], b: &[u8]) -> Result<f64> {
    if a.len() != pw.n || b.len() != pw.n {
        return invalid("set length does not match space");
    }
    let mut acc = Neumaier::new();
    for i in 0..pw.n {
        let row = pw.row(i);
        for j in i + 1..pw.n {
            let m = (a[i] & b[j]) + (b[i] & a[j]);
            if m != 0 {
                acc.add(m as f64 * row[j]);
            }
        }
    }
    Ok(acc.value())
}

pub fn complement(set: &[u8]) -> Vec<u8> {
    set.iter().map(|&v| 1 - v).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerimeterForm {
    /// `sum_{i != j} |chi_i - chi_j| w_i w_j / (d^s mu(B(i, d)))`.
    TwoSided,
    /// `2 L_s(E, X \ E)` with the symmetric kernel.
    Symmetric,
}

/// Fractional perimeter of `E`.
pub fn s_perimeter(space: &DiscreteSpace, set: &[u8], s: f64, mode: KernelMode, form: PerimeterForm) -> Result<f64> {
    check_s(s)?;
    space.check_set(set)?;
    let n = space.len();
    match (mode, form) {
        (KernelMode::MetricMeasure, PerimeterForm::TwoSided) => {
            if n > MAX_DENSE_POINTS {
                return Err(Error::Budget(format!("{n} points exceed the dense pair limit")));
            }
            let w = space.weights();
            let rows: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut idx: Vec<(f64, u32)> = (0..n).map(|j| (space.distance(i, j), j as u32)).collect();
                    idx.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let mut acc = Neumaier::new();
                    let mut mass = 0.0;
                    let mut k = 0;
                    while k < n {
                        let d = idx[k].0;
                        let mut e = k;
                        let mut group = 0.0;
                        while e < n && idx[e].0 == d {
                            let j = idx[e].1 as usize;
                            group += w[j];
                            if j != i && set[i] != set[j] {
                                acc.add(w[i] * w[j] / (d.powf(s) * mass));
                            }
                            e += 1;
                        }
                        mass += group;
                        k = e;
                    }
                    acc.value()
                })
                .collect();
            Ok(crate::sum::neumaier_sum(rows))
        }
        (KernelMode::Interval1d, _) => {
            let cells = cells_1d(space)?;
            let rows: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut acc = Neumaier::new();
                    for j in i + 1..n {
                        if set[i] != set[j] {
                            acc.add(cell_interaction(cells[i], cells[j], s));
                        }
                    }
                    acc.value()
                })
                .collect();
            Ok(2.0 * crate::sum::neumaier_sum(rows))
        }
        (KernelMode::MetricMeasure, PerimeterForm::Symmetric) => {
            let pw = PairWeights::build(space, s, mode)?;
            Ok(2.0 * interaction(&pw, set, &complement(set))?)
        }
    }
}

/// Nonlocal functional `J_Omega(E) = L(E cap Omega, X \ E) + L(E \ Omega, Omega \ E)`,
/// summed as unordered pairs touching `Omega` whose labels differ.
pub fn functional_j(pw: &PairWeights, set: &[u8], omega: &[u8]) -> Result<f64> {
    if set.len() != pw.n || omega.len() != pw.n {
        return invalid("set length does not match space");
    }
    if omega.iter().all(|&o| o == 1) {
        return Err(Error::Domain("Omega must have a nonempty complement".into()));
    }
    let mut acc = Neumaier::new();
    for i in 0..pw.n {
        let row = pw.row(i);
        for j in i + 1..pw.n {
            if set[i] != set[j] && (omega[i] == 1 || omega[j] == 1) {
                acc.add(row[j]);
            }
        }
    }
    Ok(acc.value())
}

/// Same functional via the two interaction terms.
pub fn functional_j_split(pw: &PairWeights, set: &[u8], omega: &[u8]) -> Result<f64> {
    if omega.iter().all(|&o| o == 1) {
        return Err(Error::Domain("Omega must have a nonempty complement".into()));
    }
    let e_in: Vec<u8> = set.iter().zip(omega).map(|(&e, &o)| e & o).collect();
    let e_out: Vec<u8> = set.iter().zip(omega).map(|(&e, &o)| e & (1 - o)).collect();
    let om_not_e: Vec<u8> = set.iter().zip(omega).map(|(&e, &o)| (1 - e) & o).collect();
    Ok(interaction(pw, &e_in, &complement(set))? + interaction(pw, &e_out, &om_not_e)?)
}
