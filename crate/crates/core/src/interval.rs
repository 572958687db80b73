//! Exact interaction of intervals under the kernel `|x - y|^(-1-s)` and
//! fast evaluation of energies of interval tilings of `[0, 1]`.

use crate::error::{invalid, Error, Result};
use crate::sum::Neumaier;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo > hi {
            return invalid("interval with lo > hi");
        }
        Ok(Interval { lo, hi })
    }

    pub fn from_ints(lo: (i64, i64), hi: (i64, i64)) -> Result<Self> {
        Self::new(
            BigRational::new(BigInt::from(lo.0), BigInt::from(lo.1)),
            BigRational::new(BigInt::from(hi.0), BigInt::from(hi.1)),
        )
    }

    pub fn len(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }
}

pub(crate) fn rat_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Double-double representation of an exact rational.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    pub fn from_rat(r: &BigRational) -> Dd {
        let hi = rat_f64(r);
        let back = BigRational::from_float(hi).unwrap_or_else(BigRational::zero);
        let lo = rat_f64(&(r - back));
        Dd { hi, lo }
    }

    /// `self - other` rounded to f64.
    #[inline]
    pub fn diff(self, other: Dd) -> f64 {
        let (s, e) = two_sum(self.hi, -other.hi);
        s + (e + (self.lo - other.lo))
    }

    pub fn midpoint(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let lo = e + self.lo + other.lo;
        let (s, e) = two_sum(s, lo);
        Dd { hi: s * 0.5, lo: e * 0.5 }
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("s must lie in (0, 1), got {s}")));
    }
    Ok(())
}

/// `(b + l)^(1-s) - b^(1-s)` without cancellation.
#[inline]
fn delta(b: f64, l: f64, s: f64) -> f64 {
    if b == 0.0 {
        l.powf(1.0 - s)
    } else {
        b.powf(1.0 - s) * ((1.0 - s) * (l / b).ln_1p()).exp_m1()
    }
}

/// Interaction of `[0, l1]` and `[l1 + g, l1 + g + l2]`, i.e. two intervals
/// with lengths `l1`, `l2` separated by a gap `g >= 0`.
pub fn interaction_gap(g: f64, l1: f64, l2: f64, s: f64) -> f64 {
    if l1 == 0.0 || l2 == 0.0 {
        return 0.0;
    }
    let norm = 1.0 / (s * (1.0 - s));
    if g > 0.0 && (l1 + l2) <= 0.5 * g {
        let z = (l1 + l2) / g;
        let q = l1.min(l2) / (l1 + l2);
        let lq = (-q).ln_1p();
        let alpha = 1.0 - s;
        // c_k = -binom(1-s, k)
        let mut c = -alpha * (alpha - 1.0) / 2.0;
        let mut zk = z * z;
        let mut acc = Neumaier::new();
        let mut k = 2u32;
        loop {
            let kf = k as f64;
            let bracket = -(kf * lq).exp_m1() - q.powi(k as i32);
            let term = c * zk * bracket;
            acc.add(term);
            if term.abs() <= 1e-18 * acc.value().abs() || k > 400 {
                break;
            }
            c *= (alpha - kf) / (kf + 1.0);
            zk *= z;
            k += 1;
        }
        return norm * g.powf(1.0 - s) * acc.value();
    }
    let (m, big) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
    norm * (delta(g, m, s) - delta(g + big, m, s))
}

/// `int_I1 int_I2 |x - y|^(-1-s) dy dx` for intervals with disjoint interiors.
pub fn interval_interaction_exact(i1: &Interval, i2: &Interval, s: f64) -> Result<f64> {
    check_s(s)?;
    if i1.is_degenerate() || i2.is_degenerate() {
        return Ok(0.0);
    }
    let (a, b) = if i1.lo <= i2.lo { (i1, i2) } else { (i2, i1) };
    if b.lo < a.hi {
        return Err(Error::Domain("intervals have overlapping interiors".into()));
    }
    let g = rat_f64(&(&b.lo - &a.hi));
    Ok(interaction_gap(g, rat_f64(&a.len()), rat_f64(&b.len()), s))
}

/// Validates that `removed` and `remaining` tile `[0, 1]` with disjoint interiors.
fn check_tiling(removed: &[Interval], remaining: &[Interval]) -> Result<()> {
    let mut all: Vec<&Interval> = removed.iter().chain(remaining).filter(|i| !i.is_degenerate()).collect();
    if all.is_empty() {
        return invalid("empty tiling");
    }
    all.sort_by(|x, y| x.lo.cmp(&y.lo));
    if !all[0].lo.is_zero() {
        return invalid("tiling does not start at 0");
    }
    for w in all.windows(2) {
        if w[0].hi != w[1].lo {
            return invalid("intervals overlap or leave a gap");
        }
    }
    if !all[all.len() - 1].hi.is_one() {
        return invalid("tiling does not end at 1");
    }
    Ok(())
}

/// Number of retained Taylor moments in the far field.
const MOMENTS: usize = 60;
/// Opening ratio: a node is far from an interval when half-width / distance <= THETA.
const THETA: f64 = 0.5;

struct Node {
    lo: Dd,
    hi: Dd,
    center: Dd,
    half: f64,
    children: Option<(usize, usize)>,
    leaf: usize,
    moments: [f64; MOMENTS],
}

/// Hierarchical moment tree over sorted disjoint intervals.
struct MomentTree {
    nodes: Vec<Node>,
    leaf_len: Vec<f64>,
}

impl MomentTree {
    fn build(leaves: &[(Dd, Dd, f64)]) -> Self {
        let mut binom = vec![[0.0f64; MOMENTS]; MOMENTS];
        for k in 0..MOMENTS {
            binom[k][0] = 1.0;
            for i in 1..=k {
                binom[k][i] = binom[k - 1][i - 1] + if i < k { binom[k - 1][i] } else { 0.0 };
            }
        }
        let mut tree = MomentTree { nodes: Vec::with_capacity(2 * leaves.len()), leaf_len: leaves.iter().map(|l| l.2).collect() };
        tree.build_rec(leaves, 0, leaves.len(), &binom);
        tree
    }

    fn build_rec(&mut self, leaves: &[(Dd, Dd, f64)], a: usize, b: usize, binom: &[[f64; MOMENTS]]) -> usize {
        if b - a == 1 {
            let (lo, hi, len) = leaves[a];
            let half = 0.5 * len;
            let mut moments = [0.0; MOMENTS];
            for (k, m) in moments.iter_mut().enumerate().step_by(2) {
                *m = 2.0 * half / (k as f64 + 1.0);
            }
            self.nodes.push(Node { lo, hi, center: lo.midpoint(hi), half, children: None, leaf: a, moments });
            return self.nodes.len() - 1;
        }
        let mid = (a + b) / 2;
        let l = self.build_rec(leaves, a, mid, binom);
        let r = self.build_rec(leaves, mid, b, binom);
        let lo = self.nodes[l].lo;
        let hi = self.nodes[r].hi;
        let center = lo.midpoint(hi);
        let half = 0.5 * hi.diff(lo);
        let mut moments = [0.0; MOMENTS];
        for &c in &[l, r] {
            let child = &self.nodes[c];
            let t = if half > 0.0 { child.half / half } else { 0.0 };
            let d = if half > 0.0 { child.center.diff(center) / half } else { 0.0 };
            let mut scaled = [0.0; MOMENTS];
            let mut tp = 1.0;
            for i in 0..MOMENTS {
                scaled[i] = child.moments[i] * tp;
                tp *= t;
            }
            let mut dp = [0.0; MOMENTS];
            dp[0] = 1.0;
            for i in 1..MOMENTS {
                dp[i] = dp[i - 1] * d;
            }
            for k in 0..MOMENTS {
                let mut acc = 0.0;
                for i in 0..=k {
                    acc += binom[k][i] * scaled[i] * dp[k - i];
                }
                moments[k] += acc;
            }
        }
        self.nodes.push(Node { lo, hi, center, half, children: Some((l, r)), leaf: usize::MAX, moments });
        self.nodes.len() - 1
    }

    fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    /// `int_I int_{tree} |x - y|^(-1-s)` for an interval `I = [p, q]` disjoint from all leaves.
    fn interact(&self, p: Dd, q: Dd, len: f64, s: f64, coef: &[f64; MOMENTS], acc: &mut Neumaier) {
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let right = node.center.diff(q);
            let left = p.diff(node.center);
            let (dist, sign) = if right > 0.0 { (right, -1.0) } else { (left, 1.0) };
            if dist > 0.0 && node.half <= THETA * dist {
                acc.add(far_field(dist, len, node.half, s, sign, &node.moments, coef));
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => {
                    let g = if right > 0.0 { node.lo.diff(q) } else { p.diff(node.hi) };
                    acc.add(interaction_gap(g.max(0.0), len, self.leaf_len[node.leaf], s));
                }
            }
        }
    }
}

/// Far-field contribution of a node at distance `a` from the near endpoint of `I`.
/// `sign` is -1 for nodes right of `I` and +1 for nodes left of `I`.
#[inline]
fn far_field(a: f64, len: f64, half: f64, s: f64, sign: f64, moments: &[f64; MOMENTS], coef: &[f64; MOMENTS]) -> f64 {
    let u = len / a;
    let ratio = sign * half / a;
    let mut d = -(-s * u.ln_1p()).exp_m1();
    let inv = 1.0 / (1.0 + u);
    let mut rk = 1.0;
    let mut acc = 0.0;
    for k in 0..MOMENTS {
        let term = coef[k] * rk * moments[k] * d;
        acc += term;
        rk *= ratio;
        d = (u + d) * inv;
        if rk.abs() < 1e-18 {
            break;
        }
    }
    a.powf(-s) * acc / s
}

fn far_coefficients(s: f64) -> [f64; MOMENTS] {
    // |binom(-s, k)| = (s)_k / k!
    let mut c = [0.0; MOMENTS];
    c[0] = 1.0;
    for k in 1..MOMENTS {
        c[k] = c[k - 1] * (s + k as f64 - 1.0) / k as f64;
    }
    c
}

/// Per-removed-interval interactions `T(I, union of remaining)` and the total energy.
#[derive(Debug, Clone, Serialize)]
pub struct TilingEnergy {
    pub s: f64,
    /// `2 * sum_I T(I, remaining)`.
    pub energy: f64,
    pub per_removed: Vec<f64>,
}

/// Energy `2 * sum_{I removed} sum_{R remaining} T(I, R)` of a tiling of `[0, 1]`,
/// evaluated with a moment tree over the remaining intervals.
pub fn cantor_energy_exact(removed: &[Interval], remaining: &[Interval], s: f64) -> Result<TilingEnergy> {
    check_s(s)?;
    check_tiling(removed, remaining)?;
    let mut leaves: Vec<(Dd, Dd, f64, &Interval)> = remaining
        .iter()
        .filter(|r| !r.is_degenerate())
        .map(|r| (Dd::from_rat(&r.lo), Dd::from_rat(&r.hi), rat_f64(&r.len()), r))
        .collect();
    leaves.sort_by(|x, y| x.3.lo.cmp(&y.3.lo));
    let coef = far_coefficients(s);
    let mut per_removed = vec![0.0; removed.len()];
    if !leaves.is_empty() {
        let plain: Vec<(Dd, Dd, f64)> = leaves.iter().map(|l| (l.0, l.1, l.2)).collect();
        let tree = MomentTree::build(&plain);
        for (k, iv) in removed.iter().enumerate() {
            if iv.is_degenerate() {
                continue;
            }
            let mut acc = Neumaier::new();
            tree.interact(Dd::from_rat(&iv.lo), Dd::from_rat(&iv.hi), rat_f64(&iv.len()), s, &coef, &mut acc);
            per_removed[k] = acc.value();
        }
    }
    let mut total = Neumaier::new();
    for &t in &per_removed {
        total.add(t);
    }
    Ok(TilingEnergy { s, energy: 2.0 * total.value(), per_removed })
}

/// Pairwise reference evaluation of [`cantor_energy_exact`], quadratic in the tiling size.
pub fn cantor_energy_direct(removed: &[Interval], remaining: &[Interval], s: f64) -> Result<TilingEnergy> {
    check_s(s)?;
    check_tiling(removed, remaining)?;
    let mut per_removed = Vec::with_capacity(removed.len());
    for iv in removed {
        let mut acc = Neumaier::new();
        for r in remaining {
            acc.add(interval_interaction_exact(iv, r, s)?);
        }
        per_removed.push(acc.value());
    }
    let total: f64 = crate::sum::neumaier_sum(per_removed.iter().copied());
    Ok(TilingEnergy { s, energy: 2.0 * total, per_removed })
}
