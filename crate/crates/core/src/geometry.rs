//! Test geometries: fat Cantor sets, Koch snowflakes and uniform grids.

use crate::error::{invalid, Error, Result};
use crate::interval::{cantor_energy_exact, Interval, TilingEnergy};
use crate::space::{DiscreteSpace, GridInfo};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

pub const MAX_CANTOR_DEPTH: u32 = 20;
pub const MAX_KOCH_DEPTH: u32 = 8;
pub const MAX_KOCH_RASTER: usize = 2048;

/// Fat Cantor set: level `j` removes a centred open interval of length `a^j`
/// from each of the `2^(j-1)` intervals left by level `j - 1`.
#[derive(Debug, Clone)]
pub struct FatCantor {
    pub a: BigRational,
    pub depth: u32,
    /// Removed intervals in increasing order of position.
    pub removed: Vec<Interval>,
    /// Level (1-based) of each removed interval.
    pub removed_level: Vec<u32>,
    /// Remaining closed intervals in increasing order.
    pub remaining: Vec<Interval>,
}

pub fn parse_rational(text: &str) -> Result<BigRational> {
    let parse = |t: &str| t.trim().parse::<BigInt>().map_err(|_| Error::InvalidInput(format!("bad rational '{text}'")));
    match text.split_once('/') {
        Some((p, q)) => {
            let q = parse(q)?;
            if q.is_zero() {
                return invalid("zero denominator");
            }
            Ok(BigRational::new(parse(p)?, q))
        }
        None => Ok(BigRational::from_integer(parse(text)?)),
    }
}

/// Length of each level-`j` remaining interval: `(1 - 3a + a (2a)^j) / (2^j (1 - 2a))`.
pub fn cantor_piece_length(a: &BigRational, j: u32) -> BigRational {
    let one = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    let three = BigRational::from_integer(BigInt::from(3));
    let num = &one - &three * a + a * pow(&(&two * a), j);
    let den = pow(&two, j) * (&one - &two * a);
    num / den
}

fn pow(x: &BigRational, j: u32) -> BigRational {
    let mut r = BigRational::one();
    for _ in 0..j {
        r *= x;
    }
    r
}

pub fn fat_cantor(a: &BigRational, depth: u32) -> Result<FatCantor> {
    let third = BigRational::new(BigInt::from(1), BigInt::from(3));
    if !(a.is_positive() && *a < third) {
        return Err(Error::Domain(format!("a must lie in (0, 1/3), got {a}")));
    }
    if depth > MAX_CANTOR_DEPTH {
        return invalid(format!("depth {depth} exceeds the limit {MAX_CANTOR_DEPTH}"));
    }
    let two = BigRational::from_integer(BigInt::from(2));
    let mut pieces = vec![Interval::new(BigRational::zero(), BigRational::one())?];
    // removed intervals keyed by position, levels attached
    let mut removed: Vec<(Interval, u32)> = Vec::new();
    let mut gap = BigRational::one();
    for level in 1..=depth {
        gap *= a;
        let mut next = Vec::with_capacity(2 * pieces.len());
        for p in &pieces {
            let side = (p.len() - &gap) / &two;
            let l = &p.lo + &side;
            let r = &l + &gap;
            next.push(Interval { lo: p.lo.clone(), hi: l.clone() });
            next.push(Interval { lo: r.clone(), hi: p.hi.clone() });
            removed.push((Interval { lo: l, hi: r }, level));
        }
        pieces = next;
    }
    removed.sort_by(|x, y| x.0.lo.cmp(&y.0.lo));
    Ok(FatCantor {
        a: a.clone(),
        depth,
        removed_level: removed.iter().map(|r| r.1).collect(),
        removed: removed.into_iter().map(|r| r.0).collect(),
        remaining: pieces,
    })
}

impl FatCantor {
    pub fn a_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN)
    }

    pub fn remaining_length(&self) -> BigRational {
        self.remaining.iter().map(|r| r.len()).fold(BigRational::zero(), |x, y| x + y)
    }

    /// Energy of the depth-`J` tiling.
    pub fn energy(&self, s: f64) -> Result<TilingEnergy> {
        cantor_energy_exact(&self.removed, &self.remaining, s)
    }

    /// `2 * sum_{I at level j} T(I, remaining)` for `j = 1..=depth`.
    pub fn level_energies(&self, s: f64) -> Result<Vec<f64>> {
        let e = self.energy(s)?;
        Ok(self.group_levels(&e.per_removed))
    }

    pub fn group_levels(&self, per_removed: &[f64]) -> Vec<f64> {
        let mut acc = vec![crate::sum::Neumaier::new(); self.depth as usize];
        for (t, &l) in per_removed.iter().zip(&self.removed_level) {
            acc[l as usize - 1].add(2.0 * t);
        }
        acc.iter().map(|a| a.value()).collect()
    }

    /// Membership of the cell centres `(i + 1/2) / n` in the remaining set.
    pub fn raster(&self, n: usize) -> Result<(DiscreteSpace, Vec<u8>)> {
        let space = build_grid_space(1, n, 0.0, 1.0)?;
        let his: Vec<f64> = self.remaining.iter().map(|r| r.hi.to_f64().unwrap()).collect();
        let denom = BigInt::from(2 * n as u64);
        let mut set = vec![0u8; n];
        for (i, v) in set.iter_mut().enumerate() {
            let x = (i as f64 + 0.5) / n as f64;
            let k = his.partition_point(|&h| h < x - 1e-9);
            let xr = BigRational::new(BigInt::from(2 * i as u64 + 1), denom.clone());
            for r in self.remaining.iter().skip(k).take(2) {
                if r.lo <= xr && xr <= r.hi {
                    *v = 1;
                    break;
                }
            }
        }
        Ok((space, set))
    }
}

/// Uniform grid of `n` cell centres per axis on `[lo, hi]^dim`.
pub fn build_grid_space(dim: usize, n: usize, lo: f64, hi: f64) -> Result<DiscreteSpace> {
    build_grid_space_origin(dim, n, [lo, lo], hi - lo)
}

pub(crate) fn build_grid_space_origin(dim: usize, n: usize, origin: [f64; 2], extent: f64) -> Result<DiscreteSpace> {
    if !(dim == 1 || dim == 2) {
        return invalid(format!("grid dimension must be 1 or 2, got {dim}"));
    }
    if n < 2 {
        return invalid(format!("grid needs at least 2 points per axis, got {n}"));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return invalid("grid extent must be positive");
    }
    let spacing = extent / n as f64;
    let g = GridInfo { dim, n, origin, spacing };
    let total = g.len();
    let mut coords = Vec::with_capacity(total * dim);
    for idx in 0..total {
        for axis in 0..dim {
            coords.push(g.coord(idx, axis));
        }
    }
    let w = spacing.powi(dim as i32);
    DiscreteSpace::from_coords_with_grid(coords, dim, vec![w; total], spacing, Some(g))
}

/// Koch snowflake polygon on the unit-side triangle with outward bumps.
/// Vertices are stored in the lattice basis `{1, e^{i pi/3}}`, scaled by `3^depth`.
#[derive(Debug, Clone)]
pub struct KochSnowflake {
    pub depth: u32,
    pub scale: i64,
    pub vertices: Vec<(i64, i64)>,
}

pub fn koch_snowflake(depth: u32) -> Result<KochSnowflake> {
    if depth > MAX_KOCH_DEPTH {
        return invalid(format!("Koch depth {depth} exceeds the limit {MAX_KOCH_DEPTH}"));
    }
    let scale = 3i64.pow(depth);
    let mut verts = vec![(0, 0), (scale, 0), (0, scale)];
    for _ in 0..depth {
        let m = verts.len();
        let mut next = Vec::with_capacity(4 * m);
        for k in 0..m {
            let p = verts[k];
            let q = verts[(k + 1) % m];
            let d = ((q.0 - p.0) / 3, (q.1 - p.1) / 3);
            let a = (p.0 + d.0, p.1 + d.1);
            // rotate d by -60 degrees: (x, y) -> (x + y, -x) in this basis
            let apex = (a.0 + d.0 + d.1, a.1 - d.0);
            let b = (a.0 + d.0, a.1 + d.1);
            next.extend_from_slice(&[p, a, apex, b]);
        }
        verts = next;
    }
    Ok(KochSnowflake { depth, scale, vertices: verts })
}

/// Raster box used for snowflakes: `[-1/8, 9/8] x [-5/16, 15/16]`.
pub const KOCH_BOX_ORIGIN: [f64; 2] = [-0.125, -0.3125];
pub const KOCH_BOX_EXTENT: f64 = 1.25;

impl KochSnowflake {
    pub fn edge_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn cartesian(&self) -> Vec<(f64, f64)> {
        let s = self.scale as f64;
        self.vertices
            .iter()
            .map(|&(a, b)| ((a as f64 + 0.5 * b as f64) / s, 3f64.sqrt() * 0.5 * b as f64 / s))
            .collect()
    }

    /// Even-odd membership of the cell centres of an `n x n` grid on the snowflake box.
    pub fn raster(&self, n: usize) -> Result<(DiscreteSpace, Vec<u8>)> {
        if n > MAX_KOCH_RASTER {
            return invalid(format!("raster size {n} exceeds the limit {MAX_KOCH_RASTER}"));
        }
        let space = build_grid_space_origin(2, n, KOCH_BOX_ORIGIN, KOCH_BOX_EXTENT)?;
        // grid point (i, j) is (xi, yj) / (16 n) with integers below
        let dg = 16 * n as i128;
        let s2 = 2 * self.scale as i128;
        let xi = |i: usize| 2 * (-(n as i128) + 5 * (2 * i as i128 + 1));
        let yj = |j: usize| -5 * n as i128 + 10 * (2 * j as i128 + 1);
        let m = self.vertices.len();
        let cart = self.cartesian();
        let mut set = vec![0u8; n * n];
        let mut crossings: Vec<(f64, usize)> = Vec::new();
        for j in 0..n {
            let p = yj(j) * s2;
            let y = p as f64 / (dg * s2) as f64;
            crossings.clear();
            for k in 0..m {
                let (v1, v2) = (k, (k + 1) % m);
                let above1 = self.vertex_above(v1, p, dg, y, &cart);
                let above2 = self.vertex_above(v2, p, dg, y, &cart);
                if above1 != above2 {
                    let (x1, y1) = cart[v1];
                    let (x2, y2) = cart[v2];
                    let xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1);
                    crossings.push((xc, k));
                }
            }
            crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut lo = 0;
            for i in 0..n {
                let x = xi(i) as f64 / dg as f64;
                while lo < crossings.len() && crossings[lo].0 < x - 1e-9 {
                    lo += 1;
                }
                let mut hi = lo;
                let mut count = 0;
                while hi < crossings.len() && crossings[hi].0 <= x + 1e-9 {
                    if self.exact_left_of_crossing(crossings[hi].1, xi(i) * s2, p, dg) {
                        count += 1;
                    }
                    hi += 1;
                }
                count += crossings.len() - hi;
                set[j * n + i] = (count % 2) as u8;
            }
        }
        Ok((space, set))
    }

    /// `Y_v > y` where the row ordinate is `p / (dg * 2 scale)` and `Y_v = sqrt(3) b / (2 scale)`.
    fn vertex_above(&self, v: usize, p: i128, dg: i128, y: f64, cart: &[(f64, f64)]) -> bool {
        let yv = cart[v].1;
        if (yv - y).abs() > 1e-9 {
            return yv > y;
        }
        let q = self.vertices[v].1 as i128 * dg;
        sign_sqrt3(-p, q) == Ordering::Greater
    }

    /// Whether the crossing of edge `k` with the row lies strictly right of the point.
    fn exact_left_of_crossing(&self, k: usize, xs: i128, p: i128, dg: i128) -> bool {
        let m = self.vertices.len();
        let (a1, b1) = self.vertices[k];
        let (a2, b2) = self.vertices[(k + 1) % m];
        let (da, db) = ((a2 - a1) as i128, (b2 - b1) as i128);
        let x1 = (2 * a1 as i128 + b1 as i128) * dg;
        // orient / dg = (2da + db) p + sqrt3 * (-(2da + db) b1 dg - db (xs - x1))
        let c = 2 * da + db;
        let ra = c * p;
        let rb = -c * b1 as i128 * dg - db * (xs - x1);
        let orient = sign_sqrt3(ra, rb);
        if db > 0 {
            orient == Ordering::Greater
        } else {
            orient == Ordering::Less
        }
    }
}

/// Sign of `a + sqrt(3) b` for integers.
fn sign_sqrt3(a: i128, b: i128) -> Ordering {
    match (a.cmp(&0), b.cmp(&0)) {
        (Ordering::Equal, o) | (o, Ordering::Equal) => o,
        (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
        (Ordering::Less, Ordering::Less) => Ordering::Less,
        (Ordering::Greater, Ordering::Less) => (a * a).cmp(&(3 * b * b)),
        (Ordering::Less, Ordering::Greater) => (3 * b * b).cmp(&(a * a)),
    }
}
