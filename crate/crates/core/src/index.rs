//! Uniform bucket grid for range queries on low-dimensional point sets.

use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct BucketIndex {
    dim: usize,
    cell: f64,
    origin: [f64; 3],
    dims: [i64; 3],
    len: usize,
    dense: Option<Vec<Vec<u32>>>,
    sparse: HashMap<[i64; 3], Vec<u32>>,
}

const DENSE_LIMIT: i64 = 1 << 24;

impl BucketIndex {
    /// `coords` is row-major with `dim` entries per point, `dim` in 1..=3.
    pub fn build(coords: &[f64], dim: usize, cell: f64) -> Self {
        assert!((1..=3).contains(&dim) && cell > 0.0);
        let n = coords.len() / dim;
        let mut lo = [0.0f64; 3];
        let mut hi = [0.0f64; 3];
        for k in 0..dim {
            lo[k] = f64::INFINITY;
            hi[k] = f64::NEG_INFINITY;
        }
        for i in 0..n {
            for k in 0..dim {
                let v = coords[i * dim + k];
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        if n == 0 {
            lo = [0.0; 3];
            hi = [0.0; 3];
        }
        let mut dims = [1i64; 3];
        for k in 0..dim {
            dims[k] = ((hi[k] - lo[k]) / cell).floor() as i64 + 1;
        }
        let total = dims[0].saturating_mul(dims[1]).saturating_mul(dims[2]);
        let mut idx = BucketIndex {
            dim,
            cell,
            origin: lo,
            dims,
            len: n,
            dense: None,
            sparse: HashMap::new(),
        };
        if total <= DENSE_LIMIT.max(4 * n as i64) && total <= 1 << 26 {
            let mut buckets = vec![Vec::new(); total as usize];
            for i in 0..n {
                let key = idx.key(&coords[i * dim..i * dim + dim]);
                buckets[idx.flat(key)].push(i as u32);
            }
            idx.dense = Some(buckets);
        } else {
            for i in 0..n {
                let key = idx.key(&coords[i * dim..i * dim + dim]);
                idx.sparse.entry(key).or_default().push(i as u32);
            }
        }
        idx
    }

    fn key(&self, p: &[f64]) -> [i64; 3] {
        let mut key = [0i64; 3];
        for k in 0..self.dim {
            key[k] = ((p[k] - self.origin[k]) / self.cell).floor() as i64;
        }
        key
    }

    fn flat(&self, key: [i64; 3]) -> usize {
        ((key[2] * self.dims[1] + key[1]) * self.dims[0] + key[0]) as usize
    }

    fn bucket(&self, key: [i64; 3]) -> Option<&[u32]> {
        for k in 0..3 {
            if key[k] < 0 || key[k] >= self.dims[k] {
                return None;
            }
        }
        match &self.dense {
            Some(b) => Some(&b[self.flat(key)]),
            None => self.sparse.get(&key).map(|v| v.as_slice()),
        }
    }

    /// Calls `f(j)` for every indexed point whose bucket intersects the box of
    /// half-width `r` around `p`. Callers filter by exact distance.
    pub fn for_each_candidate(&self, p: &[f64], r: f64, mut f: impl FnMut(usize)) {
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for k in 0..self.dim {
            lo[k] = (((p[k] - r - self.origin[k]) / self.cell).floor() as i64).max(0);
            hi[k] = (((p[k] + r - self.origin[k]) / self.cell).floor() as i64).min(self.dims[k] - 1);
            if lo[k] > hi[k] {
                return;
            }
        }
        let cells = (0..self.dim).fold(1u128, |acc, k| acc * (hi[k] - lo[k] + 1) as u128);
        if cells > self.len as u128 {
            (0..self.len).for_each(f);
            return;
        }
        for c in lo[2]..=hi[2] {
            for b in lo[1]..=hi[1] {
                for a in lo[0]..=hi[0] {
                    if let Some(bucket) = self.bucket([a, b, c]) {
                        for &j in bucket {
                            f(j as usize);
                        }
                    }
                }
            }
        }
    }
}
