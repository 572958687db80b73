//! Dyadic shell energies of a rasterized set.
//!
//! For a set `E` on a 1-D or 2-D grid with spacing `h`, the energy in shell `k`
//! is `sum h^(2D) |x - y|^(-D-s)` over `x in E`, `y notin E` with
//! `|x - y| in [r_hi 2^(-k-1), r_hi 2^(-k))`. Across shells the energies grow by
//! about `2^(s - codim)` per octave, which feeds the ratio test.

use crate::balls::fft_correlate;
use crate::error::{invalid, Result};
use crate::kernels::check_s;
use crate::space::DiscreteSpace;

#[derive(Debug, Clone)]
pub struct ShellEnergies {
    pub dim: usize,
    pub h: f64,
    /// Outer radius of the first shell.
    pub r_hi: f64,
    pub shells: usize,
    /// `(shell, distance, pair count)` for each distinct lag length.
    lags: Vec<(usize, f64, f64)>,
}

impl ShellEnergies {
    /// Lag statistics for shells covering `[r_lo, r_hi)`, with `r_lo >= h`.
    pub fn new(space: &DiscreteSpace, set: &[u8], r_lo: f64, r_hi: f64) -> Result<Self> {
        space.check_set(set)?;
        let Some(g) = space.grid() else {
            return invalid("shell energies need a grid space");
        };
        let h = g.spacing;
        if !(r_lo >= h * (1.0 - 1e-12) && r_hi > r_lo) {
            return invalid(format!("shell range [{r_lo}, {r_hi}) must satisfy h <= r_lo < r_hi"));
        }
        let shells = ((r_hi / r_lo).log2() - 1e-9).ceil().max(1.0) as usize;
        let n = g.n;
        let maxlag = (r_hi / h).ceil() as usize;
        let size = (n + maxlag + 1).next_power_of_two();
        let cells = if g.dim == 1 { size } else { size * size };
        let mut a = vec![0.0; cells];
        let mut b = vec![0.0; cells];
        for (idx, &v) in set.iter().enumerate() {
            let (i, j) = (idx % n, idx / n);
            let p = j * size + i;
            if v == 1 {
                a[p] = 1.0;
            } else {
                b[p] = 1.0;
            }
        }
        let corr = fft_correlate(&a, &b, size, g.dim);
        let mut by_norm: std::collections::BTreeMap<u64, f64> = Default::default();
        let m = maxlag as i64;
        let rows = if g.dim == 1 { 0 } else { m };
        for zy in -rows..=rows {
            for zx in -m..=m {
                let q = (zx * zx + zy * zy) as u64;
                if q == 0 {
                    continue;
                }
                let d = h * (q as f64).sqrt();
                if d >= r_hi || d < r_hi * 0.5f64.powi(shells as i32) {
                    continue;
                }
                let x = zx.rem_euclid(size as i64) as usize;
                let y = zy.rem_euclid(size as i64) as usize;
                let c = corr[y * size + x].round();
                if c > 0.0 {
                    *by_norm.entry(q).or_default() += c;
                }
            }
        }
        let lags = by_norm
            .into_iter()
            .map(|(q, c)| {
                let d = h * (q as f64).sqrt();
                let k = ((r_hi / d).log2().floor() as usize).min(shells - 1);
                (k, d, c)
            })
            .collect();
        Ok(ShellEnergies { dim: g.dim, h, r_hi, shells, lags })
    }

    /// Shell energies ordered from the coarsest shell to the finest.
    pub fn energies(&self, s: f64) -> Result<Vec<f64>> {
        check_s(s)?;
        let mut out = vec![0.0; self.shells];
        let cell = self.h.powi(2 * self.dim as i32);
        for &(k, d, c) in &self.lags {
            out[k] += c * cell * d.powf(-(self.dim as f64) - s);
        }
        Ok(out)
    }
}
