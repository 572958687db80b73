//! Ball masses of a subset at every point, with fast paths for lines and 2-D grids.

use crate::space::{DiscreteSpace, GridInfo};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// `mu(B(x, r) cap S)` for every point `x`; `mask = None` means the whole space.
pub fn masked_ball_masses(space: &DiscreteSpace, mask: Option<&[u8]>, r: f64) -> Vec<f64> {
    let n = space.len();
    if let Some(g) = space.grid() {
        if g.dim == 2 && n >= 4096 {
            return grid2_disc_masses(space, g, mask, r);
        }
    }
    if space.dim() == Some(1) {
        return line_masses(space, mask, r);
    }
    (0..n)
        .map(|i| {
            let mut m = 0.0;
            space.for_each_in_ball(i, r, |j, _| {
                if mask.is_none_or(|s| s[j] == 1) {
                    m += space.weight(j);
                }
            });
            m
        })
        .collect()
}

fn line_masses(space: &DiscreteSpace, mask: Option<&[u8]>, r: f64) -> Vec<f64> {
    let n = space.len();
    let mut order: Vec<usize> = (0..n).collect();
    let x = |i: usize| space.coords(i).unwrap()[0];
    order.sort_by(|&a, &b| x(a).total_cmp(&x(b)));
    let xs: Vec<f64> = order.iter().map(|&i| x(i)).collect();
    let mut prefix = vec![0.0; n + 1];
    for (k, &i) in order.iter().enumerate() {
        let w = if mask.is_none_or(|s| s[i] == 1) { space.weight(i) } else { 0.0 };
        prefix[k + 1] = prefix[k] + w;
    }
    let mut out = vec![0.0; n];
    let (mut lo, mut hi) = (0usize, 0usize);
    for k in 0..n {
        let c = xs[k];
        while c - xs[lo] >= r {
            lo += 1;
        }
        while hi < n && xs[hi] - c < r {
            hi += 1;
        }
        out[order[k]] = prefix[hi] - prefix[lo];
    }
    out
}

/// Offsets `(a, b)` with `spacing * |(a, b)| < r`.
pub(crate) fn disc_stencil(spacing: f64, r: f64) -> Vec<(i64, i64)> {
    let rad = (r / spacing).ceil() as i64;
    let mut out = Vec::new();
    for b in -rad..=rad {
        for a in -rad..=rad {
            if spacing * ((a * a + b * b) as f64).sqrt() < r {
                out.push((a, b));
            }
        }
    }
    out
}

fn grid2_disc_masses(space: &DiscreteSpace, g: &GridInfo, mask: Option<&[u8]>, r: f64) -> Vec<f64> {
    let n = g.n;
    let w = space.weight(0);
    let stencil = disc_stencil(g.spacing, r);
    let rad = stencil.iter().map(|s| s.0.abs()).max().unwrap_or(0) as usize;
    let field: Vec<f64> = match mask {
        Some(m) => m.iter().map(|&v| v as f64).collect(),
        None => vec![1.0; n * n],
    };
    if stencil.len() <= 64 {
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let mut c = 0.0;
                for &(a, b) in &stencil {
                    let (x, y) = (i as i64 + a, j as i64 + b);
                    if x >= 0 && y >= 0 && (x as usize) < n && (y as usize) < n {
                        c += field[y as usize * n + x as usize];
                    }
                }
                out[j * n + i] = c * w;
            }
        }
        return out;
    }
    let size = (n + 2 * rad + 1).next_power_of_two();
    let mut kernel = vec![0.0; size * size];
    for &(a, b) in &stencil {
        let x = a.rem_euclid(size as i64) as usize;
        let y = b.rem_euclid(size as i64) as usize;
        kernel[y * size + x] = 1.0;
    }
    let mut padded = vec![0.0; size * size];
    for j in 0..n {
        padded[j * size..j * size + n].copy_from_slice(&field[j * n..(j + 1) * n]);
    }
    let conv = fft_convolve2(&padded, &kernel, size);
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            out[j * n + i] = conv[j * size + i].round() * w;
        }
    }
    out
}

fn fft2(data: &mut [Complex64], size: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(size) } else { planner.plan_fft_forward(size) };
    for row in data.chunks_mut(size) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); size];
    for c in 0..size {
        for r in 0..size {
            col[r] = data[r * size + c];
        }
        fft.process(&mut col);
        for r in 0..size {
            data[r * size + c] = col[r];
        }
    }
}

/// Circular convolution of two real `size x size` arrays.
pub(crate) fn fft_convolve2(a: &[f64], b: &[f64], size: usize) -> Vec<f64> {
    let mut fa: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut fa, size, false);
    fft2(&mut fb, size, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft2(&mut fa, size, true);
    let norm = 1.0 / (size * size) as f64;
    fa.iter().map(|c| c.re * norm).collect()
}

/// Circular cross-correlation `c[z] = sum_x a[x] b[x + z]` of two real arrays (1-D or 2-D).
pub(crate) fn fft_correlate(a: &[f64], b: &[f64], size: usize, dim: usize) -> Vec<f64> {
    let mut fa: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if dim == 1 {
        let mut planner = FftPlanner::new();
        let f = planner.plan_fft_forward(size);
        f.process(&mut fa);
        f.process(&mut fb);
    } else {
        fft2(&mut fa, size, false);
        fft2(&mut fb, size, false);
    }
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = x.conj() * y;
    }
    let total = if dim == 1 { size } else { size * size };
    if dim == 1 {
        let mut planner = FftPlanner::new();
        planner.plan_fft_inverse(size).process(&mut fa);
    } else {
        fft2(&mut fa, size, true);
    }
    let norm = 1.0 / total as f64;
    fa.iter().map(|c| c.re * norm).collect()
}
