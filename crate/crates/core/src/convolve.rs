//! Discrete Gaussian convolution on the midpoint lattice.
//!
//! Both paths compute the same sum `h^N Σ_j u_j Π_a g(x_{i,a} - x_{j,a})`:
//! the direct path literally, the FFT path axis by axis with zero padding to
//! twice the extent so that no periodic image is ever seen.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Diffusivity, GridSpec};
use crate::kernels::gaussian_1d;
use crate::par;

/// Kernel taps `h g_t(m h)` for lattice offsets `m = 0..n`.
pub fn kernel_taps(grid: &GridSpec, t: f64, diffusivity: Diffusivity) -> Vec<f64> {
    let h = grid.spacing();
    (0..grid.points_per_axis())
        .map(|m| h * gaussian_1d(m as f64 * h, t, diffusivity))
        .collect()
}

/// Reference O(n^{2N}) convolution.
pub fn direct(grid: &GridSpec, values: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = grid.points_per_axis();
    let k = |i: usize, j: usize| taps[i.abs_diff(j)];
    match grid.dim() {
        1 => par::map_range(n, |i| {
            values
                .iter()
                .enumerate()
                .map(|(j, v)| v * k(i, j))
                .sum::<f64>()
        }),
        2 => par::map_range(n * n, |flat| {
            let (i0, i1) = (flat / n, flat % n);
            (0..n)
                .map(|j0| {
                    let row = &values[j0 * n..(j0 + 1) * n];
                    let inner: f64 = row.iter().enumerate().map(|(j1, v)| v * k(i1, j1)).sum();
                    k(i0, j0) * inner
                })
                .sum()
        }),
        _ => par::map_range(n * n * n, |flat| {
            let (i0, i1, i2) = (flat / (n * n), (flat / n) % n, flat % n);
            (0..n)
                .map(|j0| {
                    let plane: f64 = (0..n)
                        .map(|j1| {
                            let base = (j0 * n + j1) * n;
                            let row = &values[base..base + n];
                            let inner: f64 =
                                row.iter().enumerate().map(|(j2, v)| v * k(i2, j2)).sum();
                            k(i1, j1) * inner
                        })
                        .sum();
                    k(i0, j0) * plane
                })
                .sum()
        }),
    }
}

struct LinePlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_hat: Vec<Complex<f64>>,
    n: usize,
}

impl LinePlan {
    fn new(taps: &[f64]) -> Self {
        let n = taps.len();
        let len = 2 * n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut kernel_hat = vec![Complex::new(0.0, 0.0); len];
        kernel_hat[0].re = taps[0];
        for m in 1..n {
            kernel_hat[m].re = taps[m];
            kernel_hat[len - m].re = taps[m];
        }
        forward.process(&mut kernel_hat);
        let scale = 1.0 / len as f64;
        for c in kernel_hat.iter_mut() {
            *c *= scale;
        }
        Self {
            forward,
            inverse,
            kernel_hat,
            n,
        }
    }

    /// Linear convolution of one line with the kernel.
    fn apply(&self, line: &[f64]) -> Vec<f64> {
        let mut buf = vec![Complex::new(0.0, 0.0); 2 * self.n];
        for (b, v) in buf.iter_mut().zip(line) {
            b.re = *v;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        buf[..self.n].iter().map(|c| c.re).collect()
    }
}

/// Visits every line along `axis` of an `n^dim` row-major array.
fn line_starts(n: usize, dim: usize, axis: usize) -> (Vec<usize>, usize) {
    let stride = n.pow((dim - 1 - axis) as u32);
    let lines = n.pow(dim as u32 - 1);
    let starts = (0..lines)
        .map(|l| {
            let outer = l / stride;
            let inner = l % stride;
            outer * n * stride + inner
        })
        .collect();
    (starts, stride)
}

/// Separable FFT convolution with zero padding.
pub fn fft(grid: &GridSpec, values: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = grid.points_per_axis();
    let plan = LinePlan::new(taps);
    let mut cur = values.to_vec();
    for axis in 0..grid.dim() {
        let (starts, stride) = line_starts(n, grid.dim(), axis);
        let outputs = par::map_slice(&starts, |&s| {
            let line: Vec<f64> = (0..n).map(|k| cur[s + k * stride]).collect();
            plan.apply(&line)
        });
        for (s, out) in starts.iter().zip(outputs) {
            for (k, v) in out.into_iter().enumerate() {
                cur[s + k * stride] = v;
            }
        }
    }
    cur
}

/// Applies a dense `(n_out x n_in)` matrix along `axis` of a row-major array
/// with per-axis extents `shape`.
pub fn apply_axis_matrix(
    values: &[f64],
    shape: &[usize],
    axis: usize,
    matrix: &[Vec<f64>],
) -> (Vec<f64>, Vec<usize>) {
    let n_in = shape[axis];
    let n_out = matrix.len();
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut new_shape = shape.to_vec();
    new_shape[axis] = n_out;
    let total = outer * n_out * inner;
    let out = par::map_range(total, |flat| {
        let o = flat / (n_out * inner);
        let r = (flat / inner) % n_out;
        let i = flat % inner;
        let row = &matrix[r];
        (0..n_in)
            .map(|k| row[k] * values[(o * n_in + k) * inner + i])
            .sum()
    });
    (out, new_shape)
}
