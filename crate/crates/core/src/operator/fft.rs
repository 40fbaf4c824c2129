//! Zero-padded FFT evaluation of the discretized bilinear operator.
//!
//! The operator is the diagonal `x₁ = x₂ = x` of the 2n-dimensional linear
//! convolution `H = T ∗ (f ⊗ g)` with `T(u, v) = K(|u|² + |v|²)` on node
//! offsets. With period `L ≥ 2M − 1` per axis the cyclic convolution equals
//! the linear one on the box. Only the diagonal is needed, and
//!
//! `H(x, x) = L^{-2n} Σ_σ D(σ) e^{2πiσ·x/L}`, `D(σ) = Σ_ξ T̂(ξ, σ−ξ) f̂(ξ) ĝ(σ−ξ)`,
//!
//! so after the one-time 2n-dimensional transform of the kernel table each
//! application costs `O(L^{2n})` multiply-adds plus n-dimensional FFTs.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kernel::KernelParams;

/// Number of fixed partial sums in the spectral contraction. Fixed so that the
/// reduction order, and hence the result, does not depend on the thread count.
const CONTRACTION_CHUNKS: usize = 16;

/// Lines gathered per batched FFT call along strided axes.
const LINE_BATCH: usize = 64;

/// Real spectrum of the kernel table on the `L^{2n}` periodic grid.
pub(crate) struct KernelSpectrum {
    n: usize,
    m: usize,
    l: usize,
    re: Vec<f64>,
}

/// Peak bytes for the spectrum build: one complex table plus its real part.
pub fn fft_required_bytes(grid: &GridSpec) -> u64 {
    let l = padded_len(grid.m()) as u64;
    24 * l.pow(2 * grid.dim() as u32)
}

fn padded_len(m: usize) -> usize {
    2 * m
}

impl KernelSpectrum {
    pub(crate) fn build(grid: &GridSpec, params: &KernelParams, budget: u64) -> Result<Self> {
        let required = fft_required_bytes(grid);
        if required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }
        let n = grid.dim();
        let m = grid.m();
        let l = padded_len(m);
        let axes = 2 * n;
        let total = l.pow(axes as u32);
        let h2 = grid.h() * grid.h();

        // squared offset per padded index; None marks the zero-padding gap
        let offset_sq: Vec<Option<f64>> = (0..l)
            .map(|a| {
                if a < m {
                    Some((a * a) as f64)
                } else if a > l - m {
                    let d = (l - a) as f64;
                    Some(d * d)
                } else {
                    None
                }
            })
            .collect();

        let mut table = vec![Complex64::new(0.0, 0.0); total];
        table.par_chunks_mut(l).enumerate().for_each(|(row, chunk)| {
            // all axes except the last are fixed within a row
            let mut prefix = 0.0;
            let mut rest = row;
            for _ in 0..axes - 1 {
                match offset_sq[rest % l] {
                    Some(s) => prefix += s,
                    None => return,
                }
                rest /= l;
            }
            for (a, c) in chunk.iter_mut().enumerate() {
                if let Some(s) = offset_sq[a] {
                    let r2 = (prefix + s) * h2;
                    if r2 > 0.0 {
                        c.re = params.profile(r2);
                    }
                }
            }
        });
        fft_nd(&mut table, l, axes, FftDirection::Forward);
        let re = table.into_iter().map(|c| c.re).collect();
        Ok(KernelSpectrum { n, m, l, re })
    }

    /// `h^{2n} Σ_{y,z} T(x−y, x−z) f(y) g(z)` at every node.
    pub(crate) fn apply(&self, f: &[f64], g: &[f64], h: f64) -> Vec<f64> {
        let (n, m, l) = (self.n, self.m, self.l);
        let fh = self.forward_padded(f);
        let gh = self.forward_padded(g);
        let size = l.pow(n as u32);

        let chunk = size.div_ceil(CONTRACTION_CHUNKS);
        let partials: Vec<Vec<Complex64>> = (0..size)
            .step_by(chunk)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|start| {
                let mut d = vec![Complex64::new(0.0, 0.0); size];
                for xi in start..(start + chunk).min(size) {
                    let row = &self.re[xi * size..(xi + 1) * size];
                    let fx = fh[xi];
                    if n == 1 {
                        // σ = ξ + η (mod L): two contiguous runs
                        let split = l - xi;
                        for eta in 0..split {
                            d[xi + eta] += fx * gh[eta] * row[eta];
                        }
                        for eta in split..l {
                            d[xi + eta - l] += fx * gh[eta] * row[eta];
                        }
                    } else {
                        let (x1, x2) = (xi / l, xi % l);
                        for e1 in 0..l {
                            let s1 = (x1 + e1) % l;
                            let split = l - x2;
                            let base = e1 * l;
                            let out = s1 * l;
                            for e2 in 0..split {
                                d[out + x2 + e2] += fx * gh[base + e2] * row[base + e2];
                            }
                            for e2 in split..l {
                                d[out + x2 + e2 - l] += fx * gh[base + e2] * row[base + e2];
                            }
                        }
                    }
                }
                d
            })
            .collect();
        let mut d = vec![Complex64::new(0.0, 0.0); size];
        for p in &partials {
            for (acc, v) in d.iter_mut().zip(p) {
                *acc += v;
            }
        }
        fft_nd(&mut d, l, n, FftDirection::Inverse);

        let scale = h.powi(2 * n as i32) / (l as f64).powi(2 * n as i32);
        let nodes = m.pow(n as u32);
        (0..nodes)
            .map(|lin| {
                let idx = if n == 1 { lin } else { (lin / m) * l + lin % m };
                d[idx].re * scale
            })
            .collect()
    }

    fn forward_padded(&self, v: &[f64]) -> Vec<Complex64> {
        let (n, m, l) = (self.n, self.m, self.l);
        let mut buf = vec![Complex64::new(0.0, 0.0); l.pow(n as u32)];
        for (lin, &x) in v.iter().enumerate() {
            let idx = if n == 1 { lin } else { (lin / m) * l + lin % m };
            buf[idx].re = x;
        }
        fft_nd(&mut buf, l, n, FftDirection::Forward);
        buf
    }
}

/// Unnormalized in-place FFT over a row-major `[L; dims]` array.
pub(crate) fn fft_nd(buf: &mut [Complex64], l: usize, dims: usize, direction: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft(l, direction);
    let total = buf.len();
    debug_assert_eq!(total, l.pow(dims as u32));
    for axis in 0..dims {
        let stride = l.pow((dims - 1 - axis) as u32);
        if stride == 1 {
            buf.par_chunks_mut(l * LINE_BATCH).for_each(|c| fft.process(c));
            continue;
        }
        let block = l * stride;
        let work = |blk: &mut [Complex64]| {
            let mut scratch = vec![Complex64::new(0.0, 0.0); l * LINE_BATCH.min(stride)];
            let mut j0 = 0;
            while j0 < stride {
                let cnt = LINE_BATCH.min(stride - j0);
                for k in 0..cnt {
                    for i in 0..l {
                        scratch[k * l + i] = blk[j0 + k + i * stride];
                    }
                }
                fft.process(&mut scratch[..cnt * l]);
                for k in 0..cnt {
                    for i in 0..l {
                        blk[j0 + k + i * stride] = scratch[k * l + i];
                    }
                }
                j0 += cnt;
            }
        };
        if total / block > 1 {
            buf.par_chunks_mut(block).for_each(work);
        } else {
            work(buf);
        }
    }
}
