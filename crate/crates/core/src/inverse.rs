//! Approximate FIR inverses of square periodic kernels.
//!
//! SISO kernels are inverted through their blocked MIMO form, square kernels
//! through their serialized SISO form, so every inverse is again a kernel of
//! the same dimension and period. The MIMO itself is inverted bin by bin on a
//! uniform frequency grid; the result is a two-sided FIR centred on lag 0
//! together with a measured composition residual.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::equiv::{mimo_to_siso, siso_to_mimo, siso_to_square, square_to_siso};
use crate::error::{PtvError, Result};
use crate::kernel::{BlockedMimo, PeriodicKernel};

pub const DEFAULT_COND_LIMIT: f64 = 1e8;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-6;
pub const MIN_FFT_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseOptions {
    /// Starting grid size; `None` picks `max(256, 8 x block window)`.
    pub fft_size: Option<usize>,
    /// Largest grid tried while the residual is above tolerance; `None` is 16x the start.
    pub max_fft_size: Option<usize>,
    pub cond_limit: f64,
    pub residual_tol: f64,
    /// Outer block lags whose taps are all below this fraction of the largest
    /// tap are dropped. Zero keeps the full `L`-lag inverse.
    pub trim_rel: f64,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self {
            fft_size: None,
            max_fft_size: None,
            cond_limit: DEFAULT_COND_LIMIT,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            trim_rel: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseReport {
    /// Largest deviation of `inv * h` or `h * inv` from the identity.
    pub residual: f64,
    pub condition_max: f64,
    pub fft_size: usize,
    pub period: usize,
    pub dims: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct MimoInverse {
    pub inverse: BlockedMimo,
    pub report: InverseReport,
}

#[derive(Debug, Clone)]
pub struct KernelInverse {
    pub inverse: PeriodicKernel,
    pub report: InverseReport,
}

/// Transfer matrices `T(q / L)` for `q in 0..L`, row-major per bin.
fn transfer_matrices(m: &BlockedMimo, l: usize) -> Vec<DMatrix<Complex64>> {
    let d = m.dim();
    let fft = FftPlanner::new().plan_fft_forward(l);
    let mut per_entry = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut buf = vec![Complex64::new(0.0, 0.0); l];
            for n in m.lag_min()..=m.lag_max() {
                buf[n.rem_euclid(l as i64) as usize] += Complex64::new(m.tap(i, j, n), 0.0);
            }
            fft.process(&mut buf);
            per_entry.push(buf);
        }
    }
    (0..l)
        .map(|q| DMatrix::from_fn(d, d, |i, j| per_entry[i * d + j][q]))
        .collect()
}

fn signed_freq(q: usize, l: usize) -> f64 {
    let q = q as i64;
    let l = l as i64;
    (if q >= l - l / 2 { q - l } else { q }) as f64 / l as f64
}

fn residual(m: &BlockedMimo, inv: &BlockedMimo) -> Result<f64> {
    let left = inv.convolve(m)?.identity_deviation();
    let right = m.convolve(inv)?.identity_deviation();
    Ok(left.max(right))
}

fn trim_block_lags(m: &BlockedMimo, rel: f64) -> Result<BlockedMimo> {
    let peak = m.taps().iter().fold(0.0_f64, |a, t| a.max(t.abs()));
    let threshold = rel * peak;
    let significant = |n: i64| {
        (0..m.dim()).any(|i| (0..m.dim()).any(|j| m.tap(i, j, n).abs() > threshold))
    };
    let mut lo = m.lag_min();
    let mut hi = m.lag_max();
    while lo < 0 && !significant(lo) {
        lo += 1;
    }
    while hi > 0 && !significant(hi) {
        hi -= 1;
    }
    BlockedMimo::from_fn(m.dim(), lo.min(0), hi.max(0), |i, j, n| m.tap(i, j, n))
}

fn invert_at(m: &BlockedMimo, l: usize, opts: &InverseOptions) -> Result<MimoInverse> {
    let d = m.dim();
    let mut cond_max = 0.0_f64;
    let mut inv_bins = Vec::with_capacity(l);
    for (q, t) in transfer_matrices(m, l).into_iter().enumerate() {
        let sv = t.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(cond <= opts.cond_limit) {
            return Err(PtvError::NotInvertible {
                frequency: signed_freq(q, l),
                condition: cond,
                limit: opts.cond_limit,
            });
        }
        cond_max = cond_max.max(cond);
        let inv = t.try_inverse().ok_or(PtvError::NotInvertible {
            frequency: signed_freq(q, l),
            condition: cond,
            limit: opts.cond_limit,
        })?;
        inv_bins.push(inv);
    }

    let ifft = FftPlanner::new().plan_fft_inverse(l);
    let lag_min = -((l / 2) as i64);
    let lag_max = (l - l / 2) as i64 - 1;
    let mut taps = vec![0.0; d * d * l];
    for i in 0..d {
        for j in 0..d {
            let mut buf: Vec<Complex64> = inv_bins.iter().map(|g| g[(i, j)]).collect();
            ifft.process(&mut buf);
            for n in lag_min..=lag_max {
                taps[(i * d + j) * l + (n - lag_min) as usize] = buf[n.rem_euclid(l as i64) as usize].re / l as f64;
            }
        }
    }
    let mut inverse = BlockedMimo::new(d, lag_min, lag_max, taps)?;
    if opts.trim_rel > 0.0 {
        inverse = trim_block_lags(&inverse, opts.trim_rel)?;
    }
    let residual = residual(m, &inverse)?;
    Ok(MimoInverse {
        inverse,
        report: InverseReport {
            residual,
            condition_max: cond_max,
            fft_size: l,
            period: 1,
            dims: [d, d],
        },
    })
}

/// Inverts a blocked MIMO, doubling the grid until the residual meets tolerance.
pub fn invert_mimo(m: &BlockedMimo, opts: &InverseOptions) -> Result<MimoInverse> {
    if !(opts.cond_limit > 1.0) {
        return Err(PtvError::InvalidArgument(format!(
            "condition limit must exceed 1, got {}",
            opts.cond_limit
        )));
    }
    let window = m.lag_len();
    let start = opts.fft_size.unwrap_or_else(|| MIN_FFT_SIZE.max(8 * window));
    if start < 4 * window {
        return Err(PtvError::GridTooSmall(format!(
            "grid of {start} bins is below 4x the {window}-lag block window"
        )));
    }
    let max = opts.max_fft_size.unwrap_or(16 * start).max(start);
    let mut l = start;
    loop {
        let inv = invert_at(m, l, opts)?;
        if inv.report.residual <= opts.residual_tol {
            return Ok(inv);
        }
        if 2 * l > max {
            return Err(PtvError::GridTooSmall(format!(
                "residual {:.3e} above {:.3e} at {l} bins",
                inv.report.residual, opts.residual_tol
            )));
        }
        l *= 2;
    }
}

/// Inverse of a SISO kernel; the result has the same period.
pub fn invert_siso(h: &PeriodicKernel, opts: &InverseOptions) -> Result<KernelInverse> {
    let mimo = siso_to_mimo(h)?;
    let inv = invert_mimo(&mimo, opts)?;
    let inverse = mimo_to_siso(&inv.inverse)?.with_sample_period(h.sample_period_s());
    Ok(KernelInverse {
        report: InverseReport {
            period: inverse.period(),
            dims: [1, 1],
            ..inv.report
        },
        inverse,
    })
}

/// Inverse of an `N x N` kernel; the result is `N x N` with the same period.
pub fn invert_square(h: &PeriodicKernel, opts: &InverseOptions) -> Result<KernelInverse> {
    if !h.is_square() {
        return Err(PtvError::NotSquare {
            n_out: h.n_out(),
            n_in: h.n_in(),
        });
    }
    let n = h.n_in();
    let serial = invert_siso(&square_to_siso(h)?, opts)?;
    let inverse = siso_to_square(&serial.inverse, n)?.with_sample_period(h.sample_period_s());
    Ok(KernelInverse {
        report: InverseReport {
            period: inverse.period(),
            dims: [n, n],
            ..serial.report
        },
        inverse,
    })
}

/// Dispatches on shape: SISO kernels through [`invert_siso`], other square ones through [`invert_square`].
pub fn invert(h: &PeriodicKernel, opts: &InverseOptions) -> Result<KernelInverse> {
    if h.is_siso() {
        invert_siso(h, opts)
    } else {
        invert_square(h, opts)
    }
}
