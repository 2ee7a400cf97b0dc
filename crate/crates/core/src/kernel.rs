//! Discrete-time periodically time-variant kernels.
//!
//! A [`PeriodicKernel`] with `n_out` outputs, `n_in` inputs and period `K`
//! maps input channels `x_j` to output channels
//!
//! ```text
//! y_i[n] = sum_j sum_m taps[i][j][(n mod K)][m] * x_j[n - m]
//! ```
//!
//! where `n` is an absolute sample index (the signal's origin is folded in)
//! and `m` runs over the kernel's lag window `lag_min..=lag_max`.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{check_rates, PtvError, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub struct PeriodicKernel {
    n_out: usize,
    n_in: usize,
    period: usize,
    lag_min: i64,
    lag_max: i64,
    taps: Vec<f64>,
    sample_period_s: Option<f64>,
}

/// Flat on-disk form; taps in row-major `(i, j, p, m)` order.
#[derive(Serialize, Deserialize)]
struct KernelRepr {
    n_out: usize,
    n_in: usize,
    period: usize,
    lag_min: i64,
    lag_max: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_period_s: Option<f64>,
    taps: Vec<f64>,
}

impl TryFrom<KernelRepr> for PeriodicKernel {
    type Error = PtvError;

    fn try_from(r: KernelRepr) -> Result<Self> {
        PeriodicKernel::new(
            r.n_out,
            r.n_in,
            r.period,
            r.lag_min,
            r.lag_max,
            r.taps,
            r.sample_period_s,
        )
    }
}

impl From<PeriodicKernel> for KernelRepr {
    fn from(k: PeriodicKernel) -> Self {
        KernelRepr {
            n_out: k.n_out,
            n_in: k.n_in,
            period: k.period,
            lag_min: k.lag_min,
            lag_max: k.lag_max,
            sample_period_s: k.sample_period_s,
            taps: k.taps,
        }
    }
}

impl PeriodicKernel {
    pub fn new(
        n_out: usize,
        n_in: usize,
        period: usize,
        lag_min: i64,
        lag_max: i64,
        taps: Vec<f64>,
        sample_period_s: Option<f64>,
    ) -> Result<Self> {
        if period == 0 {
            return Err(PtvError::InvalidKernel("period must be at least 1".into()));
        }
        if lag_min > lag_max {
            return Err(PtvError::InvalidKernel(format!(
                "empty lag window [{lag_min}, {lag_max}]"
            )));
        }
        let lag_len = (lag_max - lag_min + 1) as usize;
        let expected = n_out * n_in * period * lag_len;
        if taps.len() != expected {
            return Err(PtvError::InvalidKernel(format!(
                "expected {expected} taps for {n_out}x{n_in}x{period}x{lag_len}, got {}",
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(PtvError::InvalidKernel("non-finite tap".into()));
        }
        if let Some(ts) = sample_period_s {
            if !(ts.is_finite() && ts > 0.0) {
                return Err(PtvError::InvalidKernel(format!(
                    "sample period must be positive, got {ts}"
                )));
            }
        }
        Ok(Self {
            n_out,
            n_in,
            period,
            lag_min,
            lag_max,
            taps,
            sample_period_s,
        })
    }

    pub fn zeros(n_out: usize, n_in: usize, period: usize, lag_min: i64, lag_max: i64) -> Result<Self> {
        let lag_len = if lag_min <= lag_max {
            (lag_max - lag_min + 1) as usize
        } else {
            0
        };
        Self::new(
            n_out,
            n_in,
            period,
            lag_min,
            lag_max,
            vec![0.0; n_out * n_in * period * lag_len],
            None,
        )
    }

    /// Builds a kernel by evaluating `f(i, j, p, m)` over the full tensor.
    pub fn from_fn(
        n_out: usize,
        n_in: usize,
        period: usize,
        lag_min: i64,
        lag_max: i64,
        mut f: impl FnMut(usize, usize, usize, i64) -> f64,
    ) -> Result<Self> {
        let mut k = Self::zeros(n_out, n_in, period, lag_min, lag_max)?;
        for i in 0..n_out {
            for j in 0..n_in {
                for p in 0..period {
                    for m in lag_min..=lag_max {
                        let idx = k.index(i, j, p, m);
                        k.taps[idx] = f(i, j, p, m);
                    }
                }
            }
        }
        if k.taps.iter().any(|t| !t.is_finite()) {
            return Err(PtvError::InvalidKernel("non-finite tap".into()));
        }
        Ok(k)
    }

    /// `dim x dim` identity (single unit tap at lag 0 on the diagonal) of the given period.
    pub fn identity(dim: usize, period: usize) -> Result<Self> {
        Self::from_fn(dim, dim, period, 0, 0, |i, j, _, _| if i == j { 1.0 } else { 0.0 })
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn lag_min(&self) -> i64 {
        self.lag_min
    }

    pub fn lag_max(&self) -> i64 {
        self.lag_max
    }

    pub fn lags(&self) -> RangeInclusive<i64> {
        self.lag_min..=self.lag_max
    }

    pub fn lag_len(&self) -> usize {
        (self.lag_max - self.lag_min + 1) as usize
    }

    pub fn sample_period_s(&self) -> Option<f64> {
        self.sample_period_s
    }

    pub fn with_sample_period(mut self, sample_period_s: Option<f64>) -> Self {
        self.sample_period_s = sample_period_s;
        self
    }

    /// Flat tap tensor in row-major `(i, j, p, m)` order.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn is_siso(&self) -> bool {
        self.n_in == 1 && self.n_out == 1
    }

    pub fn is_square(&self) -> bool {
        self.n_in == self.n_out
    }

    #[inline]
    fn index(&self, i: usize, j: usize, p: usize, m: i64) -> usize {
        let lag_len = self.lag_len();
        (((i * self.n_in + j) * self.period + p) * lag_len) + (m - self.lag_min) as usize
    }

    /// Tap value; zero for lags outside the window. `p` is reduced modulo the period.
    pub fn tap(&self, i: usize, j: usize, p: usize, m: i64) -> f64 {
        if m < self.lag_min || m > self.lag_max {
            return 0.0;
        }
        self.taps[self.index(i, j, p % self.period, m)]
    }

    /// Contiguous lag slice `lag_min..=lag_max` for one `(i, j, p)` entry.
    pub fn lag_slice(&self, i: usize, j: usize, p: usize) -> &[f64] {
        let start = self.index(i, j, p, self.lag_min);
        &self.taps[start..start + self.lag_len()]
    }

    /// Sets a tap inside the window.
    ///
    /// # Panics
    /// If `m` is outside the lag window or the value is not finite.
    pub fn set_tap(&mut self, i: usize, j: usize, p: usize, m: i64, value: f64) {
        assert!(self.lags().contains(&m), "lag {m} outside window");
        assert!(value.is_finite(), "non-finite tap");
        let idx = self.index(i, j, p, m);
        self.taps[idx] = value;
    }

    /// True when every nonzero tap sits at a non-negative lag.
    pub fn is_causal(&self) -> bool {
        if self.lag_min >= 0 {
            return true;
        }
        (0..self.n_out).all(|i| {
            (0..self.n_in).all(|j| {
                (0..self.period).all(|p| {
                    self.lag_slice(i, j, p)
                        .iter()
                        .take((-self.lag_min) as usize)
                        .all(|&t| t == 0.0)
                })
            })
        })
    }

    /// Rotates the phase axis: `taps'[p] = taps[(p + offset) mod K]`.
    pub fn shift_phase(&self, offset: i64) -> Self {
        let k = self.period as i64;
        let mut out = self.clone();
        for i in 0..self.n_out {
            for j in 0..self.n_in {
                for p in 0..self.period {
                    let src = (p as i64 + offset).rem_euclid(k) as usize;
                    let dst_start = out.index(i, j, p, self.lag_min);
                    let src_start = self.index(i, j, src, self.lag_min);
                    let len = self.lag_len();
                    out.taps[dst_start..dst_start + len]
                        .copy_from_slice(&self.taps[src_start..src_start + len]);
                }
            }
        }
        out
    }

    /// Re-windows the lag axis, zero-filling new lags and dropping lags outside.
    pub fn with_window(&self, lag_min: i64, lag_max: i64) -> Result<Self> {
        let src = self;
        Self::from_fn(self.n_out, self.n_in, self.period, lag_min, lag_max, |i, j, p, m| {
            src.tap(i, j, p, m)
        })
        .map(|k| k.with_sample_period(self.sample_period_s))
    }

    /// Smallest lag window containing every nonzero tap (`[0, 0]` for the zero kernel).
    pub fn trimmed(&self) -> Self {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for i in 0..self.n_out {
            for j in 0..self.n_in {
                for p in 0..self.period {
                    for (off, &t) in self.lag_slice(i, j, p).iter().enumerate() {
                        if t != 0.0 {
                            let m = self.lag_min + off as i64;
                            lo = lo.min(m);
                            hi = hi.max(m);
                        }
                    }
                }
            }
        }
        if lo > hi {
            lo = 0;
            hi = 0;
        }
        self.with_window(lo, hi).expect("window of an existing kernel is valid")
    }

    /// Same system written with a longer period (a multiple of the current one).
    pub fn with_period(&self, period: usize) -> Result<Self> {
        if period == 0 || period % self.period != 0 {
            return Err(PtvError::IndivisiblePeriod {
                period,
                factor: self.period,
            });
        }
        let src = self;
        Self::from_fn(self.n_out, self.n_in, period, self.lag_min, self.lag_max, |i, j, p, m| {
            src.tap(i, j, p, m)
        })
        .map(|k| k.with_sample_period(self.sample_period_s))
    }

    /// Largest absolute tap difference, comparing over the union of lag windows
    /// and over `lcm` of the two periods.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.n_out != other.n_out || self.n_in != other.n_in {
            return Err(PtvError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.n_out, self.n_in, other.n_out, other.n_in
            )));
        }
        let period = num_integer::lcm(self.period, other.period);
        let lo = self.lag_min.min(other.lag_min);
        let hi = self.lag_max.max(other.lag_max);
        let mut worst = 0.0_f64;
        for i in 0..self.n_out {
            for j in 0..self.n_in {
                for p in 0..period {
                    for m in lo..=hi {
                        worst = worst.max((self.tap(i, j, p, m) - other.tap(i, j, p, m)).abs());
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Largest absolute tap.
    pub fn max_abs(&self) -> f64 {
        self.taps.iter().fold(0.0_f64, |m, t| m.max(t.abs()))
    }

    /// Sum of squared taps.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    /// Applies the kernel to `input`. Output keeps the input's length and origin.
    pub fn apply(&self, input: &Signal) -> Result<Signal> {
        self.apply_threaded(input, 1)
    }

    /// [`apply`](Self::apply) with output channels spread over `threads` workers.
    ///
    /// Every output sample is computed by the same arithmetic regardless of the
    /// thread count, so results are bit-identical.
    pub fn apply_threaded(&self, input: &Signal, threads: usize) -> Result<Signal> {
        if input.n_channels() != self.n_in {
            return Err(PtvError::ChannelMismatch {
                expected: self.n_in,
                got: input.n_channels(),
            });
        }
        check_rates(self.sample_period_s, Some(input.sample_period_s()))?;

        let len = input.len();
        let mut out = vec![vec![0.0; len]; self.n_out];
        let threads = threads.max(1).min(self.n_out.max(1));
        if threads <= 1 {
            for (i, y) in out.iter_mut().enumerate() {
                self.apply_channel(i, input, y);
            }
        } else {
            let chunk = self.n_out.div_ceil(threads);
            std::thread::scope(|s| {
                for (c, ys) in out.chunks_mut(chunk).enumerate() {
                    s.spawn(move || {
                        for (off, y) in ys.iter_mut().enumerate() {
                            self.apply_channel(c * chunk + off, input, y);
                        }
                    });
                }
            });
        }
        Signal::new(input.sample_period_s(), out, input.origin_index())
    }

    fn apply_channel(&self, i: usize, input: &Signal, y: &mut [f64]) {
        let len = y.len() as i64;
        let k = self.period as i64;
        let origin = input.origin_index();
        for (n, out) in y.iter_mut().enumerate() {
            let n = n as i64;
            let p = (n + origin).rem_euclid(k) as usize;
            // stored input index n - m must lie in [0, len)
            let m_lo = self.lag_min.max(n - len + 1);
            let m_hi = self.lag_max.min(n);
            if m_lo > m_hi {
                continue;
            }
            let mut acc = 0.0;
            for j in 0..self.n_in {
                let taps = self.lag_slice(i, j, p);
                let x = input.channel(j);
                for m in m_lo..=m_hi {
                    acc += taps[(m - self.lag_min) as usize] * x[(n - m) as usize];
                }
            }
            *out = acc;
        }
    }
}

/// Square time-invariant FIR matrix system `y_i[n] = sum_j sum_r taps[i][j][r] x_j[n - r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockedMimo {
    dim: usize,
    lag_min: i64,
    lag_max: i64,
    taps: Vec<f64>,
}

impl BlockedMimo {
    pub fn new(dim: usize, lag_min: i64, lag_max: i64, taps: Vec<f64>) -> Result<Self> {
        if lag_min > lag_max {
            return Err(PtvError::InvalidKernel(format!(
                "empty lag window [{lag_min}, {lag_max}]"
            )));
        }
        let expected = dim * dim * (lag_max - lag_min + 1) as usize;
        if taps.len() != expected {
            return Err(PtvError::InvalidKernel(format!(
                "expected {expected} block taps, got {}",
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(PtvError::InvalidKernel("non-finite tap".into()));
        }
        Ok(Self {
            dim,
            lag_min,
            lag_max,
            taps,
        })
    }

    pub fn from_fn(
        dim: usize,
        lag_min: i64,
        lag_max: i64,
        mut f: impl FnMut(usize, usize, i64) -> f64,
    ) -> Result<Self> {
        let mut taps = Vec::with_capacity(dim * dim * (lag_max - lag_min + 1).max(0) as usize);
        for i in 0..dim {
            for j in 0..dim {
                for n in lag_min..=lag_max {
                    taps.push(f(i, j, n));
                }
            }
        }
        Self::new(dim, lag_min, lag_max, taps)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, 0, 0, |i, j, _| if i == j { 1.0 } else { 0.0 })
            .expect("identity is well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lag_min(&self) -> i64 {
        self.lag_min
    }

    pub fn lag_max(&self) -> i64 {
        self.lag_max
    }

    pub fn lag_len(&self) -> usize {
        (self.lag_max - self.lag_min + 1) as usize
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn tap(&self, i: usize, j: usize, n: i64) -> f64 {
        if n < self.lag_min || n > self.lag_max {
            return 0.0;
        }
        self.taps[(i * self.dim + j) * self.lag_len() + (n - self.lag_min) as usize]
    }

    /// The same system as a period-1 `dim x dim` kernel.
    pub fn to_kernel(&self) -> PeriodicKernel {
        PeriodicKernel::new(
            self.dim,
            self.dim,
            1,
            self.lag_min,
            self.lag_max,
            self.taps.clone(),
            None,
        )
        .expect("block taps already validated")
    }

    /// Reads a period-1 square kernel as a block system.
    pub fn from_kernel(k: &PeriodicKernel) -> Result<Self> {
        if !k.is_square() {
            return Err(PtvError::NotSquare {
                n_out: k.n_out(),
                n_in: k.n_in(),
            });
        }
        if k.period() != 1 {
            return Err(PtvError::InvalidArgument(format!(
                "block system must be time invariant, kernel has period {}",
                k.period()
            )));
        }
        Self::new(k.n_in(), k.lag_min(), k.lag_max(), k.taps().to_vec())
    }

    pub fn apply(&self, input: &Signal) -> Result<Signal> {
        self.to_kernel().apply(input)
    }

    /// Matrix convolution `self * other`, i.e. the system that runs `other` first.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(PtvError::DimensionMismatch(format!(
                "{} vs {}",
                self.dim, other.dim
            )));
        }
        let d = self.dim;
        let lo = self.lag_min + other.lag_min;
        let hi = self.lag_max + other.lag_max;
        let mut out = Self::from_fn(d, lo, hi, |_, _, _| 0.0)?;
        let out_len = out.lag_len();
        for i in 0..d {
            for j in 0..d {
                for q in self.lag_min..=self.lag_max {
                    let a = self.tap(i, j, q);
                    if a == 0.0 {
                        continue;
                    }
                    for k in 0..d {
                        for r in other.lag_min..=other.lag_max {
                            let n = q + r;
                            out.taps[(i * d + k) * out_len + (n - lo) as usize] +=
                                a * other.tap(j, k, r);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Largest deviation from `delta_ik delta_n0`.
    pub fn identity_deviation(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                for n in self.lag_min..=self.lag_max {
                    let ideal = if i == j && n == 0 { 1.0 } else { 0.0 };
                    worst = worst.max((self.tap(i, j, n) - ideal).abs());
                }
            }
        }
        if !(self.lag_min..=self.lag_max).contains(&0) {
            // the unit taps at lag 0 are missing entirely
            worst = worst.max(1.0);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sign_alternating() -> PeriodicKernel {
        PeriodicKernel::from_fn(1, 1, 2, 0, 0, |_, _, p, _| if p == 0 { 1.0 } else { -1.0 }).unwrap()
    }

    #[test]
    fn rejects_malformed_tensors() {
        assert!(PeriodicKernel::new(1, 1, 0, 0, 0, vec![], None).is_err());
        assert!(PeriodicKernel::new(1, 1, 1, 1, 0, vec![], None).is_err());
        assert!(PeriodicKernel::new(1, 1, 2, 0, 1, vec![0.0; 3], None).is_err());
        assert!(PeriodicKernel::new(1, 1, 1, 0, 0, vec![f64::NAN], None).is_err());
        assert!(PeriodicKernel::new(1, 1, 1, 0, 0, vec![1.0], Some(0.0)).is_err());
    }

    #[test]
    fn identity_passes_signal_through() {
        let x = Signal::new(0.1, vec![vec![1.5, -2.0, 3.25, 0.0, 7.0]], -3).unwrap();
        let y = PeriodicKernel::identity(1, 1).unwrap().apply(&x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn zero_kernel_gives_zero_output() {
        let x = Signal::new(1.0, vec![vec![1.0, 2.0, 3.0]; 2], 0).unwrap();
        let k = PeriodicKernel::zeros(3, 2, 4, -2, 2).unwrap();
        let y = k.apply(&x).unwrap();
        assert_eq!(y.n_channels(), 3);
        assert!(y.channels().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn alternating_sign_on_constant_input() {
        let x = Signal::mono(1.0, vec![1.0; 4]).unwrap();
        let y = sign_alternating().apply(&x).unwrap();
        assert_eq!(y.channel(0), &[1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn shift_phase_examples() {
        let k = sign_alternating();
        assert_eq!(k.shift_phase(0), k);
        assert_eq!(k.shift_phase(2), k);
        assert_eq!(k.shift_phase(-4), k);
        let x = Signal::mono(1.0, vec![1.0; 4]).unwrap();
        let y = k.shift_phase(1).apply(&x).unwrap();
        assert_eq!(y.channel(0), &[-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn channel_and_rate_errors() {
        let k = PeriodicKernel::identity(2, 1).unwrap();
        let x = Signal::mono(1.0, vec![1.0]).unwrap();
        assert!(matches!(
            k.apply(&x),
            Err(PtvError::ChannelMismatch { expected: 2, got: 1 })
        ));
        let k = PeriodicKernel::identity(1, 1).unwrap().with_sample_period(Some(0.5));
        assert!(matches!(k.apply(&x), Err(PtvError::RateMismatch { .. })));
    }

    #[test]
    fn phase_follows_absolute_index() {
        // same samples, origin shifted by one: phase flips
        let k = sign_alternating();
        let x = Signal::new(1.0, vec![vec![1.0; 4]], 1).unwrap();
        let y = k.apply(&x).unwrap();
        assert_eq!(y.channel(0), &[-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn negative_lag_reads_future_samples() {
        let k = PeriodicKernel::from_fn(1, 1, 1, -1, -1, |_, _, _, _| 1.0).unwrap();
        let x = Signal::mono(1.0, vec![1.0, 2.0, 3.0]).unwrap();
        let y = k.apply(&x).unwrap();
        assert_eq!(y.channel(0), &[2.0, 3.0, 0.0]);
        assert!(!k.is_causal());
        assert!(PeriodicKernel::identity(1, 3).unwrap().is_causal());
    }

    #[test]
    fn trim_and_window() {
        let mut k = PeriodicKernel::zeros(1, 1, 2, -3, 5).unwrap();
        k.set_tap(0, 0, 1, 2, 4.0);
        let t = k.trimmed();
        assert_eq!((t.lag_min(), t.lag_max()), (2, 2));
        assert_eq!(t.max_abs_diff(&k).unwrap(), 0.0);
        let z = PeriodicKernel::zeros(1, 1, 1, -2, 2).unwrap().trimmed();
        assert_eq!((z.lag_min(), z.lag_max()), (0, 0));
    }

    #[test]
    fn threaded_apply_is_bit_identical() {
        let k = PeriodicKernel::from_fn(5, 2, 3, -1, 2, |i, j, p, m| {
            (i as f64 + 0.3 * j as f64 - 0.7 * p as f64 + 0.11 * m as f64).sin()
        })
        .unwrap();
        let x = Signal::new(
            1.0,
            vec![
                (0..50).map(|n| (n as f64 * 0.37).cos()).collect(),
                (0..50).map(|n| (n as f64 * 0.91).sin()).collect(),
            ],
            7,
        )
        .unwrap();
        assert_eq!(k.apply(&x).unwrap(), k.apply_threaded(&x, 4).unwrap());
    }

    #[test]
    fn block_convolution_of_delays() {
        let d1 = BlockedMimo::from_fn(2, 1, 1, |i, j, _| if i == j { 1.0 } else { 0.0 }).unwrap();
        let d2 = d1.convolve(&d1).unwrap();
        assert_eq!(d2.tap(0, 0, 2), 1.0);
        assert_eq!(d2.tap(1, 1, 2), 1.0);
        assert_eq!(d2.tap(0, 1, 2), 0.0);
        assert_eq!(BlockedMimo::identity(3).identity_deviation(), 0.0);
        assert_eq!(d1.identity_deviation(), 1.0);
    }
}
