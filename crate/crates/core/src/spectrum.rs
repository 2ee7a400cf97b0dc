//! Hybrid Fourier analysis of periodic kernels and bandwidth estimation.
//!
//! The hybrid transform takes a Fourier series over the phase axis and a
//! (zero-padded) DFT over the lag axis:
//!
//! ```text
//! H(k, f) = sum_p sum_m taps[p][m] exp(-j 2 pi (k p / K + f m))
//! ```
//!
//! with `k` in `[-floor(K/2), ceil(K/2))` and `f` on an `L`-point grid in
//! `[-1/2, 1/2)` cycles per sample. Bandwidths are the smallest supports that
//! hold all but an `energy_tol` fraction of the spectral energy.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{PtvError, Result};
use crate::kernel::PeriodicKernel;
use crate::signal::Signal;

/// Default energy fraction allowed outside an estimated band.
pub const DEFAULT_ENERGY_TOL: f64 = 1e-9;

/// Default zero-padding factor for the frequency axis, relative to the lag window.
pub const DEFAULT_PAD_FACTOR: usize = 8;

#[derive(Debug, Clone)]
pub struct HybridSpectrum {
    n_out: usize,
    n_in: usize,
    period: usize,
    lag_min: i64,
    lag_max: i64,
    sample_period_s: Option<f64>,
    harmonics: Vec<i64>,
    freqs: Vec<f64>,
    values: Vec<Complex64>,
}

fn harmonic_axis(period: usize) -> Vec<i64> {
    let k = period as i64;
    (-(k / 2)..(k - k / 2)).collect()
}

fn freq_axis(l: usize) -> Vec<f64> {
    let half = (l / 2) as i64;
    (0..l as i64).map(|q| (q - half) as f64 / l as f64).collect()
}

impl HybridSpectrum {
    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn sample_period_s(&self) -> Option<f64> {
        self.sample_period_s
    }

    /// Harmonic indices `k`, ascending.
    pub fn harmonics(&self) -> &[i64] {
        &self.harmonics
    }

    /// Normalized frequencies in cycles per sample, ascending.
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn grid_size(&self) -> usize {
        self.freqs.len()
    }

    /// Value at entry `(i, j)`, harmonic position `k_idx` and frequency position `l`.
    pub fn value(&self, i: usize, j: usize, k_idx: usize, l: usize) -> Complex64 {
        let nk = self.harmonics.len();
        let nl = self.freqs.len();
        self.values[((i * self.n_in + j) * nk + k_idx) * nl + l]
    }

    /// Value at harmonic `k` (any integer, reduced onto the axis).
    pub fn at_harmonic(&self, i: usize, j: usize, k: i64, l: usize) -> Complex64 {
        let kk = self.period as i64;
        let reduced = (k + kk / 2).rem_euclid(kk) - kk / 2;
        let k_idx = (reduced - self.harmonics[0]) as usize;
        self.value(i, j, k_idx, l)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Total `sum |H|^2`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(Complex64::norm_sqr).sum()
    }

    /// Rows `(i, j, k, f, re, im)` in tensor order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, i64, f64, f64, f64)> + '_ {
        let nk = self.harmonics.len();
        let nl = self.freqs.len();
        self.values.iter().enumerate().map(move |(idx, v)| {
            let l = idx % nl;
            let k_idx = (idx / nl) % nk;
            let ij = idx / (nl * nk);
            (ij / self.n_in, ij % self.n_in, self.harmonics[k_idx], self.freqs[l], v.re, v.im)
        })
    }

    /// Inverse DFT over both axes, dropping the zero padding.
    pub fn inverse(&self) -> Result<PeriodicKernel> {
        let k = self.period;
        let l = self.freqs.len();
        let half = (l / 2) as i64;
        let mut planner = FftPlanner::new();
        let ifft = planner.plan_fft_inverse(l);
        let mut kernel = PeriodicKernel::zeros(self.n_out, self.n_in, k, self.lag_min, self.lag_max)?;
        let mut buf = vec![Complex64::new(0.0, 0.0); l];
        for i in 0..self.n_out {
            for j in 0..self.n_in {
                for p in 0..k {
                    buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
                    for (k_idx, &kh) in self.harmonics.iter().enumerate() {
                        let theta = 2.0 * std::f64::consts::PI * (kh * p as i64).rem_euclid(k as i64) as f64
                            / k as f64;
                        let rot = Complex64::from_polar(1.0, theta);
                        for q in 0..l {
                            let bin = (q as i64 - half).rem_euclid(l as i64) as usize;
                            buf[bin] += self.value(i, j, k_idx, q) * rot;
                        }
                    }
                    ifft.process(&mut buf);
                    let scale = 1.0 / (k * l) as f64;
                    for m in self.lag_min..=self.lag_max {
                        let v = buf[m.rem_euclid(l as i64) as usize].re * scale;
                        kernel.set_tap(i, j, p, m, v);
                    }
                }
            }
        }
        Ok(kernel.with_sample_period(self.sample_period_s))
    }
}

/// Hybrid transform on an `freq_grid_size`-point frequency grid.
pub fn hybrid_transform(kernel: &PeriodicKernel, freq_grid_size: usize) -> Result<HybridSpectrum> {
    if freq_grid_size < kernel.lag_len() {
        return Err(PtvError::GridTooSmall(format!(
            "frequency grid of {freq_grid_size} points is shorter than the {}-lag window",
            kernel.lag_len()
        )));
    }
    let k = kernel.period();
    let l = freq_grid_size;
    let half = (l / 2) as i64;
    let harmonics = harmonic_axis(k);
    let freqs = freq_axis(l);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(l);
    let mut values = Vec::with_capacity(kernel.n_out() * kernel.n_in() * k * l);
    let mut per_phase = vec![vec![Complex64::new(0.0, 0.0); l]; k];
    for i in 0..kernel.n_out() {
        for j in 0..kernel.n_in() {
            for (p, buf) in per_phase.iter_mut().enumerate() {
                buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
                for (off, &t) in kernel.lag_slice(i, j, p).iter().enumerate() {
                    let m = kernel.lag_min() + off as i64;
                    buf[m.rem_euclid(l as i64) as usize] = Complex64::new(t, 0.0);
                }
                fft.process(buf);
            }
            for &kh in &harmonics {
                let rots: Vec<Complex64> = (0..k)
                    .map(|p| {
                        let theta = -2.0 * std::f64::consts::PI * (kh * p as i64).rem_euclid(k as i64) as f64
                            / k as f64;
                        Complex64::from_polar(1.0, theta)
                    })
                    .collect();
                for q in 0..l {
                    let bin = (q as i64 - half).rem_euclid(l as i64) as usize;
                    let v = per_phase
                        .iter()
                        .zip(&rots)
                        .map(|(buf, r)| buf[bin] * r)
                        .sum();
                    values.push(v);
                }
            }
        }
    }
    Ok(HybridSpectrum {
        n_out: kernel.n_out(),
        n_in: kernel.n_in(),
        period: k,
        lag_min: kernel.lag_min(),
        lag_max: kernel.lag_max(),
        sample_period_s: kernel.sample_period_s(),
        harmonics,
        freqs,
        values,
    })
}

/// Default frequency grid: 8x the lag window.
pub fn default_grid_size(kernel: &PeriodicKernel) -> usize {
    DEFAULT_PAD_FACTOR * kernel.lag_len()
}

fn check_tol(energy_tol: f64) -> Result<()> {
    if !(energy_tol > 0.0 && energy_tol < 1.0) {
        return Err(PtvError::InvalidArgument(format!(
            "energy tolerance must lie in (0, 1), got {energy_tol}"
        )));
    }
    Ok(())
}

/// Smallest `b` such that buckets `0..=b` hold `(1 - tol)` of the energy.
fn smallest_band(buckets: &[f64], energy_tol: f64) -> usize {
    let total: f64 = buckets.iter().sum();
    if total == 0.0 {
        return 0;
    }
    let target = (1.0 - energy_tol) * total;
    let mut acc = 0.0;
    for (b, e) in buckets.iter().enumerate() {
        acc += e;
        if acc >= target {
            return b;
        }
    }
    buckets.len() - 1
}

/// Variation bandwidth: smallest `A` with `|k| <= A` holding `(1 - tol)` of the energy.
pub fn variation_band_estimate(spec: &HybridSpectrum, energy_tol: f64) -> Result<u32> {
    check_tol(energy_tol)?;
    let max_k = spec.harmonics.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0) as usize;
    let mut buckets = vec![0.0; max_k + 1];
    let nl = spec.freqs.len();
    for (idx, v) in spec.values.iter().enumerate() {
        let k_idx = (idx / nl) % spec.harmonics.len();
        buckets[spec.harmonics[k_idx].unsigned_abs() as usize] += v.norm_sqr();
    }
    Ok(smallest_band(&buckets, energy_tol) as u32)
}

/// Linear bandwidth in cycles per sample: smallest `B` with `|f| <= B` holding `(1 - tol)` of the energy.
pub fn linear_band_estimate(spec: &HybridSpectrum, energy_tol: f64) -> Result<f64> {
    check_tol(energy_tol)?;
    let l = spec.freqs.len();
    let half = l / 2;
    let mut buckets = vec![0.0; half + 1];
    for (idx, v) in spec.values.iter().enumerate() {
        let q = idx % l;
        buckets[q.abs_diff(half)] += v.norm_sqr();
    }
    let b = smallest_band(&buckets, energy_tol);
    if buckets.iter().all(|&e| e == 0.0) {
        return Ok(0.0);
    }
    Ok(b as f64 / l as f64)
}

/// Output bandwidth `B_x + A / T_h`.
pub fn output_band(input_band: f64, variation: f64, period_s: f64) -> Result<f64> {
    if !(input_band >= 0.0 && variation >= 0.0 && period_s > 0.0) {
        return Err(PtvError::InvalidArgument(format!(
            "need B_x >= 0, A >= 0, T_h > 0; got {input_band}, {variation}, {period_s}"
        )));
    }
    Ok(input_band + variation / period_s)
}

/// Per-channel DFT of a signal, returned as `(channel, frequency in Hz, value)`
/// rows with frequencies ascending in `[-fs/2, fs/2)`.
pub fn signal_spectrum(signal: &Signal) -> Result<Vec<(usize, f64, Complex64)>> {
    if signal.is_empty() {
        return Err(PtvError::EmptySignal);
    }
    let n = signal.len();
    let half = (n / 2) as i64;
    let df = 1.0 / (n as f64 * signal.sample_period_s());
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut rows = Vec::with_capacity(n * signal.n_channels());
    for (c, ch) in signal.channels().iter().enumerate() {
        let mut buf: Vec<Complex64> = ch.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.process(&mut buf);
        for q in 0..n as i64 {
            let bin = (q - half).rem_euclid(n as i64) as usize;
            rows.push((c, (q - half) as f64 * df, buf[bin]));
        }
    }
    Ok(rows)
}

/// Smallest `B` (Hz) such that `|f| <= B` holds `(1 - tol)` of the DFT energy.
pub fn signal_band(signal: &Signal, energy_tol: f64) -> Result<f64> {
    check_tol(energy_tol)?;
    let n = signal.len();
    let rows = signal_spectrum(signal)?;
    let half = n / 2;
    let mut buckets = vec![0.0; half + 1];
    for (idx, (_, _, v)) in rows.iter().enumerate() {
        buckets[(idx % n).abs_diff(half)] += v.norm_sqr();
    }
    if buckets.iter().all(|&e| e == 0.0) {
        return Ok(0.0);
    }
    let b = smallest_band(&buckets, energy_tol);
    Ok(b as f64 / (n as f64 * signal.sample_period_s()))
}

/// Frequency (Hz, signed) of the strongest DFT bin over all channels.
pub fn peak_frequency(signal: &Signal) -> Result<f64> {
    let rows = signal_spectrum(signal)?;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for (_, f, v) in rows {
        let e = v.norm_sqr();
        // ties go to the non-negative frequency
        if e > best.0 || (e == best.0 && f >= 0.0 && best.1 < 0.0) {
            best = (e, f);
        }
    }
    Ok(best.1)
}
