//! Deterministic test signals. Frequencies are normalized (cycles per sample).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{PtvError, Result};
use crate::signal::Signal;

fn check_len(len: usize) -> Result<()> {
    if len == 0 {
        return Err(PtvError::EmptySignal);
    }
    Ok(())
}

fn check_freq(name: &str, f: f64) -> Result<()> {
    if !f.is_finite() || f.abs() > 0.5 {
        return Err(PtvError::InvalidArgument(format!(
            "{name} must lie in [-0.5, 0.5] cycles/sample, got {f}"
        )));
    }
    Ok(())
}

/// `amplitude * cos(2 pi f0 n + phase)` for n in 0..len.
pub fn tone(len: usize, f0: f64, amplitude: f64, phase: f64, sample_period_s: f64) -> Result<Signal> {
    check_len(len)?;
    check_freq("f0", f0)?;
    let x = (0..len)
        .map(|n| amplitude * (2.0 * PI * f0 * n as f64 + phase).cos())
        .collect();
    Signal::mono(sample_period_s, x)
}

/// Linear chirp sweeping from `f_start` to `f_end` over the record.
pub fn chirp(len: usize, f_start: f64, f_end: f64, amplitude: f64, sample_period_s: f64) -> Result<Signal> {
    check_len(len)?;
    check_freq("f_start", f_start)?;
    check_freq("f_end", f_end)?;
    let rate = if len > 1 { (f_end - f_start) / (len - 1) as f64 } else { 0.0 };
    let x = (0..len)
        .map(|n| {
            let n = n as f64;
            amplitude * (2.0 * PI * (f_start * n + 0.5 * rate * n * n)).cos()
        })
        .collect();
    Signal::mono(sample_period_s, x)
}

/// Unit-variance Gaussian noise from a seeded ChaCha8 stream, one stream per
/// call. With `band`, every DFT bin above `band` cycles/sample is zeroed.
pub fn noise(
    len: usize,
    channels: usize,
    band: Option<f64>,
    seed: u64,
    sample_period_s: f64,
) -> Result<Signal> {
    check_len(len)?;
    if channels == 0 {
        return Err(PtvError::InvalidArgument("need at least one channel".into()));
    }
    if let Some(b) = band {
        if !(b > 0.0 && b <= 0.5) {
            return Err(PtvError::InvalidArgument(format!(
                "band must lie in (0, 0.5], got {b}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(channels);
    for _ in 0..channels {
        let x: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
        out.push(match band {
            Some(b) if b < 0.5 => band_limit(&x, b),
            _ => x,
        });
    }
    Signal::new(sample_period_s, out, 0)
}

/// Brick-wall low-pass via the DFT of the whole record.
pub fn band_limit(x: &[f64], band: f64) -> Vec<f64> {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (l, v) in buf.iter_mut().enumerate() {
        let signed = if l <= n / 2 { l as f64 } else { l as f64 - n as f64 };
        if (signed / n as f64).abs() > band {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|v| v.re / n as f64).collect()
}
