//! Structure-preserving equivalences between periodic kernels.
//!
//! * Blocking: a SISO kernel of period `K` acting on `x[n]` is the same
//!   system as a time-invariant `K x K` MIMO acting on the polyphase
//!   components `x_j[r] = x[r K + j]`.
//! * Serialization: an `N x N` kernel of period `K` acting on `N` parallel
//!   channels is the same system as a SISO kernel of period `N K` acting on
//!   the interleaved stream `x[n N + j] = x_j[n]`.
//!
//! Channel indices are 0-based throughout.

use crate::error::{PtvError, Result};
use crate::kernel::{BlockedMimo, PeriodicKernel};
use crate::signal::Signal;

/// A signal reshaped into `K` polyphase channels, remembering the zero padding
/// that was needed to fill whole blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocked {
    pub signal: Signal,
    pub pad_front: usize,
    pub pad_back: usize,
}

impl Blocked {
    /// Serializes a signal shaped like `self.signal` and removes the padding,
    /// restoring the original time span.
    pub fn restore(&self, blocked: &Signal) -> Result<Signal> {
        let serial = serialize_signal(blocked)?;
        let len = serial.len() - self.pad_front - self.pad_back;
        let origin = serial.origin_index() + self.pad_front as i64;
        let channels = vec![serial.channel(0)[self.pad_front..self.pad_front + len].to_vec()];
        Signal::new(serial.sample_period_s(), channels, origin)
    }

    pub fn unblock(&self) -> Result<Signal> {
        self.restore(&self.signal)
    }
}

/// Polyphase split: channel `j` holds `x[r K + j]` (absolute indices).
pub fn block_signal(x: &Signal, k: usize) -> Result<Blocked> {
    if x.n_channels() != 1 {
        return Err(PtvError::ChannelMismatch {
            expected: 1,
            got: x.n_channels(),
        });
    }
    if k == 0 {
        return Err(PtvError::InvalidArgument("block size must be at least 1".into()));
    }
    let ki = k as i64;
    let r0 = x.origin_index().div_euclid(ki);
    let pad_front = (x.origin_index() - r0 * ki) as usize;
    let total = pad_front + x.len();
    let blocks = total.div_ceil(k);
    let pad_back = blocks * k - total;
    let channels = (0..k)
        .map(|j| {
            (0..blocks as i64)
                .map(|r| x.at(0, (r0 + r) * ki + j as i64))
                .collect()
        })
        .collect();
    Ok(Blocked {
        signal: Signal::new(x.sample_period_s() * k as f64, channels, r0)?,
        pad_front,
        pad_back,
    })
}

/// Interleaves `K` channels into one stream: `y[r K + j] = x_j[r]`.
pub fn serialize_signal(x: &Signal) -> Result<Signal> {
    let k = x.n_channels();
    if k == 0 {
        return Err(PtvError::InvalidArgument("nothing to serialize".into()));
    }
    let mut out = Vec::with_capacity(k * x.len());
    for r in 0..x.len() {
        for ch in x.channels() {
            out.push(ch[r]);
        }
    }
    Signal::new(x.sample_period_s() / k as f64, vec![out], x.origin_index() * k as i64)
}

fn require_siso(h: &PeriodicKernel) -> Result<()> {
    if !h.is_siso() {
        return Err(PtvError::NotSiso {
            n_out: h.n_out(),
            n_in: h.n_in(),
        });
    }
    Ok(())
}

/// Blocked MIMO of a SISO kernel: `Hbar[i][j][n] = H[i][n K + i - j]`.
pub fn siso_to_mimo(h: &PeriodicKernel) -> Result<BlockedMimo> {
    require_siso(h)?;
    let h = h.trimmed();
    let k = h.period() as i64;
    // lags m = n K + i - j with i - j in (-K, K)
    let n_min = (h.lag_min() - (k - 1)).div_euclid(k) + i64::from((h.lag_min() - (k - 1)).rem_euclid(k) != 0);
    let n_max = (h.lag_max() + (k - 1)).div_euclid(k);
    BlockedMimo::from_fn(h.period(), n_min, n_max, |i, j, n| {
        h.tap(0, 0, i, n * k + i as i64 - j as i64)
    })
}

/// SISO kernel of period `dim` from a blocked MIMO; exact inverse of [`siso_to_mimo`].
pub fn mimo_to_siso(mimo: &BlockedMimo) -> Result<PeriodicKernel> {
    let k = mimo.dim() as i64;
    let lag_min = mimo.lag_min() * k - (k - 1);
    let lag_max = mimo.lag_max() * k + (k - 1);
    let kernel = PeriodicKernel::from_fn(1, 1, mimo.dim(), lag_min, lag_max, |_, _, i, m| {
        let j = (i as i64 - m).rem_euclid(k);
        let n = (m - i as i64 + j) / k;
        mimo.tap(i, j as usize, n)
    })?;
    Ok(kernel.trimmed())
}

/// Applies a blocked MIMO to a SISO signal by blocking, filtering and unblocking.
pub fn apply_blocked(mimo: &BlockedMimo, x: &Signal) -> Result<Signal> {
    let blocked = block_signal(x, mimo.dim())?;
    let y = mimo.apply(&blocked.signal)?;
    blocked.restore(&y)
}

/// SISO kernel of period `N K` equivalent to an `N x N` kernel on interleaved signals.
pub fn square_to_siso(h: &PeriodicKernel) -> Result<PeriodicKernel> {
    if !h.is_square() {
        return Err(PtvError::NotSquare {
            n_out: h.n_out(),
            n_in: h.n_in(),
        });
    }
    let n = h.n_in() as i64;
    let lag_min = h.lag_min() * n - (n - 1);
    let lag_max = h.lag_max() * n + (n - 1);
    let kernel = PeriodicKernel::from_fn(1, 1, h.n_in() * h.period(), lag_min, lag_max, |_, _, p, r| {
        let i = p as i64 % n;
        let j = (p as i64 - r).rem_euclid(n);
        // r = m N + i - j
        let m = (r - i + j) / n;
        h.tap(i as usize, j as usize, p / h.n_in(), m)
    })?;
    Ok(kernel.trimmed().with_sample_period(h.sample_period_s().map(|t| t / n as f64)))
}

/// `N x N` kernel of period `K / N` equivalent to a SISO kernel of period `K`;
/// exact inverse of [`square_to_siso`].
pub fn siso_to_square(h: &PeriodicKernel, n: usize) -> Result<PeriodicKernel> {
    require_siso(h)?;
    if n == 0 || h.period() % n != 0 {
        return Err(PtvError::IndivisiblePeriod {
            period: h.period(),
            factor: n,
        });
    }
    let h = h.trimmed();
    let ni = n as i64;
    let m_min = (h.lag_min() - (ni - 1)).div_euclid(ni) + i64::from((h.lag_min() - (ni - 1)).rem_euclid(ni) != 0);
    let m_max = (h.lag_max() + (ni - 1)).div_euclid(ni);
    let kernel = PeriodicKernel::from_fn(n, n, h.period() / n, m_min, m_max, |i, j, p, m| {
        h.tap(0, 0, p * n + i, m * ni + i as i64 - j as i64)
    })?;
    Ok(kernel.trimmed().with_sample_period(h.sample_period_s().map(|t| t * n as f64)))
}
