//! Uniformly sampled multichannel real signals.
//!
//! A [`Signal`] stores a finite window of an implicitly doubly-infinite
//! sequence: `channels[c][n]` is the sample at absolute index
//! `origin_index + n`, and every sample outside the stored range is zero.

use serde::{Deserialize, Serialize};

use crate::error::{PtvError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    sample_period_s: f64,
    channels: Vec<Vec<f64>>,
    origin_index: i64,
}

impl Signal {
    pub fn new(sample_period_s: f64, channels: Vec<Vec<f64>>, origin_index: i64) -> Result<Self> {
        if !(sample_period_s.is_finite() && sample_period_s > 0.0) {
            return Err(PtvError::InvalidSignal(format!(
                "sample period must be positive and finite, got {sample_period_s}"
            )));
        }
        if let Some(first) = channels.first() {
            let len = first.len();
            if channels.iter().any(|c| c.len() != len) {
                return Err(PtvError::InvalidSignal(
                    "channels have different lengths".into(),
                ));
            }
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(PtvError::InvalidSignal("non-finite sample".into()));
        }
        Ok(Self {
            sample_period_s,
            channels,
            origin_index,
        })
    }

    /// Single-channel signal starting at index 0.
    pub fn mono(sample_period_s: f64, samples: Vec<f64>) -> Result<Self> {
        Self::new(sample_period_s, vec![samples], 0)
    }

    pub fn zeros(sample_period_s: f64, n_channels: usize, len: usize, origin_index: i64) -> Result<Self> {
        Self::new(sample_period_s, vec![vec![0.0; len]; n_channels], origin_index)
    }

    pub fn sample_period_s(&self) -> f64 {
        self.sample_period_s
    }

    pub fn origin_index(&self) -> i64 {
        self.origin_index
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Number of stored samples per channel.
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample at absolute index `n`, zero outside the stored range.
    pub fn at(&self, c: usize, n: i64) -> f64 {
        let local = n - self.origin_index;
        if local < 0 {
            return 0.0;
        }
        self.channels[c].get(local as usize).copied().unwrap_or(0.0)
    }

    /// Delays the signal by `d` samples: `y[n] = x[n - d]`.
    ///
    /// Only the origin moves; stored samples are untouched.
    pub fn delay(&self, d: i64) -> Self {
        Self {
            origin_index: self.origin_index + d,
            ..self.clone()
        }
    }

    /// Same samples, different origin.
    pub fn with_origin(mut self, origin_index: i64) -> Self {
        self.origin_index = origin_index;
        self
    }

    /// Linear combination `a*self + b*other` on the same stored window.
    pub fn axpby(&self, a: f64, other: &Signal, b: f64) -> Result<Self> {
        if self.n_channels() != other.n_channels()
            || self.len() != other.len()
            || self.origin_index != other.origin_index
        {
            return Err(PtvError::DimensionMismatch(
                "signals must share channel count, length and origin".into(),
            ));
        }
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(x, w)| x.iter().zip(w).map(|(x, w)| a * x + b * w).collect())
            .collect();
        Self::new(self.sample_period_s, channels, self.origin_index)
    }

    /// Largest absolute sample over all channels.
    pub fn max_abs(&self) -> f64 {
        self.channels
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
