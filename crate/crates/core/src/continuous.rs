//! Analytic continuous-time PTV descriptions.
//!
//! Each impulse response `h_ij(z, tau)` is a finite sum of separable terms
//! `g(z) * gate(z) * u(tau)`, where `g` is a real harmonic series over the
//! temporal phase `z in [0, T_h)`, `gate` is an optional indicator window and
//! `u` is either a (delayed) Dirac delta or a train of weighted deltas (an FIR
//! table). This family discretizes in closed form: the sinc projection of a
//! delta at `tau_0` is `sinc(m - tau_0 / T_s)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PtvError, Result};
use crate::kernel::PeriodicKernel;
use crate::spectrum::output_band;

/// Harmonic order reported for gated terms, whose exact harmonic content is infinite.
pub const DEFAULT_GATE_HARMONICS: u32 = 64;

/// Relative tolerance on `T_h / T_s` being an integer.
pub const COMMENSURATE_TOL: f64 = 1e-9;

/// Default relative sinc-tail energy allowed outside the lag window.
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;

// Arguments closer than this to an integer are treated as that integer, so
// that sinc vanishes exactly at nonzero integers.
const INTEGER_SNAP: f64 = 1e-12;

/// `sin(pi x) / (pi x)`, exactly 1 at 0 and exactly 0 at the other integers.
pub fn sinc(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= INTEGER_SNAP {
        return if r == 0.0 { 1.0 } else { 0.0 };
    }
    let px = std::f64::consts::PI * x;
    px.sin() / px
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub k: i64,
    pub re: f64,
    pub im: f64,
}

impl Harmonic {
    pub fn new(k: i64, c: Complex64) -> Self {
        Self { k, re: c.re, im: c.im }
    }

    pub fn coefficient(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauPart {
    /// `delta(tau - delay_s)`
    Delta { delay_s: f64 },
    /// `sum_q taps[q] * delta(tau - q * tap_period_s)`
    Fir { taps: Vec<f64>, tap_period_s: f64 },
}

/// Indicator of `z_a <= z < z_b` on the temporal phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub z_a: f64,
    pub z_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableTerm {
    pub harmonics: Vec<Harmonic>,
    pub tau: TauPart,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<Gate>,
}

impl SeparableTerm {
    /// Constant modulation `g(z) = 1`.
    pub fn constant(tau: TauPart) -> Self {
        Self {
            harmonics: vec![Harmonic { k: 0, re: 1.0, im: 0.0 }],
            tau,
            gate: None,
        }
    }

    /// `g` evaluated at phase fraction `p / k` of the period.
    pub fn modulation_at(&self, p: i64, k: i64) -> f64 {
        self.harmonics
            .iter()
            .map(|h| {
                let theta = 2.0 * std::f64::consts::PI * ((h.k * p).rem_euclid(k) as f64) / k as f64;
                h.re * theta.cos() - h.im * theta.sin()
            })
            .sum()
    }

    /// `g(z) * gate(z)` for an arbitrary phase `z` in seconds.
    pub fn modulation(&self, z: f64, period_s: f64) -> f64 {
        let mut u = (z / period_s).rem_euclid(1.0);
        if u > 1.0 - COMMENSURATE_TOL {
            u = 0.0;
        }
        let z = u * period_s;
        if let Some(g) = self.gate {
            if !gate_contains(g, u, period_s) {
                return 0.0;
            }
        }
        self.harmonics
            .iter()
            .map(|h| {
                let theta = 2.0 * std::f64::consts::PI * h.k as f64 * z / period_s;
                h.re * theta.cos() - h.im * theta.sin()
            })
            .sum()
    }

    fn max_harmonic(&self) -> u32 {
        self.harmonics
            .iter()
            .filter(|h| h.re != 0.0 || h.im != 0.0)
            .map(|h| h.k.unsigned_abs() as u32)
            .max()
            .unwrap_or(0)
    }

    fn validate(&self, period_s: f64) -> Result<()> {
        validate_harmonics(&self.harmonics)?;
        match &self.tau {
            TauPart::Delta { delay_s } => {
                if !delay_s.is_finite() {
                    return Err(PtvError::InvalidArgument("non-finite delay".into()));
                }
            }
            TauPart::Fir { taps, tap_period_s } => {
                if taps.iter().any(|t| !t.is_finite()) {
                    return Err(PtvError::InvalidArgument("non-finite FIR tap".into()));
                }
                if !(tap_period_s.is_finite() && *tap_period_s > 0.0) {
                    return Err(PtvError::InvalidArgument(format!(
                        "FIR tap period must be positive, got {tap_period_s}"
                    )));
                }
            }
        }
        if let Some(g) = self.gate {
            if !(g.z_a >= 0.0 && g.z_a < g.z_b && g.z_b <= period_s * (1.0 + COMMENSURATE_TOL)) {
                return Err(PtvError::InvalidArgument(format!(
                    "gate [{}, {}) not inside [0, {period_s})",
                    g.z_a, g.z_b
                )));
            }
        }
        Ok(())
    }
}

/// Left-closed, right-open membership of the phase fraction `u = z / T_h`.
fn gate_contains(g: Gate, u: f64, period_s: f64) -> bool {
    let a = g.z_a / period_s;
    let b = g.z_b / period_s;
    u >= a - COMMENSURATE_TOL && u < b - COMMENSURATE_TOL
}

fn validate_harmonics(harmonics: &[Harmonic]) -> Result<()> {
    let scale = harmonics
        .iter()
        .map(|h| h.coefficient().norm())
        .fold(0.0_f64, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    for (idx, h) in harmonics.iter().enumerate() {
        if !(h.re.is_finite() && h.im.is_finite()) {
            return Err(PtvError::InvalidArgument(format!(
                "non-finite harmonic at k={}",
                h.k
            )));
        }
        if harmonics[..idx].iter().any(|o| o.k == h.k) {
            return Err(PtvError::InvalidArgument(format!("duplicate harmonic k={}", h.k)));
        }
        let mirror = harmonics
            .iter()
            .find(|o| o.k == -h.k)
            .map_or(Complex64::new(0.0, 0.0), Harmonic::coefficient);
        if (mirror - h.coefficient().conj()).norm() > tol {
            return Err(PtvError::InvalidArgument(format!(
                "harmonics are not conjugate symmetric at k={}",
                h.k
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr")]
pub struct ContinuousSpec {
    pub n_out: usize,
    pub n_in: usize,
    pub period_s: f64,
    /// `entries[i][j]` holds the terms of `h_ij`.
    pub entries: Vec<Vec<Vec<SeparableTerm>>>,
}

#[derive(Deserialize)]
struct SpecRepr {
    n_out: usize,
    n_in: usize,
    period_s: f64,
    entries: Vec<Vec<Vec<SeparableTerm>>>,
}

impl TryFrom<SpecRepr> for ContinuousSpec {
    type Error = PtvError;

    fn try_from(r: SpecRepr) -> Result<Self> {
        ContinuousSpec::new(r.n_out, r.n_in, r.period_s, r.entries)
    }
}

impl ContinuousSpec {
    pub fn new(
        n_out: usize,
        n_in: usize,
        period_s: f64,
        entries: Vec<Vec<Vec<SeparableTerm>>>,
    ) -> Result<Self> {
        if !(period_s.is_finite() && period_s > 0.0) {
            return Err(PtvError::InvalidArgument(format!(
                "period must be positive, got {period_s}"
            )));
        }
        if entries.len() != n_out || entries.iter().any(|row| row.len() != n_in) {
            return Err(PtvError::DimensionMismatch(format!(
                "entries must be {n_out}x{n_in}"
            )));
        }
        for term in entries.iter().flatten().flatten() {
            term.validate(period_s)?;
        }
        Ok(Self {
            n_out,
            n_in,
            period_s,
            entries,
        })
    }

    /// Same system, described with another period. Only meaningful for
    /// phase-constant specs or when the new period is a multiple of the old one.
    pub fn with_period(mut self, period_s: f64) -> Result<Self> {
        for term in self.entries.iter_mut().flatten().flatten() {
            if let Some(g) = term.gate.as_mut() {
                let scale = period_s / self.period_s;
                g.z_a *= scale;
                g.z_b *= scale;
            }
        }
        Self::new(self.n_out, self.n_in, period_s, self.entries)
    }

    pub fn terms(&self) -> impl Iterator<Item = &SeparableTerm> {
        self.entries.iter().flatten().flatten()
    }

    /// Direct evaluation of `y_i(t) = sum_j int h_ij(z(t), tau) x_j(t - tau) dtau`
    /// for analytic inputs `x(j, t)`.
    pub fn respond(&self, x: impl Fn(usize, f64) -> f64, t: f64) -> Vec<f64> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, terms)| {
                        terms
                            .iter()
                            .map(|term| {
                                let g = term.modulation(t, self.period_s);
                                if g == 0.0 {
                                    return 0.0;
                                }
                                let conv = match &term.tau {
                                    TauPart::Delta { delay_s } => x(j, t - delay_s),
                                    TauPart::Fir { taps, tap_period_s } => taps
                                        .iter()
                                        .enumerate()
                                        .map(|(q, a)| a * x(j, t - q as f64 * tap_period_s))
                                        .sum(),
                                };
                                g * conv
                            })
                            .sum::<f64>()
                    })
                    .sum()
            })
            .collect()
    }
}

/// N:1 cyclic multiplexer: input `j` reaches the output while
/// `j T_h / N <= z < (j + 1) T_h / N` (0-based `j`).
pub fn build_multiplexer(n_inputs: usize, period_s: f64) -> Result<ContinuousSpec> {
    if n_inputs == 0 {
        return Err(PtvError::InvalidArgument("multiplexer needs at least one input".into()));
    }
    if !(period_s.is_finite() && period_s > 0.0) {
        return Err(PtvError::InvalidArgument(format!(
            "period must be positive, got {period_s}"
        )));
    }
    let n = n_inputs as f64;
    let row = (0..n_inputs)
        .map(|j| {
            let z_b = if j + 1 == n_inputs {
                period_s
            } else {
                (j + 1) as f64 * period_s / n
            };
            vec![SeparableTerm {
                gate: Some(Gate {
                    z_a: j as f64 * period_s / n,
                    z_b,
                }),
                ..SeparableTerm::constant(TauPart::Delta { delay_s: 0.0 })
            }]
        })
        .collect();
    ContinuousSpec::new(1, n_inputs, period_s, vec![row])
}

/// Memoryless multiplier by the real periodic waveform `g(z) = sum_k c_k e^{j 2 pi k z / T_h}`.
pub fn build_modulator(harmonics: Vec<Harmonic>, period_s: f64) -> Result<ContinuousSpec> {
    let term = SeparableTerm {
        harmonics,
        tau: TauPart::Delta { delay_s: 0.0 },
        gate: None,
    };
    ContinuousSpec::new(1, 1, period_s, vec![vec![vec![term]]])
}

/// `sin(2 pi z / T_h)` as a harmonic series.
pub fn sine_harmonics() -> Vec<Harmonic> {
    vec![
        Harmonic { k: 1, re: 0.0, im: -0.5 },
        Harmonic { k: -1, re: 0.0, im: 0.5 },
    ]
}

/// `cos(2 pi z / T_h)` as a harmonic series.
pub fn cosine_harmonics() -> Vec<Harmonic> {
    vec![
        Harmonic { k: 1, re: 0.5, im: 0.0 },
        Harmonic { k: -1, re: 0.5, im: 0.0 },
    ]
}

/// Time-invariant FIR `sum_q taps[q] delta(tau - q * tap_period_s)` as a PTV.
///
/// The period is arbitrary for such a system; it starts out equal to the tap
/// period and can be changed with [`ContinuousSpec::with_period`].
pub fn build_lti(fir_taps: Vec<f64>, tap_period_s: f64) -> Result<ContinuousSpec> {
    let term = SeparableTerm::constant(TauPart::Fir {
        taps: fir_taps,
        tap_period_s,
    });
    ContinuousSpec::new(1, 1, tap_period_s, vec![vec![vec![term]]])
}

/// Variation bandwidth of a continuous spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariationBand {
    pub value: u32,
    /// Set when a gated term made the exact value infinite and `value` is the
    /// truncation order instead.
    pub truncated: bool,
}

pub fn variation_band(spec: &ContinuousSpec) -> VariationBand {
    variation_band_with_order(spec, DEFAULT_GATE_HARMONICS)
}

pub fn variation_band_with_order(spec: &ContinuousSpec, gate_order: u32) -> VariationBand {
    let mut band = VariationBand {
        value: 0,
        truncated: false,
    };
    for term in spec.terms() {
        let full_period = term
            .gate
            .is_none_or(|g| g.z_a <= 0.0 && g.z_b >= spec.period_s * (1.0 - COMMENSURATE_TOL));
        if full_period {
            band.value = band.value.max(term.max_harmonic());
        } else if term.harmonics.iter().any(|h| h.re != 0.0 || h.im != 0.0) {
            band.value = band.value.max(gate_order);
            band.truncated = true;
        }
    }
    band
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizeOptions {
    /// Largest tolerated sinc-tail energy outside the window, relative to each term's energy.
    pub tail_tolerance: f64,
}

impl Default for DiscretizeOptions {
    fn default() -> Self {
        Self {
            tail_tolerance: DEFAULT_TAIL_TOL,
        }
    }
}

/// Integer `T_h / T_s`, or `IncommensurateRate`.
pub fn discrete_period(period_s: f64, sample_period_s: f64) -> Result<usize> {
    let err = PtvError::IncommensurateRate {
        period_s,
        sample_period_s,
    };
    if !(sample_period_s.is_finite() && sample_period_s > 0.0) {
        return Err(err);
    }
    let ratio = period_s / sample_period_s;
    let k = ratio.round();
    if k < 1.0 || (ratio - k).abs() > COMMENSURATE_TOL * k {
        return Err(err);
    }
    Ok(k as usize)
}

/// Sinc-projected lag weights of one tau part over `lag_min..=lag_max`, plus the
/// energy of the untruncated weight sequence.
fn lag_weights(tau: &TauPart, sample_period_s: f64, lag_min: i64, lag_max: i64) -> (Vec<f64>, f64) {
    match tau {
        TauPart::Delta { delay_s } => {
            let d = delay_s / sample_period_s;
            let w = (lag_min..=lag_max).map(|m| sinc(m as f64 - d)).collect();
            // sum over all m of sinc(m - d)^2 is 1 for every d
            (w, 1.0)
        }
        TauPart::Fir { taps, tap_period_s } => {
            let r = tap_period_s / sample_period_s;
            let w = (lag_min..=lag_max)
                .map(|m| {
                    taps.iter()
                        .enumerate()
                        .map(|(q, a)| a * sinc(m as f64 - q as f64 * r))
                        .sum()
                })
                .collect();
            // sum_m sinc(m - a) sinc(m - b) = sinc(a - b)
            let mut total = 0.0;
            for (q, a) in taps.iter().enumerate() {
                for (s, b) in taps.iter().enumerate() {
                    total += a * b * sinc((q as f64 - s as f64) * r);
                }
            }
            (w, total.max(0.0))
        }
    }
}

/// Samples the spec at `sample_period_s` into a kernel with period `T_h / T_s`.
pub fn discretize(
    spec: &ContinuousSpec,
    sample_period_s: f64,
    lag_window: (i64, i64),
    opts: DiscretizeOptions,
) -> Result<PeriodicKernel> {
    let period = discrete_period(spec.period_s, sample_period_s)?;
    let (lag_min, lag_max) = lag_window;
    if lag_min > lag_max {
        return Err(PtvError::InvalidArgument(format!(
            "empty lag window [{lag_min}, {lag_max}]"
        )));
    }
    let mut kernel = PeriodicKernel::zeros(spec.n_out, spec.n_in, period, lag_min, lag_max)?;
    for (i, row) in spec.entries.iter().enumerate() {
        for (j, terms) in row.iter().enumerate() {
            for term in terms {
                let (w, total) = lag_weights(&term.tau, sample_period_s, lag_min, lag_max);
                let inside: f64 = w.iter().map(|v| v * v).sum();
                let tail = (total - inside).max(0.0);
                if total > 0.0 && tail > opts.tail_tolerance * total {
                    return Err(PtvError::WindowTooSmall {
                        lag_min,
                        lag_max,
                        tail_energy: tail / total,
                        tolerance: opts.tail_tolerance,
                    });
                }
                for p in 0..period {
                    if let Some(g) = term.gate {
                        if !gate_contains(g, p as f64 / period as f64, spec.period_s) {
                            continue;
                        }
                    }
                    let gain = term.modulation_at(p as i64, period as i64);
                    if gain == 0.0 {
                        continue;
                    }
                    for (off, wm) in w.iter().enumerate() {
                        let m = lag_min + off as i64;
                        let v = kernel.tap(i, j, p, m) + gain * wm;
                        kernel.set_tap(i, j, p, m, v);
                    }
                }
            }
        }
    }
    Ok(kernel.with_sample_period(Some(sample_period_s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NyquistReport {
    pub variation: VariationBand,
    pub output_band_hz: f64,
    /// Whether `T_s <= 1 / (2 B_y)`.
    pub ok: bool,
    /// `2 B_y`, the smallest compliant sampling rate.
    pub min_rate_hz: f64,
    /// Set when `B_y` came from a truncated variation band, so the true
    /// requirement is at least `min_rate_hz`.
    pub lower_bound: bool,
}

pub fn nyquist_check(spec: &ContinuousSpec, input_band_hz: f64, sample_period_s: f64) -> Result<NyquistReport> {
    if !(input_band_hz >= 0.0) {
        return Err(PtvError::InvalidArgument(format!(
            "input band must be non-negative, got {input_band_hz}"
        )));
    }
    let variation = variation_band(spec);
    let b_y = output_band(input_band_hz, variation.value as f64, spec.period_s)?;
    let ok = b_y == 0.0 || sample_period_s <= 1.0 / (2.0 * b_y);
    Ok(NyquistReport {
        variation,
        output_band_hz: b_y,
        ok,
        min_rate_hz: 2.0 * b_y,
        lower_bound: variation.truncated,
    })
}
