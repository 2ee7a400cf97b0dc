//! Parallel and series combination of periodic kernels.
//!
//! Both operands are referenced to the same absolute time origin: phase `p`
//! of the composite system reads phase `p mod K` of each component.

mod circuit;

pub use circuit::{reduce_circuit, sum_kernel, split_kernel, Block, Circuit, Node, ReduceOptions};

use crate::error::{check_rates, PtvError, Result};
use crate::kernel::PeriodicKernel;

/// Period of a combination of systems with discrete periods `k_h` and `k_g`.
pub fn lcm_period(k_h: usize, k_g: usize) -> usize {
    num_integer::lcm(k_h.max(1), k_g.max(1))
}

fn merged_rate(h: &PeriodicKernel, g: &PeriodicKernel) -> Result<Option<f64>> {
    check_rates(h.sample_period_s(), g.sample_period_s())?;
    Ok(h.sample_period_s().or(g.sample_period_s()))
}

/// Block-diagonal stacking: inputs and outputs of `g` follow those of `h`.
pub fn parallel(h: &PeriodicKernel, g: &PeriodicKernel) -> Result<PeriodicKernel> {
    let rate = merged_rate(h, g)?;
    let period = lcm_period(h.period(), g.period());
    let (mh, nh) = (h.n_out(), h.n_in());
    PeriodicKernel::from_fn(
        mh + g.n_out(),
        nh + g.n_in(),
        period,
        h.lag_min().min(g.lag_min()),
        h.lag_max().max(g.lag_max()),
        |i, j, p, m| match (i < mh, j < nh) {
            (true, true) => h.tap(i, j, p, m),
            (false, false) => g.tap(i - mh, j - nh, p, m),
            _ => 0.0,
        },
    )
    .map(|k| k.with_sample_period(rate))
}

/// Cascade: the outputs of `h` feed the inputs of `g`.
///
/// `s[i][j][p][m] = sum_l sum_mu g[i][l][p][mu] * h[l][j][p - mu][m - mu]`.
pub fn series(h: &PeriodicKernel, g: &PeriodicKernel) -> Result<PeriodicKernel> {
    if g.n_in() != h.n_out() {
        return Err(PtvError::DimensionMismatch(format!(
            "first stage has {} outputs, second stage expects {} inputs",
            h.n_out(),
            g.n_in()
        )));
    }
    let rate = merged_rate(h, g)?;
    let period = lcm_period(h.period(), g.period());
    let lag_min = h.lag_min() + g.lag_min();
    let lag_max = h.lag_max() + g.lag_max();
    let mut s = PeriodicKernel::zeros(g.n_out(), h.n_in(), period, lag_min, lag_max)?;
    let mut acc = vec![0.0; s.lag_len()];
    let kh = h.period() as i64;
    for i in 0..g.n_out() {
        for j in 0..h.n_in() {
            for p in 0..period {
                acc.iter_mut().for_each(|v| *v = 0.0);
                for l in 0..h.n_out() {
                    let g_taps = g.lag_slice(i, l, p % g.period());
                    for (gi, &gv) in g_taps.iter().enumerate() {
                        if gv == 0.0 {
                            continue;
                        }
                        let mu = g.lag_min() + gi as i64;
                        let ph = (p as i64 - mu).rem_euclid(kh) as usize;
                        let h_taps = h.lag_slice(l, j, ph);
                        // m = mu + tau, offset into acc is m - lag_min
                        let base = (mu + h.lag_min() - lag_min) as usize;
                        for (hi, &hv) in h_taps.iter().enumerate() {
                            acc[base + hi] += gv * hv;
                        }
                    }
                }
                for (off, &v) in acc.iter().enumerate() {
                    s.set_tap(i, j, p, lag_min + off as i64, v);
                }
            }
        }
    }
    Ok(s.with_sample_period(rate))
}

/// Time-invariant FIR (`fir[q]` at lag `lag_min + q`) written as a SISO kernel of period `period`.
pub fn lift_lti(fir: &[f64], lag_min: i64, period: usize) -> Result<PeriodicKernel> {
    if period == 0 {
        return Err(PtvError::InvalidArgument("period must be at least 1".into()));
    }
    if fir.is_empty() {
        return PeriodicKernel::zeros(1, 1, period, 0, 0);
    }
    let lag_max = lag_min + fir.len() as i64 - 1;
    PeriodicKernel::from_fn(1, 1, period, lag_min, lag_max, |_, _, _, m| {
        fir[(m - lag_min) as usize]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Signal;

    fn delay(d: i64) -> PeriodicKernel {
        lift_lti(&[1.0], d, 1).unwrap()
    }

    #[test]
    fn lcm_examples() {
        assert_eq!(lcm_period(6, 4), 12);
        assert_eq!(lcm_period(5, 5), 5);
        assert_eq!(lcm_period(1, 7), 7);
    }

    #[test]
    fn parallel_identities() {
        let id = PeriodicKernel::identity(1, 1).unwrap();
        let s = parallel(&id, &id).unwrap();
        assert_eq!(s, PeriodicKernel::identity(2, 1).unwrap());
    }

    #[test]
    fn parallel_off_diagonal_is_zero_and_period_is_lcm() {
        let h = PeriodicKernel::from_fn(1, 1, 2, -1, 1, |_, _, p, m| 1.0 + p as f64 + m as f64).unwrap();
        let g = PeriodicKernel::from_fn(1, 1, 3, 0, 2, |_, _, p, m| 2.0 - p as f64 * m as f64).unwrap();
        let s = parallel(&h, &g).unwrap();
        assert_eq!(s.period(), 6);
        assert_eq!((s.lag_min(), s.lag_max()), (-1, 2));
        for p in 0..6 {
            for m in -1..=2 {
                assert_eq!(s.tap(0, 1, p, m), 0.0);
                assert_eq!(s.tap(1, 0, p, m), 0.0);
                assert_eq!(s.tap(0, 0, p, m), h.tap(0, 0, p % 2, m));
                assert_eq!(s.tap(1, 1, p, m), g.tap(0, 0, p % 3, m));
            }
        }
    }

    #[test]
    fn series_identity_and_delays() {
        let h = PeriodicKernel::from_fn(2, 3, 4, -2, 1, |i, j, p, m| {
            (i * 7 + j * 3 + p) as f64 * 0.1 - m as f64
        })
        .unwrap();
        let left = series(&PeriodicKernel::identity(3, 1).unwrap(), &h).unwrap();
        let right = series(&h, &PeriodicKernel::identity(2, 1).unwrap()).unwrap();
        assert_eq!(left, h);
        assert_eq!(right, h);
        let d2 = series(&delay(1), &delay(1)).unwrap();
        assert_eq!((d2.lag_min(), d2.lag_max()), (2, 2));
        assert_eq!(d2.tap(0, 0, 0, 2), 1.0);
    }

    #[test]
    fn series_dimension_and_rate_errors() {
        let a = PeriodicKernel::identity(2, 1).unwrap();
        let b = PeriodicKernel::identity(3, 1).unwrap();
        assert!(matches!(series(&a, &b), Err(PtvError::DimensionMismatch(_))));
        let a = PeriodicKernel::identity(1, 1).unwrap().with_sample_period(Some(1.0));
        let b = PeriodicKernel::identity(1, 1).unwrap().with_sample_period(Some(2.0));
        assert!(matches!(series(&a, &b), Err(PtvError::RateMismatch { .. })));
        assert!(matches!(parallel(&a, &b), Err(PtvError::RateMismatch { .. })));
    }

    #[test]
    fn series_phase_reference_uses_delayed_phase() {
        // h alternates sign, g delays by one: output phase p sees h at phase p-1
        let h = PeriodicKernel::from_fn(1, 1, 2, 0, 0, |_, _, p, _| if p == 0 { 1.0 } else { -1.0 }).unwrap();
        let s = series(&h, &delay(1)).unwrap();
        assert_eq!(s.tap(0, 0, 0, 1), -1.0);
        assert_eq!(s.tap(0, 0, 1, 1), 1.0);
        let x = Signal::mono(1.0, vec![1.0; 5]).unwrap();
        let staged = delay(1).apply(&h.apply(&x).unwrap()).unwrap();
        assert_eq!(s.apply(&x).unwrap(), staged);
    }

    #[test]
    fn lifted_lti_is_phase_constant() {
        let k = lift_lti(&[1.0], 0, 5).unwrap();
        assert_eq!(k.period(), 5);
        assert!(k.taps().iter().all(|&t| t == 1.0));
        let fir = [0.5, -1.0, 0.25];
        let x = Signal::mono(1.0, (0..20).map(|n| (n as f64 * 0.7).sin()).collect()).unwrap();
        let y3 = lift_lti(&fir, -1, 3).unwrap().apply(&x).unwrap();
        let y7 = lift_lti(&fir, -1, 7).unwrap().apply(&x).unwrap();
        assert_eq!(y3, y7);
    }

    #[test]
    fn lifted_series_is_convolution() {
        let a = [1.0, 2.0, -1.0];
        let b = [0.5, 0.0, 3.0, 1.0];
        // direct linear convolution
        let mut conv = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                conv[i + j] += x * y;
            }
        }
        let s = series(&lift_lti(&a, 0, 4).unwrap(), &lift_lti(&b, 0, 4).unwrap()).unwrap();
        for p in 0..4 {
            for (m, c) in conv.iter().enumerate() {
                assert_eq!(s.tap(0, 0, p, m as i64), *c);
            }
        }
    }
}
