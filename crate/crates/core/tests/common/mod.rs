#![allow(dead_code)]

use ptv::{PeriodicKernel, Signal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_kernel(
    rng: &mut ChaCha8Rng,
    n_out: usize,
    n_in: usize,
    period: usize,
    lag_min: i64,
    lag_max: i64,
) -> PeriodicKernel {
    PeriodicKernel::from_fn(n_out, n_in, period, lag_min, lag_max, |_, _, _, _| {
        rng.random_range(-1.0..1.0)
    })
    .unwrap()
}

pub fn random_signal(rng: &mut ChaCha8Rng, channels: usize, len: usize, origin: i64) -> Signal {
    let ch = (0..channels)
        .map(|_| (0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    Signal::new(1.0, ch, origin).unwrap()
}

/// `max |a - b| / max(max |b|, tiny)` over matching absolute indices.
pub fn rel_diff(a: &Signal, b: &Signal) -> f64 {
    assert_eq!(a.n_channels(), b.n_channels());
    let lo = a.origin_index().min(b.origin_index());
    let hi = (a.origin_index() + a.len() as i64).max(b.origin_index() + b.len() as i64);
    let mut diff = 0.0f64;
    for c in 0..a.n_channels() {
        for n in lo..hi {
            diff = diff.max((a.at(c, n) - b.at(c, n)).abs());
        }
    }
    diff / b.max_abs().max(1e-300)
}

/// Direct oracle for a kernel: a literal transcription of the I/O relation.
pub fn oracle_apply(k: &PeriodicKernel, x: &Signal) -> Signal {
    let kp = k.period() as i64;
    let o = x.origin_index();
    let ch = (0..k.n_out())
        .map(|i| {
            (0..x.len() as i64)
                .map(|n| {
                    let p = (n + o).rem_euclid(kp) as usize;
                    let mut acc = 0.0;
                    for j in 0..k.n_in() {
                        for m in k.lags() {
                            acc += k.tap(i, j, p, m) * x.at(j, n + o - m);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Signal::new(x.sample_period_s(), ch, o).unwrap()
}
