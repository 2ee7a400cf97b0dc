mod common;

use common::{random_kernel, random_signal, rng};
use proptest::prelude::*;
use ptv::compose::{lcm_period, parallel, series};
use ptv::{PeriodicKernel, Signal};

fn interior_rel(a: &Signal, b: &Signal, margin: usize) -> f64 {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for c in 0..a.n_channels() {
        for n in margin..a.len() - margin {
            diff = diff.max((a.channel(c)[n] - b.channel(c)[n]).abs());
            scale = scale.max(b.channel(c)[n].abs());
        }
    }
    diff / scale.max(1e-300)
}

fn stack(a: &Signal, b: &Signal) -> Signal {
    let mut ch = a.channels().to_vec();
    ch.extend_from_slice(b.channels());
    Signal::new(a.sample_period_s(), ch, a.origin_index()).unwrap()
}

fn split(x: &Signal, at: usize) -> (Signal, Signal) {
    let ch = x.channels();
    (
        Signal::new(x.sample_period_s(), ch[..at].to_vec(), x.origin_index()).unwrap(),
        Signal::new(x.sample_period_s(), ch[at..].to_vec(), x.origin_index()).unwrap(),
    )
}

/// Literal transcription of the series-composition sum.
fn series_oracle(h: &PeriodicKernel, g: &PeriodicKernel) -> PeriodicKernel {
    let ks = lcm_period(h.period(), g.period());
    let lo = h.lag_min() + g.lag_min();
    let hi = h.lag_max() + g.lag_max();
    PeriodicKernel::from_fn(g.n_out(), h.n_in(), ks, lo, hi, |i, j, p, m| {
        let mut acc = 0.0;
        for l in 0..g.n_in() {
            for mu in g.lags() {
                let ph = (p as i64 - mu).rem_euclid(ks as i64) as usize;
                acc += g.tap(i, l, p, mu) * h.tap(l, j, ph, m - mu);
            }
        }
        acc
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn period_law(kh in 1usize..9, kg in 1usize..9, seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = random_kernel(&mut r, 1, 1, kh, -1, 1);
        let g = random_kernel(&mut r, 1, 1, kg, 0, 2);
        let l = lcm_period(kh, kg);
        prop_assert_eq!(series(&h, &g).unwrap().period(), l);
        prop_assert_eq!(parallel(&h, &g).unwrap().period(), l);
    }

    #[test]
    fn series_matches_oracle_and_staging(
        kh in 1usize..6, kg in 1usize..6, dims in (1usize..3, 1usize..3, 1usize..3),
        lh in -2i64..2, lg in -2i64..2, seed in any::<u64>(), origin in -5i64..5,
    ) {
        let (a, b, c) = dims;
        let mut r = rng(seed);
        let h = random_kernel(&mut r, b, a, kh, lh, lh + 2);
        let g = random_kernel(&mut r, c, b, kg, lg, lg + 1);
        let s = series(&h, &g).unwrap();
        prop_assert!(s.max_abs_diff(&series_oracle(&h, &g)).unwrap() <= 1e-12);

        let x = random_signal(&mut r, a, 80, origin);
        let staged = g.apply(&h.apply(&x).unwrap()).unwrap();
        let direct = s.apply(&x).unwrap();
        prop_assert!(interior_rel(&direct, &staged, 8) <= 1e-12);
        // structural periodicity
        for p in 0..s.period() {
            for m in s.lags() {
                prop_assert_eq!(s.tap(0, 0, p, m), s.tap(0, 0, p + s.period(), m));
            }
        }
    }

    #[test]
    fn parallel_matches_staging(kh in 1usize..6, kg in 1usize..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = random_kernel(&mut r, 2, 1, kh, -1, 2);
        let g = random_kernel(&mut r, 1, 2, kg, 0, 3);
        let pk = parallel(&h, &g).unwrap();
        let x = random_signal(&mut r, 3, 60, 2);
        let (x1, x2) = split(&x, 1);
        let staged = stack(&h.apply(&x1).unwrap(), &g.apply(&x2).unwrap());
        prop_assert!(common::rel_diff(&pk.apply(&x).unwrap(), &staged) <= 1e-15);
    }

    #[test]
    fn series_is_associative(k in prop::collection::vec(1usize..5, 3), seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = random_kernel(&mut r, 2, 1, k[0], -1, 1);
        let g = random_kernel(&mut r, 2, 2, k[1], 0, 2);
        let f = random_kernel(&mut r, 1, 2, k[2], -2, 0);
        let left = series(&series(&h, &g).unwrap(), &f).unwrap();
        let right = series(&h, &series(&g, &f).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-12);
    }
}
