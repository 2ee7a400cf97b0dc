mod common;

use common::{oracle_apply, random_kernel, random_signal, rel_diff, rng};
use proptest::prelude::*;
use ptv::PeriodicKernel;

fn shape() -> impl Strategy<Value = (usize, usize, usize, i64, i64, u64)> {
    (1usize..=3, 1usize..=3, 1usize..=6, -4i64..=2, 0i64..=4, any::<u64>())
        .prop_map(|(o, i, k, lo, w, seed)| (o, i, k, lo, lo + w, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_direct_oracle((o, i, k, lo, hi, seed) in shape(), origin in -7i64..7) {
        let mut r = rng(seed);
        let h = random_kernel(&mut r, o, i, k, lo, hi);
        let x = random_signal(&mut r, i, 40, origin);
        let y = h.apply(&x).unwrap();
        prop_assert!(rel_diff(&y, &oracle_apply(&h, &x)) <= 1e-15);
    }

    #[test]
    fn period_shift_commutes((o, i, k, lo, hi, seed) in shape(), mult in 1i64..3) {
        let mut r = rng(seed);
        let h = random_kernel(&mut r, o, i, k, lo, hi);
        let x = random_signal(&mut r, i, 50, 0);
        let d = mult * k as i64;
        let a = h.apply(&x.delay(d)).unwrap();
        let b = h.apply(&x).unwrap().delay(d);
        prop_assert!(rel_diff(&a, &b) <= 1e-15);
    }

    #[test]
    fn linear((o, i, k, lo, hi, seed) in shape(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut r = rng(seed);
        let h = random_kernel(&mut r, o, i, k, lo, hi);
        let x = random_signal(&mut r, i, 32, 3);
        let w = random_signal(&mut r, i, 32, 3);
        let lhs = h.apply(&x.axpby(alpha, &w, beta).unwrap()).unwrap();
        let rhs = h.apply(&x).unwrap().axpby(alpha, &h.apply(&w).unwrap(), beta).unwrap();
        let scale = rhs.max_abs().max(h.apply(&x).unwrap().max_abs());
        let diff = rel_diff(&lhs, &rhs) * rhs.max_abs().max(1e-300) / scale.max(1e-300);
        prop_assert!(diff <= 1e-12);
    }

    #[test]
    fn period_one_is_time_invariant(seed in any::<u64>(), d in -9i64..9) {
        let mut r = rng(seed);
        let h = random_kernel(&mut r, 2, 2, 1, -2, 3);
        let x = random_signal(&mut r, 2, 30, 0);
        let a = h.apply(&x.delay(d)).unwrap();
        let b = h.apply(&x).unwrap().delay(d);
        prop_assert!(rel_diff(&a, &b) <= 1e-15);
    }

    #[test]
    fn threads_do_not_change_bits(seed in any::<u64>(), threads in 1usize..6) {
        let mut r = rng(seed);
        let h = random_kernel(&mut r, 4, 2, 3, -1, 2);
        let x = random_signal(&mut r, 2, 64, -5);
        prop_assert_eq!(h.apply_threaded(&x, threads).unwrap(), h.apply(&x).unwrap());
    }

    #[test]
    fn json_round_trip_is_exact((o, i, k, lo, hi, seed) in shape()) {
        let mut r = rng(seed);
        let h = random_kernel(&mut r, o, i, k, lo, hi).with_sample_period(Some(1e-3));
        let back: PeriodicKernel = serde_json::from_str(&serde_json::to_string(&h).unwrap()).unwrap();
        prop_assert_eq!(back, h);
    }
}
