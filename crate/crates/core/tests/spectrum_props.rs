mod common;

use common::{random_kernel, rng};
use proptest::prelude::*;
use ptv::continuous::{build_modulator, discretize, variation_band, DiscretizeOptions, Harmonic};
use ptv::gen::noise;
use ptv::hybrid_transform;
use ptv::spectrum::{signal_band, variation_band_estimate};
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inverse_transform_round_trips(k in 1usize..7, lo in -4i64..2, w in 0i64..6, pad in 0usize..9, seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = random_kernel(&mut r, 2, 1, k, lo, lo + w);
        let l = h.lag_len() + pad;
        let back = hybrid_transform(&h, l).unwrap().inverse().unwrap();
        prop_assert!(back.max_abs_diff(&h).unwrap() <= 1e-10 * h.max_abs());
    }

    #[test]
    fn parseval(k in 1usize..7, w in 0i64..6, pad in 0usize..9, seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = random_kernel(&mut r, 1, 2, k, -1, w - 1);
        let l = h.lag_len() + pad;
        let spec = hybrid_transform(&h, l).unwrap();
        let want = h.energy();
        prop_assert!((spec.energy() / (k * l) as f64 - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn spectral_support_law(a in 1i64..4, kh in 8usize..17, band in 0.02f64..0.2, seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut hs = vec![Harmonic { k: 0, re: r.random_range(-1.0..1.0), im: 0.0 }];
        for k in 1..=a {
            let (re, im) = (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            hs.push(Harmonic { k, re, im });
            hs.push(Harmonic { k: -k, re, im: -im });
        }
        let spec = build_modulator(hs, kh as f64).unwrap();
        let vb = variation_band(&spec);
        prop_assert_eq!(vb.value as i64, a);
        let h = discretize(&spec, 1.0, (0, 0), DiscretizeOptions::default()).unwrap();
        prop_assert_eq!(variation_band_estimate(&hybrid_transform(&h, 1).unwrap(), 1e-12).unwrap() as i64, a);

        let len = 128 * kh;
        let x = noise(len, 1, Some(band), seed, 1.0).unwrap();
        let y = h.apply(&x).unwrap();
        let bx = signal_band(&x, 1e-9).unwrap();
        let by = signal_band(&y, 1e-9).unwrap();
        let bin = 1.0 / len as f64;
        prop_assert!(by <= bx + a as f64 / kh as f64 + bin, "by {by} bx {bx}");
    }
}
