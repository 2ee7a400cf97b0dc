mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use ptv::continuous::{
    build_modulator, build_multiplexer, discretize, nyquist_check, ContinuousSpec, DiscretizeOptions,
    Harmonic, SeparableTerm, TauPart,
};
use ptv::Signal;

/// Sum of tones `(amplitude, cycles per second, phase)`.
fn tones(parts: &[(f64, f64, f64)]) -> impl Fn(usize, f64) -> f64 + '_ {
    move |_, t| parts.iter().map(|(a, f, ph)| a * (2.0 * PI * f * t + ph).cos()).sum()
}

fn harmonic_set() -> impl Strategy<Value = Vec<Harmonic>> {
    prop::collection::vec((1i64..=3, -1.0f64..1.0, -1.0f64..1.0), 1..3).prop_map(|cs| {
        let mut hs = vec![Harmonic { k: 0, re: 0.3, im: 0.0 }];
        for (k, re, im) in cs {
            if hs.iter().any(|h| h.k == k) {
                continue;
            }
            hs.push(Harmonic { k, re, im });
            hs.push(Harmonic { k: -k, re, im: -im });
        }
        hs
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn modulator_is_pointwise_product(hs in harmonic_set(), kh in 2usize..20, seed in any::<u64>()) {
        let ts = 0.5;
        let spec = build_modulator(hs, kh as f64 * ts).unwrap();
        let k = discretize(&spec, ts, (0, 0), DiscretizeOptions::default()).unwrap();
        let mut r = common::rng(seed);
        let x = common::random_signal(&mut r, 1, 200, 0);
        let x = Signal::new(ts, x.into_channels(), 0).unwrap();
        let y = k.apply(&x).unwrap();
        for n in 0..x.len() {
            let g = spec.terms().next().unwrap().modulation(n as f64 * ts, spec.period_s);
            prop_assert!((y.channel(0)[n] - x.channel(0)[n] * g).abs() <= 1e-12);
        }
    }

    #[test]
    fn mux_gates_partition_phases(n in 1usize..8, mult in 1usize..4) {
        let ts = 1.0;
        let spec = build_multiplexer(n, (n * mult) as f64 * ts).unwrap();
        let k = discretize(&spec, ts, (0, 0), DiscretizeOptions::default()).unwrap();
        for p in 0..k.period() {
            let live = (0..n).filter(|&j| k.tap(0, j, p, 0) != 0.0).count();
            prop_assert_eq!(live, 1);
        }
    }
}

/// Random spec with commensurate delays against a dense direct simulation.
#[test]
fn discrete_matches_continuous_simulation() {
    let ts = 0.25;
    let th = 6.0 * ts;
    let a = vec![
        SeparableTerm {
            harmonics: vec![
                Harmonic { k: 1, re: 0.2, im: -0.4 },
                Harmonic { k: -1, re: 0.2, im: 0.4 },
            ],
            tau: TauPart::Delta { delay_s: 2.0 * ts },
            gate: None,
        },
        SeparableTerm::constant(TauPart::Fir {
            taps: vec![0.5, -0.25, 0.125],
            tap_period_s: 2.0 * ts,
        }),
    ];
    let b = vec![SeparableTerm {
        harmonics: vec![
            Harmonic { k: 0, re: 1.0, im: 0.0 },
            Harmonic { k: 2, re: 0.0, im: 0.3 },
            Harmonic { k: -2, re: 0.0, im: -0.3 },
        ],
        tau: TauPart::Delta { delay_s: ts },
        gate: None,
    }];
    let spec = ContinuousSpec::new(1, 2, th, vec![vec![a, b]]).unwrap();
    let k = discretize(&spec, ts, (0, 4), DiscretizeOptions::default()).unwrap();

    let x0 = [(1.0, 0.3, 0.1), (0.5, 0.55, 1.2)];
    let x1 = [(0.7, 0.2, -0.4)];
    let input = |j: usize, t: f64| if j == 0 { tones(&x0)(0, t) } else { tones(&x1)(0, t) };
    let b_x = 0.55;
    let report = nyquist_check(&spec, b_x, ts).unwrap();
    assert!(report.ok, "{report:?}");

    let len = 400;
    let channels = (0..2)
        .map(|j| (0..len).map(|n| input(j, n as f64 * ts)).collect())
        .collect();
    let x = Signal::new(ts, channels, 0).unwrap();
    let y = k.apply(&x).unwrap();
    let (mut err, mut norm) = (0.0, 0.0);
    for n in 8..len - 8 {
        let want = spec.respond(input, n as f64 * ts)[0];
        err += (y.channel(0)[n] - want).powi(2);
        norm += want * want;
    }
    assert!((err / norm).sqrt() <= 1e-6);
}

#[test]
fn mux_matches_continuous_switch() {
    let ts = 0.1;
    let spec = build_multiplexer(4, 8.0 * ts).unwrap();
    let k = discretize(&spec, ts, (0, 0), DiscretizeOptions::default()).unwrap();
    let input = |j: usize, t: f64| ((j + 1) as f64 * 0.7 * t).sin() + j as f64;
    let len = 64;
    let x = Signal::new(
        ts,
        (0..4).map(|j| (0..len).map(|n| input(j, n as f64 * ts)).collect()).collect(),
        0,
    )
    .unwrap();
    let y = k.apply(&x).unwrap();
    for n in 0..len {
        let want = spec.respond(input, n as f64 * ts)[0];
        assert_eq!(y.channel(0)[n], want, "n = {n}");
    }
}
