"""Quick end-to-end check of the Python bindings. Run after `maturin develop`."""

import math
import os
import tempfile

import ptv


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    # identity leaves a signal untouched
    x = ptv.noise(64, channels=1, seed=3)
    ident = ptv.Kernel.identity(1, period=4)
    y = ident.apply(x)
    assert y.channels() == x.channels()

    # a sine mixer discretizes to a period-K kernel
    mixer = ptv.ContinuousSpec.sine(8.0).discretize(1.0)
    assert mixer.period == 8, mixer
    t = ptv.tone(64, 0.05)
    out = mixer.apply(t, threads=2)
    for n, (a, b) in enumerate(zip(t.channels()[0], out.channels()[0])):
        assert close(b, a * math.sin(2 * math.pi * n / 8.0), 1e-9), (n, a, b)

    # series of two delays is a delay of two
    d1 = ptv.Kernel(1, 1, 1, 1, 1, [1.0])
    d2 = ptv.series(d1, d1)
    assert d2.tap(0, 0, 0, 2) == 1.0

    bw = ptv.bandwidth(mixer, input_band=0.05)
    assert bw["A"] == 1, bw

    # blocking and serialization round trip
    m = ptv.siso_to_mimo(mixer)
    back = ptv.mimo_to_siso(m)
    assert back.trimmed().max_abs_diff(mixer.trimmed()) < 1e-12

    blocked, front, back_pad = ptv.block_signal(x, 4)
    assert len(ptv.serialize_signal(blocked)) == len(x) + front + back_pad

    # invert a dominant periodic kernel
    taps = [1.0, 0.2, 1.0, -0.1]
    k = ptv.Kernel(1, 1, 2, 0, 1, taps)
    inv, report = ptv.invert(k)
    assert report["residual"] < 1e-8, report
    assert ptv.series(k, inv).period == 2

    # non-invertible kernels raise the library error
    try:
        ptv.invert(ptv.Kernel(1, 1, 2, 0, 0, [1.0, 0.0]))
    except ptv.PtvError as e:
        assert str(e).startswith("NotInvertible"), e
    else:
        raise AssertionError("expected PtvError")

    # save/load round trips
    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "k.bin")
        mixer.save(p)
        assert ptv.Kernel.load(p).max_abs_diff(mixer) == 0.0
        s = os.path.join(d, "x.csv")
        x.save(s)
        assert len(ptv.Signal.load(s)) == len(x)

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
