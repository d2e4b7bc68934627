"""Quick property checks of every module, run by ``rmscat selftest``.

Each check returns ``(ok, detail)``. The checks are small versions of the
test-suite properties and finish in seconds.
"""

import numpy as np

from . import _backend


def _signals(rng):
    from .signals import circular_convolve_direct, rotate90_periodic

    x, y = rng.standard_normal((8, 8)), rng.standard_normal((8, 8))
    fast = np.fft.ifft2(np.fft.fft2(x) * np.fft.fft2(y)).real
    err = np.abs(fast - circular_convolve_direct(x, y)).max()
    back = rotate90_periodic(rotate90_periodic(x, 1), 3)
    return err < 1e-10 and np.array_equal(back, x), f"conv err {err:.2g}"


def _wavelets(rng):
    from .wavelets2d import (build_filter_bank, littlewood_paley_audit, wavelet_energy,
                             wavelet_transform)

    fb = build_filter_bank(grid=(64, 64))
    x = rng.standard_normal((64, 64))
    e = wavelet_energy(wavelet_transform(x, fb, oversampling=fb.J)) / np.sum(x ** 2)
    rep = littlewood_paley_audit(fb)
    lo, hi = rep.min_sum, rep.max_sum
    ok = rep.epsilon < 0.5 and hi <= 1 + 1e-3 and lo - 1e-9 <= e <= hi + 1e-9
    return ok, f"eps {rep.epsilon:.3f}, energy ratio {e:.3f}"


def _group(rng):
    from .se2_group import IDENTITY, RigidMotion, g_distance, g_inverse, g_product

    g = RigidMotion(tuple(rng.standard_normal(2)), float(rng.uniform(0, 2 * np.pi)))
    h = RigidMotion(tuple(rng.standard_normal(2)), float(rng.uniform(0, 2 * np.pi)))
    e1 = g_distance(g_product(g, g_inverse(g)), IDENTITY)
    k = RigidMotion(tuple(rng.standard_normal(2)), 1.0)
    e2 = g_distance(g_product(g_product(g, h), k), g_product(g, g_product(h, k)))
    return max(e1, e2) < 1e-12, f"axiom err {max(e1, e2):.2g}"


def _kernels(rng):
    try:
        comp = _backend.get("compiled")
    except ImportError:
        return True, "compiled kernels not built; fallback only"
    py = _backend.get("python")
    x = rng.standard_normal((6, 6, 4)) + 1j * rng.standard_normal((6, 6, 4))
    y = rng.standard_normal((6, 6, 4)) + 1j * rng.standard_normal((6, 6, 4))
    t = np.arange(4) * np.pi / 2 + 0.2
    e1 = np.abs(comp.se2_ref_conv(x, y, np.cos(t), np.sin(t))
                - py.se2_ref_conv(x, y, np.cos(t), np.sin(t))).max()
    a = rng.standard_normal((16, 16)) + 0j
    taps = rng.standard_normal((5, 5)) + 0j
    e2 = np.abs(comp.conv_taps_strided(a, taps, 2) - py.conv_taps_strided(a, taps, 2)).max()
    return max(e1, e2) < 1e-10, f"compiled vs python {max(e1, e2):.2g}"


def _cascade(rng):
    from .filterbank import atrous_cascade, derive_cascade_filters
    from .wavelets2d import build_filter_bank, wavelet_transform

    fb = build_filter_bank(J=3, grid=(64, 64), mode="cascade")
    x = rng.standard_normal((64, 64))
    wc = wavelet_transform(x, fb, oversampling=0)
    py = atrous_cascade(x, derive_cascade_filters(fb), 3)
    worst = max(float(np.linalg.norm(py.B[j] - wc.band[j]) / np.linalg.norm(wc.band[j]))
                for j in range(3))
    return worst <= 1e-2, f"worst band err {worst:.3g}"


def _rm_wavelets(rng):
    from .rm_wavelets import build_se2_bank, rm_energy_audit
    from .wavelets2d import FOUR_ORIENTATION_PARAMS

    bank = build_se2_bank((16, 16), 8, J=2, K=2, params=FOUR_ORIENTATION_PARAMS)
    rep = rm_energy_audit(bank, trials=3, rng=rng)
    return rep.passed, f"ratios [{rep.min_ratio:.3f}, {rep.max_ratio:.3f}]"


def _scattering(rng):
    from .scattering import ScatteringConfig, scatter, scattering_distance
    from .signals import rotate90_periodic

    cfg = ScatteringConfig(C=4, oversampling=9)
    x, y = rng.standard_normal((32, 32)), rng.standard_normal((32, 32))
    ok, worst = True, 0.0
    for variant in ("translation", "rigid-motion"):
        sx, sy = scatter(x, cfg, variant), scatter(y, cfg, variant)
        r = scattering_distance(sx, sy) / np.linalg.norm(x - y)
        worst = max(worst, r)
        ok &= r <= 1 + 1e-9
    a = scatter(x, cfg).energy()
    b = scatter(rotate90_periodic(x), cfg).energy()
    rel = abs(a - b) / a
    return ok and rel < 1e-6, f"max ratio {worst:.3f}, rotation energy change {rel:.2g}"


def _classifier(rng):
    from .classifier import classify, fit_models

    d = 6
    base = {c: rng.standard_normal(d) * 5 for c in (0, 1)}
    train = {c: base[c] + 0.1 * rng.standard_normal((4, d)) for c in base}
    models = fit_models(train)
    hits = sum(classify(models, base[c] + 0.1 * rng.standard_normal(d)) == c
               for c in base for _ in range(5))
    return hits == 10, f"{hits}/10 correct"


def _datasets(rng):
    from .datasets import SplitMix64, splitmix64

    known = splitmix64(0) == 0xE220A8397B1DCDAF
    r1, r2 = SplitMix64(7), SplitMix64(7)
    same = r1.shuffle(range(20)) == r2.shuffle(range(20))
    return known and same, "splitmix64 reference value" + ("" if known else " MISMATCH")


def _serialization(rng):
    import os
    import tempfile

    from .serialization import read_features, write_features

    v = rng.standard_normal(5).astype(np.float32)
    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "f.rmscat")
        write_features(p, v, ["a", "b"], [2, 3], {"k": 1})
        _, w = read_features(p)
    return bool(np.array_equal(v, w)), "feature file round trip"


CHECKS = (("signals", _signals), ("wavelets2d", _wavelets), ("se2_group", _group),
          ("kernels", _kernels), ("filterbank", _cascade), ("rm_wavelets", _rm_wavelets),
          ("scattering", _scattering), ("classifier", _classifier), ("datasets", _datasets),
          ("serialization", _serialization))


def run_selftest(seed=0, out=print):
    """Run every check; returns True when all pass."""
    rng = np.random.default_rng(seed)
    ok_all = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn(rng)
        except Exception as e:  # a crash is a failed check
            ok, detail = False, f"{type(e).__name__}: {e}"
        ok_all &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok_all
