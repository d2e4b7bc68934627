"""Wall-time benchmarks: compiled vs NumPy kernels and cascade N-scaling."""

import time

import numpy as np

from . import _backend
from .filterbank import atrous_cascade, derive_cascade_filters, measure_scaling
from .wavelets2d import build_filter_bank

SCALING_SIZES = (128, 256, 512)


def best_time(fn, repeats=3):
    """Minimum wall time of ``repeats`` calls."""
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return float(best)


def _available():
    names = ["python"]
    try:
        _backend.get("compiled")
    except ImportError:
        pass
    else:
        names.append("compiled")
    return names


def kernel_timings(seed=0, repeats=3):
    """Per-backend times of the two hot kernels on fixed random inputs."""
    rng = np.random.default_rng(seed)
    n = 8
    x = rng.standard_normal((16, 16, n)) + 1j * rng.standard_normal((16, 16, n))
    y = rng.standard_normal((16, 16, n)) + 1j * rng.standard_normal((16, 16, n))
    t = np.arange(n) * 2 * np.pi / n + 0.3
    c, s = np.cos(t), np.sin(t)
    a = rng.standard_normal((128, 128)) + 0j
    taps = rng.standard_normal((15, 15)) + 0j
    out = {}
    for name in _available():
        k = _backend.get(name)
        out[name] = {
            "se2_ref_conv[16x16x8]": best_time(lambda: k.se2_ref_conv(x, y, c, s), repeats),
            "conv_taps_strided[128^2,15^2]": best_time(
                lambda: k.conv_taps_strided(a, taps, 1), repeats),
        }
    return out


def cascade_scaling(sizes=SCALING_SIZES, C=8, J=4, engine="fft", seed=0, repeats=3, kernels=None):
    """Cascade wall times over square sizes and the fitted exponent of time vs pixel count.

    Sizes are timed round-robin within each repeat so that slow drift in
    machine speed affects every size alike; each time is the per-size minimum.
    """
    rng = np.random.default_rng(seed)
    jobs = []
    for n in sizes:
        cf = derive_cascade_filters(build_filter_bank(J=J, C=C, grid=(n, n), mode="cascade"))
        jobs.append((cf, rng.standard_normal((n, n))))
    times = [np.inf] * len(sizes)
    for _ in range(repeats):
        for i, (cf, x) in enumerate(jobs):
            t = best_time(lambda: atrous_cascade(x, cf, engine=engine, kernels=kernels), 1)
            times[i] = min(times[i], t)
    pixels = [n * n for n in sizes]
    return {"sizes": list(sizes), "times": times, "exponent": measure_scaling(pixels, times)}


def run_bench(seed=0, repeats=3, include_taps=True):
    """Report of kernel timings and scaling exponents (JSON-ready)."""
    report = {"backend_in_use": _backend.name, "kernels": kernel_timings(seed, repeats),
              "scaling": {"fft": cascade_scaling(seed=seed, repeats=repeats)}}
    if include_taps:
        report["scaling"]["taps"] = cascade_scaling((64, 128, 256), engine="taps", seed=seed,
                                                    repeats=1, kernels=_backend.impl)
    return report
