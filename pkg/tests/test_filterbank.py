import numpy as np
import pytest

from rmscat import _backend
from rmscat.filterbank import (atrous_cascade, cascade_work, derive_cascade_filters,
                               effective_support, measure_scaling, rotated_cascade)
from rmscat.rm_wavelets import build_se2_bank, rm_wavelet_transform
from rmscat.wavelets2d import build_filter_bank, wavelet_transform


@pytest.fixture(scope="module")
def bank():
    fb = build_filter_bank(J=3, C=8, grid=(64, 64), mode="cascade")
    return fb, derive_cascade_filters(fb)


def test_lowpass_transfer_normalized(bank):
    _, cf = bank
    assert np.isclose(cf.h_hat[0, 0], 1.0)
    assert np.allclose(cf.g_hat[:, 0, 0], 0.0)
    assert cf.taps % 2 == 1


def test_cascade_matches_direct_bands(bank, rng):
    fb, cf = bank
    x = rng.standard_normal((64, 64))
    wc = wavelet_transform(x, fb, oversampling=0)
    py = atrous_cascade(x, cf)
    for j in range(3):
        err = np.linalg.norm(py.B[j] - wc.band[j]) / np.linalg.norm(wc.band[j])
        assert err <= 1e-2
    assert py.steps == (1, 2, 4, 8)


def test_oversampled_cascade_is_undecimated(bank, rng):
    fb, cf = bank
    x = rng.standard_normal((64, 64))
    full = atrous_cascade(x, cf, oversampling=3)
    plain = atrous_cascade(x, cf)
    for j in range(3):
        s = plain.steps[j]
        assert full.B[j].shape[-2:] == (64, 64)
        assert np.allclose(full.B[j][:, ::s, ::s], plain.B[j], atol=1e-10)


def test_taps_engine_approximates_fft(bank, rng):
    _, cf = bank
    x = rng.standard_normal((64, 64))
    a = atrous_cascade(x, cf, engine="fft")
    b = atrous_cascade(x, cf, engine="taps")
    for j in range(3):
        assert np.linalg.norm(a.B[j] - b.B[j]) / np.linalg.norm(a.B[j]) < 0.05


def test_taps_engine_same_for_both_kernels(bank, rng):
    _, cf = bank
    try:
        comp = _backend.get("compiled")
    except ImportError:
        pytest.skip("compiled kernels not built")
    x = rng.standard_normal((64, 64))
    a = atrous_cascade(x, cf, engine="taps", kernels=comp)
    b = atrous_cascade(x, cf, engine="taps", kernels=_backend.get("python"))
    for j in range(3):
        assert np.allclose(a.B[j], b.B[j], atol=1e-10)


def test_cascade_validation(bank, rng):
    _, cf = bank
    with pytest.raises(ValueError):
        atrous_cascade(rng.standard_normal((32, 32)), cf)
    with pytest.raises(ValueError):
        atrous_cascade(rng.standard_normal((64, 64)), cf, engine="nope")
    with pytest.raises(ValueError):
        atrous_cascade(rng.standard_normal((64, 64)), cf, oversampling=1, engine="taps")


def test_window_floor_is_enforced():
    fb = build_filter_bank(J=2, C=4, grid=(32, 32))
    from dataclasses import replace

    from rmscat.wavelets2d import MorletParams

    wide = replace(fb, params=MorletParams(fb.params.sigma, fb.params.xi,
                                           fb.params.slant, sigma_phi=3.0))
    with pytest.raises(ValueError):
        derive_cascade_filters(wide)


def test_rotated_cascade_start_level_is_exact():
    # a volume that is band-limited to the coarse cell, filtered from its samples
    bank = build_se2_bank((64, 64), 16, J=3, K=2, mode="cascade")
    r = np.random.default_rng(3)
    xf = r.standard_normal((64, 64, 16))
    f = np.abs(np.fft.fftfreq(64) * 64) < 16
    xf = np.fft.ifft2(np.fft.fft2(xf, axes=(0, 1)) * (f[:, None] & f[None, :])[:, :, None],
                      axes=(0, 1)).real
    fine = rm_wavelet_transform(xf, bank, 9, "cascade")
    coarse = rm_wavelet_transform(xf[::2, ::2], bank, 9, "cascade", input_step=2)
    assert set(coarse.E) == {(l, j) for l in range(16) for j in (1, 2)}
    for key, (v, s, _) in coarse.E.items():
        ref = fine.E[key][0].samples[::2, ::2]
        assert s == 2
        assert np.linalg.norm(v.samples - ref) <= 1e-8 * np.linalg.norm(ref)
    with pytest.raises(ValueError):
        rotated_cascade(xf[::2, ::2], bank.cascade, 3, start=0)


def test_effective_support_of_delta():
    f = np.zeros((16, 16))
    f[0, 0] = 1
    assert effective_support(np.fft.fft2(f)) == 1


def test_work_and_scaling_helpers():
    assert cascade_work((64, 64), 8, 1, 3) == 9 * 64 * 64 * 9
    assert np.isclose(measure_scaling([1, 2, 4], [3, 6, 12]), 1.0)
