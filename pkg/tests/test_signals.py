import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rmscat.signals import (DeformationField, as_image, center_crop, circular_convolve_direct,
                            dilate_image, downsample2d, frequency_grid, mirror_pad_pow2,
                            periodic_convolve2d, rotate90_periodic, rotate_image, warp_image)

seeds = st.integers(0, 2 ** 32 - 1)


def test_as_image_rejects_bad_input():
    with pytest.raises(ValueError):
        as_image(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        as_image(np.zeros((8, 8, 2)))
    with pytest.raises(ValueError):
        as_image(np.zeros((8, 8)) + 1j)
    x = np.zeros((8, 8))
    x[0, 0] = np.nan
    with pytest.raises(ValueError):
        as_image(x)


def test_frequency_grid_axes():
    w1, w2 = frequency_grid((8, 16))
    assert w1.shape == (8, 16)
    # w1 follows columns, w2 is minus the row frequency
    assert np.allclose(w1[0, 1], 2 * np.pi / 16)
    assert np.allclose(w2[1, 0], -2 * np.pi / 8)


@given(seeds)
def test_fft_convolution_matches_direct(seed):
    r = np.random.default_rng(seed)
    x, y = r.standard_normal((8, 8)), r.standard_normal((8, 8))
    fast = periodic_convolve2d(x, np.fft.fft2(y))
    assert np.allclose(fast, circular_convolve_direct(x, y), atol=1e-10)


def test_convolution_batches_trailing_axes(rng):
    x = rng.standard_normal((8, 8, 3))
    f = np.fft.fft2(rng.standard_normal((8, 8)))
    out = periodic_convolve2d(x, f)
    for t in range(3):
        assert np.allclose(out[:, :, t], periodic_convolve2d(x[:, :, t], f))


def test_downsample_checks_step(rng):
    x = rng.standard_normal((16, 16))
    assert downsample2d(x, 4).shape == (4, 4)
    with pytest.raises(ValueError):
        downsample2d(x, 3)
    with pytest.raises(ValueError):
        downsample2d(rng.standard_normal((12, 12)), 8)


@given(seeds, st.integers(-5, 5))
def test_rotate90_periodic_is_group_action(seed, k):
    x = np.random.default_rng(seed).standard_normal((8, 8))
    assert np.array_equal(rotate90_periodic(rotate90_periodic(x, k), -k), x)
    assert np.array_equal(rotate90_periodic(x, 4), x)
    assert x[0, 0] == rotate90_periodic(x, k)[0, 0]  # fixes the origin


def test_rotate90_periodic_direction():
    x = np.zeros((8, 8))
    x[0, 1] = 1.0  # u = (1, 0)
    y = rotate90_periodic(x, 1)
    assert y[-1, 0] == 1.0  # u = (0, 1), one row up


def test_rotate90_periodic_commutes_with_convolution(rng):
    x, y = rng.standard_normal((8, 8)), rng.standard_normal((8, 8))
    lhs = rotate90_periodic(circular_convolve_direct(x, y).real)
    rhs = circular_convolve_direct(rotate90_periodic(x), rotate90_periodic(y)).real
    assert np.allclose(lhs, rhs)


def test_rotate_image_matches_rot90_on_squares(rng):
    x = rng.standard_normal((16, 16))
    assert np.array_equal(rotate_image(x, np.pi / 2), np.rot90(x))
    # bicubic path agrees with the exact one up to interpolation
    y = rotate_image(x, np.pi / 2 + 1e-9)
    assert np.allclose(y[2:-2, 2:-2], np.rot90(x)[2:-2, 2:-2], atol=1e-6)


def test_dilate_identity_and_constant(rng):
    x = rng.standard_normal((16, 16))
    assert np.array_equal(dilate_image(x, 1), x)
    assert np.allclose(dilate_image(np.full((16, 16), 3.0), 2.0), 3.0)
    with pytest.raises(ValueError):
        dilate_image(x, 0)


def test_deformation_field_validation():
    with pytest.raises(ValueError):
        DeformationField(np.zeros((8, 8)))
    r, c = np.mgrid[0:16, 0:16].astype(float)
    with pytest.raises(ValueError):
        DeformationField(np.stack([2 * r, c], axis=-1))
    f = DeformationField(np.stack([0.1 * r, 0 * c], axis=-1))
    assert np.isclose(f.grad_norm, 0.1)
    assert np.isclose(f.sup_norm, 1.5)


def test_warp_by_integer_shift_is_roll(rng):
    x = rng.standard_normal((16, 16))
    tau = np.zeros((16, 16, 2))
    tau[..., 1] = 3.0
    assert np.allclose(warp_image(x, tau, periodic=True), np.roll(x, 3, axis=1))
    assert np.array_equal(warp_image(x, np.zeros((16, 16, 2))), x)


def test_mirror_pad_and_crop(rng):
    x = rng.standard_normal((10, 13))
    p, sl = mirror_pad_pow2(x)
    assert p.shape == (16, 16)
    assert np.array_equal(p[sl], x)
    assert center_crop(p, (8, 8)).shape == (8, 8)
