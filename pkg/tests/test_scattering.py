import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rmscat.scattering import (ScatteringConfig, ScatteringPath, deformation_stability_probe,
                               feature_vector, path_count, path_lengths, scatter,
                               scattering_distance, separable_pooling, volume_scattering)
from rmscat.signals import rotate90_periodic
from rmscat.wavelets2d import build_filter_bank, wavelet_transform

CFG4 = ScatteringConfig(C=4)
seeds = st.integers(0, 2 ** 32 - 1)


def test_config_validation():
    for bad in (dict(M=3), dict(backend="gpu"), dict(C=3), dict(J=0), dict(C=4, K=4),
                dict(oversampling=-1)):
        with pytest.raises(ValueError):
            ScatteringConfig(**bad)
    cfg = ScatteringConfig(C=8)
    assert cfg.n_theta == 16 and cfg.K_eff == 3
    assert cfg.J_for((64, 64)) == 4
    assert cfg.snapshot()["angular"]["xi"] == 1.0


def test_path_labels_and_order():
    p = ScatteringPath(2, 1, -1, ((3, 2, 0),))
    assert p.label() == "S2[j1=1|l2=3,j2=2,k2=0]"
    assert ScatteringPath(0).label() == "S0"
    t = ScatteringPath(2, 0, 1, ((2, 3),))
    assert t.key() == (2, 0, 1, 3, 2)


@pytest.mark.parametrize("variant", ["translation", "rigid-motion"])
@pytest.mark.parametrize("M", [0, 1, 2])
def test_path_counts(variant, M, rng):
    cfg = ScatteringConfig(C=4, M=M)
    out = scatter(rng.random((32, 32)), cfg, variant)
    assert len(out) == path_count(cfg, (32, 32), variant)
    keys = [p.key() for p in out.paths]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)


def test_frequency_increasing_paths(rng):
    out = scatter(rng.random((32, 32)), CFG4, "rigid-motion")
    J = CFG4.J_for((32, 32))
    for p in out.paths:
        if p.order == 2:
            (l2, j2, k2), = p.lambdas
            assert j2 > p.j1 or (j2 == J and l2 == 0)


@given(seeds)
def test_non_expansive(seed):
    r = np.random.default_rng(seed)
    x, y = r.random((32, 32)), r.random((32, 32))
    cfg = ScatteringConfig(C=4, oversampling=9)
    for variant in ("translation", "rigid-motion"):
        d = scattering_distance(scatter(x, cfg, variant), scatter(y, cfg, variant))
        assert d <= np.linalg.norm(x - y) * (1 + 1e-9)


@pytest.mark.parametrize("variant", ["translation", "rigid-motion"])
def test_nonnegative_global_features(variant, rng):
    v = feature_vector(scatter(rng.random((32, 32)), CFG4, variant))
    assert v[1:].min() >= -1e-12


def test_second_layer_energy_below_first_layer_moduli(rng):
    x = rng.random((32, 32))
    cfg = ScatteringConfig(C=4, oversampling=9)
    fb = build_filter_bank(C=4, grid=(32, 32))
    wc = wavelet_transform(x, fb, 9)
    u1 = sum(2 * s * s * np.sum(np.abs(b) ** 2) for b, s in zip(wc.band, wc.steps))
    out = scatter(x, cfg, "rigid-motion", fb)
    assert out.energy(2) <= u1
    tr = scatter(x, cfg, "translation", fb)
    assert tr.energy(2) <= u1


def test_translation_invariance_of_global_features(rng):
    x = rng.random((32, 32))
    cfg = ScatteringConfig(C=4, oversampling=9)
    for variant in ("translation", "rigid-motion"):
        a = feature_vector(scatter(x, cfg, variant))
        b = feature_vector(scatter(np.roll(x, (5, -3), axis=(0, 1)), cfg, variant))
        assert np.allclose(a, b, rtol=1e-9, atol=1e-12)


def test_K0_orientation_axis_shifts(rng):
    x = rng.random((32, 32))
    cfg = ScatteringConfig(C=4, K=0)
    a, b = scatter(x, cfg), scatter(rotate90_periodic(x), cfg)
    n = cfg.n_theta
    moved = 0.0
    for (pa, ga, _), (pb, gb, _) in zip(a.entries, b.entries):
        assert pa == pb
        if pa.order == 0:
            continue
        fa, fb = ga.mean(axis=(0, 1)), gb.mean(axis=(0, 1))
        assert np.allclose(np.roll(fa, n // 4), fb, rtol=1e-10, atol=1e-14)
        moved = max(moved, np.abs(fa - fb).max())
    assert moved > 1e-6  # the unshifted axes really differ


def test_cascade_backend_same_paths(rng):
    x = rng.random((32, 32))
    a = scatter(x, CFG4, "rigid-motion")
    b = scatter(x, ScatteringConfig(C=4, backend="cascade"), "rigid-motion")
    assert a.paths == b.paths
    fa, fb = feature_vector(a), feature_vector(b)
    assert np.isclose(fa[0], fb[0], rtol=0.05)


def test_pooling_modes(rng):
    out = scatter(rng.random((32, 32)), CFG4, "rigid-motion")
    for pooling in ("global-average", "spatial-average", "keep-grid"):
        v = feature_vector(out, pooling, crop=0.25)
        assert v.size == sum(path_lengths(out, pooling, crop=0.25))
    assert feature_vector(out).size == len(out)
    with pytest.raises(ValueError):
        feature_vector(out, "max")
    with pytest.raises(ValueError):
        feature_vector(out, crop=0.5)


def test_distance_rejects_mismatched_outputs(rng):
    x = rng.random((32, 32))
    with pytest.raises(ValueError):
        scattering_distance(scatter(x, CFG4, "translation"), scatter(x, CFG4, "rigid-motion"))
    with pytest.raises(ValueError):
        scatter(x, CFG4, "affine")


def test_volume_scattering_orders(rng):
    from rmscat.scattering import _bank, _se2_bank

    fb = _bank(CFG4, (32, 32))
    bank = _se2_bank(CFG4, fb)
    vol = rng.random((32, 32, 8))
    first = volume_scattering(vol, bank, order=1)
    assert len(first) == 1 and first[0][0] == ()
    both = volume_scattering(vol, bank, order=2)
    assert both[0][1].shape == first[0][1].shape
    with pytest.raises(ValueError):
        volume_scattering(vol, bank, order=3)


def test_separable_pooling_shape(rng):
    fb = build_filter_bank(C=4, grid=(32, 32))
    out = separable_pooling(rng.random((32, 32, 8)), fb, oversampling=9)
    assert out.shape == (32, 32, 8)


def test_deformation_probe(rng):
    x = rng.random((32, 32))
    assert deformation_stability_probe(x, np.zeros((32, 32, 2)), CFG4) == 0.0
    r, c = np.mgrid[0:32, 0:32].astype(float)
    tau = np.stack([0.5 * np.sin(2 * np.pi * c / 32), 0 * r], axis=-1)
    q = deformation_stability_probe(x, tau, CFG4)
    assert 0 < q < 10
