import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rmscat.classifier import (AccuracyReport, TrainConfig, classify, evaluate,
                               evaluate_features, fit_class_model, fit_models, log_features,
                               residuals, scale_pooled_features)


def test_config_validation():
    for bad in (dict(dilation_factors=()), dict(dilation_factors=(1, -2)), dict(log_delta=0),
                dict(basis_dim=-1), dict(basis_dim="some")):
        with pytest.raises(ValueError):
            TrainConfig(**bad)


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 8), st.integers(3, 12))
def test_model_invariants(seed, n, d):
    X = np.random.default_rng(seed).standard_normal((n, d))
    m = fit_class_model(X)
    B = m.basis
    assert np.allclose(B.T @ B, np.eye(B.shape[1]), atol=1e-10)
    assert B.shape[1] <= n - 1
    assert np.allclose(m.mu, X.mean(axis=0))
    # training vectors lie in the affine space
    for v in X:
        assert m.residual(v) <= 1e-9 * (1 + np.sum(v ** 2))


def test_residual_is_orthogonal_distance():
    X = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]])
    m = fit_class_model(X)
    assert np.isclose(m.residual([5.0, 3, 4]), 25.0)
    with pytest.raises(ValueError):
        m.residual([1.0, 2.0])


def test_basis_dim_truncates():
    X = np.random.default_rng(0).standard_normal((6, 10))
    assert fit_class_model(X, TrainConfig(basis_dim=2)).basis.shape == (10, 2)
    assert fit_class_model(X, TrainConfig(basis_dim=0)).basis.shape == (10, 0)
    with pytest.raises(ValueError):
        fit_class_model(X[:1])


def test_classify_and_ties():
    m0 = fit_class_model(np.array([[0.0, 0], [0, 0]]), class_id=0)
    m1 = fit_class_model(np.array([[2.0, 0], [2, 0]]), class_id=1)
    assert classify([m0, m1], [0.2, 0]) == 0
    assert classify([m0, m1], [1.9, 5]) == 1
    assert classify([m1, m0], [1.0, 0]) == 0  # tie goes to the lowest id
    assert residuals([m0, m1], [1.0, 0]).tolist() == [1.0, 1.0]
    with pytest.raises(ValueError):
        classify([], [0.0])


def test_log_features():
    v = log_features([0.0, 1.0, -1e-12], delta=1e-6)
    assert np.isclose(v[1], np.log(1 + 1e-6)) and v[0] == v[2]
    with pytest.raises(ValueError):
        log_features([-1e-3])


def test_scale_pooled_features(rng, caplog):
    x = rng.random((32, 32))
    feat = lambda y: np.array([y.mean(), (y ** 2).mean()])  # noqa: E731
    stack = scale_pooled_features(x, feat, average=False)
    assert stack.shape == (4, 2)
    assert np.allclose(scale_pooled_features(x, feat), stack.mean(axis=0))
    small = rng.random((16, 16))
    with caplog.at_level("WARNING"):
        s = scale_pooled_features(small, feat, average=False)
    assert s.shape[0] == 3 and "skipped" in caplog.text  # only 2 sqrt 2 leaves < 8 pixels
    with pytest.raises(ValueError):
        scale_pooled_features(rng.random((8, 8)), feat, factors=(2.0,))


def test_evaluate_features_perfect_split():
    r = np.random.default_rng(0)
    mu = {0: np.zeros(4), 1: np.full(4, 10.0)}
    keys = {(c, f"{c}/{i}"): mu[c] + 0.1 * r.standard_normal(4) for c in (0, 1) for i in range(4)}
    train_feats = {k: v[None] for (c, k), v in keys.items()}
    test_feats = {k: v for (c, k), v in keys.items()}
    pairs = sorted(keys)
    splits = [([p for p in pairs if p[1].endswith(("0", "1"))],
               [p for p in pairs if p[1].endswith(("2", "3"))])]
    rep = evaluate_features(train_feats, test_feats, splits)
    assert rep.mean_accuracy == 1.0 and rep.per_split == (1.0,)
    assert isinstance(rep, AccuracyReport) and rep.as_dict()["std_accuracy"] == 0.0


def test_evaluate_lists_missing_files(tmp_path):
    from rmscat.datasets import DatasetManifest

    man = DatasetManifest(root=str(tmp_path), classes=(("a", ("a/x.png",)),), fingerprint="0" * 64)
    with pytest.raises(FileNotFoundError, match="a/x.png"):
        evaluate(man, [([(0, "a/x.png")], [(0, "a/y.png")])], lambda x: x)
