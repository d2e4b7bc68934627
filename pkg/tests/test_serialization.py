import numpy as np
import pytest

from rmscat.classifier import fit_class_model
from rmscat.serialization import read_features, read_models, write_features, write_models


def test_feature_file_layout(tmp_path, rng):
    v = rng.random(5)
    p = tmp_path / "f.rmscat"
    write_features(p, v, ["S0", "S1"], [1, 4], {"C": 8}, source="x.png")
    raw = p.read_bytes()
    assert raw.startswith(b"RMSCAT1\n")
    h, w = read_features(p)
    assert h["paths"] == ["S0", "S1"] and h["config"] == {"C": 8} and h["schema_version"] == 1
    assert np.array_equal(w, v.astype("<f4"))
    assert raw[-20:] == v.astype("<f4").tobytes()[-20:]
    with pytest.raises(ValueError):
        write_features(p, v, ["S0"], [2], {})


def test_feature_file_corruption(tmp_path, rng):
    p = tmp_path / "f.rmscat"
    write_features(p, rng.random(3), ["a"], [3], {})
    p.write_bytes(p.read_bytes()[:-2])
    with pytest.raises(ValueError):
        read_features(p)
    (tmp_path / "g").write_bytes(b"OTHER\n")
    with pytest.raises(ValueError):
        read_features(tmp_path / "g")


def test_models_round_trip(tmp_path, rng):
    ms = [fit_class_model(rng.standard_normal((4, 6)), class_id=c) for c in (0, 1)]
    p = tmp_path / "m.rmscatm"
    write_models(p, ms, {"k": 1}, classes=["a", "b"])
    h, back = read_models(p)
    assert h["classes"] == ["a", "b"]
    for a, b in zip(ms, back):
        assert a.class_id == b.class_id
        assert np.array_equal(a.mu, b.mu) and np.array_equal(a.basis, b.basis)
