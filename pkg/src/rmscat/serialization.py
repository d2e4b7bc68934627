"""Feature and model files.

Both share one layout::

    <magic>\\n
    <header byte count>\\n
    <header: UTF-8 JSON, sorted keys>
    <payload: little-endian floats>

Feature files use magic ``RMSCAT1`` and float32; model files use
``RMSCATM1`` and float64. The header always carries ``schema_version``.
"""

import json

import numpy as np

FEATURE_MAGIC = "RMSCAT1"
MODEL_MAGIC = "RMSCATM1"
SCHEMA_VERSION = 1


def dumps_header(header):
    return json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _write(path, magic, header, payload):
    head = dumps_header(dict(header, schema_version=SCHEMA_VERSION)).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(f"{magic}\n{len(head)}\n".encode("ascii"))
        fh.write(head)
        fh.write(payload.tobytes())


def _read(path, magic, dtype):
    with open(path, "rb") as fh:
        data = fh.read()
    first, _, rest = data.partition(b"\n")
    if first.decode("ascii", "replace") != magic:
        raise ValueError(f"{path}: not a {magic} file")
    count, _, rest = rest.partition(b"\n")
    try:
        n = int(count)
    except ValueError:
        raise ValueError(f"{path}: corrupt header length") from None
    header = json.loads(rest[:n].decode("utf-8"))
    if header.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema_version {header.get('schema_version')!r}")
    payload = rest[n:]
    if len(payload) % np.dtype(dtype).itemsize:
        raise ValueError(f"{path}: truncated payload")
    return header, np.frombuffer(payload, dtype=dtype).copy()


def write_features(path, vector, paths, lengths, config, **extra):
    """Write one feature vector with its canonical path labels.

    ``lengths[i]`` values of ``vector`` belong to ``paths[i]``.
    """
    v = np.asarray(vector, dtype="<f4").ravel()
    if len(paths) != len(lengths) or sum(lengths) != v.size:
        raise ValueError("path list does not match the vector length")
    header = dict(extra, config=config, paths=list(paths), lengths=[int(n) for n in lengths],
                  count=int(v.size), dtype="float32-le")
    _write(path, FEATURE_MAGIC, header, v)


def read_features(path):
    """Return ``(header, vector)``."""
    header, v = _read(path, FEATURE_MAGIC, "<f4")
    if v.size != header.get("count"):
        raise ValueError(f"{path}: payload holds {v.size} values, header says {header.get('count')}")
    return header, v


def write_models(path, models, config, **extra):
    """Write a list of ``ClassModel`` as per-class ``mu`` then ``basis`` (row major)."""
    parts, meta = [], []
    for m in models:
        parts += [m.mu.ravel(), m.basis.ravel()]
        meta.append({"class_id": int(m.class_id), "dim": int(m.mu.shape[0]),
                     "rank": int(m.basis.shape[1])})
    payload = np.concatenate(parts).astype("<f8") if parts else np.zeros(0, "<f8")
    _write(path, MODEL_MAGIC, dict(extra, config=config, models=meta, dtype="float64-le"), payload)


def read_models(path):
    """Return ``(header, models)``."""
    from .classifier import ClassModel

    header, v = _read(path, MODEL_MAGIC, "<f8")
    models, at = [], 0
    for m in header["models"]:
        d, r = m["dim"], m["rank"]
        if at + d + d * r > v.size:
            raise ValueError(f"{path}: truncated payload")
        mu = v[at:at + d]
        basis = v[at + d:at + d + d * r].reshape(d, r)
        at += d + d * r
        models.append(ClassModel(class_id=m["class_id"], mu=mu, basis=basis))
    if at != v.size:
        raise ValueError(f"{path}: trailing payload")
    return header, models
