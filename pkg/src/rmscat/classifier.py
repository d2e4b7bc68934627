"""Affine-space PCA classifier on log scattering features.

Each class ``c`` is modelled by the affine space ``mu_c + V_c`` spanned by the
centered training vectors. A test vector goes to the class whose affine
space is closest in Euclidean distance.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .signals import MIN_SIZE, center_crop, dilate_image

log = logging.getLogger(__name__)

DILATIONS = (1.0, math.sqrt(2), 2.0, 2 * math.sqrt(2))
SV_CUTOFF = 1e-10


@dataclass(frozen=True)
class TrainConfig:
    dilation_factors: tuple = DILATIONS
    log_delta: float = 1e-6
    basis_dim: object = "all"

    def __post_init__(self):
        f = tuple(float(v) for v in self.dilation_factors)
        if not f or any(not v > 0 for v in f):
            raise ValueError("dilation factors must be nonempty and positive")
        object.__setattr__(self, "dilation_factors", f)
        if not self.log_delta > 0:
            raise ValueError("log_delta must be positive")
        if self.basis_dim != "all" and not (isinstance(self.basis_dim, int) and self.basis_dim >= 0):
            raise ValueError("basis_dim must be 'all' or a nonnegative integer")


@dataclass(frozen=True, eq=False)
class ClassModel:
    class_id: int
    mu: np.ndarray
    basis: np.ndarray  # (d, r), orthonormal columns

    @property
    def dim(self):
        return self.mu.shape[0]

    def residual(self, v):
        """``||(Id - P_V)(v - mu)||^2``."""
        d = np.asarray(v, dtype=np.float64) - self.mu
        if d.shape != self.mu.shape:
            raise ValueError(f"feature dim {d.shape} differs from model dim {self.mu.shape}")
        c = self.basis.T @ d
        return float(max(d @ d - c @ c, 0.0))


def log_features(v, delta=1e-6):
    """``log(v + delta)`` for nonnegative averaged moduli.

    Entries above ``-1e-9`` are clamped to 0 before the log; more negative
    entries mean corrupted features and are rejected.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.size and v.min() < -1e-9:
        raise ValueError(f"negative feature {v.min():.3g} cannot come from averaged moduli")
    return np.log(np.clip(v, 0, None) + delta)


def fit_class_model(train_vectors, cfg=TrainConfig(), class_id=0):
    """Mean and principal directions of the centered training matrix."""
    X = np.asarray(train_vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 training vectors")
    mu = X.mean(axis=0)
    U, s, _ = np.linalg.svd((X - mu).T, full_matrices=False)
    keep = s > SV_CUTOFF * s[0] if s.size and s[0] > 0 else np.zeros(s.shape, bool)
    basis = U[:, keep]
    if cfg.basis_dim != "all":
        basis = basis[:, :cfg.basis_dim]
    return ClassModel(class_id=class_id, mu=mu, basis=np.ascontiguousarray(basis))


def residuals(models, v):
    return np.array([m.residual(v) for m in models])


def classify(models, v):
    """Class of the nearest affine space; ties go to the lowest class id."""
    if not models:
        raise ValueError("no class models")
    r = residuals(models, v)
    best = r.min()
    return min(m.class_id for m, ri in zip(models, r) if ri == best)


def scale_pooled_features(x, featurize, factors=DILATIONS, delta=1e-6, average=True):
    """Log features of ``x`` and its dilations, averaged (test side) or stacked (train side).

    ``featurize`` maps an image to a nonnegative feature vector. Each dilated
    copy is center-cropped back to the input dims. Factors that would leave
    fewer than ``MIN_SIZE`` source pixels across are skipped.
    """
    x = np.asarray(x, dtype=np.float64)
    out = []
    for s in factors:
        if min(x.shape) / s < MIN_SIZE:
            log.warning("dilation %.3g skipped: image %s too small", s, x.shape)
            continue
        y = x if s == 1 else center_crop(dilate_image(x, s), x.shape)
        out.append(log_features(featurize(y), delta))
    if not out:
        raise ValueError("every dilation factor was skipped")
    out = np.stack(out)
    return out.mean(axis=0) if average else out


@dataclass(frozen=True)
class AccuracyReport:
    mean_accuracy: float
    std_accuracy: float
    per_split: tuple
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        d = {"mean_accuracy": self.mean_accuracy, "std_accuracy": self.std_accuracy,
             "per_split": list(self.per_split)}
        d.update(self.extra)
        return d


def fit_models(train, cfg=TrainConfig()):
    """``train`` maps class id to an array of training vectors."""
    return [fit_class_model(train[c], cfg, class_id=c) for c in sorted(train)]


def evaluate_features(train_feats, test_feats, splits, cfg=TrainConfig()):
    """Accuracy over splits from precomputed features.

    Parameters
    ----------
    train_feats : dict
        ``image key -> (n_copies, d)`` train-side vectors (one per dilation).
    test_feats : dict
        ``image key -> (d,)`` test-side vectors (averaged over dilations).
    splits : list of (train, test)
        Each a list of ``(class_id, image key)`` pairs.
    """
    accs = []
    for train, test in splits:
        by_class = {}
        for c, key in train:
            by_class.setdefault(c, []).append(np.atleast_2d(train_feats[key]))
        models = fit_models({c: np.vstack(v) for c, v in by_class.items()}, cfg)
        hits = sum(classify(models, test_feats[key]) == c for c, key in test)
        accs.append(hits / len(test) if test else 1.0)
    accs = np.array(accs, dtype=np.float64)
    return AccuracyReport(mean_accuracy=float(accs.mean()), std_accuracy=float(accs.std()),
                          per_split=tuple(float(a) for a in accs))


def evaluate(manifest, splits, featurize, cfg=TrainConfig(), loader=None):
    """Fit on each split's train images and report test accuracy.

    Every image is featurized once: train-side vectors are the log features
    of each dilated copy, test-side vectors their average. Missing files are
    all listed before any work starts.
    """
    import os

    from .datasets import load_image

    loader = loader or load_image
    keys = sorted({f for tr, te in splits for _, f in tr + te})
    missing = [k for k in keys if not os.path.isfile(os.path.join(manifest.root, k))]
    if missing:
        raise FileNotFoundError("missing dataset files: " + ", ".join(missing))
    train_keys = {f for tr, _ in splits for _, f in tr}
    test_keys = {f for _, te in splits for _, f in te}
    train_feats, test_feats = {}, {}
    for k in keys:
        stack = scale_pooled_features(loader(os.path.join(manifest.root, k)), featurize,
                                      cfg.dilation_factors, cfg.log_delta, average=False)
        if k in train_keys:
            train_feats[k] = stack
        if k in test_keys:
            test_feats[k] = stack.mean(axis=0)
    return evaluate_features(train_feats, test_feats, splits, cfg)
