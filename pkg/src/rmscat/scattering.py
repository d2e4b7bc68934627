"""Translation and rigid-motion scattering networks.

Both networks share the first layer ``U1(u, theta, j) = |x * psi_{theta,j}(u)|``.
The translation network filters each ``U1`` slice with spatial wavelets
again. The rigid-motion network treats ``U1(., ., j1)`` as a function of
``g = (u, theta)`` and applies the separable group wavelets to it, so the
averaging runs jointly over positions and orientations.

Every output grid carries a weight (area of its sampling cell, in base
pixels and orientation samples) such that the weighted squared L2 norm of
the whole output never exceeds ``||x||^2``.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .rm_wavelets import DEFAULT_ANGULAR, AngularParams, build_se2_bank, rm_lowpass, \
    rm_wavelet_transform
from .signals import DeformationField, as_image, warp_image
from .wavelets2d import MorletParams, build_filter_bank, default_J, fold_transfer, ifft_down, \
    wavelet_transform

VARIANTS = ("translation", "rigid-motion")
BACKENDS = ("direct", "cascade")


@dataclass(frozen=True)
class ScatteringConfig:
    """Network parameters.

    ``C`` counts spatial orientations over ``[0, pi)``; rigid-motion layers
    work on lifted volumes with ``n_theta = 2 C`` orientations over
    ``[0, 2 pi)``, so ``K`` ranges over ``0..log2(2 C)``. ``J`` and ``K``
    default to ``floor(log2(min dim)) - 2`` and ``log2(2 C) - 1``.
    """

    J: int = None
    C: int = 8
    K: int = None
    M: int = 2
    oversampling: int = 1
    backend: str = "direct"
    params: MorletParams = None
    angular: AngularParams = DEFAULT_ANGULAR

    def __post_init__(self):
        if self.M not in (0, 1, 2):
            raise ValueError(f"M must be 0, 1 or 2, got {self.M}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.C < 1 or (2 * self.C) & (2 * self.C - 1):
            raise ValueError(f"C must be a power of 2, got {self.C}")
        if self.J is not None and self.J < 1:
            raise ValueError(f"J must be >= 1, got {self.J}")
        kmax = int(math.log2(2 * self.C))
        if self.K is not None and not 0 <= self.K <= kmax:
            raise ValueError(f"K must lie in [0, {kmax}] for C={self.C}, got {self.K}")
        if self.oversampling < 0:
            raise ValueError("oversampling must be >= 0")

    @property
    def n_theta(self):
        return 2 * self.C

    @property
    def K_eff(self):
        return int(math.log2(2 * self.C)) - 1 if self.K is None else self.K

    def J_for(self, shape):
        return default_J(shape) if self.J is None else self.J

    def snapshot(self):
        d = asdict(self)
        d["params"] = None if self.params is None else asdict(self.params)
        d["angular"] = asdict(self.angular)
        return d


@dataclass(frozen=True, order=True)
class ScatteringPath:
    """Path ``(j1, theta1)`` then ``lambdas``.

    Translation paths store ``lambdas = ((theta2, j2),)``; rigid-motion
    paths store ``lambdas = ((l2, j2, k2),)`` and ``theta1 = -1``.
    Order 0 uses ``j1 = -1``.
    """

    order: int
    j1: int = -1
    theta1: int = -1
    lambdas: tuple = ()

    def key(self):
        tail = ()
        for lam in self.lambdas:
            if len(lam) == 2:  # (theta, j) -> sort by j then theta
                tail += (lam[1], lam[0])
            else:  # (l, j, k)
                tail += tuple(lam)
        return (self.order, self.j1, self.theta1) + tail

    def label(self):
        if self.order == 0:
            return "S0"
        head = f"j1={self.j1}" + (f",t1={self.theta1}" if self.theta1 >= 0 else "")
        for lam in self.lambdas:
            if len(lam) == 2:
                head += f"|t2={lam[0]},j2={lam[1]}"
            else:
                head += f"|l2={lam[0]},j2={lam[1]},k2={lam[2]}"
        return f"S{self.order}[{head}]"


@dataclass(frozen=True, eq=False)
class ScatteringOutput:
    """Ordered ``(path, grid, weight)`` entries and a config snapshot.

    Grids are real: ``(h, w)`` for translation paths and ``(h, w, n)`` for
    rigid-motion paths. ``weight`` is the sampling cell area.
    """

    entries: tuple
    variant: str = "translation"
    metadata: dict = field(default_factory=dict)

    @property
    def paths(self):
        return [p for p, _, _ in self.entries]

    def __len__(self):
        return len(self.entries)

    def energy(self, order=None):
        return float(sum(w * np.sum(g ** 2) for p, g, w in self.entries
                         if order is None or p.order == order))


def _finish(entries, variant, cfg, shape, J):
    entries = tuple(sorted(entries, key=lambda e: e[0].key()))
    meta = {"variant": variant, "shape": list(shape), "J": J, "config": cfg.snapshot()}
    return ScatteringOutput(entries=entries, variant=variant, metadata=meta)


def _bank(cfg, shape):
    mode = "morlet" if cfg.backend == "direct" else "cascade"
    return build_filter_bank(cfg.params, J=cfg.J_for(shape), C=cfg.C, grid=shape, mode=mode)


def _first_layer(x, fb, cfg):
    """Window output and half-circle first-layer moduli (with their steps)."""
    if cfg.backend == "direct":
        wc = wavelet_transform(x, fb, cfg.oversampling)
        return wc.low, wc.low_step, [np.abs(b) for b in wc.band], list(wc.steps)
    from .filterbank import atrous_cascade, derive_cascade_filters

    cf = _cascade_cache(fb, derive_cascade_filters)
    pyr = atrous_cascade(x, cf, fb.J, cfg.oversampling)
    low = pyr.A[fb.J]
    return low, pyr.steps[fb.J], [np.abs(b) for b in pyr.B], list(pyr.steps[:fb.J])


def _cascade_cache(fb, derive):
    cf = fb.__dict__.get("_cascade")
    if cf is None:
        cf = derive(fb)
        fb.__dict__["_cascade"] = cf
    return cf


def _lowpass2d(u, fb, step, oversampling):
    """Average a (..., h, w) grid sampled every ``step`` pixels by ``phi_J``."""
    ls = max(2 ** max(fb.J - oversampling, 0), step)
    phi = fold_transfer(fb.phi_hat, step)
    return ifft_down(np.fft.fft2(u, axes=(-2, -1)) * phi, ls // step).real, ls


def translation_scattering(x, cfg=ScatteringConfig(), fb=None):
    """Translation scattering up to order ``cfg.M`` with frequency-increasing paths.

    First-layer paths are weighted 2 and second-layer paths 4: each half-circle
    orientation stands for itself and its conjugate partner at ``theta + pi``.
    """
    x = as_image(x)
    J = cfg.J_for(x.shape)
    fb = _bank(cfg, x.shape) if fb is None else fb
    os_ = cfg.oversampling
    low, ls, u1, steps = _first_layer(x, fb, cfg)
    entries = [(ScatteringPath(0), low, float(ls * ls))]
    if cfg.M >= 1:
        for j1 in range(J):
            s1 = steps[j1]
            s_1, ls1 = _lowpass2d(u1[j1], fb, s1, os_)
            for t in range(fb.C):
                entries.append((ScatteringPath(1, j1, t), s_1[t], 2.0 * ls1 * ls1))
            if cfg.M < 2 or j1 == J - 1:
                continue
            full = fold_transfer(fb.psi_hat, s1)
            uh = np.fft.fft2(u1[j1], axes=(-2, -1))  # (C, h, w)
            for j2 in range(j1 + 1, J):
                s2 = max(2 ** max(j2 - os_, 0), s1)
                u2 = np.abs(ifft_down(uh[:, None] * full[j2][None], s2 // s1))  # (C1, C2, h, w)
                s_2, ls2 = _lowpass2d(u2, fb, s2, os_)
                for t1 in range(fb.C):
                    for t2 in range(fb.C):
                        entries.append((ScatteringPath(2, j1, t1, ((t2, j2),)), s_2[t1, t2],
                                        4.0 * ls2 * ls2))
    return _finish(entries, "translation", cfg, x.shape, J)


def _se2_bank(cfg, fb):
    b = fb.__dict__.get("_se2", {}).get(cfg.K_eff)
    if b is None:
        b = build_se2_bank(fb.shape, cfg.n_theta, K=cfg.K_eff, angular=cfg.angular, spatial=fb)
        fb.__dict__.setdefault("_se2", {})[cfg.K_eff] = b
    return b


def volume_scattering(vol, bank, oversampling=1, backend="direct", min_scale=0, input_step=1,
                      order=2):
    """Deep rigid-motion layers on one volume: ``S1 = U * tphi`` and,
    for ``order = 2``, ``S2[lam] = |U * tpsi_lam| * tphi``.

    Spatial wavelets are restricted to ``j >= min_scale``; the ``j = J``
    angular wavelets are always kept. Returns a list of
    ``(lambdas, grid, weight)`` with ``lambdas = ()`` for ``S1``.
    """
    if order == 1:
        y, ss, sa = rm_lowpass(vol, bank, oversampling, input_step=input_step)
        return [((), y.real, float(ss * ss * sa))]
    if order != 2:
        raise ValueError("order must be 1 or 2")
    J, K = bank.J, bank.K
    cw = rm_wavelet_transform(vol, bank, oversampling, backend, scales=range(min_scale, J),
                              input_step=input_step)
    y, ss, sa = cw.C
    out = [((), y.samples.real, float(ss * ss * sa))]
    second = [((0, J, k), v) for k, v in cw.D.items()]
    second += [((l, j, K), v) for (l, j), v in cw.E.items()]
    second += [((l, j, k), v) for (l, j, k), v in cw.F.items()]
    for lam, (v, s2, a2) in second:
        y, ss, sa = rm_lowpass(np.abs(v.samples), bank, oversampling, input_step=s2,
                               angular_step=a2)
        out.append(((lam,), y.real, float(ss * ss * sa)))
    return out


def rigid_motion_scattering(x, cfg=ScatteringConfig(), fb=None):
    """Rigid-motion scattering up to order ``cfg.M``.

    ``U1(., ., j1)`` is lifted to ``[0, 2 pi)``: ``n_theta = 2 C`` samples,
    the second half repeating the first. First-order outputs are its joint
    window averages; second-order paths ``(l2, j2, k2)`` keep ``j2 > j1``
    for spatial wavelets and every ``j2 = J`` angular wavelet.
    """
    x = as_image(x)
    J = cfg.J_for(x.shape)
    fb = _bank(cfg, x.shape) if fb is None else fb
    bank = _se2_bank(cfg, fb)
    low, ls, u1, steps = _first_layer(x, fb, cfg)
    entries = [(ScatteringPath(0), low, float(ls * ls))]
    if cfg.M >= 1:
        for j1 in range(J):
            vol = np.moveaxis(u1[j1], 0, -1)
            vol = np.concatenate([vol, vol], axis=-1)
            for lams, g, wt in volume_scattering(vol, bank, cfg.oversampling, cfg.backend,
                                                 min_scale=j1 + 1, input_step=steps[j1],
                                                 order=cfg.M):
                entries.append((ScatteringPath(1 + len(lams), j1, -1, lams), g, wt))
    return _finish(entries, "rigid-motion", cfg, x.shape, J)


def separable_pooling(vol, fb, oversampling=1):
    """Per-orientation window averages ``U(., theta) * phi_J`` of a volume.

    This is the separable baseline: every orientation slice is made locally
    translation invariant on its own, so relative positions of different
    orientations are lost. Returns an array ``(h, w, n)``.
    """
    v = vol.samples if hasattr(vol, "samples") else np.asarray(vol)
    y, _ = _lowpass2d(np.moveaxis(v, -1, 0), fb, 1, oversampling)
    return np.moveaxis(y, 0, -1)


def scatter(x, cfg=ScatteringConfig(), variant="rigid-motion", fb=None):
    if variant == "translation":
        return translation_scattering(x, cfg, fb)
    if variant == "rigid-motion":
        return rigid_motion_scattering(x, cfg, fb)
    raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")


def scattering_distance(a, b):
    """Weighted L2 distance between two outputs with the same paths."""
    if len(a.entries) != len(b.entries):
        raise ValueError("outputs have different path sets")
    d = 0.0
    for (pa, ga, wa), (pb, gb, _) in zip(a.entries, b.entries):
        if pa != pb or ga.shape != gb.shape:
            raise ValueError("outputs have different path sets")
        d += wa * float(np.sum((ga - gb) ** 2))
    return math.sqrt(d)


POOLINGS = ("global-average", "spatial-average", "keep-grid")


def _crop(g, crop):
    if not crop:
        return g
    h, w = g.shape[:2]
    r, c = int(round(h * crop)), int(round(w * crop))
    return g[r:h - r, c:w - c]


def feature_vector(out, pooling="global-average", crop=0.0):
    """Serialize an output in canonical path order.

    Parameters
    ----------
    pooling : {"global-average", "spatial-average", "keep-grid"}
        Mean over every grid axis (one value per path), mean over the
        spatial axes only (orientation axis kept), or the raw grids.
    crop : float
        Fraction of each spatial side dropped at both ends before pooling;
        ``0.25`` keeps the central half.
    """
    if pooling not in POOLINGS:
        raise ValueError(f"pooling must be one of {POOLINGS}, got {pooling!r}")
    if not 0 <= crop < 0.5:
        raise ValueError("crop must lie in [0, 0.5)")
    parts = []
    for _, g, _ in out.entries:
        g = _crop(np.asarray(g), crop)
        if pooling == "global-average":
            parts.append(np.array([g.mean()]))
        elif pooling == "spatial-average":
            parts.append(np.atleast_1d(g.mean(axis=(0, 1))))
        else:
            parts.append(g.ravel())
    return np.concatenate(parts) if parts else np.zeros(0)


def path_lengths(out, pooling="global-average", crop=0.0):
    """Number of values each path contributes to ``feature_vector``."""
    n = []
    for _, g, _ in out.entries:
        g = _crop(np.asarray(g), crop)
        if pooling == "global-average":
            n.append(1)
        elif pooling == "spatial-average":
            n.append(g.shape[2] if g.ndim == 3 else 1)
        else:
            n.append(g.size)
    return n


def path_count(cfg, shape, variant="rigid-motion"):
    """Number of paths emitted for an image of ``shape``."""
    J = cfg.J_for(shape)
    C, K, L = cfg.C, cfg.K_eff, cfg.n_theta
    n = 1
    if cfg.M >= 1:
        n += J * C if variant == "translation" else J
    if cfg.M >= 2:
        pairs = J * (J - 1) // 2
        if variant == "translation":
            n += C * C * pairs
        else:
            n += pairs * L * (K + 1) + J * K
    return n


def deformation_stability_probe(x, tau, cfg=ScatteringConfig(), variant="rigid-motion",
                                pooling="global-average"):
    """``||S x_tau - S x|| / (||x|| (2^-J ||tau||_inf + ||grad tau||_inf))``, 0 when ``tau = 0``."""
    x = as_image(x)
    if not isinstance(tau, DeformationField):
        tau = DeformationField(tau)
    J = cfg.J_for(x.shape)
    den = np.linalg.norm(x) * (2.0 ** -J * tau.sup_norm + tau.grad_norm)
    if den == 0:
        return 0.0
    fb = _bank(cfg, x.shape)
    a = feature_vector(scatter(x, cfg, variant, fb), pooling)
    b = feature_vector(scatter(warp_image(x, tau, periodic=True), cfg, variant, fb), pooling)
    return float(np.linalg.norm(a - b) / den)
