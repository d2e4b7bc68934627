"""Separable wavelets on the rigid-motion group and their fast transform.

A volume ``x(v, theta)`` is filtered along space with oriented wavelets
rotated by each slice angle (``g_{l, theta} = g_{l + theta}``), then along
orientation with periodic 1D wavelets. Volumes of period ``pi`` are lifted to
``[0, 2 pi)`` first, since a ``pi``-periodic function is also
``2 pi``-periodic and the rotated-filter index arithmetic needs the full
circle.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .filterbank import derive_cascade_filters, rotated_cascade
from .se2_group import TWO_PI, SE2Volume
from .signals import rotate90_periodic
from .wavelets2d import build_filter_bank, fold_transfer, ifft_down


@dataclass(frozen=True)
class AngularParams:
    """Mother 1D wavelet on the orientation circle, in units of one orientation step.

    ``psi_hat(w) = G(w - xi) + G(w + xi) - 2 K G(w)`` with
    ``G(w) = exp(-sigma^2 w^2 / 2)``: the real part of a complex Morlet, so
    that one family covers positive and negative angular frequencies. The
    window at scale ``2^K`` is a Gaussian of width ``sigma_phi * 2^K``.
    The defaults keep the angular epsilon below 0.17 for every
    ``n_theta <= 32`` and ``K``.
    """

    sigma: float = 0.715
    xi: float = 1.0
    sigma_phi: float = 0.317

    def __post_init__(self):
        for name in ("sigma", "xi", "sigma_phi"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive, got {v}")


DEFAULT_ANGULAR = AngularParams()


@dataclass(frozen=True, eq=False)
class AngularFilterBank:
    K: int
    n_theta: int
    phi_bar_hat: np.ndarray
    psi_bar_hat: np.ndarray  # shape (K, n_theta)
    lp_epsilon1: float
    params: AngularParams = DEFAULT_ANGULAR


def _periodized(fun, w, reach):
    m = int(math.ceil(max(reach - np.pi, 0) / (2 * np.pi)))
    return sum(fun(w + 2 * np.pi * p) for p in range(-m, m + 1))


def build_angular_bank(n_theta, K=None, params=DEFAULT_ANGULAR, gate=0.5):
    """Periodized angular window and wavelets on ``n_theta`` orientation samples.

    The band-pass filters are scaled by one constant so that the discrete
    Littlewood-Paley sum ``|phi_hat|^2 + sum_k |psi_hat_k|^2`` never exceeds 1.
    ``K = 0`` means no angular averaging (identity window).
    """
    n = int(n_theta)
    if n < 1 or n & (n - 1):
        raise ValueError(f"n_theta must be a power of 2, got {n}")
    kmax = int(math.log2(n))
    if K is None:
        K = max(kmax - 1, 0)
    if K < 0 or K > kmax:
        raise ValueError(f"K must lie in [0, {kmax}] for n_theta={n}, got {K}")
    w = 2 * np.pi * np.fft.fftfreq(n)
    s, xi = params.sigma, params.xi
    G = lambda a: np.exp(-(s ** 2) * a ** 2 / 2)  # noqa: E731
    psi = np.zeros((K, n))
    for k in range(K):
        d = 2 ** k
        reach = (9.0 / s + xi) / d
        band = _periodized(lambda a: G(d * a - xi) + G(d * a + xi), w, reach)
        low = _periodized(lambda a: G(d * a), w, reach)
        psi[k] = band - band[0] / low[0] * low
        psi[k, 0] = 0.0
    if K == 0:
        phi = np.ones(n)
    else:
        sp = params.sigma_phi * 2 ** K
        phi = _periodized(lambda a: np.exp(-(sp ** 2) * a ** 2 / 2), w, 9.0 / sp)
        phi = phi / phi[0]
    p = phi ** 2
    ssum = np.sum(psi ** 2, axis=0)
    m = ssum > 0
    c2 = float(np.min(np.clip(1 - p[m], 0, None) / ssum[m])) if np.any(m) else 1.0
    psi *= math.sqrt(c2)
    eps = float(1 - np.min(p + c2 * ssum))
    if gate is not None and eps >= gate:
        raise ValueError(f"angular Littlewood-Paley epsilon {eps:.3f} fails the gate {gate}")
    return AngularFilterBank(K=K, n_theta=n, phi_bar_hat=phi.astype(np.complex128),
                             psi_bar_hat=psi.astype(np.complex128), lp_epsilon1=eps,
                             params=params)


def angular_lp_audit(ab):
    t = np.abs(ab.phi_bar_hat) ** 2 + np.sum(np.abs(ab.psi_bar_hat) ** 2, axis=0)
    return float(t.min()), float(t.max())


@dataclass(frozen=True, eq=False)
class SE2FilterBank:
    """Spatial bank (half circle, ``C = n_theta / 2``) plus angular bank.

    ``index`` lists the wavelet triples ``(l, j, k)``: ``j < J`` with
    ``k <= K`` for every ``l``, and ``j = J, k < K`` once with ``l = 0``
    (that family does not depend on ``l``).
    """

    spatial: object
    angular: AngularFilterBank
    index: tuple
    cascade: object = field(default=None)

    @property
    def J(self):
        return self.spatial.J

    @property
    def K(self):
        return self.angular.K

    @property
    def n_theta(self):
        return self.angular.n_theta

    @property
    def L(self):
        return 2 * self.spatial.C


def wavelet_index(L, J, K):
    idx = [(l, j, k) for j in range(J) for l in range(L) for k in range(K + 1)]
    idx += [(0, J, k) for k in range(K)]
    return tuple(idx)


def build_se2_bank(shape, n_theta, J=None, K=None, params=None,
                   angular=DEFAULT_ANGULAR, mode="morlet", gate="auto", spatial=None):
    """Separable rigid-motion bank for volumes with ``n_theta`` orientations over ``[0, 2 pi)``."""
    if n_theta % 2:
        raise ValueError("n_theta must be even (conjugate pairs)")
    if spatial is None:
        spatial = build_filter_bank(params, J=J, C=n_theta // 2, grid=shape, mode=mode, gate=gate)
    elif spatial.C * 2 != n_theta:
        raise ValueError("spatial bank orientation count does not match n_theta")
    ab = build_angular_bank(n_theta, K, angular, gate=0.5 if gate == "auto" else gate)
    cf = derive_cascade_filters(spatial).full_circle() if spatial.mode == "cascade" else None
    return SE2FilterBank(spatial=spatial, angular=ab,
                         index=wavelet_index(2 * spatial.C, spatial.J, ab.K), cascade=cf)


@dataclass(frozen=True, eq=False)
class RMWaveletCoeffs:
    """Subsampled outputs with their spatial and angular steps.

    ``C``: window in space and orientation. ``D[k]``: window in space,
    wavelet ``k`` in orientation. ``E[(l, j)]``: wavelet ``(l, j)`` in space,
    window in orientation. ``F[(l, j, k)]``: wavelets in both.
    Each entry is ``(SE2Volume, spatial_step, angular_step)``.
    """

    C: tuple
    D: dict
    E: dict
    F: dict

    def items(self):
        """``((l, j, k), entry)`` for the window (``(0, J, K)``) and every wavelet."""
        yield None, self.C
        for k, v in sorted(self.D.items()):
            yield ("D", k), v
        for key, v in sorted(self.E.items()):
            yield ("E",) + key, v
        for key, v in sorted(self.F.items()):
            yield ("F",) + key, v


def _lift(x):
    if not isinstance(x, SE2Volume):
        x = SE2Volume(np.asarray(x))
    return x.lifted()


def _angular(y, transfer, step, in_step=1, yh=None):
    """Circular convolution along the last axis, then subsampling.

    ``y`` holds every ``in_step``-th orientation sample; the output keeps
    every ``step``-th one (``step`` counted in full-resolution samples).
    ``yh`` may pass a precomputed ``fft(y)``.
    """
    n = y.shape[-1]
    tr = transfer.reshape(in_step, n).sum(axis=0) if in_step > 1 else transfer
    yh = (sfft.fft(y, axis=-1) if yh is None else yh) * tr
    r = max(step // in_step, 1)
    if r > 1:
        yh = yh.reshape(yh.shape[:-1] + (r, n // r)).sum(axis=-2) / r
    return sfft.ifft(yh, axis=-1)


def _folded(bank, step):
    """Spatial transfers of ``bank`` folded onto the grid subsampled by ``step``."""
    cache = bank.__dict__.setdefault("_fold", {})
    if step not in cache:
        sp = bank.spatial
        cache[step] = (fold_transfer(sp.full_circle(), step), fold_transfer(sp.phi_hat, step))
    return cache[step]


def _spatial_direct(xh, full_j, l, r):
    """``x(., t) * psi_{(l + t) mod L, j}`` for every slice ``t``, subsampled by ``r``."""
    n = xh.shape[-1]
    idx = (l + np.arange(n)) % full_j.shape[0]
    f = np.moveaxis(full_j[idx], 0, -1)  # (h, w, n)
    y = np.moveaxis(xh * f, -1, 0)
    return np.moveaxis(ifft_down(y, r), 0, -1)


def _as_step(step, name):
    step = int(step)
    if step < 1 or step & (step - 1):
        raise ValueError(f"{name} must be a power of 2, got {step}")
    return step


def rm_wavelet_transform(x, bank, oversampling=1, backend="direct", scales=None,
                         input_step=1):
    """Rigid-motion wavelet transform of a volume.

    Parameters
    ----------
    x : SE2Volume
        Period ``pi`` volumes are lifted to ``[0, 2 pi)``.
    bank : SE2FilterBank
    oversampling : int
        Spatial outputs at scale ``j`` are subsampled by ``2^max(j - o, 0)``
        and angular outputs at scale ``k`` by ``2^max(k - o, 0)``, never
        coarser than the input.
    backend : {"direct", "cascade"}
        Spatial filtering by direct transfers or by the a trous cascade.
        Orientation filtering always uses circular FFT products.
    scales : iterable of int, optional
        Spatial wavelet scales ``j < J`` to compute (default all). The
        ``j = J`` families are always computed.
    input_step : int
        ``x`` holds every ``input_step``-th pixel of a signal on the bank
        grid. Filters keep their size in bank pixels and reported steps are
        in bank pixels. The cascade backend then only provides scales
        ``j >= log2(input_step)``.
    """
    x = _lift(x)
    s0 = _as_step(input_step, "input_step")
    h, w, n = x.shape
    if n != bank.n_theta:
        raise ValueError(f"volume has {n} orientations, bank expects {bank.n_theta}")
    H, W = bank.spatial.shape
    if (h * s0, w * s0) != (H, W):
        raise ValueError(f"volume dims {(h, w)} at step {s0} do not cover bank dims {(H, W)}")
    J, K, L = bank.J, bank.K, bank.L
    scales = range(J) if scales is None else sorted(set(int(j) for j in scales))
    if any(j < 0 or j >= J for j in scales):
        raise ValueError(f"scales must lie in [0, {J})")
    ab = bank.angular
    sstep = lambda j: max(2 ** max(j - oversampling, 0), s0)  # noqa: E731
    astep = lambda k: 2 ** max(k - oversampling, 0)  # noqa: E731
    xs = x.samples.astype(np.complex128)
    if backend == "direct":
        full, phi = _folded(bank, s0)
        xh = sfft.fft2(xs, axes=(0, 1))
        low = sfft.ifft2(xh * phi[:, :, None], axes=(0, 1))
        low = low[::sstep(J) // s0, ::sstep(J) // s0]
        bands = {(l, j): _spatial_direct(xh, full[j], l, sstep(j) // s0)
                 for j in scales for l in range(L)}
    elif backend == "cascade":
        if bank.cascade is None:
            raise ValueError("cascade backend needs a bank built with mode='cascade'")
        a = s0.bit_length() - 1
        if a >= J:
            raise ValueError("input_step leaves no cascade levels")
        low, B, _ = rotated_cascade(xs, bank.cascade, J, oversampling, start=a)
        bands = {(l, j): B[j - a][l] for j in scales if j >= a for l in range(L)}
    else:
        raise ValueError(f"unknown backend {backend!r}")
    lh = sfft.fft(low, axis=-1)
    C_ = (SE2Volume(_angular(low, ab.phi_bar_hat, astep(K), yh=lh)), sstep(J), astep(K))
    D = {k: (SE2Volume(_angular(low, ab.psi_bar_hat[k], astep(k), yh=lh)), sstep(J), astep(k))
         for k in range(K)}
    E, F = {}, {}
    for (l, j), b in bands.items():
        bh = sfft.fft(b, axis=-1)
        E[(l, j)] = (SE2Volume(_angular(b, ab.phi_bar_hat, astep(K), yh=bh)), sstep(j),
                     astep(K))
        for k in range(K):
            F[(l, j, k)] = (SE2Volume(_angular(b, ab.psi_bar_hat[k], astep(k), yh=bh)),
                            sstep(j), astep(k))
    return RMWaveletCoeffs(C=C_, D=D, E=E, F=F)


def rm_lowpass(x, bank, oversampling=1, input_step=1, angular_step=1):
    """``x * tphi_{J,K}`` on a volume sampled every ``input_step`` pixels and
    every ``angular_step`` orientations. Returns ``(samples, spatial_step, angular_step)``."""
    s0 = _as_step(input_step, "input_step")
    a0 = _as_step(angular_step, "angular_step")
    xs = np.asarray(x.samples if isinstance(x, SE2Volume) else x)
    h, w, n = xs.shape
    if n * a0 != bank.n_theta or (h * s0, w * s0) != bank.spatial.shape:
        raise ValueError("volume grid does not match the bank at the given steps")
    _, phi = _folded(bank, s0)
    ss = max(2 ** max(bank.J - oversampling, 0), s0)
    sa = max(2 ** max(bank.K - oversampling, 0), a0)
    r = ss // s0
    if r == 1 and sa == a0 and not np.iscomplexobj(xs):
        # real input, real separable window, no subsampling
        tr = bank.angular.phi_bar_hat.reshape(a0, n).sum(axis=0).real
        yh = sfft.rfftn(xs, axes=(0, 1, 2))
        yh *= phi[:, :, None]
        yh *= tr[: n // 2 + 1]
        return sfft.irfftn(yh, s=xs.shape, axes=(0, 1, 2)), ss, sa
    y = _angular(xs, bank.angular.phi_bar_hat, sa, a0)
    y = sfft.fft2(y, axes=(0, 1)) * phi[:, :, None]
    if r > 1:
        y = fold_transfer(np.moveaxis(y, -1, 0), r) / (r * r)
        y = np.moveaxis(y, 0, -1)
    return sfft.ifft2(y, axes=(0, 1)), ss, sa


def rm_energy(coeffs):
    """``||W x||^2`` with area weights ``spatial_step^2 * angular_step``."""
    e = 0.0
    for _, (v, ss, sa) in coeffs.items():
        e += ss * ss * sa * float(np.sum(np.abs(v.samples) ** 2))
    return e


def factorized_transform(x, bank):
    """``Wbar R^-1 W R x`` at full resolution, computed from its factors.

    Only slices whose angle is a multiple of ``pi/2`` may be nonzero, so the
    rotation ``R x(v, theta) = x(r_theta v, theta)`` is an exact permutation.
    Returns the same layout as ``rm_wavelet_transform(..., oversampling=big)``.
    """
    x = _lift(x)
    h, w, n = x.shape
    if h != w or n % 4:
        raise ValueError("factorization check needs a square grid and n_theta divisible by 4")
    exact = np.arange(n) % (n // 4) == 0
    if np.any(x.samples[:, :, ~exact]):
        raise ValueError("volume has slices at angles that are not multiples of pi/2")
    J, K, L = bank.J, bank.K, bank.L
    ab = bank.angular
    full = bank.spatial.full_circle()
    rx = np.zeros((h, w, n), dtype=np.complex128)
    for t in np.nonzero(exact)[0]:
        rx[:, :, t] = rotate90_periodic(x.samples[:, :, t], -(t // (n // 4)))
    rxh = np.fft.fft2(rx, axes=(0, 1))

    def rinv(z):
        out = np.zeros_like(z)
        for t in np.nonzero(exact)[0]:
            out[:, :, t] = rotate90_periodic(z[:, :, t], t // (n // 4))
        return out

    low = rinv(np.fft.ifft2(rxh * bank.spatial.phi_hat[:, :, None], axes=(0, 1)))
    C_ = (SE2Volume(_angular(low, ab.phi_bar_hat, 1)), 1, 1)
    D = {k: (SE2Volume(_angular(low, ab.psi_bar_hat[k], 1)), 1, 1) for k in range(K)}
    E, F = {}, {}
    for j in range(J):
        for l in range(L):
            b = rinv(np.fft.ifft2(rxh * full[j, l][:, :, None], axes=(0, 1)))
            E[(l, j)] = (SE2Volume(_angular(b, ab.phi_bar_hat, 1)), 1, 1)
            for k in range(K):
                F[(l, j, k)] = (SE2Volume(_angular(b, ab.psi_bar_hat[k], 1)), 1, 1)
    return RMWaveletCoeffs(C=C_, D=D, E=E, F=F)


def coeffs_distance(a, b):
    """Relative L2 distance between two coefficient sets of the same layout."""
    num = den = 0.0
    for (ka, va), (kb, vb) in zip(a.items(), b.items()):
        if ka != kb:
            raise ValueError("coefficient layouts differ")
        num += float(np.sum(np.abs(va[0].samples - vb[0].samples) ** 2))
        den += float(np.sum(np.abs(va[0].samples) ** 2))
    return math.sqrt(num / den) if den else math.sqrt(num)


@dataclass(frozen=True)
class EnergyAuditReport:
    trials: int
    epsilon1: float
    epsilon2: float
    lower_ok: bool
    upper_ok: bool
    min_ratio: float
    max_ratio: float
    factorization_error: float

    @property
    def passed(self):
        return self.lower_ok and self.upper_ok and self.factorization_error <= 1e-6


def rm_energy_audit(bank, trials=100, rng=None, slack=1e-6):
    """Check the separable energy bound on random volumes and the proof factorization.

    The bound is ``(1 - eps1)(1 - eps2) ||x||^2 <= ||W x||^2 <= ||x||^2``
    with ``eps1`` from the angular audit and ``eps2`` from the spatial one.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(0) if rng is None else rng
    e1 = bank.angular.lp_epsilon1
    e2 = bank.spatial.lp_epsilon
    lo = (1 - e1) * (1 - e2)
    h, w = bank.spatial.shape
    n = bank.n_theta
    ratios = []
    for _ in range(trials):
        x = SE2Volume(rng.standard_normal((h, w, n)))
        cw = rm_wavelet_transform(x, bank, oversampling=64)
        ratios.append(rm_energy(cw) / x.norm() ** 2)
    ratios = np.array(ratios)
    ferr = 0.0
    if h == w and n % 4 == 0:
        s = np.zeros((h, w, n))
        s[:, :, :: n // 4] = rng.standard_normal((h, w, 4))
        x = SE2Volume(s)
        ferr = coeffs_distance(rm_wavelet_transform(x, bank, oversampling=64),
                               factorized_transform(x, bank))
    return EnergyAuditReport(trials=trials, epsilon1=e1, epsilon2=e2,
                             lower_ok=bool(np.all(ratios >= lo * (1 - slack))),
                             upper_ok=bool(np.all(ratios <= 1 + slack)),
                             min_ratio=float(ratios.min()), max_ratio=float(ratios.max()),
                             factorization_error=float(ferr))


def assemble_filter(bank, l, j, k):
    """Spatial-angular samples of ``psi_{l,j}(v) psibar_k(theta) / dtheta`` as a volume.

    Scaled so that :func:`se2_convolve_reference` (which weights by ``dtheta``)
    reproduces the circular sums of the fast transform. ``j = J`` selects the
    window ``phi_J`` and ``k = K`` the angular window.
    """
    n = bank.n_theta
    if j == bank.J:
        s = np.fft.ifft2(bank.spatial.phi_hat)
    else:
        s = np.fft.ifft2(bank.spatial.full_circle()[j, l])
    a = bank.angular.phi_bar_hat if k == bank.K else bank.angular.psi_bar_hat[k]
    ang = np.fft.ifft(a)
    return SE2Volume(s[:, :, None] * ang[None, None, :] / (TWO_PI / n))
