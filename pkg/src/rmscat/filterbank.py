"""A trous filter-bank cascade for the spatial wavelet transform.

The cascade computes ``A_j x = x * phi_j`` and ``B_{theta,j} x = x * psi_{theta,j}``
on grids of resolution ``2^-j`` by iterating

    A_{j+1} = (A_j * h) downsampled by 2,    B_{theta,j} = A_j * g_theta

with ``h_hat(w) = phi_hat(2w) / phi_hat(w)`` and ``g_hat = psi_hat / phi_hat``
taken on the principal frequency box and extended periodically. The transfer
of a filter at level ``j`` is its base-grid transfer evaluated at ``2^j w``,
which on a DFT grid is plain index arithmetic.
"""

from dataclasses import dataclass

import numpy as np

from . import _backend
from .signals import as_image, frequency_grid
from .wavelets2d import _dilate_index, cascade_quotient, conj_reflect, gaussian_hat, ifft_down

_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class CascadeFilters:
    """Base-grid transfers of the cascade.

    Attributes
    ----------
    h_hat : ndarray, shape (H, W)
        Low-pass transfer, ``h_hat(0) = 1``.
    g_hat : ndarray, shape (C, H, W)
        Band-pass transfers at the bank orientations.
    phi0_hat : ndarray, shape (H, W)
        Initial window ``phi`` used for ``A_0 = x * phi``.
    taps : int
        Side of the centered square holding 99.9% of the spatial energy of
        every cascade filter.
    """

    h_hat: np.ndarray
    g_hat: np.ndarray
    phi0_hat: np.ndarray
    taps: int
    shape: tuple
    J: int

    @property
    def P(self):
        return self.taps * self.taps

    def full_circle(self):
        return CascadeFilters(self.h_hat, np.concatenate([self.g_hat, conj_reflect(self.g_hat)]),
                              self.phi0_hat, self.taps, self.shape, self.J)


def effective_support(f_hat, fraction=0.999):
    """Smallest odd side ``s`` whose centered ``s x s`` block holds ``fraction`` of the energy."""
    f = np.fft.fftshift(np.fft.ifft2(f_hat))
    e = np.abs(f) ** 2
    total = e.sum()
    h, w = e.shape
    ch, cw = h // 2, w // 2
    for r in range(0, max(ch, cw) + 1):
        blk = e[max(ch - r, 0):ch + r + 1, max(cw - r, 0):cw + r + 1]
        if blk.sum() >= fraction * total:
            return 2 * r + 1
    return min(h, w)


def derive_cascade_filters(fb):
    """Cascade transfers ``h`` and ``g_theta`` of a filter bank.

    Raises
    ------
    ValueError
        If the window vanishes (below 1e-8) on the half band or where the
        scale-0 wavelets carry energy.
    """
    w1, w2 = frequency_grid(fb.shape)
    sphi = fb.params.sigma_phi
    phi0 = gaussian_hat(sphi, w1, w2)
    half = np.maximum(np.abs(w1), np.abs(w2)) <= np.pi / 2
    if np.any(phi0[half] < _FLOOR):
        raise ValueError("window vanishes on the half band")
    psi0 = fb.psi_hat[0]
    active = np.abs(psi0) > 1e-6 * np.abs(psi0).max()
    if np.any(active & (phi0[None] < _FLOOR)):
        raise ValueError("window vanishes inside the wavelet band")
    h_hat = gaussian_hat(sphi, 2 * w1, 2 * w2) / phi0
    g_hat = np.stack([cascade_quotient(psi0[c], sphi, w1, w2) for c in range(fb.C)])
    g_hat[:, 0, 0] = 0
    side = max([effective_support(h_hat)] + [effective_support(g) for g in g_hat])
    return CascadeFilters(h_hat=h_hat.astype(np.complex128), g_hat=g_hat,
                          phi0_hat=phi0.astype(np.complex128), taps=side,
                          shape=fb.shape, J=fb.J)


@dataclass(frozen=True, eq=False)
class Pyramid:
    """``A[j]`` for ``j = 0..J`` and ``B[j]`` of shape ``(C, h_j, w_j)``."""

    A: list
    B: list
    steps: tuple


def _level_transfer(f_hat, j, step):
    """Transfer of a base-grid filter dilated by ``2^j`` on the grid subsampled by ``step``."""
    h, w = f_hat.shape[-2:]
    return _dilate_index(f_hat, j, (h // step, w // step))


def _taps(f_hat, side):
    f = np.fft.fftshift(np.fft.ifft2(f_hat), axes=(-2, -1))
    h, w = f.shape[-2:]
    r = side // 2
    return np.ascontiguousarray(f[..., h // 2 - r:h // 2 + r + 1, w // 2 - r:w // 2 + r + 1])


def atrous_cascade(x, cf, J=None, oversampling=0, engine="fft", kernels=None):
    """Run the cascade on an image.

    Parameters
    ----------
    x : ndarray, shape (H, W)
    cf : CascadeFilters
    J : int, optional
        Number of levels, default ``cf.J``.
    oversampling : int
        Levels below this one are not downsampled (dilated filters instead);
        ``0`` is the plain cascade at resolution ``2^-j``.
    engine : {"fft", "taps"}
        ``"fft"`` multiplies transfers; ``"taps"`` convolves truncated spatial
        taps of side ``cf.taps`` (the spatial-filter regime, an approximation).
    """
    x = as_image(x)
    J = cf.J if J is None else J
    if x.shape != cf.shape:
        raise ValueError(f"image dims {x.shape} differ from filter dims {cf.shape}")
    if x.shape[0] % 2 ** J or x.shape[1] % 2 ** J:
        raise ValueError(f"dims {x.shape} not divisible by 2^{J}")
    if engine == "taps":
        if oversampling:
            raise ValueError("the taps engine runs the plain cascade only")
        return _cascade_taps(x, cf, J, kernels or _backend.impl)
    if engine != "fft":
        raise ValueError(f"unknown engine {engine!r}")
    steps = tuple(2 ** max(j - oversampling, 0) for j in range(J + 1))
    a_hat = np.fft.fft2(x) * cf.phi0_hat
    A, B = [np.fft.ifft2(a_hat).real], []
    for j in range(J):
        s = steps[j]
        B.append(np.fft.ifft2(a_hat[None] * _level_transfer(cf.g_hat, j, s), axes=(-2, -1)))
        y = a_hat * _level_transfer(cf.h_hat, j, s)
        r = steps[j + 1] // s
        a = ifft_down(y, r).real
        A.append(a)
        a_hat = np.fft.fft2(a)
    return Pyramid(A=A, B=B, steps=steps)


def _cascade_taps(x, cf, J, kern):
    ht = _taps(cf.h_hat, cf.taps)
    gt = _taps(cf.g_hat, cf.taps)
    a = np.fft.ifft2(np.fft.fft2(x) * cf.phi0_hat)
    A, B = [a.real], []
    for j in range(J):
        a = np.ascontiguousarray(a, dtype=np.complex128)
        B.append(np.stack([kern.conv_taps_strided(a, gt[c], 1) for c in range(gt.shape[0])]))
        a = kern.conv_taps_strided(a, ht, 2).real.astype(np.complex128)
        A.append(a.real)
    return Pyramid(A=A, B=B, steps=tuple(2 ** j for j in range(J + 1)))


def rotated_cascade(vol, cf_full, J, oversampling=0, start=0):
    """Spatial cascade of a volume with filters rotated by each slice angle.

    Slice ``t`` of ``vol`` (orientation ``t * 2 pi / n``) is filtered with
    ``g_{(l + t) mod n}``, the filter ``g_l`` rotated by that angle.

    Parameters
    ----------
    vol : ndarray, shape (H / 2^start, W / 2^start, n)
        Samples every ``2^start`` pixels of a volume on the filter grid.
    cf_full : CascadeFilters
        Full-circle filters (``n`` orientations over ``[0, 2 pi)``).
    start : int
        First level: the window at scale ``2^start`` is applied on the
        coarse grid, then levels ``start..J-1`` run as usual. Exact because
        every level-``j`` transfer is ``2 pi / 2^j`` periodic.

    Returns
    -------
    A_J : ndarray, shape (H_J, W_J, n)
    B : list of ndarray, shape (L, h_j, w_j, n), for ``j = start..J-1``
    steps : tuple
        Sampling steps in filter-grid pixels for ``j = 0..J``.
    """
    h, w, n = vol.shape
    L = cf_full.g_hat.shape[0]
    if L != n:
        raise ValueError(f"need {n} oriented filters, got {L}")
    if not 0 <= start < J:
        raise ValueError(f"start level must lie in [0, {J})")
    H, W = cf_full.shape
    if (h << start, w << start) != (H, W):
        raise ValueError(f"volume dims {(h, w)} at level {start} do not cover {(H, W)}")
    steps = tuple(max(2 ** max(j - oversampling, 0), 2 ** start) for j in range(J + 1))
    idx = (np.arange(L)[:, None] + np.arange(n)[None, :]) % L  # idx[l, t]
    window = _level_transfer(cf_full.phi0_hat, start, steps[start])
    a_hat = np.fft.fft2(vol, axes=(0, 1)) * window[:, :, None]
    B = []
    for j in range(start, J):
        s = steps[j]
        g = _level_transfer(cf_full.g_hat, j, s)  # (L, h, w)
        gt = np.moveaxis(g[idx], 1, -1)  # (L, h, w, n)
        B.append(np.fft.ifft2(a_hat[None] * gt, axes=(1, 2)))
        y = a_hat * _level_transfer(cf_full.h_hat, j, s)[:, :, None]
        r = steps[j + 1] // s
        a = np.moveaxis(ifft_down(np.moveaxis(y, -1, 0), r), 0, -1)
        a_hat = np.fft.fft2(a, axes=(0, 1))
    return np.fft.ifft2(a_hat, axes=(0, 1)), B, steps


def cascade_work(shape, C, J, taps):
    """Multiply-add count ``(1 + C) sum_j 2^{-2j} N P`` of the taps cascade."""
    n = shape[0] * shape[1]
    return int((1 + C) * sum(n * taps * taps / 4 ** j for j in range(J)))


def measure_scaling(sizes, times):
    """Least-squares exponent of ``time ~ size^a`` on log-log axes."""
    a, _ = np.polyfit(np.log(np.asarray(sizes, float)), np.log(np.asarray(times, float)), 1)
    return float(a)
