"""Gaussian window and Morlet directional filter banks on a periodic grid.

Filters are built by sampling the spatial closed forms on the integer
lattice and wrapping them onto the periodic grid, which is the same as
summing every ``2 pi`` alias of the continuous Fourier transform. This keeps
quarter-turn rotations exact on square grids and makes the DFT of each
filter its true discrete transfer function.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .signals import as_image, frequency_grid

# envelope is below 1e-17 of its peak beyond this many standard deviations
_TAIL = 9.0


@dataclass(frozen=True)
class MorletParams:
    """Mother Morlet wavelet and window parameters.

    The spatial wavelet is::

        psi(u) = exp(-(u1^2 + u2^2 / slant^2) / (2 sigma^2)) * (exp(i xi u1) - K)

    Parameters
    ----------
    sigma : float
        Envelope width in pixels at scale ``2^0``.
    xi : float
        Central frequency in radians per pixel.
    slant : float
        Envelope anisotropy; ``slant < 1`` narrows the envelope across the
        carrier and widens the angular response.
    sigma_phi : float
        Width of the Gaussian window at scale ``2^0`` in pixels; the window
        at scale ``2^J`` has width ``sigma_phi * 2^J``.
    """

    sigma: float = 0.53
    xi: float = 2.94
    slant: float = 2.0
    sigma_phi: float = 0.371

    def __post_init__(self):
        for name in ("sigma", "xi", "slant", "sigma_phi"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive, got {v}")

    @property
    def k_const(self):
        """Subtraction constant giving the mother samples an exactly zero sum."""
        env, a1 = _lattice_envelope(self, 0.0, 0, None)
        return float(np.real((env * np.exp(1j * self.xi * a1)).sum() / env.sum()))


DEFAULT_PARAMS = MorletParams()
# preset whose band-pass mother fits inside the principal frequency box, so the
# a trous cascade reproduces the direct transform (see filterbank); its
# Littlewood-Paley epsilon is about 0.66, hence the looser gate
CASCADE_PARAMS = MorletParams(sigma=0.546, xi=1.770, slant=0.912, sigma_phi=0.700)
GATE = {"morlet": 0.5, "cascade": 0.75}
# with four orientations the default envelope leaves angular gaps
FOUR_ORIENTATION_PARAMS = MorletParams(sigma=0.575, xi=2.81, slant=1.02, sigma_phi=0.290)


def default_params(mode="morlet", C=8):
    """Preset for a bank mode and orientation count."""
    if mode == "cascade":
        return CASCADE_PARAMS
    return FOUR_ORIENTATION_PARAMS if C <= 4 else DEFAULT_PARAMS


def _periodic_coords(shape, reach):
    """Centered lattice coordinates, plus the translates needed to cover ``reach`` pixels."""
    h, w = shape
    rows = np.fft.fftfreq(h) * h
    cols = np.fft.fftfreq(w) * w
    rr = int(math.ceil(max(reach - h / 2, 0) / h))
    rc = int(math.ceil(max(reach - w / 2, 0) / w))
    out = []
    for a in range(-rr, rr + 1):
        for b in range(-rc, rc + 1):
            r, c = np.meshgrid(rows + a * h, cols + b * w, indexing="ij")
            out.append((c, -r))
    return out


def _lattice_envelope(params, theta, j, shape):
    """Envelope and carrier coordinate of the rotated, dilated mother.

    With ``shape=None`` the samples cover a square patch of the infinite
    lattice large enough to hold the envelope.
    """
    s = params.sigma * 2 ** j * max(1.0, params.slant)
    if shape is None:
        n = int(math.ceil(_TAIL * s)) + 1
        grid = np.arange(-n, n + 1, dtype=np.float64)
        r, c = np.meshgrid(grid, grid, indexing="ij")
        pts = [(c, -r)]
    else:
        pts = _periodic_coords(shape, _TAIL * s)
    ct, st = math.cos(theta), math.sin(theta)
    envs, a1s = [], []
    for u1, u2 in pts:
        a1 = (ct * u1 + st * u2) / 2 ** j
        a2 = (-st * u1 + ct * u2) / 2 ** j
        envs.append(np.exp(-(a1 ** 2 + a2 ** 2 / params.slant ** 2) / (2 * params.sigma ** 2)))
        a1s.append(a1)
    return np.stack(envs), np.stack(a1s)


def _alias_counts(shape, spatial_reach, freq_reach):
    """Copies per axis needed by the spatial wrap and by the frequency alias sum."""
    h, w = shape
    rs = max(int(math.ceil(max(spatial_reach - h / 2, 0) / h)),
             int(math.ceil(max(spatial_reach - w / 2, 0) / w)))
    rf = int(math.ceil(max(freq_reach - np.pi, 0) / (2 * np.pi)))
    return rs, rf


def _freq_alias_sum(fun, shape, m):
    w1, w2 = frequency_grid(shape)
    acc = 0.0
    for a in range(-m, m + 1):
        for b in range(-m, m + 1):
            acc = acc + fun(w1 + 2 * np.pi * a, w2 + 2 * np.pi * b)
    return acc


def morlet_spatial(params, theta, j, shape):
    """Periodized samples of ``2^{-2j} psi(2^{-j} r_{-theta} u)`` with zero sum.

    The constant ``K`` is fixed per filter so that the discrete sum vanishes.
    """
    env, a1 = _lattice_envelope(params, theta, j, shape)
    wave = np.exp(1j * params.xi * a1)
    k = (env * wave).sum() / env.sum()
    return (env * (wave - k)).sum(axis=0) / 4 ** j


def morlet_hat(params, theta, j, shape):
    """DFT of :func:`morlet_spatial`, by whichever side needs fewer copies.

    In frequency the same filter is the alias sum
    ``sum_m psi_hat(2^j r_{-theta} (w + 2 pi m))`` (Poisson summation).
    """
    sig, z, xi = params.sigma, params.slant, params.xi
    spatial_reach = _TAIL * sig * 2 ** j * max(1.0, z)
    freq_reach = (_TAIL / (sig * min(1.0, z)) + xi) / 2 ** j
    rs, rf = _alias_counts(shape, spatial_reach, freq_reach)
    if (2 * rs + 1) <= (2 * rf + 1):
        return np.fft.fft2(morlet_spatial(params, theta, j, shape))
    ct, st = math.cos(theta), math.sin(theta)

    def gauss(w1, w2, shift):
        a1 = 2 ** j * (ct * w1 + st * w2) - shift
        a2 = 2 ** j * (-st * w1 + ct * w2)
        return np.exp(-(sig ** 2) * (a1 ** 2 + (z * a2) ** 2) / 2)

    # K from the DC alias sums so that the sample sum is exactly zero
    num = den = 0.0
    for a in range(-rf, rf + 1):
        for b in range(-rf, rf + 1):
            v1, v2 = 2 * np.pi * a, 2 * np.pi * b
            num += gauss(v1, v2, xi)
            den += gauss(v1, v2, 0.0)
    k = num / den
    amp = 2 * np.pi * sig ** 2 * z
    return amp * _freq_alias_sum(lambda w1, w2: gauss(w1, w2, xi) - k * gauss(w1, w2, 0.0),
                                 shape, rf)


def gaussian_spatial(sigma, shape):
    """Periodized samples of the isotropic window ``exp(-|u|^2/(2 s^2)) / (2 pi s^2)``."""
    acc = 0.0
    for u1, u2 in _periodic_coords(shape, _TAIL * sigma):
        acc = acc + np.exp(-(u1 ** 2 + u2 ** 2) / (2 * sigma ** 2))
    return acc / (2 * np.pi * sigma ** 2)


def gaussian_window_hat(sigma, shape):
    """DFT of :func:`gaussian_spatial`."""
    rs, rf = _alias_counts(shape, _TAIL * sigma, _TAIL / sigma)
    if (2 * rs + 1) <= (2 * rf + 1):
        return np.fft.fft2(gaussian_spatial(sigma, shape))
    return _freq_alias_sum(lambda w1, w2: gaussian_hat(sigma, w1, w2), shape, rf).astype(
        np.complex128)


def gaussian_hat(sigma, w1, w2):
    """Continuous transform of the unit-mass Gaussian of width ``sigma``."""
    return np.exp(-(sigma ** 2) * (w1 ** 2 + w2 ** 2) / 2)


def conj_reflect(f_hat):
    """Transfer of the conjugate filter: ``conj(f_hat(-w))`` on the DFT grid."""
    f = np.flip(f_hat, axis=(-2, -1))
    f = np.roll(f, 1, axis=(-2, -1))
    return np.conj(f)


@dataclass(frozen=True, eq=False)
class LPReport:
    min_sum: float
    max_sum: float

    @property
    def epsilon(self):
        return 1.0 - self.min_sum

    def as_dict(self):
        return {"min_sum": self.min_sum, "max_sum": self.max_sum, "epsilon": self.epsilon}


@dataclass(frozen=True, eq=False)
class FilterBank2D:
    """Frequency-domain samples of ``phi_J`` and ``psi_{theta,j}``.

    Attributes
    ----------
    psi_hat : ndarray, complex, shape (J, C, H, W)
        Band-pass transfers at orientations ``c pi / C``.
    phi_hat : ndarray, complex, shape (H, W)
        Window transfer at scale ``2^J``.
    """

    params: MorletParams
    J: int
    C: int
    shape: tuple
    psi_hat: np.ndarray
    phi_hat: np.ndarray
    mode: str
    lp_epsilon: float = field(default=float("nan"))
    normalization: float = 1.0

    @property
    def orientations(self):
        return [c * np.pi / self.C for c in range(self.C)]

    def full_circle(self):
        """Transfers for the ``2C`` orientations ``l pi / C`` over ``[0, 2 pi)``."""
        fc = self.__dict__.get("_full")
        if fc is None:
            fc = np.concatenate([self.psi_hat, conj_reflect(self.psi_hat)], axis=1)
            fc.setflags(write=False)
            self.__dict__["_full"] = fc
        return fc


def _check_grid(shape, J, C, params):
    if C < 1 or J < 1:
        raise ValueError(f"need C >= 1 and J >= 1, got C={C}, J={J}")
    need = max(2 ** J * params.sigma, 2 ** J * params.sigma_phi)
    if need > min(shape) / 4:
        raise ValueError(f"grid {shape} too small for J={J} (2^J sigma = {need:.3g})")


def _raw_bank(params, J, C, shape, mode):
    w1, w2 = frequency_grid(shape)
    phi_hat = gaussian_window_hat(params.sigma_phi * 2 ** J, shape)
    psi = np.empty((J, C) + tuple(shape), dtype=np.complex128)
    for c in range(C):
        theta = c * np.pi / C
        base = morlet_hat(params, theta, 0, shape)
        base[0, 0] = 0
        if mode == "morlet":
            psi[0, c] = base
            for j in range(1, J):
                psi[j, c] = morlet_hat(params, theta, j, shape)
        elif mode == "cascade":
            g = cascade_quotient(base, params.sigma_phi, w1, w2)
            for j in range(J):
                gi = _dilate_index(g, j)
                psi[j, c] = gi * gaussian_hat(params.sigma_phi, 2 ** j * w1, 2 ** j * w2)
        else:
            raise ValueError(f"unknown bank mode {mode!r}")
        psi[:, c, 0, 0] = 0
    if mode == "cascade":
        phi_hat = gaussian_hat(params.sigma_phi, 2 ** J * w1, 2 ** J * w2).astype(np.complex128)
    return psi, phi_hat


def cascade_quotient(psi_hat0, sigma_phi, w1, w2, floor=1e-8):
    """``g_hat = psi_hat / phi_hat`` on the principal box, zero where the window vanishes."""
    ph = gaussian_hat(sigma_phi, w1, w2)
    out = np.zeros_like(psi_hat0)
    ok = np.abs(ph) >= floor
    out[ok] = psi_hat0[ok] / ph[ok]
    return out


def _dilate_index(f_hat, j, out_shape=None):
    """Evaluate a box-periodic transfer at ``2^j w`` on a DFT grid.

    With ``out_shape`` the result lives on a coarser grid whose index ``k``
    stands for the base frequency ``2 pi k / N``.
    """
    h, w = f_hat.shape[-2:]
    oh, ow = out_shape or (h, w)
    if j == 0 and (oh, ow) == (h, w):
        return f_hat
    r = (np.arange(oh) * 2 ** j) % h
    c = (np.arange(ow) * 2 ** j) % w
    return f_hat[..., r[:, None], c[None, :]]


def lp_sums(psi_hat, phi_hat):
    """Window energy and band energy over both ``theta`` and ``theta + pi``."""
    p = np.abs(phi_hat) ** 2
    s = np.sum(np.abs(psi_hat) ** 2, axis=(0, 1))
    s = s + np.abs(conj_reflect(s.astype(np.complex128)))
    return p, s


def build_filter_bank(params=None, J=None, C=8, grid=(256, 256), mode="morlet",
                      gate="auto"):
    """Build and normalize a Morlet bank on a periodic grid.

    Parameters
    ----------
    params : MorletParams, optional
        Defaults to :func:`default_params` for ``mode`` and ``C``.
    J : int, optional
        Number of scales; defaults to ``floor(log2(min(grid))) - 2``.
    C : int
        Orientations over ``[0, pi)``.
    grid : tuple of int
        Transform dims ``(H, W)``.
    mode : {"morlet", "cascade"}
        ``"morlet"`` samples the dilated mother at every scale. ``"cascade"``
        keeps the scale-0 filter and extends coarser scales through the
        periodic quotient ``psi_hat / phi_hat``, which is what the a trous
        cascade computes.
    gate : float, "auto" or None
        Reject the bank if its audited Littlewood-Paley epsilon reaches this
        value; ``"auto"`` picks ``GATE[mode]``.

    Returns
    -------
    FilterBank2D
        Band-pass filters are scaled by one global constant so that the
        Littlewood-Paley sum never exceeds 1.
    """
    if mode not in GATE:
        raise ValueError(f"unknown bank mode {mode!r}")
    if params is None:
        params = default_params(mode, C)
    if gate == "auto":
        gate = GATE[mode]
    grid = tuple(int(g) for g in grid)
    if J is None:
        J = default_J(grid)
    _check_grid(grid, J, C, params)
    psi, phi_hat = _raw_bank(params, J, C, grid, mode)
    p, s = lp_sums(psi, phi_hat)
    m = s > 0
    c2 = float(np.min(np.clip(1 - p[m], 0, None) / s[m]))
    psi *= math.sqrt(c2)
    eps = float(1 - np.min(p + c2 * s))
    if gate is not None and eps >= gate:
        raise ValueError(f"Littlewood-Paley epsilon {eps:.3f} fails the gate {gate}")
    return FilterBank2D(params=params, J=J, C=C, shape=grid, psi_hat=psi, phi_hat=phi_hat,
                        mode=mode, lp_epsilon=eps, normalization=math.sqrt(c2))


def default_J(shape):
    return int(math.floor(math.log2(min(shape)))) - 2


def littlewood_paley_audit(fb):
    """Extrema of ``|phi_hat|^2 + sum_{j, theta, theta+pi} |psi_hat|^2`` over the grid."""
    p, s = lp_sums(fb.psi_hat, fb.phi_hat)
    t = p + s
    return LPReport(min_sum=float(t.min()), max_sum=float(t.max()))


@dataclass(frozen=True, eq=False)
class WaveletCoeffs:
    """``low``: window output; ``band[j]``: array (C, h_j, w_j) of band outputs."""

    low: np.ndarray
    band: list
    steps: tuple
    low_step: int


def ifft_down(y_hat, step):
    """Inverse DFT followed by ``step`` subsampling, computed by folding the spectrum."""
    if step == 1:
        return sfft.ifft2(y_hat, axes=(-2, -1))
    *lead, h, w = y_hat.shape
    if h % step or w % step:
        raise ValueError(f"step {step} does not divide dims {(h, w)}")
    f = y_hat.reshape(*lead, step, h // step, step, w // step).sum(axis=(-4, -2))
    return sfft.ifft2(f, axes=(-2, -1)) / step ** 2


def fold_transfer(f_hat, step):
    """Transfer of a base-grid filter acting on samples taken every ``step`` pixels.

    Summing the ``step^2`` aliases is the DFT of the subsampled filter with
    area weight ``step^2``, so the filter keeps its size in base pixels.
    """
    if step == 1:
        return f_hat
    *lead, h, w = f_hat.shape
    if h % step or w % step:
        raise ValueError(f"step {step} does not divide dims {(h, w)}")
    return f_hat.reshape(*lead, step, h // step, step, w // step).sum(axis=(-4, -2))


def _check_dims(x, fb):
    if x.shape != fb.shape:
        raise ValueError(f"image dims {x.shape} differ from bank dims {fb.shape}")


def wavelet_transform(x, fb, oversampling=1, full_circle=False):
    """Direct frequency-domain wavelet transform.

    Band ``(theta, j)`` is subsampled by ``2^max(j - oversampling, 0)`` and
    the window output by ``2^max(J - oversampling, 0)``.
    """
    x = as_image(x)
    _check_dims(x, fb)
    xf = np.fft.fft2(x)
    bank = fb.full_circle() if full_circle else fb.psi_hat
    steps = tuple(2 ** max(j - oversampling, 0) for j in range(fb.J))
    band = [ifft_down(xf[None] * bank[j], steps[j]) for j in range(fb.J)]
    ls = 2 ** max(fb.J - oversampling, 0)
    low = ifft_down(xf * fb.phi_hat, ls).real
    return WaveletCoeffs(low=low, band=band, steps=steps, low_step=ls)


def wavelet_energy(coeffs, full_circle=False):
    """``||Wx||^2`` with area weights for subsampled grids.

    For a half-circle transform of a real image every band is counted twice,
    standing in for its conjugate partner at ``theta + pi``.
    """
    e = coeffs.low_step ** 2 * float(np.sum(coeffs.low ** 2))
    mult = 1 if full_circle else 2
    for b, s in zip(coeffs.band, coeffs.steps):
        e += mult * s ** 2 * float(np.sum(np.abs(b) ** 2))
    return e


def wavelet_modulus(x, fb, oversampling=1):
    """First layer ``S0 = x * phi_J`` and ``U1(u, theta, j) = |x * psi_{theta,j}(u)|``.

    Returns
    -------
    S0 : ndarray
    U1 : list of SE2Volume
        One volume per scale, orientation axis last, period ``pi``.
    """
    from .se2_group import SE2Volume

    wc = wavelet_transform(x, fb, oversampling)
    u1 = [SE2Volume(np.moveaxis(np.abs(b), 0, -1), period=np.pi) for b in wc.band]
    return wc.low, u1
