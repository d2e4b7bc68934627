"""Grid primitives shared by the transforms.

Conventions
-----------
Arrays are indexed ``(row, col)``. Physical coordinates are
``u = (u1, u2) = (col, -row)``, so ``u1`` points right and ``u2`` points up
on screen and angles are counterclockwise as displayed. Frequencies follow
the same axes: ``w1`` is the column frequency and ``w2`` the negated row
frequency, both in radians per pixel.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

MIN_SIZE = 8


def as_image(x, min_size=MIN_SIZE):
    """Validate and return a real 2D float array."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {x.shape}")
    if np.iscomplexobj(x):
        raise ValueError("image samples must be real")
    if min(x.shape) < min_size:
        raise ValueError(f"image must be at least {min_size}x{min_size}, got {x.shape}")
    x = x.astype(np.float64, copy=False)
    if not np.all(np.isfinite(x)):
        raise ValueError("image contains non-finite samples")
    return x


def frequency_grid(shape):
    """Return ``(w1, w2)`` frequency arrays of the given grid shape.

    ``w1`` varies along columns, ``w2`` along rows (sign flipped so that
    positive ``w2`` points up).
    """
    h, w = shape
    fr = 2 * np.pi * np.fft.fftfreq(h)
    fc = 2 * np.pi * np.fft.fftfreq(w)
    w2, w1 = np.meshgrid(-fr, fc, indexing="ij")
    return w1, w2


def periodic_convolve2d(x, filter_hat):
    """Circular convolution of ``x`` with a filter given by its DFT.

    Parameters
    ----------
    x : ndarray, shape (H, W) or (H, W, ...)
        Real or complex samples. Extra trailing axes are treated as a batch.
    filter_hat : ndarray, shape (H, W)
        Transfer function sampled on the DFT grid of ``x``.

    Returns
    -------
    ndarray, complex
    """
    x = np.asarray(x)
    filter_hat = np.asarray(filter_hat)
    if x.shape[:2] != filter_hat.shape[:2]:
        raise ValueError(f"dimension mismatch: {x.shape[:2]} vs {filter_hat.shape[:2]}")
    xf = np.fft.fft2(x, axes=(0, 1))
    if xf.ndim > filter_hat.ndim:
        filter_hat = filter_hat.reshape(filter_hat.shape + (1,) * (xf.ndim - filter_hat.ndim))
    return np.fft.ifft2(xf * filter_hat, axes=(0, 1))


def circular_convolve_direct(x, y):
    """O(N^2) circular convolution, used as an oracle in tests."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError("dimension mismatch")
    out = np.zeros(x.shape, dtype=np.result_type(x, y, np.complex128))
    h, w = x.shape
    for p in range(h):
        for q in range(w):
            if x[p, q] != 0:
                out += x[p, q] * np.roll(np.roll(y, p, axis=0), q, axis=1)
    return out


def downsample2d(x, step):
    """Keep every ``step``-th sample along the two leading axes."""
    x = np.asarray(x)
    step = int(step)
    if step < 1 or step & (step - 1):
        raise ValueError(f"step must be a power of 2, got {step}")
    if x.shape[0] % step or x.shape[1] % step:
        raise ValueError(f"step {step} does not divide dims {x.shape[:2]}")
    return x[::step, ::step]


def rotate90_periodic(x, k=1):
    """Rotate by ``k * pi/2`` about the sample ``(0, 0)`` on the periodic grid.

    The result is ``y(u) = x(r_{-k pi/2} u)`` taken modulo the grid size, an
    exact index permutation for square arrays. Trailing axes are carried along.
    """
    x = np.asarray(x)
    if x.shape[0] != x.shape[1]:
        raise ValueError("periodic rotation needs a square grid")
    k %= 4
    for _ in range(k):
        x = np.roll(np.rot90(x, axes=(0, 1)), 1, axis=0)
    return x


@dataclass(frozen=True)
class DeformationField:
    """Displacement field ``tau(u)`` in pixels, shape (H, W, 2).

    The last axis holds the ``(row, col)`` displacement components.
    """

    tau: np.ndarray
    grad_norm: float = field(init=False)

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=np.float64)
        if tau.ndim != 3 or tau.shape[2] != 2:
            raise ValueError(f"tau must have shape (H, W, 2), got {tau.shape}")
        if not np.all(np.isfinite(tau)):
            raise ValueError("tau contains non-finite values")
        g = np.empty(tau.shape[:2] + (2, 2))
        for a in range(2):
            g[..., a, 0], g[..., a, 1] = np.gradient(tau[..., a])
        gn = float(np.linalg.norm(g, ord=2, axis=(2, 3)).max())
        if gn >= 1:
            raise ValueError(f"sup |grad tau| = {gn:.3g} must be < 1")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "grad_norm", gn)

    @property
    def sup_norm(self):
        return float(np.sqrt((self.tau ** 2).sum(axis=2)).max())


def _sample(x, rows, cols, mode="mirror"):
    return ndimage.map_coordinates(x, [rows, cols], order=3, mode=mode)


def rotate_image(x, theta):
    """Rotate counterclockwise by ``theta`` about the image center (bicubic)."""
    x = as_image(x, min_size=1)
    if theta == 0:
        return x.copy()
    h, w = x.shape
    q = theta / (np.pi / 2)
    if h == w and abs(q - round(q)) < 1e-12:
        return np.ascontiguousarray(np.rot90(x, int(round(q)) % 4))
    cr, cc = (h - 1) / 2, (w - 1) / 2
    r, c = np.mgrid[0:h, 0:w].astype(np.float64)
    # y(u) = x(r_{-theta} u) in (u1, u2) = (c - cc, -(r - cr))
    u1, u2 = c - cc, -(r - cr)
    ct, st = np.cos(theta), np.sin(theta)
    s1 = ct * u1 + st * u2
    s2 = -st * u1 + ct * u2
    return _sample(x, cr - s2, cc + s1)


def dilate_image(x, s):
    """Dilate by factor ``s`` about the center: ``y(u) = x(u / s)``."""
    x = as_image(x, min_size=1)
    if not s > 0:
        raise ValueError(f"dilation factor must be positive, got {s}")
    if s == 1:
        return x.copy()
    h, w = x.shape
    cr, cc = (h - 1) / 2, (w - 1) / 2
    r, c = np.mgrid[0:h, 0:w].astype(np.float64)
    return _sample(x, cr + (r - cr) / s, cc + (c - cc) / s)


def warp_image(x, field_, periodic=False):
    """Deform ``x`` by ``x_tau(u) = x(u - tau(u))``.

    Samples outside the grid are mirrored, or wrapped when ``periodic``.
    """
    x = as_image(x, min_size=1)
    if not isinstance(field_, DeformationField):
        field_ = DeformationField(field_)
    tau = field_.tau
    if tau.shape[:2] != x.shape:
        raise ValueError("field and image dims differ")
    if not np.any(tau):
        return x.copy()
    r, c = np.mgrid[0:x.shape[0], 0:x.shape[1]].astype(np.float64)
    return _sample(x, r - tau[..., 0], c - tau[..., 1], "grid-wrap" if periodic else "mirror")


def resample_image(x, kind, value):
    """Geometric resampling dispatcher.

    Parameters
    ----------
    x : ndarray
        Input image.
    kind : {"rotate", "dilate", "warp"}
        Transformation type.
    value : float or DeformationField
        Angle in radians, dilation factor, or deformation field.
    """
    if kind == "rotate":
        return rotate_image(x, value)
    if kind == "dilate":
        return dilate_image(x, value)
    if kind == "warp":
        return warp_image(x, value)
    raise ValueError(f"unknown resampling kind {kind!r}")


def mirror_pad_pow2(x):
    """Mirror-pad to the next power-of-2 dims; returns the padded array and the valid slice."""
    x = np.asarray(x)
    h, w = x.shape[:2]
    H = 1 << (h - 1).bit_length()
    W = 1 << (w - 1).bit_length()
    pad = ((0, H - h), (0, W - w)) + ((0, 0),) * (x.ndim - 2)
    return np.pad(x, pad, mode="symmetric"), (slice(0, h), slice(0, w))


def center_crop(x, shape):
    h, w = shape
    r0 = (x.shape[0] - h) // 2
    c0 = (x.shape[1] - w) // 2
    if r0 < 0 or c0 < 0:
        raise ValueError(f"cannot crop {x.shape[:2]} to {shape}")
    return x[r0:r0 + h, c0:c0 + w]
