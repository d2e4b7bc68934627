"""Rigid-motion group algebra and a brute-force left-invariant convolution."""

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .signals import rotate90_periodic

TWO_PI = 2 * np.pi


def rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class RigidMotion:
    """Element ``g = (v, theta)`` acting on the plane by ``u -> v + r_theta u``."""

    v: tuple = (0.0, 0.0)
    theta: float = 0.0

    def __post_init__(self):
        v = tuple(float(a) for a in self.v)
        if len(v) != 2:
            raise ValueError("translation must be a 2-vector")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)

    def as_array(self):
        return np.array([self.v[0], self.v[1], self.theta])


IDENTITY = RigidMotion()


def g_product(g1, g2):
    """``g1 . g2 = (v1 + r_{theta1} v2, theta1 + theta2)``."""
    v = np.asarray(g1.v) + rot(g1.theta) @ np.asarray(g2.v)
    return RigidMotion(tuple(v), g1.theta + g2.theta)


def g_inverse(g):
    """``g^{-1} = (-r_{-theta} v, -theta)``."""
    v = -(rot(-g.theta) @ np.asarray(g.v))
    return RigidMotion(tuple(v), -g.theta)


def g_act_point(g, u):
    """``g u = v + r_theta u``."""
    return np.asarray(g.v) + rot(g.theta) @ np.asarray(u, dtype=np.float64)


def g_distance(g1, g2):
    """Euclidean distance on translations plus wrapped angle difference."""
    dv = np.hypot(g1.v[0] - g2.v[0], g1.v[1] - g2.v[1])
    dt = abs((g1.theta - g2.theta + np.pi) % TWO_PI - np.pi)
    return float(dv + dt)


@dataclass(frozen=True, eq=False)
class SE2Volume:
    """Samples ``x(row, col, t)`` of a function on the rigid-motion group.

    Orientation ``t`` stands for the angle ``t * period / n_theta`` and the
    orientation axis is circular.
    """

    samples: np.ndarray
    period: float = TWO_PI

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 3 or s.shape[2] < 1:
            raise ValueError(f"volume samples must have shape (H, W, n), got {s.shape}")
        if not (np.isclose(self.period, np.pi) or np.isclose(self.period, TWO_PI)):
            raise ValueError(f"period must be pi or 2 pi, got {self.period}")
        if not np.all(np.isfinite(s)):
            raise ValueError("volume contains non-finite samples")
        object.__setattr__(self, "samples", s)

    @property
    def shape(self):
        return self.samples.shape

    @property
    def n_theta(self):
        return self.samples.shape[2]

    @property
    def dtheta(self):
        return self.period / self.n_theta

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2)))

    def lifted(self):
        """Extend a period-``pi`` volume of a real image's moduli to ``[0, 2 pi)``."""
        if np.isclose(self.period, TWO_PI):
            return self
        return SE2Volume(np.concatenate([self.samples, self.samples], axis=2), TWO_PI)


def act_on_volume(g, x):
    """``(g.x)(v, theta) = x(r_{-theta0}(v - v0), theta - theta0)`` for grid-exact ``g``.

    ``v0`` must be integer and ``theta0`` a multiple of both ``pi/2`` and the
    orientation step.
    """
    q = g.theta / (np.pi / 2)
    k = g.theta / x.dtheta
    if abs(q - round(q)) > 1e-9 or abs(k - round(k)) > 1e-9:
        raise ValueError("rotation is not grid-exact for this volume")
    v = np.asarray(g.v)
    if np.any(np.abs(v - np.round(v)) > 1e-9):
        raise ValueError("translation must be integer")
    s = rotate90_periodic(x.samples, int(round(q)))
    s = np.roll(s, int(round(k)) % x.n_theta, axis=2)
    s = np.roll(s, (-int(round(v[1])), int(round(v[0]))), axis=(0, 1))
    return SE2Volume(s, x.period)


def se2_convolve_reference(x, y):
    """Discretized left-invariant convolution on the rigid-motion group.

    ``out(v, theta) = sum_{v', theta'} x(v', theta') y(r_{-theta'}(v - v'), theta - theta') dv dtheta``
    with periodic spatial indexing, ``dv = 1`` and bilinear interpolation of
    ``y`` at rotated displacements. Quadratic cost; meant as a test oracle on
    volumes up to about 16 x 16 x 8.
    """
    if x.shape != y.shape:
        raise ValueError(f"volume dims differ: {x.shape} vs {y.shape}")
    if not np.isclose(x.period, y.period):
        raise ValueError("orientation periods differ")
    n = x.n_theta
    thetas = np.arange(n) * x.dtheta
    xs = np.ascontiguousarray(x.samples, dtype=np.complex128)
    ys = np.ascontiguousarray(y.samples, dtype=np.complex128)
    out = _backend.impl.se2_ref_conv(xs, ys, np.cos(thetas), np.sin(thetas))
    return SE2Volume(out * x.dtheta, x.period)


def se2_convolve_separable(x, y_s, y_bar):
    """Factorized convolution with ``y(v, theta) = y_s(v) ybar(theta)``.

    Computes, for each ``theta'``, the spatial convolution of ``x(., theta')``
    with the rotated filter ``y_s(r_{-theta'} .)`` (bilinear on the periodic
    grid), then the circular convolution along orientation.
    """
    h, w, n = x.shape
    thetas = np.arange(n) * x.dtheta
    ys = np.ascontiguousarray(y_s, dtype=np.complex128)
    spatial = np.empty((h, w, n), dtype=np.complex128)
    for t in range(n):
        rf = rotate_filter_bilinear(ys, thetas[t])
        spatial[:, :, t] = np.fft.ifft2(np.fft.fft2(x.samples[:, :, t]) * np.fft.fft2(rf))
    yb = np.fft.fft(np.asarray(y_bar, dtype=np.complex128))
    out = np.fft.ifft(np.fft.fft(spatial, axis=2) * yb[None, None, :], axis=2)
    return SE2Volume(out * x.dtheta, x.period)


def rotate_filter_bilinear(f, theta):
    """``f(r_{-theta} d)`` for every centered periodic displacement ``d``."""
    h, w = f.shape
    dr = np.fft.fftfreq(h) * h
    dc = np.fft.fftfreq(w) * w
    r, c = np.meshgrid(dr, dc, indexing="ij")
    u1, u2 = c, -r
    ct, st = math.cos(theta), math.sin(theta)
    p1 = ct * u1 + st * u2
    p2 = -st * u1 + ct * u2
    return bilinear_periodic(f, -p2, p1)


def bilinear_periodic(f, rows, cols):
    h, w = f.shape
    r0 = np.floor(rows)
    c0 = np.floor(cols)
    fr = rows - r0
    fc = cols - c0
    r0 = r0.astype(np.int64) % h
    c0 = c0.astype(np.int64) % w
    r1 = (r0 + 1) % h
    c1 = (c0 + 1) % w
    return ((1 - fr) * (1 - fc) * f[r0, c0] + (1 - fr) * fc * f[r0, c1]
            + fr * (1 - fc) * f[r1, c0] + fr * fc * f[r1, c1])
