"""NumPy implementations of the hot kernels (same contracts as ``_kernels``)."""

import numpy as np


def _rotated_indices(h, w, c, s):
    dr = np.fft.fftfreq(h) * h
    dc = np.fft.fftfreq(w) * w
    r, q = np.meshgrid(dr, dc, indexing="ij")
    u1, u2 = q, -r
    p1 = c * u1 + s * u2
    p2 = -s * u1 + c * u2
    rows, cols = -p2, p1
    r0 = np.floor(rows)
    c0 = np.floor(cols)
    fr = rows - r0
    fc = cols - c0
    r0 = r0.astype(np.int64) % h
    c0 = c0.astype(np.int64) % w
    return r0, c0, (r0 + 1) % h, (c0 + 1) % w, fr, fc


def se2_ref_conv(x, y, cos_t, sin_t):
    """``out(v, t) = sum_{v', t'} x(v', t') y(r_{-t'}(v - v'), t - t')`` (no measure factors)."""
    h, w, n = x.shape
    out = np.zeros((h, w, n), dtype=np.complex128)
    for tp in range(n):
        r0, c0, r1, c1, fr, fc = _rotated_indices(h, w, cos_t[tp], sin_t[tp])
        wa = ((1 - fr) * (1 - fc))[..., None]
        wb = ((1 - fr) * fc)[..., None]
        wc = (fr * (1 - fc))[..., None]
        wd = (fr * fc)[..., None]
        # yr[d, tau] = y(r_{-theta'} d, tau)
        yr = wa * y[r0, c0] + wb * y[r0, c1] + wc * y[r1, c0] + wd * y[r1, c1]
        acc = np.zeros((h, w, n), dtype=np.complex128)
        xs = x[:, :, tp]
        for a in range(h):
            for b in range(w):
                if xs[a, b] != 0:
                    acc += xs[a, b] * np.roll(yr, (a, b), axis=(0, 1))
        out += np.roll(acc, tp, axis=2)
    return out


def conv_taps_strided(x, taps, stride):
    """``out[m] = sum_p taps[p] x[stride m - (p - center)]`` with periodic indexing."""
    h, w = x.shape
    ph, pw = taps.shape
    ch, cw = ph // 2, pw // 2
    ho, wo = h // stride, w // stride
    out = np.zeros((ho, wo), dtype=np.complex128)
    rows = np.arange(ho) * stride
    cols = np.arange(wo) * stride
    for p in range(ph):
        rr = (rows - (p - ch)) % h
        for q in range(pw):
            t = taps[p, q]
            if t != 0:
                cc = (cols - (q - cw)) % w
                out += t * x[np.ix_(rr, cc)]
    return out
