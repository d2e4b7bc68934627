# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels; see ``_fallback`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def se2_ref_conv(const double complex[:, :, ::1] x, const double complex[:, :, ::1] y,
                 const double[::1] cos_t, const double[::1] sin_t):
    cdef Py_ssize_t h = x.shape[0], w = x.shape[1], n = x.shape[2]
    out_arr = np.zeros((h, w, n), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    yr_arr = np.empty((h, w, n), dtype=np.complex128)
    cdef double complex[:, :, ::1] yr = yr_arr
    cdef Py_ssize_t tp, a, b, r, c, tau, r0, c0, r1, c1, o, q, sh
    cdef double d1, d2, rows, cols, fr, fc, wa, wb, wc, wd, ct, st
    cdef double complex xv
    for tp in range(n):
        ct = cos_t[tp]
        st = sin_t[tp]
        # yr[d, tau] = y(r_{-theta'} d, tau), bilinear
        for r in range(h):
            for c in range(w):
                d1 = c if c < w - w // 2 else c - w
                d2 = -(r if r < h - h // 2 else r - h)
                rows = -(-st * d1 + ct * d2)
                cols = ct * d1 + st * d2
                fr = floor(rows)
                fc = floor(cols)
                r0 = (<Py_ssize_t>fr) % h
                c0 = (<Py_ssize_t>fc) % w
                if r0 < 0:
                    r0 += h
                if c0 < 0:
                    c0 += w
                r1 = (r0 + 1) % h
                c1 = (c0 + 1) % w
                fr = rows - fr
                fc = cols - fc
                wa = (1 - fr) * (1 - fc)
                wb = (1 - fr) * fc
                wc = fr * (1 - fc)
                wd = fr * fc
                for tau in range(n):
                    yr[r, c, tau] = (wa * y[r0, c0, tau] + wb * y[r0, c1, tau]
                                     + wc * y[r1, c0, tau] + wd * y[r1, c1, tau])
        for a in range(h):
            for b in range(w):
                xv = x[a, b, tp]
                if xv == 0:
                    continue
                for r in range(h):
                    o = r - a
                    if o < 0:
                        o += h
                    for c in range(w):
                        q = c - b
                        if q < 0:
                            q += w
                        for tau in range(n):
                            sh = tp + tau
                            if sh >= n:
                                sh -= n
                            out[r, c, sh] += xv * yr[o, q, tau]
    return out_arr


def conv_taps_strided(const double complex[:, ::1] x, const double complex[:, ::1] taps,
                      Py_ssize_t stride):
    cdef Py_ssize_t h = x.shape[0], w = x.shape[1]
    cdef Py_ssize_t ph = taps.shape[0], pw = taps.shape[1]
    cdef Py_ssize_t ch = ph // 2, cw = pw // 2
    cdef Py_ssize_t ho = h // stride, wo = w // stride
    out_arr = np.zeros((ho, wo), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t m, k, p, q, rr, cc
    cdef double complex acc, t
    for m in range(ho):
        for k in range(wo):
            acc = 0
            for p in range(ph):
                rr = (m * stride - (p - ch)) % h
                if rr < 0:
                    rr += h
                for q in range(pw):
                    t = taps[p, q]
                    cc = (k * stride - (q - cw)) % w
                    if cc < 0:
                        cc += w
                    acc = acc + t * x[rr, cc]
            out[m, k] = acc
    return out_arr
