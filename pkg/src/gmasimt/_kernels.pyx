# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled fused prior/posterior attention kernel.

Same contract as ``gmasimt._kernels_py``; rows beyond the support bound stay
exactly zero.  Variant codes: 0 gaussian, 1 laplace, 2 linear, 3 none.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs, INFINITY

cnp.import_array()


cdef inline double _log_prior(double j, double p, double s, long g, int variant) nogil:
    cdef double d = j - p
    cdef double w
    if variant == 0:
        return -(d * d) / (2.0 * s * s)
    elif variant == 1:
        return -fabs(d) / s
    elif variant == 2:
        w = g + 1.0
        if p > w:
            w = p
        w = 1.0 - fabs(d) / w
        if w <= 0.0:
            return -INFINITY
        return log(w)
    return 0.0


def posterior_forward(const double[:, ::1] scores, const double[::1] p, const double[::1] sigma,
                      const long[::1] g, int variant):
    if variant < 0 or variant > 3:
        raise ValueError(f"unknown prior variant code {variant}")
    cdef Py_ssize_t N = scores.shape[0]
    cdef Py_ssize_t J = scores.shape[1]
    out_arr = np.zeros((N, J), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t n, j, bound
    cdef double m, u, total
    with nogil:
        for n in range(N):
            bound = g[n]
            if bound > J:
                bound = J
            m = -INFINITY
            for j in range(bound):
                u = scores[n, j] + _log_prior(j + 1.0, p[n], sigma[n], g[n], variant)
                out[n, j] = u
                if u > m:
                    m = u
            total = 0.0
            for j in range(bound):
                u = exp(out[n, j] - m)
                out[n, j] = u
                total += u
            for j in range(bound):
                out[n, j] /= total
    return out_arr


def posterior_backward(const double[:, ::1] beta, const double[:, ::1] grad_beta, const double[::1] p,
                       const double[::1] sigma, const long[::1] g, int variant):
    if variant < 0 or variant > 3:
        raise ValueError(f"unknown prior variant code {variant}")
    cdef Py_ssize_t N = beta.shape[0]
    cdef Py_ssize_t J = beta.shape[1]
    du_arr = np.zeros((N, J), dtype=np.float64)
    dp_arr = np.zeros(N, dtype=np.float64)
    ds_arr = np.zeros(N, dtype=np.float64)
    cdef double[:, ::1] du = du_arr
    cdef double[::1] dp = dp_arr
    cdef double[::1] ds = ds_arr
    cdef Py_ssize_t n, j, bound
    cdef double dot, d, s, a, w, r, sgn, acc_p, acc_s, v
    with nogil:
        for n in range(N):
            bound = g[n]
            if bound > J:
                bound = J
            dot = 0.0
            for j in range(bound):
                dot += grad_beta[n, j] * beta[n, j]
            s = sigma[n]
            acc_p = 0.0
            acc_s = 0.0
            for j in range(bound):
                v = beta[n, j] * (grad_beta[n, j] - dot)
                du[n, j] = v
                d = (j + 1.0) - p[n]
                if variant == 0:
                    acc_p += v * d / (s * s)
                    acc_s += v * d * d / (s * s * s)
                elif variant == 1:
                    sgn = 1.0 if d > 0 else (-1.0 if d < 0 else 0.0)
                    acc_p += v * sgn / s
                    acc_s += v * fabs(d) / (s * s)
                elif variant == 2:
                    a = fabs(d)
                    sgn = 1.0 if d > 0 else (-1.0 if d < 0 else 0.0)
                    w = g[n] + 1.0
                    r = 0.0
                    if p[n] > w:
                        w = p[n]
                        r = 1.0
                    acc_p += v * (sgn / w + a / (w * w) * r) / (1.0 - a / w)
            dp[n] = acc_p
            ds[n] = acc_s
    return du_arr, dp_arr, ds_arr
