# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; see ``_pykernels`` for the reference implementation."""

import numpy as np

from libc.math cimport cos, sin, fabs


cdef inline double _sinc(double x) noexcept nogil:
    if fabs(x) < 1e-4:
        return 1.0 - x * x / 6.0
    return sin(x) / x


def window_means(const double[:, ::1] omegas, const double[:, ::1] phases,
                 const double[::1] amps, const double[::1] centers,
                 const double[::1] halfwidths):
    cdef Py_ssize_t R = omegas.shape[0], J = omegas.shape[1], K = centers.shape[0]
    cdef Py_ssize_t r, j, k
    cdef double w, phi, a, acc
    out_arr = np.zeros((R, K))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for r in range(R):
            for j in range(J):
                a = amps[j]
                if a == 0.0:
                    continue
                w = omegas[r, j]
                phi = phases[r, j]
                for k in range(K):
                    out[r, k] += a * _sinc(w * halfwidths[k]) * cos(w * centers[k] + phi)
    return out_arr


def overlap_sums(const double[:, ::1] omega, const double[:, ::1] wk,
                 const double[:, ::1] wg, const double[::1] delta,
                 const double[::1] ta, const double[::1] tb):
    cdef Py_ssize_t P = omega.shape[0], M = omega.shape[1], Q = delta.shape[0]
    cdef Py_ssize_t p, m, q
    cdef double w, f, kp, gp, val, err, absum, d, ha, hb
    out_arr = np.zeros((Q, 3))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for q in range(Q):
            d = delta[q]
            ha = 0.5 * ta[q]
            hb = 0.5 * tb[q]
            val = 0.0
            err = 0.0
            absum = 0.0
            for p in range(P):
                kp = 0.0
                gp = 0.0
                for m in range(M):
                    w = omega[p, m]
                    f = cos(w * d) * _sinc(w * ha) * _sinc(w * hb)
                    kp += wk[p, m] * f
                    gp += wg[p, m] * f
                val += kp
                err += fabs(kp - gp)
                absum += fabs(kp)
            out[q, 0] = val
            out[q, 1] = err
            out[q, 2] = absum
    return out_arr
