# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dealiased advection kernel.

Works on the ``k1 >= 0`` half of each coefficient array in real arithmetic;
the ``k1 < 0`` half of the result follows from the reality condition.
"""

import numpy as np
from libc.math cimport M_PI


def advect_half(double[:, ::1] vr, double[:, ::1] vi, double[:, ::1] wr, double[:, ::1] wi,
                double[:, ::1] zc, double[:, ::1] zs, double[:, ::1] xc, double[:, ::1] xs,
                double[:, ::1] zc_anal, double[:, ::1] zs_anal):
    """Return ``(gv_re, gv_im, gw_re, gw_im)`` of shape ``(m+1, 2m+1)``.

    ``vr``.. are ``(m+1, m+1)`` arrays for ``k1 = 0..m``; ``zc``/``zs`` are
    ``(nz, 2m+1)`` cos/sin tables, ``xc``/``xs`` are ``(nx, m+1)`` tables and
    ``zc_anal``/``zs_anal`` the weighted ``(nz, 2m+1)`` analysis tables.
    """
    cdef Py_ssize_t m = vr.shape[0] - 1
    cdef Py_ssize_t nz = zc.shape[0]
    cdef Py_ssize_t nx = xc.shape[0]
    cdef Py_ssize_t nb = zc_anal.shape[1]
    cdef Py_ssize_t k1, k2, i, j
    cdef double a, b, c, s, pk, fac, g

    # z synthesis: value and z-derivative, per k1, as real/imag pairs
    cdef double[:, :, ::1] Z = np.zeros((nz, m + 1, 8))
    for k1 in range(m + 1):
        for i in range(nz):
            for k2 in range(m + 1):
                c = zc[i, k2]
                s = zs[i, k2]
                pk = M_PI * k2
                Z[i, k1, 0] += vr[k1, k2] * c
                Z[i, k1, 1] += vi[k1, k2] * c
                Z[i, k1, 2] -= pk * vr[k1, k2] * s
                Z[i, k1, 3] -= pk * vi[k1, k2] * s
                Z[i, k1, 4] += wr[k1, k2] * s
                Z[i, k1, 5] += wi[k1, k2] * s
                Z[i, k1, 6] += pk * wr[k1, k2] * c
                Z[i, k1, 7] += pk * wi[k1, k2] * c

    # x synthesis of v, vx, vz, w, wx, wz followed by the two products
    cdef double[:, ::1] gv = np.empty((nx, nz))
    cdef double[:, ::1] gw = np.empty((nx, nz))
    cdef double v, vx, vz, w, wx, wz
    for j in range(nx):
        for i in range(nz):
            v = Z[i, 0, 0]
            vz = Z[i, 0, 2]
            w = Z[i, 0, 4]
            wz = Z[i, 0, 6]
            vx = 0.0
            wx = 0.0
            for k1 in range(1, m + 1):
                c = 2.0 * xc[j, k1]
                s = 2.0 * xs[j, k1]
                pk = M_PI * k1
                v += Z[i, k1, 0] * c - Z[i, k1, 1] * s
                vz += Z[i, k1, 2] * c - Z[i, k1, 3] * s
                w += Z[i, k1, 4] * c - Z[i, k1, 5] * s
                wz += Z[i, k1, 6] * c - Z[i, k1, 7] * s
                # d/dx multiplies by i pi k1
                vx -= pk * (Z[i, k1, 1] * c + Z[i, k1, 0] * s)
                wx -= pk * (Z[i, k1, 5] * c + Z[i, k1, 4] * s)
            gv[j, i] = v * vx + w * vz
            gw[j, i] = v * wx + w * wz

    # x analysis to k1 = 0..m
    cdef double[:, :, ::1] G = np.zeros((4, m + 1, nz))
    fac = 1.0 / nx
    for k1 in range(m + 1):
        for j in range(nx):
            c = xc[j, k1] * fac
            s = xs[j, k1] * fac
            for i in range(nz):
                G[0, k1, i] += gv[j, i] * c
                G[1, k1, i] -= gv[j, i] * s
                G[2, k1, i] += gw[j, i] * c
                G[3, k1, i] -= gw[j, i] * s

    # z analysis to k2 = 0..2m
    out = np.zeros((4, m + 1, nb))
    cdef double[:, :, ::1] O = out
    for k1 in range(m + 1):
        for i in range(nz):
            for k2 in range(nb):
                c = zc_anal[i, k2]
                s = zs_anal[i, k2]
                O[0, k1, k2] += G[0, k1, i] * c
                O[1, k1, k2] += G[1, k1, i] * c
                O[2, k1, k2] += G[2, k1, i] * s
                O[3, k1, k2] += G[3, k1, i] * s
    return out
