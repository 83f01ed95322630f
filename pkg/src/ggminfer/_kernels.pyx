# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: Gram-form coordinate descent and cyclic Jacobi."""

from libc.math cimport fabs, sqrt

import numpy as np


def lasso_cd(const double[:, ::1] gram, const double[::1] xty,
             const Py_ssize_t[::1] cols, double[::1] coef, double[::1] q,
             double lam, double tol, int max_sweeps):
    """Cyclic coordinate descent for 0.5 b'Gb - b'c + lam |b|_1.

    Only coordinates listed in ``cols`` move. ``q`` must hold ``gram @ coef``
    on entry and is kept in sync. Returns the number of full sweeps run
    (``max_sweeps + 1`` signals that the tolerance was not reached).
    """
    cdef Py_ssize_t ncols = cols.shape[0]
    cdef Py_ssize_t p = gram.shape[0]
    cdef Py_ssize_t a, j, k
    cdef double old, new, z, d, gjj, max_change
    cdef int sweeps = 0
    cdef bint done = False
    with nogil:
        while sweeps < max_sweeps:
            sweeps += 1
            max_change = 0.0
            for a in range(ncols):
                j = cols[a]
                old = coef[j]
                gjj = gram[j, j]
                z = xty[j] - q[j] + gjj * old
                if z > lam:
                    new = (z - lam) / gjj
                elif z < -lam:
                    new = (z + lam) / gjj
                else:
                    new = 0.0
                d = new - old
                if d != 0.0:
                    coef[j] = new
                    for k in range(p):
                        q[k] += d * gram[j, k]
                    if fabs(d) > max_change:
                        max_change = fabs(d)
            if max_change <= tol:
                done = True
                break
    if done:
        return sweeps
    return max_sweeps + 1


cdef double _offdiag_norm(double[:, ::1] a) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                acc += a[i, j] * a[i, j]
    return sqrt(acc)


def jacobi_eigen(double[:, ::1] a, double tol, int max_sweeps):
    """Cyclic Jacobi on ``a`` (overwritten). Returns (diag, vectors, sweeps, converged)."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k, pp, qq
    cdef double frob = 0.0, thresh, off
    cdef double apq, theta, t, c, s, x, y
    cdef int sweeps = 0
    cdef bint converged = False
    v_arr = np.eye(n)
    cdef double[:, ::1] v = v_arr
    with nogil:
        for i in range(n):
            for j in range(n):
                frob += a[i, j] * a[i, j]
        thresh = tol * sqrt(frob)
        off = _offdiag_norm(a)
        while True:
            if off <= thresh:
                converged = True
                break
            if sweeps >= max_sweeps:
                break
            sweeps += 1
            for pp in range(n - 1):
                for qq in range(pp + 1, n):
                    apq = a[pp, qq]
                    if apq == 0.0:
                        continue
                    theta = (a[qq, qq] - a[pp, pp]) / (2.0 * apq)
                    if fabs(theta) > 1e150:
                        t = 0.5 / theta
                    elif theta >= 0.0:
                        t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                    else:
                        t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for k in range(n):
                        x = a[k, pp]
                        y = a[k, qq]
                        a[k, pp] = c * x - s * y
                        a[k, qq] = s * x + c * y
                    for k in range(n):
                        x = a[pp, k]
                        y = a[qq, k]
                        a[pp, k] = c * x - s * y
                        a[qq, k] = s * x + c * y
                    a[pp, qq] = 0.0
                    a[qq, pp] = 0.0
                    for k in range(n):
                        x = v[k, pp]
                        y = v[k, qq]
                        v[k, pp] = c * x - s * y
                        v[k, qq] = s * x + c * y
            off = _offdiag_norm(a)
    diag = np.array([a[i, i] for i in range(n)])
    return diag, v_arr, sweeps, converged
