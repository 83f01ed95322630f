"""Pure-Python versions of the compiled kernels (same signatures)."""

import math

import numpy as np


def lasso_cd(gram, xty, cols, coef, q, lam, tol, max_sweeps):
    diag = gram.diagonal()
    cols = [int(j) for j in cols]
    for sweeps in range(1, max_sweeps + 1):
        max_change = 0.0
        for j in cols:
            old = coef[j]
            gjj = diag[j]
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
                q += d * gram[j]
                max_change = max(max_change, abs(d))
        if max_change <= tol:
            return sweeps
    return max_sweeps + 1


def jacobi_eigen(a, tol, max_sweeps):
    n = a.shape[0]
    v = np.eye(n)
    thresh = tol * math.sqrt(float(np.sum(a * a)))

    def off_norm():
        off = a - np.diag(np.diag(a))
        return math.sqrt(float(np.sum(off * off)))

    sweeps = 0
    converged = False
    off = off_norm()
    while True:
        if off <= thresh:
            converged = True
            break
        if sweeps >= max_sweeps:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        off = off_norm()
    return a.diagonal().copy(), v, sweeps, converged
