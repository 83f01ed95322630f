"""Independent reference computations used by the tests."""

import itertools
import math

import numpy as np


def profile_objective(b, y, x, lam0):
    """Scaled-lasso objective minimized over sigma: |y - Xb|/sqrt(n) + lam0 * sum_k w_k |b_k|."""
    n = y.shape[0]
    w = np.sqrt((x * x).sum(axis=0) / n)
    r = y[:, None] - x @ b  # b is (p, m) for m candidates
    return np.sqrt((r * r).sum(axis=0) / n) + lam0 * (w[:, None] * np.abs(b)).sum(axis=0)


def grid_search(y, x, lam0, step=1e-4, refine=1e-6, half=20):
    """Coarse-to-fine grid search for p <= 2 (the objective is convex).

    Levels shrink the step by 10 down to ``step``, then one local refinement
    level at ``refine``. Returns ``(b, sigma)``.
    """
    n, p = x.shape
    ols = np.linalg.lstsq(x, y, rcond=None)[0]
    center = np.zeros(p)
    h = (np.max(np.abs(ols)) + 1.0) / half
    steps = []
    while h > step:
        steps.append(h)
        h /= 10.0
    steps += [step, refine]
    for h in steps:
        axes = [c + h * np.arange(-half, half + 1) for c in center]
        pts = np.array(list(itertools.product(*axes))).T
        f = profile_objective(pts, y, x, lam0)
        center = pts[:, int(np.argmin(f))]
        # snap to zero when the grid straddles it (the optimum is often exactly 0)
        for k in range(p):
            if abs(center[k]) < h:
                trial = center.copy()
                trial[k] = 0.0
                if profile_objective(trial[:, None], y, x, lam0)[0] <= profile_objective(center[:, None], y, x, lam0)[0]:
                    center = trial
    r = y - x @ center
    return center, math.sqrt(float(r @ r) / n)


def kkt_violation(fit, y, x, lam0, nonzero=1e-12):
    """Largest violation of the scaled-lasso optimality conditions."""
    n = y.shape[0]
    scale = np.sqrt((x * x).sum(axis=0) / n)
    r = y - x @ fit.coefficients
    c = (x / scale).T @ r / (n * fit.sigma_hat)
    g = fit.coefficients * scale
    worst = 0.0
    for j in range(x.shape[1]):
        if abs(g[j]) > nonzero:
            worst = max(worst, abs(c[j] - lam0 * np.sign(g[j])))
        else:
            worst = max(worst, abs(c[j]) - lam0)
    return worst


def weighted_scaled_lasso(y, x, lam0, tol=1e-14, max_iter=100_000):
    """Scaled lasso solved on the raw design with weights |X_k|/sqrt(n)."""
    n, p = x.shape
    nsq = (x * x).sum(axis=0) / n
    w = np.sqrt(nsq)
    b = np.zeros(p)
    r = y.copy()
    sigma = math.sqrt(float(r @ r) / n)
    for _ in range(max_iter):
        for _ in range(max_iter):
            change = 0.0
            for k in range(p):
                z = x[:, k] @ r / n + nsq[k] * b[k]
                t = lam0 * sigma * w[k]
                new = np.sign(z) * max(abs(z) - t, 0.0) / nsq[k]
                if new != b[k]:
                    r -= x[:, k] * (new - b[k])
                    change = max(change, abs(new - b[k]) * w[k])
                    b[k] = new
            if change <= tol:
                break
        new_sigma = math.sqrt(float(r @ r) / n)
        if abs(new_sigma - sigma) <= tol * sigma:
            sigma = new_sigma
            break
        sigma = new_sigma
    return b, sigma


def random_regression(rng, n, p, sparsity=3, noise=1.0):
    scales = np.exp(rng.uniform(-1, 1, size=p))
    x = rng.standard_normal((n, p)) * scales
    b = np.zeros(p)
    k = min(sparsity, p)
    b[rng.choice(p, size=k, replace=False)] = rng.uniform(0.5, 2.0, size=k) * rng.choice([-1, 1], size=k) / scales[:k]
    y = x @ b + noise * rng.standard_normal(n)
    return y, x
