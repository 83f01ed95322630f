"""Scaled lasso: joint estimation of regression coefficients and noise level.

The objective, for a design ``X`` with columns rescaled to length ``sqrt(n)``
(``X~ = X D^{-1/2}``, ``D = diag(X'X/n)``), is

    |y - X~ g|^2 / (2 n s) + s / 2 + lam0 * |g|_1

which is jointly convex in ``(g, s)``. Coefficients on the original design
scale are ``b = D^{-1/2} g``. The solver alternates coordinate descent in
``g`` at penalty ``lam0 * s`` with the closed-form update ``s = |r| / sqrt(n)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import (
    DegenerateResidual,
    DomainError,
    NoConvergence,
    NotPositiveDefinite,
    RankDeficientSupport,
    ZeroColumn,
)
from .numkit import DataMatrix, cho_solve, cholesky, quantile_penalty

CD_TOL = 1e-9
SIGMA_RTOL = 1e-9
MAX_OUTER = 500
MAX_SWEEPS = 100_000
NONZERO_TOL = 1e-12


@dataclass(frozen=True)
class PenaltyPolicy:
    """How the penalty level ``lam0`` is chosen for a given ``(n, p~)``.

    ``conservative``: ``(1 + eps) * sqrt(2 * delta * log(p~) / n)``.
    ``quantile``: ``(1 + eps) * L_{n - 3/2}(k / p~)``.
    """

    kind: str = "quantile"
    delta: float = 1.0
    eps: float = 0.0
    k: float = 1.0

    def __post_init__(self):
        if self.kind not in ("conservative", "quantile"):
            raise DomainError(f"unknown penalty kind {self.kind!r}")
        if self.eps < 0:
            raise DomainError("eps must be nonnegative")
        if self.kind == "conservative" and self.delta < 1:
            raise DomainError("conservative policy needs delta >= 1")
        if self.kind == "quantile" and self.k < 1:
            raise DomainError("quantile policy needs k >= 1")

    @classmethod
    def conservative(cls, delta: float = 1.0, eps: float = 0.0) -> "PenaltyPolicy":
        return cls("conservative", delta=delta, eps=eps)

    @classmethod
    def quantile(cls, k: float = 1.0, eps: float = 0.0) -> "PenaltyPolicy":
        return cls("quantile", k=k, eps=eps)

    def resolve(self, n: int, p_tilde: int) -> float:
        return resolve_penalty(self, n, p_tilde)

    def to_dict(self) -> dict:
        if self.kind == "conservative":
            return {"kind": self.kind, "delta": self.delta, "eps": self.eps}
        return {"kind": self.kind, "k": self.k, "eps": self.eps}


def resolve_penalty(policy: PenaltyPolicy, n: int, p_tilde: int) -> float:
    if p_tilde < 2:
        raise DomainError("p_tilde must be at least 2")
    if n < 2:
        raise DomainError("n must be at least 2")
    if policy.kind == "conservative":
        return (1.0 + policy.eps) * math.sqrt(2.0 * policy.delta * math.log(p_tilde) / n)
    if not policy.k < p_tilde:
        raise DomainError("quantile policy needs k < p_tilde")
    return (1.0 + policy.eps) * quantile_penalty(n - 1.5, policy.k / p_tilde)


@dataclass(frozen=True, eq=False)
class ScaledLassoFit:
    coefficients: np.ndarray
    sigma_hat: float
    support: tuple
    lambda0: float
    objective: float
    iterations: int
    objective_path: tuple = field(default=(), repr=False)
    degenerate: bool = False
    method: str = "scaled_lasso"


@dataclass
class GramSolution:
    """Raw solver output in the standardized coordinates."""

    coef: np.ndarray
    sigma: float
    path: list
    iterations: int
    degenerate: bool


def solve_gram(gram, xty, y, xs, cols, lam0, coef=None, *, tol=CD_TOL, max_outer=MAX_OUTER):
    """Scaled lasso on pre-computed second moments.

    Parameters
    ----------
    gram : (m, m) array
        ``X~'X~ / n``; only the rows/columns in ``cols`` are used.
    xty : (m,) array
        ``X~'y / n``.
    y : (n,) array
        Response, used to evaluate residuals exactly.
    xs : (n, m) array
        Standardized design ``X~``.
    cols : int array
        Active design columns. Entries of ``coef`` outside ``cols`` must be 0.
    coef : (m,) array, optional
        Warm start; copied.
    """
    m = gram.shape[0]
    n = y.shape[0]
    cols = np.ascontiguousarray(cols, dtype=np.intp)
    coef = np.zeros(m) if coef is None else np.array(coef, dtype=float)
    yy = float(y @ y) / n
    if yy <= 0.0:
        coef[:] = 0.0
        return GramSolution(coef, 0.0, [0.0], 0, True)
    nz = np.flatnonzero(coef)
    q = gram[:, nz] @ coef[nz] if nz.size else np.zeros(m)
    ynorm = math.sqrt(yy)
    floor = 1e-12 * (ynorm + 1.0)
    cd_tol = tol * ynorm

    def rss():
        # direct residual; the Gram identity cancels badly for small residuals
        nz = np.flatnonzero(coef)
        r = y - xs[:, nz] @ coef[nz] if nz.size else y
        return float(r @ r) / n

    def objective(r, s):
        return r / (2.0 * s) + s / 2.0 + lam0 * float(np.sum(np.abs(coef)))

    r = rss()
    sigma = max(math.sqrt(r), floor)
    path = [objective(r, sigma)]
    it = 0
    for it in range(1, max_outer + 1):
        sweeps = _backend.lasso_cd(gram, xty, cols, coef, q, lam0 * sigma, cd_tol, MAX_SWEEPS)
        if sweeps > MAX_SWEEPS:
            raise NoConvergence("coordinate descent did not reach tolerance")
        r = rss()
        new = max(math.sqrt(r), floor)
        path.append(objective(r, new))
        done = abs(new - sigma) <= SIGMA_RTOL * sigma
        sigma = new
        if done:
            break
    return GramSolution(coef, sigma, path, it, sigma <= floor)


def _as_data(x) -> DataMatrix:
    return x if isinstance(x, DataMatrix) else DataMatrix(x)


def _support(coef):
    return tuple(int(j) for j in np.flatnonzero(np.abs(coef) > NONZERO_TOL))


def fit_scaled_lasso(y, x, penalty, warm_start=None) -> ScaledLassoFit:
    """Fit the scaled lasso of ``y`` on the design ``x``.

    ``penalty`` is a :class:`PenaltyPolicy` (resolved with ``p~ = x.p``) or a
    positive float used as ``lam0`` directly. ``warm_start`` holds
    coefficients on the original design scale.
    """
    x = _as_data(x)
    y = np.asarray(y, dtype=float)
    n, p = x.n, x.p
    if y.shape != (n,):
        raise ValueError(f"y must have length {n}")
    if n < 4:
        raise ValueError("scaled lasso needs n >= 4")
    zero = np.flatnonzero(x.col_norm_sq <= 0.0)
    if zero.size:
        raise ZeroColumn(zero[0])
    lam0 = penalty.resolve(n, p) if isinstance(penalty, PenaltyPolicy) else float(penalty)
    if not lam0 > 0:
        raise DomainError("penalty level must be positive")

    scale = np.sqrt(x.col_norm_sq / n)
    xs = x.values / scale
    gram = xs.T @ xs / n
    gram = (gram + gram.T) / 2.0
    xty = xs.T @ y / n
    start = None if warm_start is None else np.asarray(warm_start, dtype=float) * scale
    sol = solve_gram(gram, xty, y, xs, np.arange(p), lam0, start)

    support = _support(sol.coef)
    beta = np.zeros(p)
    beta[list(support)] = sol.coef[list(support)] / scale[list(support)]
    resid = y - x.values[:, support] @ beta[list(support)] if support else y.copy()
    sigma = math.sqrt(float(resid @ resid) / n)
    degenerate = sol.degenerate
    if degenerate:
        warnings.warn("scaled lasso residual collapsed to zero", DegenerateResidual, stacklevel=2)
    if sigma > 0:
        objective = float(resid @ resid) / (2 * n * sigma) + sigma / 2 + lam0 * float(np.sum(np.abs(beta) * scale))
    else:
        objective = lam0 * float(np.sum(np.abs(beta) * scale))
    return ScaledLassoFit(
        coefficients=beta,
        sigma_hat=sigma,
        support=support,
        lambda0=lam0,
        objective=objective,
        iterations=sol.iterations,
        objective_path=tuple(sol.path),
        degenerate=degenerate,
    )


def refit_lse(y, x, support) -> ScaledLassoFit:
    """Ordinary least squares restricted to ``support``.

    Raises
    ------
    RankDeficientSupport
        If the Gram matrix of the selected columns is not positive definite.
    """
    x = _as_data(x)
    y = np.asarray(y, dtype=float)
    n, p = x.n, x.p
    support = tuple(sorted(int(j) for j in support))
    if len(support) >= n:
        raise RankDeficientSupport(f"support of size {len(support)} needs more than n={n} rows")
    beta = np.zeros(p)
    if support:
        xs = x.values[:, support]
        g = xs.T @ xs / n
        g = (g + g.T) / 2.0
        try:
            low = cholesky(g)
        except NotPositiveDefinite as exc:
            raise RankDeficientSupport(str(exc)) from exc
        beta[list(support)] = cho_solve(low, xs.T @ y / n)
        resid = y - xs @ beta[list(support)]
    else:
        resid = y.copy()
    sigma = math.sqrt(float(resid @ resid) / n)
    return ScaledLassoFit(
        coefficients=beta,
        sigma_hat=sigma,
        support=support,
        lambda0=0.0,
        objective=sigma,
        iterations=0,
        method="lse_refit",
    )
