"""Entrywise precision-matrix estimation by pairwise residual regression.

For a node pair ``A = {i, j}`` both columns are regressed on the remaining
``p - 2`` columns (scaled lasso, optionally followed by least squares on the
selected model). The 2x2 residual Gram matrix ``Theta_AA`` is inverted to give
``Omega_AA``; its off-diagonal entry estimates ``omega_ij`` with asymptotic
variance ``(omega_ii * omega_jj + omega_ij**2) / n``.

Node indices are zero-based throughout the library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotPositiveDefinite, RankDeficientSupport, SingularPair, ZeroColumn
from .numkit import DataMatrix, cho_solve, cholesky, inv_norm_cdf, invert_2x2, symmetrize
from .scaled_lasso import NONZERO_TOL, PenaltyPolicy, solve_gram

METHODS = ("scaled_lasso", "lse_refit")
_ALIASES = {"sl": "scaled_lasso", "lse": "lse_refit", "scaled_lasso": "scaled_lasso", "lse_refit": "lse_refit"}

DEFAULT_POLICY = PenaltyPolicy.quantile(k=1, eps=0.0)


def normalize_method(method: str) -> str:
    try:
        return _ALIASES[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {sorted(_ALIASES)}") from None


def _as_data(x) -> DataMatrix:
    return x if isinstance(x, DataMatrix) else DataMatrix(x)


def graph_penalty(policy, n: int, p: int) -> float:
    """Penalty level shared by every node regression of a p-variable graph.

    A single level (resolved with ``p~ = p``) keeps one-versus-rest and
    two-versus-rest fits on the same objective, which the cached shortcut in
    :func:`estimate_full` relies on.
    """
    if isinstance(policy, PenaltyPolicy):
        return policy.resolve(n, max(p, 2))
    return float(policy)


@dataclass
class NodeFit:
    node: int
    excluded: tuple
    coef: np.ndarray  # original scale, length p, zero at node and excluded
    gamma: np.ndarray  # standardized scaled-lasso coefficients (warm starts)
    sigma: float  # scaled-lasso noise level
    support: tuple
    resid: np.ndarray
    lse_fallback: bool = False


class GraphDesign:
    """Per-dataset cache: standardized design and its Gram matrix."""

    def __init__(self, x: DataMatrix):
        x.require_estimable()
        zero = np.flatnonzero(x.col_norm_sq <= 0.0)
        if zero.size:
            raise ZeroColumn(zero[0])
        self.x = x
        self.n, self.p = x.n, x.p
        self.scale = np.sqrt(x.col_norm_sq / self.n)
        self.xs = np.ascontiguousarray(x.values / self.scale)
        self.gram = np.ascontiguousarray(symmetrize(self.xs.T @ self.xs / self.n))
        self.runs = 0

    def node_fit(self, m: int, exclude=(), lam0: float = 0.1, method="scaled_lasso", warm=None) -> NodeFit:
        """Regress column ``m`` on every column except ``m`` and ``exclude``."""
        p = self.p
        drop = {m, *exclude}
        cols = np.delete(np.arange(p, dtype=np.intp), sorted(drop))
        y = self.x.values[:, m]
        if warm is not None:
            warm = np.array(warm, dtype=float)
            warm[list(drop)] = 0.0
        sol = solve_gram(self.gram, self.gram[m] * self.scale[m], y, self.xs, cols, lam0, warm)
        self.runs += 1
        gamma = sol.coef
        keep = np.abs(gamma) > NONZERO_TOL
        gamma[~keep] = 0.0
        support = tuple(int(k) for k in np.flatnonzero(keep))
        coef = np.zeros(p)
        sup = list(support)
        coef[sup] = gamma[sup] / self.scale[sup]
        fallback = False
        if method == "lse_refit" and support:
            try:
                coef = self._lse(m, sup)
            except RankDeficientSupport:
                fallback = True
        resid = y - self.x.values[:, sup] @ coef[sup] if sup else y.copy()
        return NodeFit(m, tuple(sorted(drop - {m})), coef, gamma, sol.sigma, support, resid, fallback)

    def _lse(self, m, sup):
        g = self.gram[np.ix_(sup, sup)]
        try:
            low = cholesky(g)
        except NotPositiveDefinite as exc:
            raise RankDeficientSupport(str(exc)) from exc
        b = cho_solve(low, self.gram[sup, m] * self.scale[m])
        coef = np.zeros(self.p)
        coef[sup] = b / self.scale[sup]
        return coef


@dataclass(eq=False)
class PairEstimate:
    i: int
    j: int
    theta: np.ndarray
    omega: np.ndarray
    fisher: float
    method: str
    n: int
    beta: np.ndarray | None = field(default=None, repr=False)
    supports: tuple = ((), ())
    lse_fallback: tuple = (False, False)

    @property
    def omega_ij(self) -> float:
        return float(self.omega[0, 1])

    @property
    def variance(self) -> float:
        """``omega_ii * omega_jj + omega_ij**2``, the inverse Fisher information."""
        o = self.omega
        return float(o[0, 0] * o[1, 1] + o[0, 1] ** 2)


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _pair_from_theta(theta, i, j, method, n, **extra) -> PairEstimate:
    omega = invert_2x2(theta)
    fisher = 1.0 / (omega[0, 0] * omega[1, 1] + omega[0, 1] ** 2)
    return PairEstimate(i, j, theta, omega, fisher, method, n, **extra)


def _theta(e0, e1, n):
    t00 = float(e0 @ e0) / n
    t11 = float(e1 @ e1) / n
    t01 = float(e0 @ e1) / n
    return np.array([[t00, t01], [t01, t11]])


def _complement(p, i, j):
    return [k for k in range(p) if k != i and k != j]


def _pair_from_beta(x: DataMatrix, i, j, beta, method, **extra) -> PairEstimate:
    v = x.values
    rest = _complement(x.p, i, j)
    if rest:
        e = v[:, [i, j]] - v[:, rest] @ beta
    else:
        e = v[:, [i, j]]
    theta = _theta(np.ascontiguousarray(e[:, 0]), np.ascontiguousarray(e[:, 1]), x.n)
    return _pair_from_theta(theta, i, j, method, x.n, beta=beta, **extra)


def _check_pair(x, i, j):
    if i == j:
        raise ValueError("a pair needs two distinct indices")
    for k in (i, j):
        if not 0 <= k < x.p:
            raise IndexError(f"node index {k} out of range for p={x.p}")


def estimate_pair(x, i: int, j: int, policy=DEFAULT_POLICY, method="lse_refit") -> PairEstimate:
    """Estimate ``Omega_AA`` for ``A = {i, j}`` by two-versus-rest regressions."""
    x = _as_data(x)
    method = normalize_method(method)
    _check_pair(x, i, j)
    x.require_estimable()
    if x.p == 2:
        e = x.values
        theta = _theta(np.ascontiguousarray(e[:, i]), np.ascontiguousarray(e[:, j]), x.n)
        return _pair_from_theta(theta, i, j, method, x.n, beta=np.zeros((0, 2)))
    design = GraphDesign(x)
    return pair_from_design(design, i, j, graph_penalty(policy, x.n, x.p), method)


def pair_from_design(design: GraphDesign, i: int, j: int, lam0: float, method="lse_refit") -> PairEstimate:
    """Two-versus-rest estimate reusing a prepared :class:`GraphDesign`."""
    x = design.x
    method = normalize_method(method)
    fi = design.node_fit(i, (j,), lam0, method)
    fj = design.node_fit(j, (i,), lam0, method)
    rest = _complement(x.p, i, j)
    beta = np.column_stack([fi.coef[rest], fj.coef[rest]])
    return _pair_from_beta(
        x, i, j, beta, method,
        supports=(fi.support, fj.support),
        lse_fallback=(fi.lse_fallback, fj.lse_fallback),
    )


def estimate_oracle_pair(x, i: int, j: int, beta_true) -> PairEstimate:
    """Oracle estimate using the true regression coefficients.

    ``beta_true`` is ``(p - 2, 2)``, rows ordered by ascending node index over
    the complement of ``{i, j}``.
    """
    x = _as_data(x)
    _check_pair(x, i, j)
    beta = np.asarray(beta_true, dtype=float).reshape(x.p - 2, 2)
    return _pair_from_beta(x, i, j, beta, "oracle")


def true_pair_coefficients(omega, i: int, j: int) -> np.ndarray:
    """Population coefficients ``-Omega_{A^c,A} Omega_AA^{-1}`` of the pair regression."""
    omega = np.asarray(omega, dtype=float)
    rest = _complement(omega.shape[0], i, j)
    oaa = omega[np.ix_([i, j], [i, j])]
    return -omega[np.ix_(rest, [i, j])] @ invert_2x2(oaa)


def z_score(level: float) -> float:
    """Two-sided critical value ``z_{alpha/2}`` for ``level = 1 - alpha``."""
    if not 0.0 <= level < 1.0:
        raise ValueError(f"level must lie in [0, 1), got {level!r}")
    return -inv_norm_cdf((1.0 - level) / 2.0)


def confidence_interval(pe: PairEstimate, n: int | None = None, level: float = 0.95) -> ConfidenceInterval:
    n = pe.n if n is None else n
    half = z_score(level) * math.sqrt(pe.variance / n)
    return ConfidenceInterval(pe.omega_ij - half, pe.omega_ij + half, level)


def partial_correlation(pe: PairEstimate, level: float = 0.95, n: int | None = None):
    """Return ``(r_hat, ConfidenceInterval)`` for the partial correlation."""
    o = pe.omega
    r = -o[0, 1] / math.sqrt(o[0, 0] * o[1, 1])
    n = pe.n if n is None else n
    half = z_score(level) * (1.0 - r * r) / math.sqrt(n)
    return float(r), ConfidenceInterval(r - half, r + half, level)


def estimate_submatrix(x, b, policy=DEFAULT_POLICY, method="lse_refit") -> np.ndarray:
    """Residual Gram matrix ``eps_B' eps_B / n`` for a small index set ``B``.

    Any unit-Lipschitz functional of the inverse precision block is then
    estimated by applying it to the returned matrix.
    """
    x = _as_data(x)
    method = normalize_method(method)
    b = [int(k) for k in b]
    if not b or len(set(b)) != len(b):
        raise ValueError("index set must be non-empty with distinct entries")
    if len(b) == x.p:
        e = x.values[:, b]
    else:
        design = GraphDesign(x)
        lam0 = graph_penalty(policy, x.n, x.p)
        e = np.column_stack([design.node_fit(m, tuple(k for k in b if k != m), lam0, method).resid for m in b])
    return symmetrize(e.T @ e / x.n)


@dataclass(eq=False)
class PrecisionEstimate:
    """Full-matrix estimate assembled from pairwise estimates.

    ``pair_diag[i, j]`` is the pair-specific ``omega_ii`` from ``Omega_AA`` with
    ``A = {i, j}``; the diagonal of ``omega_hat`` instead uses the
    one-versus-rest value ``1 / sigma_i**2``. Singular pairs are ``nan``.
    """

    omega_hat: np.ndarray
    pair_diag: np.ndarray
    theta_pair: np.ndarray
    theta_cross: np.ndarray
    n: int
    method: str
    policy: object
    lambda0: float
    supports: tuple
    solver_runs: int
    missing: tuple = ()
    lse_fallbacks: int = 0
    diag_source: str = "one_versus_rest"

    @property
    def p(self) -> int:
        return self.omega_hat.shape[0]

    @property
    def mean_support_size(self) -> float:
        return float(np.mean([len(s) for s in self.supports]))

    def variance(self) -> np.ndarray:
        """Entrywise ``omega_ii * omega_jj + omega_ij**2`` with pair-specific diagonals."""
        off = self.omega_hat.copy()
        np.fill_diagonal(off, 0.0)
        v = self.pair_diag * self.pair_diag.T + off**2
        np.fill_diagonal(v, np.nan)
        return v

    def pair(self, i: int, j: int) -> PairEstimate:
        theta = np.array([[self.theta_pair[i, j], self.theta_cross[i, j]],
                          [self.theta_cross[i, j], self.theta_pair[j, i]]])
        return _pair_from_theta(theta, i, j, self.method, self.n)


def estimate_full(x, policy=DEFAULT_POLICY, method="lse_refit") -> PrecisionEstimate:
    """Estimate every entry of the precision matrix.

    Runs one one-versus-rest fit per node, then a two-versus-rest fit for
    node ``i`` and partner ``j`` only when ``j`` was selected in node ``i``'s
    one-versus-rest model; otherwise the cached fit is already the
    two-versus-rest solution. Total fits: ``(1 + s_bar) * p``.
    """
    x = _as_data(x)
    method = normalize_method(method)
    if x.p < 3:
        raise ValueError("estimate_full needs p >= 3")
    design = GraphDesign(x)
    n, p = x.n, x.p
    lam0 = graph_penalty(policy, n, p)

    base = [design.node_fit(i, (), lam0, method) for i in range(p)]
    resid = np.column_stack([f.resid for f in base])
    theta1 = symmetrize(resid.T @ resid / n)
    fallbacks = sum(f.lse_fallback for f in base)

    special = {}
    for f in base:
        for j in f.support:
            g = design.node_fit(f.node, (j,), lam0, method, warm=f.gamma)
            special[(f.node, j)] = g.resid
            fallbacks += g.lse_fallback

    tpair = np.repeat(np.diag(theta1)[:, None], p, axis=1)
    tcross = theta1.copy()
    touched = {(min(a, b), max(a, b)) for a, b in special}
    for i, j in sorted(touched):
        ei = special.get((i, j), resid[:, i])
        ej = special.get((j, i), resid[:, j])
        tpair[i, j] = float(ei @ ei) / n
        tpair[j, i] = float(ej @ ej) / n
        tcross[i, j] = tcross[j, i] = float(ei @ ej) / n

    prod = tpair * tpair.T
    det = prod - tcross**2
    bad = ~((tpair > 0) & (tpair.T > 0) & (det > 1e-14 * np.maximum(prod, tcross**2)))
    np.fill_diagonal(bad, False)
    with np.errstate(divide="ignore", invalid="ignore"):
        omega = -tcross / det
        pair_diag = tpair.T / det
    omega[bad] = np.nan
    pair_diag[bad] = np.nan
    np.fill_diagonal(omega, 1.0 / np.diag(theta1))
    np.fill_diagonal(pair_diag, np.nan)
    missing = tuple((int(a), int(b)) for a, b in zip(*np.nonzero(np.triu(bad, 1))))

    return PrecisionEstimate(
        omega_hat=omega,
        pair_diag=pair_diag,
        theta_pair=tpair,
        theta_cross=tcross,
        n=n,
        method=method,
        policy=policy,
        lambda0=lam0,
        supports=tuple(f.support for f in base),
        solver_runs=design.runs,
        missing=missing,
        lse_fallbacks=int(fallbacks),
    )
