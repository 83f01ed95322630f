"""Synthetic precision matrices and matrix diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NotPositiveDefinite
from ..numkit import cholesky, inverse_spd, operator_norm, symmetrize


@dataclass(frozen=True)
class BlockModelSpec:
    """Three banded diagonal blocks of sizes p/2, p/4, p/4.

    Within block ``k`` the diagonal is ``alphas[k]``, the first off-diagonal
    ``band1 * alphas[k]`` and the second ``band2 * alphas[k]``.
    """

    p: int
    alphas: tuple = (1.0, 2.0, 4.0)
    band1: float = 0.5
    band2: float = 0.4

    def __post_init__(self):
        if self.p < 4 or self.p % 4:
            raise ValueError(f"p must be a positive multiple of 4, got {self.p}")
        if len(self.alphas) != 3 or min(self.alphas) <= 0:
            raise ValueError("alphas must be three positive numbers")

    def blocks(self):
        """``[(start, stop, alpha), ...]`` for the three blocks."""
        a, b = self.p // 2, self.p // 4
        bounds = [(0, a), (a, a + b), (a + b, self.p)]
        return [(lo, hi, float(al)) for (lo, hi), al in zip(bounds, self.alphas)]

    def labels(self) -> np.ndarray:
        lab = np.empty(self.p, dtype=int)
        for k, (lo, hi, _) in enumerate(self.blocks()):
            lab[lo:hi] = k
        return lab


def build_block_precision(spec: BlockModelSpec) -> np.ndarray:
    p = spec.p
    omega = np.zeros((p, p))
    for lo, hi, alpha in spec.blocks():
        for j in range(lo, hi):
            omega[j, j] = alpha
            if j + 1 < hi:
                omega[j, j + 1] = omega[j + 1, j] = spec.band1 * alpha
            if j + 2 < hi:
                omega[j, j + 2] = omega[j + 2, j] = spec.band2 * alpha
    cholesky(omega)  # raises NotPositiveDefinite for bad bands
    return omega


def true_edges(omega) -> np.ndarray:
    """Boolean adjacency ``omega_ij != 0`` for ``i != j``."""
    e = np.asarray(omega) != 0
    e = e.copy()
    np.fill_diagonal(e, False)
    return e


def max_degree(omega) -> int:
    """Largest number of nonzeros in a column (diagonal included)."""
    return int(np.max(np.sum(np.asarray(omega) != 0, axis=0)))


@dataclass(frozen=True)
class LatentModelSpec:
    """Observed block model coupled to ``h`` hidden variables.

    Coupling entries are uniform on ``[-c, c]`` with
    ``c = coupling_scale * sqrt(log p / (n p))``.
    """

    p: int
    h: int
    n: int
    coupling_scale: float = 1.0
    sparse_spec: BlockModelSpec | None = None
    max_a_n: float = 1.0

    def sparse(self) -> BlockModelSpec:
        return self.sparse_spec if self.sparse_spec is not None else BlockModelSpec(self.p)


@dataclass(eq=False)
class LatentModel:
    full: np.ndarray  # (p + h) square precision of observed + hidden
    sparse: np.ndarray  # S, the observed block of `full`
    omega: np.ndarray  # effective precision of the observed variables, S - L
    low_rank: np.ndarray  # L
    a_n: float  # smallest a_n with max_j sum_i l_ij^2 <= (a_n / n) log p
    attempts: int = 1
    coupling: np.ndarray = field(default=None, repr=False)


def build_latent_model(spec: LatentModelSpec, seed: int) -> LatentModel:
    p, h, n = spec.p, spec.h, spec.n
    s = build_block_precision(spec.sparse())
    if h == 0 or spec.coupling_scale == 0:
        b = np.zeros((p, h))
        low = np.zeros((p, p))
        full = np.block([[s, b], [b.T, np.eye(h)]]) if h else s.copy()
        return LatentModel(full, s, s.copy(), low, 0.0, 1, b)
    c = spec.coupling_scale * math.sqrt(math.log(p) / (n * p))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0xA7E,))))
    for attempt in range(1, 101):
        b = rng.uniform(-c, c, size=(p, h))
        full = np.block([[s, b], [b.T, np.eye(h)]])
        try:
            cholesky(full)
        except NotPositiveDefinite:
            continue
        low = symmetrize(b @ b.T)  # hidden block is the identity
        a_n = n * float(np.max(np.sum(low**2, axis=0))) / math.log(p)
        if a_n > spec.max_a_n:
            continue
        omega = symmetrize(s - low)
        return LatentModel(full, s, omega, low, a_n, attempt, b)
    raise NotPositiveDefinite(-1, "no admissible coupling after 100 draws")


def observed_precision(model: LatentModel) -> np.ndarray:
    """``Sigma_OO^{-1}`` obtained by inverting the full covariance (cross-check path)."""
    p = model.sparse.shape[0]
    sigma = inverse_spd(model.full)
    return inverse_spd(sigma[:p, :p])


def capped_l1_complexity(omega, lam: float) -> float:
    """``max_j sum_i min(1, |omega_ij| / lam)``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return float(np.max(np.sum(np.minimum(1.0, np.abs(np.asarray(omega)) / lam), axis=0)))


def norm_losses(est, truth) -> dict:
    """Operator-norm losses of ``est - truth`` keyed by ``1, 2, inf, 'max'``."""
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.shape != truth.shape:
        raise ValueError("shape mismatch")
    d = symmetrize(est - truth)
    return {w: operator_norm(d, w) for w in (1, 2, np.inf, "max")}
