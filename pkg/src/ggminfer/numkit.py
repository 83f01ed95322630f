"""Dense numerics shared by the estimators.

Symmetric matrices are plain ``float64`` ndarrays that pass
:func:`as_symmetric`; the data matrix gets a small frozen wrapper that
caches column sums of squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _backend
from .errors import DomainError, NoConvergence, NotPositiveDefinite, SingularPair

_EPS = np.finfo(float).eps

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def as_symmetric(m, copy: bool = False) -> np.ndarray:
    """Validate exact symmetry and finiteness; return a float64 array."""
    a = np.array(m, dtype=float) if copy else np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if not np.array_equal(a, a.T):
        raise ValueError("matrix is not exactly symmetric")
    return a


def symmetrize(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    return (a + a.T) / 2.0


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """An n-by-p sample matrix (rows are observations)."""

    values: np.ndarray
    col_norm_sq: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, order="C")
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"data must be a non-empty 2-D array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("data has non-finite entries")
        v.setflags(write=False)
        norms = np.einsum("ij,ij->j", v, v)
        norms.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "col_norm_sq", norms)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def require_estimable(self):
        if self.n < 4 or self.p < 2:
            raise ValueError(f"estimation needs n >= 4 and p >= 2, got n={self.n}, p={self.p}")

    def gram(self) -> np.ndarray:
        """Uncentred sample second-moment matrix X'X/n, exactly symmetric."""
        g = self.values.T @ self.values / self.n
        return symmetrize(g)


class EigenDecomposition(NamedTuple):
    values: np.ndarray  # descending
    vectors: np.ndarray  # columns


def cholesky(m) -> np.ndarray:
    """Lower Cholesky factor ``L`` with ``L @ L.T == m``.

    Raises
    ------
    NotPositiveDefinite
        When a pivot is at or below ``dim * eps * max(diag(m))``. The
        exception carries the zero-based pivot index.
    """
    a = np.asarray(m, dtype=float)
    d = a.shape[0]
    tol = d * _EPS * max(float(np.max(np.diag(a))), 0.0)
    low = np.zeros_like(a)
    for j in range(d):
        v = a[j:, j] - low[j:, :j] @ low[j, :j]
        pivot = v[0]
        if not pivot > tol:
            raise NotPositiveDefinite(j, pivot)
        root = math.sqrt(pivot)
        low[j, j] = root
        low[j + 1 :, j] = v[1:] / root
    return low


def _forward(low, b):
    y = np.empty_like(b)
    for i in range(low.shape[0]):
        y[i] = (b[i] - low[i, :i] @ y[:i]) / low[i, i]
    return y


def _backward(low, y):
    # solves L' x = y
    d = low.shape[0]
    x = np.empty_like(y)
    for i in range(d - 1, -1, -1):
        x[i] = (y[i] - low[i + 1 :, i] @ x[i + 1 :]) / low[i, i]
    return x


def cho_solve(low, rhs) -> np.ndarray:
    b = np.array(rhs, dtype=float)
    return _backward(low, _forward(low, b))


def solve_spd(m, rhs) -> np.ndarray:
    """Solve ``m @ x = rhs`` for positive definite ``m`` (vector or matrix rhs)."""
    return cho_solve(cholesky(m), rhs)


def inverse_spd(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    return symmetrize(solve_spd(a, np.eye(a.shape[0])))


def invert_2x2(m) -> np.ndarray:
    """Closed-form inverse of a symmetric positive definite 2x2 matrix."""
    m00, m01, m11 = float(m[0][0]), float(m[0][1]), float(m[1][1])
    det = m00 * m11 - m01 * m01
    eps_det = 1e-14 * max(m00 * m11, m01 * m01)
    if not (m00 > 0 and det > eps_det):
        raise SingularPair(f"2x2 matrix is singular or indefinite (det={det!r})")
    return np.array([[m11 / det, -m01 / det], [-m01 / det, m00 / det]])


def symmetric_eigen(m) -> EigenDecomposition:
    """Eigen-decomposition by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm is at most
    ``1e-12`` times the Frobenius norm of the input.
    """
    a = np.array(as_symmetric(m), dtype=float, order="C", copy=True)
    diag, vecs, sweeps, converged = _backend.jacobi_eigen(a, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if not converged:
        raise NoConvergence(f"Jacobi did not converge in {sweeps} sweeps")
    order = np.argsort(-diag, kind="stable")
    return EigenDecomposition(diag[order], vecs[:, order])


def min_eigenvalue(m) -> float:
    return float(symmetric_eigen(m).values[-1])


def operator_norm(m, w=1) -> float:
    """Matrix operator norm for ``w`` in {1, 2, inf} or ``"max"`` (entrywise)."""
    a = np.asarray(m, dtype=float)
    if w == 1:
        return float(np.max(np.sum(np.abs(a), axis=0)))
    if w == np.inf or w == "inf":
        return float(np.max(np.sum(np.abs(np.ascontiguousarray(a.T)), axis=0)))
    if w == 2:
        return float(np.max(np.abs(symmetric_eigen(a).values)))
    if w in ("max", "entrywise_max"):
        return float(np.max(np.abs(a)))
    raise ValueError(f"unsupported norm {w!r}")


# Wichura (1988), algorithm AS 241, PPND16.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coefs, x):
    acc = 0.0
    for c in reversed(coefs):
        acc = acc * x + c
    return acc


def _lower_quantile(t: float) -> float:
    # t in (0, 0.5]; returns a value <= 0
    q = t - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        x = q * _poly(_A, r) / _poly(_B, r)
    else:
        r = math.sqrt(-math.log(t))
        if r <= 5.0:
            r -= 1.6
            x = -_poly(_C, r) / _poly(_D, r)
        else:
            r -= 5.0
            x = -_poly(_E, r) / _poly(_F, r)
    # one Newton step against the library erfc
    cdf = 0.5 * math.erfc(-x / math.sqrt(2.0))
    dens = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if dens > 0.0:
        x -= (cdf - t) / dens
    return x


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def inv_norm_cdf(t: float) -> float:
    """Standard normal quantile function."""
    t = float(t)
    if not 0.0 < t < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {t!r}")
    if t <= 0.5:
        return _lower_quantile(t)
    return -_lower_quantile(1.0 - t)


def quantile_penalty(n: float, t: float) -> float:
    """``L_n(t) = n**-0.5 * inv_norm_cdf(1 - t)``, the N(0, 1/n) upper quantile."""
    if not n > 0:
        raise DomainError(f"n must be positive, got {n!r}")
    t = float(t)
    if not 0.0 < t < 1.0:
        raise DomainError(f"t must lie in (0, 1), got {t!r}")
    return -inv_norm_cdf(t) / math.sqrt(n)


def _column_stream(seed: int, stream: int, column: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(stream), int(column)))
    return np.random.Generator(np.random.Philox(ss))


def standard_normal_block(seed: int, n: int, p: int, stream: int = 0) -> np.ndarray:
    """n-by-p standard normals; column ``k`` comes from its own Philox stream."""
    z = np.empty((n, p))
    for k in range(p):
        z[:, k] = _column_stream(seed, stream, k).standard_normal(n)
    return z


def sample_mvn(seed: int, n: int, sigma, mean=None, stream: int = 0) -> DataMatrix:
    """Draw ``n`` rows from N(mean, sigma), deterministic in (seed, stream)."""
    sigma = np.asarray(sigma, dtype=float)
    low = cholesky(sigma)
    p = sigma.shape[0]
    z = standard_normal_block(seed, n, p, stream)
    x = z @ low.T
    if mean is not None:
        mean = np.asarray(mean, dtype=float)
        if mean.shape != (p,):
            raise ValueError(f"mean must have length {p}")
        x = x + mean
    return DataMatrix(x)


def demean_transform(x: DataMatrix | np.ndarray) -> DataMatrix:
    """Rotate out the sample mean with the Helmert basis (n rows -> n-1 rows).

    Row ``i`` of the output (1-based) is
    ``(x_1 + ... + x_i - i * x_{i+1}) / sqrt(i * (i + 1))``.
    """
    v = x.values if isinstance(x, DataMatrix) else np.asarray(x, dtype=float)
    n = v.shape[0]
    if n < 2:
        raise ValueError("need at least two rows")
    i = np.arange(1, n, dtype=float)[:, None]
    partial = np.cumsum(v[:-1], axis=0)
    out = (partial - i * v[1:]) / np.sqrt(i * (i + 1.0))
    return DataMatrix(out)
