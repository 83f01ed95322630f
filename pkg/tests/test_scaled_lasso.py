import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ggminfer.errors import DegenerateResidual, DomainError, RankDeficientSupport, ZeroColumn
from ggminfer.numkit import DataMatrix
from ggminfer.scaled_lasso import PenaltyPolicy, fit_scaled_lasso, refit_lse, resolve_penalty
from oracles import grid_search, kkt_violation, random_regression, weighted_scaled_lasso


# penalty policies


def test_conservative_penalty():
    lam = resolve_penalty(PenaltyPolicy.conservative(delta=1, eps=0), 400, 198)
    assert lam == pytest.approx(math.sqrt(2 * math.log(198) / 400), rel=1e-15)
    assert lam == pytest.approx(0.162608, abs=1e-6)
    assert resolve_penalty(PenaltyPolicy.conservative(2.0, 0.1), 100, 50) == pytest.approx(
        1.1 * math.sqrt(4 * math.log(50) / 100)
    )


def test_quantile_penalty_policy():
    from scipy.stats import norm

    lam = PenaltyPolicy.quantile(k=1, eps=0).resolve(400, 200)
    assert lam == pytest.approx(norm.isf(1 / 200) / math.sqrt(398.5), rel=1e-12)
    assert lam == pytest.approx(0.129034, abs=1e-6)
    approx = math.sqrt(2 / 400 * math.log(200))
    assert abs(lam - approx) / approx <= 0.22


def test_policy_validation():
    with pytest.raises(DomainError):
        PenaltyPolicy.conservative(delta=0.5)
    with pytest.raises(DomainError):
        PenaltyPolicy.quantile(k=0.5)
    with pytest.raises(DomainError):
        PenaltyPolicy.quantile(eps=-0.1)
    with pytest.raises(DomainError):
        PenaltyPolicy("bayes")
    with pytest.raises(DomainError):
        resolve_penalty(PenaltyPolicy.quantile(k=5), 100, 5)
    with pytest.raises(DomainError):
        resolve_penalty(PenaltyPolicy.quantile(), 100, 1)


# fits with known answers


def test_orthogonal_response_gives_zero():
    x = np.array([[1.0], [1.0], [-1.0], [-1.0]])
    y = np.array([1.0, -1.0, 1.0, -1.0])
    for lam in (1e-3, 0.1, 2.0):
        fit = fit_scaled_lasso(y, x, lam)
        assert fit.coefficients[0] == 0.0
        assert fit.sigma_hat == pytest.approx(1.0, rel=1e-12)
        assert fit.support == ()
    b, s = grid_search(y, x, 0.1)
    assert abs(b[0]) <= 1e-4 and s == pytest.approx(1.0, abs=1e-4)


def test_noiseless_single_column_is_degenerate():
    x = np.array([[1.0], [-1.0], [1.0], [-1.0], [1.0], [-1.0]])
    with pytest.warns(DegenerateResidual):
        fit = fit_scaled_lasso(3 * x[:, 0], x, 0.1)
    # coefficient = 3 - 0.1 * sigma with sigma -> 0
    assert fit.degenerate
    assert fit.coefficients[0] == pytest.approx(3.0, abs=1e-9)
    assert fit.sigma_hat <= 1e-9


def test_single_column_closed_form():
    rng = np.random.default_rng(2)
    n = 50
    x = rng.standard_normal((n, 1))
    x *= math.sqrt(n) / np.linalg.norm(x)  # standardized column
    e = rng.standard_normal(n)
    e -= x[:, 0] * (x[:, 0] @ e) / n  # orthogonal noise
    y = 3 * x[:, 0] + e
    lam = 0.1
    fit = fit_scaled_lasso(y, x, lam)
    sigma = np.linalg.norm(e) / math.sqrt(n) / math.sqrt(1 - lam**2)
    assert fit.sigma_hat == pytest.approx(sigma, rel=1e-8)
    assert fit.coefficients[0] == pytest.approx(3 - lam * sigma, rel=1e-8)
    b, s = grid_search(y, x, lam)
    assert abs(b[0] - fit.coefficients[0]) < 1e-3 and abs(s - fit.sigma_hat) < 1e-3


def test_zero_response_flags_degenerate():
    x = np.random.default_rng(0).standard_normal((10, 3))
    with pytest.warns(DegenerateResidual):
        fit = fit_scaled_lasso(np.zeros(10), x, 0.1)
    assert fit.degenerate and fit.sigma_hat == 0.0
    assert np.all(fit.coefficients == 0)


def test_input_validation():
    x = np.random.default_rng(0).standard_normal((10, 3))
    x[:, 1] = 0.0
    with pytest.raises(ZeroColumn) as info:
        fit_scaled_lasso(np.ones(10), x, 0.1)
    assert info.value.column == 1
    with pytest.raises(ValueError):
        fit_scaled_lasso(np.ones(3), np.ones((3, 1)), 0.1)
    with pytest.raises(ValueError):
        fit_scaled_lasso(np.ones(9), np.ones((10, 1)), 0.1)
    with pytest.raises(DomainError):
        fit_scaled_lasso(np.ones(10), np.ones((10, 1)), 0.0)


# optimality


@pytest.mark.parametrize("seed", range(20))
def test_matches_grid_search(seed):
    rng = np.random.default_rng(seed)
    p = 1 + seed % 2
    y, x = random_regression(rng, int(rng.integers(8, 60)), p, sparsity=p)
    lam = float(rng.uniform(0.02, 0.6))
    fit = fit_scaled_lasso(y, x, lam)
    b, s = grid_search(y, x, lam)
    np.testing.assert_allclose(fit.coefficients, b, atol=1e-3)
    assert abs(fit.sigma_hat - s) <= 1e-3
    # the solver's objective is at least as good as the grid's
    n = len(y)
    w = np.sqrt((x * x).sum(axis=0) / n)
    grid_obj = s + lam * float(w @ np.abs(b))
    assert fit.objective <= grid_obj + 1e-8


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 50), st.floats(0.01, 1.0))
def test_kkt_certificate(seed, p, lam):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(p + 5, 120))
    y, x = random_regression(rng, n, p)
    fit = fit_scaled_lasso(y, x, lam)
    assert kkt_violation(fit, y, x, lam) <= 1e-6
    r = y - x @ fit.coefficients
    assert fit.sigma_hat**2 * n == pytest.approx(float(r @ r), rel=1e-8)


@pytest.mark.parametrize("seed", range(8))
def test_objective_path_nonincreasing(seed):
    rng = np.random.default_rng(100 + seed)
    y, x = random_regression(rng, 80, 40, sparsity=5)
    fit = fit_scaled_lasso(y, x, PenaltyPolicy.quantile())
    path = np.array(fit.objective_path)
    assert len(path) == fit.iterations + 1
    assert np.all(np.diff(path) <= 1e-12 * np.abs(path[:-1]))


@pytest.mark.parametrize("seed", range(10))
def test_formulation_equivalence(seed):
    rng = np.random.default_rng(200 + seed)
    y, x = random_regression(rng, 60, 12, sparsity=4)
    lam = 0.15
    fit = fit_scaled_lasso(y, x, lam)
    b, s = weighted_scaled_lasso(y, x, lam)
    np.testing.assert_allclose(fit.coefficients, b, atol=1e-8)
    assert fit.sigma_hat == pytest.approx(s, abs=1e-8)


@pytest.mark.parametrize("c", [0.25, 2.0, 8.0])
def test_scale_equivariance_exact(c):
    rng = np.random.default_rng(7)
    y, x = random_regression(rng, 50, 20)
    a = fit_scaled_lasso(y, x, 0.2)
    b = fit_scaled_lasso(c * y, c * x, 0.2)
    assert np.array_equal(a.coefficients, b.coefficients)
    assert b.sigma_hat == c * a.sigma_hat
    assert a.support == b.support


def test_scale_equivariance_general_factor():
    rng = np.random.default_rng(8)
    y, x = random_regression(rng, 50, 20)
    a = fit_scaled_lasso(y, x, 0.2)
    b = fit_scaled_lasso(3.7 * y, 3.7 * x, 0.2)
    np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-8)
    assert b.sigma_hat == pytest.approx(3.7 * a.sigma_hat, rel=1e-8)


def test_warm_start_reaches_same_solution():
    rng = np.random.default_rng(9)
    y, x = random_regression(rng, 70, 30)
    cold = fit_scaled_lasso(y, x, 0.12)
    warm = fit_scaled_lasso(y, x, 0.12, warm_start=cold.coefficients * 1.1)
    np.testing.assert_allclose(cold.coefficients, warm.coefficients, atol=1e-8)
    assert warm.iterations <= cold.iterations + 1


def test_accepts_policy_and_data_matrix():
    rng = np.random.default_rng(10)
    y, x = random_regression(rng, 100, 30)
    fit = fit_scaled_lasso(y, DataMatrix(x), PenaltyPolicy.quantile())
    assert fit.lambda0 == PenaltyPolicy.quantile().resolve(100, 30)
    assert set(fit.support) == set(np.flatnonzero(fit.coefficients))


# least squares refit


def test_refit_empty_support():
    rng = np.random.default_rng(0)
    y, x = random_regression(rng, 30, 5)
    fit = refit_lse(y, x, ())
    assert np.all(fit.coefficients == 0)
    assert fit.sigma_hat == pytest.approx(np.linalg.norm(y) / math.sqrt(30), rel=1e-15)


def test_refit_single_column():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((40, 3)) * [2.0, 0.5, 1.0]
    y = rng.standard_normal(40)
    fit = refit_lse(y, x, (1,))
    scale = np.linalg.norm(x[:, 1]) / math.sqrt(40)
    xt = x[:, 1] / scale
    assert fit.coefficients[1] == pytest.approx((xt @ y / 40) / scale, rel=1e-12)
    assert fit.coefficients[0] == fit.coefficients[2] == 0.0


def test_refit_improves_residual():
    rng = np.random.default_rng(2)
    for _ in range(10):
        y, x = random_regression(rng, 60, 25)
        sl = fit_scaled_lasso(y, x, 0.1)
        ls = refit_lse(y, x, sl.support)
        assert ls.sigma_hat <= sl.sigma_hat * (1 + 1e-12)
        np.testing.assert_allclose(ls.coefficients, np.where(sl.coefficients != 0, ls.coefficients, 0.0))


def test_refit_rank_deficient():
    x = np.random.default_rng(3).standard_normal((20, 3))
    x[:, 2] = x[:, 0]
    with pytest.raises(RankDeficientSupport):
        refit_lse(np.ones(20), x, (0, 2))
    with pytest.raises(RankDeficientSupport):
        refit_lse(np.ones(4), np.random.default_rng(0).standard_normal((4, 6)), range(5))


def test_results_do_not_warn_normally():
    rng = np.random.default_rng(4)
    y, x = random_regression(rng, 50, 10)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fit_scaled_lasso(y, x, 0.1)
