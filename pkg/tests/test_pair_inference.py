import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ggminfer import pair_inference as pi
from ggminfer.errors import NotPositiveDefinite, SingularPair
from ggminfer.numkit import DataMatrix, inverse_spd, sample_mvn
from ggminfer.pair_inference import (
    DEFAULT_POLICY,
    GraphDesign,
    PairEstimate,
    confidence_interval,
    estimate_full,
    estimate_oracle_pair,
    estimate_pair,
    estimate_submatrix,
    graph_penalty,
    pair_from_design,
    partial_correlation,
    true_pair_coefficients,
    z_score,
)
from ggminfer.scaled_lasso import PenaltyPolicy, fit_scaled_lasso
from ggminfer.sim_harness import BlockModelSpec, build_block_precision


def _pe(o00, o11, o01, n=400):
    omega = np.array([[o00, o01], [o01, o11]])
    return PairEstimate(0, 1, inverse_spd(omega), omega, 1 / (o00 * o11 + o01**2), "lse_refit", n)


@pytest.fixture(scope="module")
def block_data():
    omega = build_block_precision(BlockModelSpec(40))
    return omega, sample_mvn(5, 200, inverse_spd(omega))


def test_p2_uses_sample_gram():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((30, 2))
    pe = estimate_pair(x, 0, 1)
    g = x.T @ x / 30
    np.testing.assert_allclose(pe.theta, g, rtol=1e-14)
    det = g[0, 0] * g[1, 1] - g[0, 1] ** 2
    np.testing.assert_allclose(pe.omega, np.array([[g[1, 1], -g[0, 1]], [-g[0, 1], g[0, 0]]]) / det, rtol=1e-12)


def test_pair_invariants(block_data):
    _, x = block_data
    for method in ("sl", "lse"):
        pe = estimate_pair(x, 0, 1, method=method)
        assert pe.method == pi.normalize_method(method)
        np.testing.assert_allclose(pe.omega @ pe.theta, np.eye(2), atol=1e-9)
        assert pe.theta[0, 0] > 0 and pe.theta[1, 1] > 0
        assert np.linalg.det(pe.theta) > 0
        o = pe.omega
        assert pe.fisher == 1 / (o[0, 0] * o[1, 1] + o[0, 1] ** 2)


def test_pair_swap_is_exact(block_data):
    _, x = block_data
    for i, j in ((0, 1), (3, 17), (5, 30)):
        a = estimate_pair(x, i, j)
        b = estimate_pair(x, j, i)
        assert a.omega[0, 1] == b.omega[0, 1]
        assert a.omega[0, 0] == b.omega[1, 1] and a.omega[1, 1] == b.omega[0, 0]


def test_pair_scale_equivariance(block_data):
    _, x = block_data
    a = estimate_pair(x, 2, 3)
    b = estimate_pair(2.0 * x.values, 2, 3)
    np.testing.assert_array_equal(b.omega, a.omega / 4)
    c = estimate_pair(1.3 * x.values, 2, 3)
    np.testing.assert_allclose(c.omega, a.omega / 1.69, rtol=1e-8)


def test_oracle_path_equals_plugin_with_same_beta(block_data):
    _, x = block_data
    pe = estimate_pair(x, 4, 7)
    ora = estimate_oracle_pair(x, 4, 7, pe.beta)
    assert ora.theta.tobytes() == pe.theta.tobytes()
    assert ora.omega.tobytes() == pe.omega.tobytes()


def test_oracle_with_zero_beta_is_gram():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((50, 5))
    pe = estimate_oracle_pair(x, 1, 3, np.zeros((3, 2)))
    np.testing.assert_allclose(pe.theta, x[:, [1, 3]].T @ x[:, [1, 3]] / 50, rtol=1e-14)


def test_oracle_row_permutation_invariance(block_data):
    omega, x = block_data
    beta = true_pair_coefficients(omega, 0, 2)
    perm = np.random.default_rng(2).permutation(x.n)
    a = estimate_oracle_pair(x, 0, 2, beta)
    b = estimate_oracle_pair(x.values[perm], 0, 2, beta)
    np.testing.assert_allclose(a.theta, b.theta, rtol=1e-12)
    doubled = estimate_oracle_pair(np.vstack([x.values, x.values]), 0, 2, beta)
    np.testing.assert_allclose(doubled.theta, a.theta, rtol=1e-12)


def test_true_pair_coefficients_regress_out_rest():
    omega = build_block_precision(BlockModelSpec(12))
    sigma = inverse_spd(omega)
    i, j = 1, 4
    rest = [k for k in range(12) if k not in (i, j)]
    beta = true_pair_coefficients(omega, i, j)
    expected = np.linalg.solve(sigma[np.ix_(rest, rest)], sigma[np.ix_(rest, [i, j])])
    np.testing.assert_allclose(beta, expected, atol=1e-10)


def test_bad_pairs():
    x = np.random.default_rng(0).standard_normal((10, 4))
    with pytest.raises(ValueError):
        estimate_pair(x, 1, 1)
    with pytest.raises(IndexError):
        estimate_pair(x, 0, 4)
    with pytest.raises(ValueError):
        estimate_pair(x, 0, 1, method="glasso")


def test_singular_pair():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((20, 2))
    x[:, 1] = x[:, 0]
    with pytest.raises(SingularPair):
        estimate_pair(x, 0, 1)


# intervals


def test_confidence_interval_examples():
    ci = confidence_interval(_pe(1.0, 1.0, 0.0), level=0.95)
    assert ci.upper - 0.0 == pytest.approx(1.959964 / 20, abs=1e-7)
    assert ci.upper == pytest.approx(0.09800, abs=5e-6)
    ci = confidence_interval(_pe(1.0, 1.0, 0.5), level=0.95)
    assert (ci.upper - ci.lower) / 2 == pytest.approx(1.959964 * math.sqrt(1.25 / 400), abs=1e-7)
    assert (ci.upper - ci.lower) / 2 == pytest.approx(0.10957, abs=5e-6)
    assert ci.contains(0.5) and ci.level == 0.95


def test_interval_width_monotone_in_level():
    pe = _pe(2.0, 1.5, -0.3)
    widths = [confidence_interval(pe, level=lv).width for lv in np.linspace(0, 0.999999, 200)]
    assert widths[0] == 0.0
    assert np.all(np.diff(widths) > 0)
    with pytest.raises(ValueError):
        z_score(1.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(-0.9, 0.9), st.integers(10, 5000), st.floats(0.01, 0.999))
def test_interval_width_formula(a, b, rho, n, level):
    o01 = rho * math.sqrt(a * b)
    pe = _pe(a, b, o01, n)
    ci = confidence_interval(pe, level=level)
    z = z_score(level)
    assert ci.lower <= ci.upper
    assert ci.width == pytest.approx(2 * z * math.sqrt((a * b + o01**2) / n), rel=1e-12)
    assert ci.width == pytest.approx(2 * z * math.sqrt(1 / (pe.fisher * n)), rel=1e-12)


def test_partial_correlation_examples():
    r, ci = partial_correlation(_pe(1.0, 3.0, 0.0))
    assert r == 0.0
    r, ci = partial_correlation(_pe(2.0, 2.0, -1.0))
    assert r == 0.5
    assert ci.width / 2 == pytest.approx(z_score(0.95) * 0.75 / 20, rel=1e-14)


# submatrices


def test_submatrix_pair_matches_theta(block_data):
    _, x = block_data
    for method in ("sl", "lse"):
        pe = estimate_pair(x, 3, 8, method=method)
        sub = estimate_submatrix(x, (3, 8), method=method)
        np.testing.assert_allclose(sub, pe.theta, rtol=1e-13)


def test_submatrix_full_set_is_gram():
    x = np.random.default_rng(0).standard_normal((40, 4))
    np.testing.assert_allclose(estimate_submatrix(x, range(4)), x.T @ x / 40, rtol=1e-14)


def test_submatrix_single_node_is_sigma_squared(block_data):
    _, x = block_data
    sub = estimate_submatrix(x, (5,), method="sl")
    rest = [k for k in range(x.p) if k != 5]
    fit = fit_scaled_lasso(x.values[:, 5], x.values[:, rest], graph_penalty(DEFAULT_POLICY, x.n, x.p))
    assert sub[0, 0] == pytest.approx(fit.sigma_hat**2, rel=1e-9)


def test_submatrix_validation():
    with pytest.raises(ValueError):
        estimate_submatrix(np.ones((10, 3)), (1, 1))


# full matrix


def test_full_estimate_shortcut_and_runs(block_data):
    _, x = block_data
    for method in ("sl", "lse"):
        est = estimate_full(x, method=method)
        assert np.array_equal(est.omega_hat, est.omega_hat.T, equal_nan=True)
        assert est.solver_runs <= (1 + est.mean_support_size) * est.p + 1e-9
        design = GraphDesign(x)
        for i in range(0, est.p, 3):
            for j in range(est.p):
                if j == i or j in est.supports[i]:
                    continue
                direct = pair_from_design(design, i, j, est.lambda0, method)
                assert abs(direct.omega_ij - est.omega_hat[i, j]) <= 1e-8
                assert abs(direct.omega[0, 0] - est.pair_diag[i, j]) <= 1e-8


def test_full_estimate_pairs_with_selected_partner(block_data):
    _, x = block_data
    est = estimate_full(x)
    design = GraphDesign(x)
    i = 0
    for j in est.supports[i][:4]:
        direct = pair_from_design(design, i, j, est.lambda0, est.method)
        assert est.omega_hat[i, j] == pytest.approx(direct.omega_ij, abs=1e-7)
        pe = est.pair(i, j)
        assert pe.omega_ij == pytest.approx(est.omega_hat[i, j], rel=1e-12)


def test_full_estimate_diagonal_rule(block_data):
    _, x = block_data
    est = estimate_full(x, method="sl")
    assert est.diag_source == "one_versus_rest"
    rest = [k for k in range(x.p) if k != 2]
    fit = fit_scaled_lasso(x.values[:, 2], x.values[:, rest], est.lambda0)
    assert est.omega_hat[2, 2] == pytest.approx(1 / fit.sigma_hat**2, rel=1e-9)
    v = est.variance()
    assert np.all(np.isnan(np.diag(v)))


def test_full_estimate_independent_columns():
    p, n = 30, 2000
    x = sample_mvn(3, n, np.eye(p))
    est = estimate_full(x)
    off = est.omega_hat - np.diag(np.diag(est.omega_hat))
    assert np.max(np.abs(off)) <= 3 * math.sqrt(math.log(p) / n)


def test_full_estimate_marks_singular_pairs_missing():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((60, 6))
    x[:, 5] = x[:, 4]
    est = estimate_full(x, method="sl")
    assert (4, 5) in est.missing
    assert np.isnan(est.omega_hat[4, 5]) and np.isnan(est.omega_hat[5, 4])


def test_lse_fallback_is_recorded(block_data, monkeypatch):
    _, x = block_data

    def broken(m):
        raise NotPositiveDefinite(0, 0.0)

    monkeypatch.setattr(pi, "cholesky", broken)
    pe = estimate_pair(x, 0, 1, method="lse")
    sl = estimate_pair(x, 0, 1, method="sl")
    assert pe.lse_fallback == (True, True)
    np.testing.assert_allclose(pe.omega, sl.omega, rtol=1e-14)


def test_policy_argument_accepts_float(block_data):
    _, x = block_data
    lam = graph_penalty(PenaltyPolicy.conservative(), x.n, x.p)
    a = estimate_pair(x, 0, 1, policy=PenaltyPolicy.conservative())
    b = estimate_pair(x, 0, 1, policy=lam)
    assert a.omega.tobytes() == b.omega.tobytes()
    assert isinstance(DataMatrix(x.values), DataMatrix)
