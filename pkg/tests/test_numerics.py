import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from scents import numerics as nm
from scents.errors import InvalidArgumentError, LassoConvergenceError

from .oracles import lasso_orthant_oracle


def test_ols_identity():
    np.testing.assert_allclose(nm.ols(np.eye(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_ols_noiseless_recovery(rng):
    X = rng.standard_normal((30, 4))
    beta = np.array([1.0, -2.0, 0.5, 3.0])
    np.testing.assert_allclose(nm.ols(X, X @ beta), beta, atol=1e-10)


def test_ols_matches_normal_equations(rng):
    X = rng.standard_normal((20, 3))
    y = rng.standard_normal(20)
    want = np.linalg.solve(X.T @ X, X.T @ y)
    np.testing.assert_allclose(nm.ols(X, y), want, atol=1e-8)


def test_ols_residual_orthogonality(rng):
    X = rng.standard_normal((50, 6))
    y = rng.standard_normal(50)
    r = y - X @ nm.ols(X, y)
    assert np.max(np.abs(X.T @ r)) <= 1e-8 * np.max(np.abs(X.T @ y))


def test_ols_rank_deficient_gives_minimum_norm(rng):
    A = rng.standard_normal((25, 2))
    X = np.column_stack([A, A[:, 0] + A[:, 1]])
    y = rng.standard_normal(25)
    coef = nm.ols(X, y)
    np.testing.assert_allclose(coef, np.linalg.pinv(X) @ y, atol=1e-10)
    assert np.linalg.norm(X.T @ (y - X @ coef)) <= 1e-8 * np.linalg.norm(y)


def test_ols_empty_inputs():
    assert nm.ols(np.zeros((5, 0)), np.ones(5)).shape == (0,)
    np.testing.assert_array_equal(nm.ols(np.zeros((0, 2)), np.zeros(0)), [0.0, 0.0])


def test_project_out_special_cases(rng):
    A = rng.standard_normal((10, 3))
    np.testing.assert_array_equal(nm.project_out(A, np.zeros((10, 2))), A)
    np.testing.assert_allclose(nm.project_out(A, A), 0.0, atol=1e-12)


def test_project_out_matches_hat_matrix(rng):
    A = rng.standard_normal((30, 4))
    M = rng.standard_normal((30, 2))
    H = M @ np.linalg.inv(M.T @ M) @ M.T
    np.testing.assert_allclose(nm.project_out(A, M), (np.eye(30) - H) @ A, atol=1e-8)


def test_project_out_idempotent_and_orthogonal(rng):
    A = rng.standard_normal((40, 5))
    M = rng.standard_normal((40, 3))
    P1 = nm.project_out(A, M)
    np.testing.assert_allclose(nm.project_out(P1, M), P1, atol=1e-10)
    assert np.max(np.abs(M.T @ P1)) <= 1e-8 * np.max(np.abs(M.T @ A))


def test_dependent_columns_and_rank():
    Z = np.column_stack([np.ones(6), np.arange(6.0), 2 * np.ones(6)])
    assert nm.numerical_rank(Z) == 2
    assert len(nm.dependent_columns(Z)) == 1


def test_lasso_config_validation():
    with pytest.raises(InvalidArgumentError):
        nm.LassoConfig(lam=-1.0)
    with pytest.raises(InvalidArgumentError):
        nm.LassoConfig(lam=0.1, tol=0.0)
    with pytest.raises(InvalidArgumentError):
        nm.LassoConfig(lam=0.1, max_iters=0)


@pytest.mark.parametrize("seed", range(10))
def test_lasso_matches_orthant_oracle(backend, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((8, 3))
    y = X @ np.array([1.0, 0.0, -0.5]) + 0.3 * rng.standard_normal(8)
    got = nm.lasso(X, y, nm.LassoConfig(lam=0.1, tol=1e-12))
    want = lasso_orthant_oracle(X, y, 0.1)
    np.testing.assert_allclose(got, want, atol=1e-6)
    assert nm.kkt_residual(X, y, got, 0.1) <= 1e-6


def test_lasso_zero_penalty_is_ols(backend, rng):
    X = rng.standard_normal((20, 3))
    y = rng.standard_normal(20)
    got = nm.lasso(X, y, nm.LassoConfig(lam=0.0, tol=1e-12))
    np.testing.assert_allclose(got, nm.ols(X, y), atol=1e-6)


def test_lasso_above_threshold_is_zero(backend, rng):
    X = rng.standard_normal((30, 5))
    y = rng.standard_normal(30)
    lam = np.max(np.abs(X.T @ y)) / 30
    assert nm.lambda_max(X, y) == pytest.approx(lam)
    coef = nm.lasso(X, y, nm.LassoConfig(lam=lam))
    assert not coef.any()
    assert nm.kkt_residual(X, y, np.zeros(5), lam) <= 1e-12


def test_kkt_residual_detects_perturbation(rng):
    X = rng.standard_normal((40, 4))
    y = X @ np.array([1.0, -1.0, 0.0, 0.0]) + rng.standard_normal(40)
    theta = nm.lasso(X, y, nm.LassoConfig(lam=0.05, tol=1e-12))
    assert nm.kkt_residual(X, y, theta, 0.05) <= 1e-6
    bumped = theta.copy()
    bumped[0] += 0.1
    assert nm.kkt_residual(X, y, bumped, 0.05) > 1e-3


def test_objective_trace_monotone(backend, rng):
    X = rng.standard_normal((60, 80))
    y = X[:, :4] @ np.ones(4) + rng.standard_normal(60)
    res = nm.solve_lasso(X, y, nm.LassoConfig(lam=0.05))
    assert res.converged
    assert np.all(np.diff(res.objective_trace) <= 1e-12)
    assert res.objective_trace[-1] == pytest.approx(nm.lasso_objective(X, y, res.coef, 0.05))


def test_nested_penalties_shrink_l1_norm(backend, rng):
    X = rng.standard_normal((50, 20))
    y = X[:, :3] @ np.array([2.0, -1.0, 1.0]) + rng.standard_normal(50)
    lams = nm.lambda_grid(X, y, 15)
    path = nm.lasso_path(X, y, lams, tol=1e-12)
    norms = np.abs(path).sum(axis=1)
    assert np.all(norms[:-1] <= norms[1:] + 1e-8)


def test_non_convergence_carries_iterate(rng):
    X = rng.standard_normal((30, 50))
    y = rng.standard_normal(30)
    with pytest.raises(LassoConvergenceError) as info:
        nm.lasso(X, y, nm.LassoConfig(lam=1e-4, max_iters=2, tol=1e-14))
    assert info.value.coef.shape == (50,)
    assert info.value.kkt > 0
    assert info.value.n_iter == 2


def test_unpenalized_column_is_fitted(rng):
    X = rng.standard_normal((100, 10))
    y = 3 * X[:, 0] + rng.standard_normal(100)
    pf = np.ones(10)
    pf[0] = 0.0
    lam = 10 * nm.lambda_max(X, y, pf)
    coef = nm.lasso(X, y, nm.LassoConfig(lam=lam), penalty_factor=pf)
    assert not coef[1:].any()
    assert coef[0] == pytest.approx(nm.ols(X[:, :1], y)[0])


def test_standardize_option_matches_manual_scaling(rng):
    X = rng.standard_normal((40, 6)) * np.array([1, 10, 0.1, 1, 5, 2])
    y = X[:, 1] * 0.1 + rng.standard_normal(40)
    s = np.sqrt(np.mean(X * X, axis=0))
    got = nm.lasso(X, y, nm.LassoConfig(lam=0.05, standardize=True, tol=1e-12))
    manual = nm.lasso(X / s, y, nm.LassoConfig(lam=0.05, tol=1e-12)) / s
    np.testing.assert_allclose(got, manual, atol=1e-10)


def test_penalty_selectors(rng):
    X = rng.standard_normal((120, 40))
    y = X[:, :3] @ np.ones(3) + 0.5 * rng.standard_normal(120)
    lmax = nm.lambda_max(X, y)
    for mode in ("cv", "cv1se", "theory"):
        lam = nm.choose_lambda(X, y, mode)
        assert 0 < lam < lmax
    assert nm.cv_lambda(X, y, rule="1se") >= nm.cv_lambda(X, y)
    assert nm.choose_lambda(X, y, 0.25) == 0.25
    with pytest.raises(InvalidArgumentError):
        nm.choose_lambda(X, y, "bogus")
    sigma = nm.theory_sigma(X, y)
    assert 0.35 < sigma < 0.7


@settings(max_examples=40, deadline=None)
@given(
    A=hnp.arrays(np.float64, (12, 3), elements=st.floats(-10, 10)),
    M=hnp.arrays(np.float64, (12, 2), elements=st.floats(-10, 10)),
)
def test_projection_idempotent_property(A, M):
    P1 = nm.project_out(A, M)
    np.testing.assert_allclose(nm.project_out(P1, M), P1, atol=1e-9 * (1 + np.abs(A).max()))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(0.01, 1.0))
def test_lasso_kkt_property(seed, lam):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((15, 25))
    y = rng.standard_normal(15)
    theta = nm.lasso(X, y, nm.LassoConfig(lam=lam, tol=1e-12))
    assert nm.kkt_residual(X, y, theta, lam) <= 1e-6
