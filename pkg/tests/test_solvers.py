"""Solver certification.

The LASSO solutions are checked two independent ways: the KKT stationarity
certificate (necessary and sufficient for this convex objective), and, on
small instances, brute-force enumeration of all 3^m sign patterns, solving
each pattern's stationarity system directly and keeping the feasible
candidate with the lowest objective.  The enumeration shares no code with
the coordinate-descent path.
"""

import itertools

import numpy as np
import pytest

from oscinet import solvers


def _instance(seed, n=40, m=12, normalize=True):
    rng = np.random.default_rng([303, seed])
    theta = rng.standard_normal((n, m))
    if normalize:
        theta /= np.linalg.norm(theta, axis=0)
    v = rng.standard_normal(n)
    return theta, v


def _enumeration_oracle(theta, v, lam):
    """Global LASSO minimizer by sign-pattern enumeration (small m only)."""
    m = theta.shape[1]
    best, best_obj = None, np.inf
    for signs in itertools.product((-1.0, 0.0, 1.0), repeat=m):
        s = np.array(signs)
        sup = np.flatnonzero(s)
        w = np.zeros(m)
        if sup.size:
            ths = theta[:, sup]
            try:
                ws = np.linalg.solve(ths.T @ ths, ths.T @ v - 0.5 * lam * s[sup])
            except np.linalg.LinAlgError:
                continue
            if not np.all(np.sign(ws) == s[sup]):
                continue
            w[sup] = ws
        grad = 2.0 * (theta.T @ (theta @ w - v))
        zero = np.flatnonzero(s == 0)
        if zero.size and np.any(np.abs(grad[zero]) > lam + 1e-9):
            continue
        obj = solvers.lasso_objective(theta, v, w, lam)
        if obj < best_obj:
            best_obj, best = obj, w
    return best


def test_least_squares_orthonormal_columns():
    rng = np.random.default_rng(0)
    q, _ = np.linalg.qr(rng.standard_normal((20, 6)))
    v = rng.standard_normal(20)
    assert np.abs(solvers.least_squares(q, v) - q.T @ v).max() < 1e-12


def test_least_squares_orthogonal_target():
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(rng.standard_normal((20, 6)))
    a = q[:, :3]
    v = q[:, 4]                        # orthogonal to Im a
    assert np.abs(solvers.least_squares(a, v)).max() < 1e-12


def test_least_squares_construct_and_solve():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((50, 5))
    x = rng.standard_normal(5)
    got = solvers.least_squares(a, a @ x)
    assert np.abs(got - x).max() < 1e-10
    with pytest.raises(ValueError):
        solvers.least_squares(np.empty((0, 3)), np.empty(0))


def test_min_singular_value_examples():
    assert abs(solvers.min_singular_value(np.eye(3)) - 1.0) < 1e-14
    assert abs(solvers.min_singular_value(np.diag([3.0, 2.0, 0.5])) - 0.5) < 1e-14
    dup = np.column_stack([np.ones(4), np.ones(4)])
    assert solvers.min_singular_value(dup) < 1e-12


def test_lambda_max_kills_all_coefficients():
    theta, v = _instance(0)
    lam = solvers.lambda_max(theta, v)
    assert np.array_equal(solvers.lasso_cd(theta, v, lam), np.zeros(theta.shape[1]))
    assert np.array_equal(solvers.lasso_cd(theta, v, 2.0 * lam), np.zeros(theta.shape[1]))
    # just below the boundary something activates
    assert (solvers.lasso_cd(theta, v, 0.99 * lam) != 0).sum() >= 1


def test_zero_penalty_equals_least_squares():
    theta, v = _instance(1)
    w = solvers.lasso_cd(theta, v, 0.0)
    assert np.abs(w - solvers.least_squares(theta, v)).max() < 1e-6


def test_kkt_certificate_on_random_instances():
    for seed in range(30):
        theta, v = _instance(seed)
        lam = 0.3 * solvers.lambda_max(theta, v)
        w = solvers.lasso_cd(theta, v, lam)
        assert solvers.kkt_violation(theta, v, w, lam) <= 1e-6


def test_negative_penalty_rejected():
    theta, v = _instance(2)
    with pytest.raises(ValueError):
        solvers.lasso_cd(theta, v, -1.0)


def test_enumeration_oracle_agreement():
    fracs = (0.1, 0.3, 0.6)
    for i in range(50):
        rng = np.random.default_rng([77, i])
        theta = rng.standard_normal((5, 3))
        v = rng.standard_normal(5)
        lam = fracs[i % 3] * solvers.lambda_max(theta, v)
        w_oracle = _enumeration_oracle(theta, v, lam)
        assert w_oracle is not None
        w_cd = solvers.lasso_cd(theta, v, lam)
        assert np.abs(w_cd - w_oracle).max() <= 1e-6


def test_path_grid_and_shape():
    theta, v = _instance(3)
    fit = solvers.lasso_path(theta, v, grid_size=30, decades=4.0)
    assert fit.lambda_grid.shape == (30,)
    assert abs(fit.lambda_grid[0] - solvers.lambda_max(theta, v)) < 1e-12
    assert abs(fit.lambda_grid[-1] - fit.lambda_grid[0] * 1e-4) < 1e-12
    assert fit.path.shape == (12, 30)
    assert fit.support_sizes[0] == 0    # grid starts at lambda_max


def test_path_support_growth_and_residual_descent():
    mono_fracs = []
    for seed in range(20):
        theta, v = _instance(seed)
        fit = solvers.lasso_path(theta, v, grid_size=30)
        steps = np.diff(fit.support_sizes.astype(int))
        mono_fracs.append(np.mean(steps >= 0))
        res = np.array(
            [float(np.sum((theta @ fit.path[:, j] - v) ** 2)) for j in range(30)]
        )
        assert np.all(np.diff(res) <= 1e-10)   # fit improves as lambda shrinks
    assert np.mean(mono_fracs) >= 0.9


def test_warm_start_endpoint_matches_cold():
    for seed in range(5):
        theta, v = _instance(seed)
        fit = solvers.lasso_path(theta, v, grid_size=30)
        cold = solvers.lasso_cd(theta, v, float(fit.lambda_grid[-1]))
        assert np.abs(cold - fit.path[:, -1]).max() < 1e-6


def test_cross_validation_planted_low_noise():
    for seed in range(5):
        rng = np.random.default_rng([505, seed])
        theta = rng.standard_normal((80, 12))
        theta /= np.linalg.norm(theta, axis=0)
        w_true = np.zeros(12)
        w_true[[1, 4, 7]] = (1.5, -2.0, 1.0)
        v = theta @ w_true + 0.01 * rng.standard_normal(80)
        fit = solvers.cross_validate(theta, v)
        w = fit.coefficients
        # with near-noiseless data CV keeps the penalty small: the true
        # support survives and junk stays far below the true magnitudes
        assert set(np.flatnonzero(w_true)) <= set(np.flatnonzero(w))
        assert np.abs(w - w_true).max() < 0.05
        junk = np.abs(w.copy())
        junk[[1, 4, 7]] = 0.0
        assert junk.max() < 0.05 * np.abs(w).max()


def test_cross_validation_exact_data():
    rng = np.random.default_rng([515, 0])
    theta = rng.standard_normal((80, 12))
    theta /= np.linalg.norm(theta, axis=0)
    w_true = np.zeros(12)
    w_true[[2, 9]] = (1.0, -0.5)
    fit = solvers.cross_validate(theta, theta @ w_true)
    assert set(np.flatnonzero(fit.coefficients)) == {2, 9}
    assert np.abs(fit.coefficients - w_true).max() < 1e-3
    assert fit.chosen_lambda == fit.lambda_grid[-1]


def test_cross_validation_column_scales():
    theta, v = _instance(4)
    scales = np.linspace(1.0, 3.0, theta.shape[1])
    plain = solvers.cross_validate(theta, v)
    scaled = solvers.cross_validate(theta, v, column_scales=scales)
    assert np.abs(scaled.coefficients - plain.coefficients / scales).max() < 1e-12


def test_cross_validation_fold_handling():
    theta, v = _instance(5, n=30, m=5)
    loo = solvers.cross_validate(theta, v, k=30)
    assert np.isfinite(loo.cv_error).all()
    assert loo.coefficients is not None
    with pytest.raises(ValueError):
        solvers.cross_validate(theta, v, k=1)
    with pytest.raises(ValueError):
        solvers.cross_validate(theta, v, k=31)
    with pytest.raises(ValueError):
        solvers.cross_validate(theta, v, grid=np.array([0.1, 0.5]))  # ascending


def test_cross_validation_tie_prefers_larger_penalty():
    theta, v = _instance(6)
    grid = solvers._lambda_grid(solvers.lambda_max(theta, v), 20, 4.0)
    fit = solvers.cross_validate(theta, v, grid=grid)
    best = np.flatnonzero(fit.cv_error == fit.cv_error.min())[0]
    assert fit.chosen_lambda == grid[best]


def test_orthogonal_target_gives_single_point_grid():
    theta = np.zeros((4, 2))
    theta[0, 0] = theta[1, 1] = 1.0
    v = np.array([0.0, 0.0, 1.0, -2.0])   # exactly orthogonal to every column
    fit = solvers.lasso_path(theta, v)
    assert fit.lambda_grid.shape == (1,)
    assert np.array_equal(fit.path, np.zeros((2, 1)))


def test_lasso_fit_json():
    theta, v = _instance(7, m=4)
    fit = solvers.cross_validate(theta, v, grid_size=10)
    d = fit.to_json_dict(labels=["a", "b", "c", "d"])
    assert len(d["lambda_grid"]) == 10
    assert len(d["support_sizes"]) == 10
    assert d["chosen_lambda"] == fit.chosen_lambda
    labels_kept = set(d["coefficients"])
    assert labels_kept == {lab for lab, w in zip("abcd", fit.coefficients) if w != 0.0}
