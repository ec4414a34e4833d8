import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netbandit.sparse_regression import (
    LassoConvergenceError,
    RegressionHistory,
    SparseRegressionError,
    lambda_schedule,
    lasso_solve,
    restricted_least_squares,
    two_stage_threshold,
)


def make_history(n, d, rows):
    history = RegressionHistory(n, d)
    for user, x, y in rows:
        history.append(user, np.asarray(x, dtype=float), y)
    return history


def random_history(n, d, t, rng, v_true=None, noise=0.0):
    """Rows with random arms; targets from an optional planted residual."""
    history = RegressionHistory(n, d)
    for _ in range(t):
        user = int(rng.integers(n))
        x = rng.standard_normal(d)
        x /= max(np.linalg.norm(x), 1.0)
        y = 0.0
        if v_true is not None:
            y = float(x @ v_true.reshape(n, d)[user])
        if noise:
            y += float(rng.normal(0.0, noise))
        history.append(user, x, y)
    return history


def grid_min_1d(a, b, lam, grid):
    """Brute-force minimizer of a*v^2 + b*v + lam*|v| over the grid."""
    vals = a * grid**2 + b * grid + lam * np.abs(grid)
    return grid[int(np.argmin(vals))]


class TestLambdaSchedule:
    def test_direct_formula_t2(self):
        # n=2, d=1: lambda = sqrt(2 * log 2 * log 2 / 2) = log 2
        assert lambda_schedule(2, 2, 1, 1.0) == pytest.approx(math.log(2.0))

    def test_zero_coefficient(self):
        for t in (1, 5, 100):
            assert lambda_schedule(t, 4, 3, 0.0) == 0.0

    def test_log_t_floored_at_t1(self):
        assert lambda_schedule(1, 4, 3, 1.0) == pytest.approx(
            math.sqrt(2.0 * math.log(2.0) * math.log(12))
        )

    def test_eventually_monotone_decreasing(self):
        vals = [lambda_schedule(t, 5, 4, 0.02) for t in range(8, 5000)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_nd_too_small_rejected(self):
        with pytest.raises(SparseRegressionError):
            lambda_schedule(5, 1, 1, 1.0)


class TestLassoSolve:
    def test_kill_condition_gives_zero(self):
        rng = np.random.default_rng(0)
        history = random_history(3, 2, 10, rng, noise=1.0)
        t = len(history)
        max_corr = max(
            abs(history.cross[i][k]) for i in range(3) for k in range(2)
        )
        lam = 2.0 * max_corr / t * 1.01
        v = lasso_solve(history, lam)
        assert np.all(v == 0.0)

    def test_one_dimensional_closed_form_and_grid(self):
        rng = np.random.default_rng(1)
        grid = np.arange(-20.0, 20.0 + 1e-9, 1e-4)
        for trial in range(5):
            t = 8
            xcol = rng.standard_normal(t)
            y = rng.standard_normal(t)
            # single-coordinate problem: user 0 of a 2-user, d=1 design
            history = make_history(2, 1, [(0, [xcol[s]], y[s]) for s in range(t)])
            lam = 0.3 * rng.random()
            v = lasso_solve(history, lam)[0]
            c = xcol @ y
            closed = math.copysign(max(abs(c) - t * lam / 2.0, 0.0), c) / (xcol @ xcol)
            assert v == pytest.approx(closed, abs=1e-8)
            a, b = (xcol @ xcol) / t, -2.0 * c / t
            assert v == pytest.approx(grid_min_1d(a, b, lam, grid), abs=2e-4)

    def test_orthogonal_design_soft_threshold(self):
        # per-user single-dim columns scaled so the Gram diagonal is t
        rng = np.random.default_rng(2)
        n, per_user = 4, 5
        t = n * per_user
        scale = math.sqrt(t / per_user)
        rows = []
        targets = {}
        for i in range(n):
            ys = rng.standard_normal(per_user)
            targets[i] = ys
            rows += [(i, [scale], ys[s]) for s in range(per_user)]
        history = make_history(n, 1, rows)
        lam = 0.4
        v = lasso_solve(history, lam)
        for i in range(n):
            corr = scale * targets[i].sum() / t
            expected = math.copysign(max(abs(corr) - lam / 2.0, 0.0), corr)
            assert v[i] == pytest.approx(expected, abs=1e-8)

    def test_kkt_residual_at_solution(self):
        rng = np.random.default_rng(3)
        v_true = np.zeros(6)
        v_true[1] = 2.0
        history = random_history(3, 2, 60, rng, v_true=v_true, noise=0.1)
        lam, tol = 0.05, 1e-8
        v = lasso_solve(history, lam, tol=tol)
        t = len(history)
        blocks = v.reshape(3, 2)
        for i in range(3):
            g = (2.0 / t) * (history.gram[i] @ blocks[i] - history.cross[i])
            for k in range(2):
                if blocks[i][k] != 0:
                    assert abs(g[k] + lam * math.copysign(1, blocks[i][k])) <= tol * (1 + lam)
                else:
                    assert abs(g[k]) <= lam + tol * (1 + lam)

    def test_objective_not_increased_from_warm_start(self):
        rng = np.random.default_rng(4)
        history = random_history(4, 3, 40, rng, noise=0.5)
        lam = 0.1
        warm = rng.standard_normal(12)
        v = lasso_solve(history, lam, warm_start=warm)
        assert history.objective(v, lam) <= history.objective(warm, lam) + 1e-12

    def test_zero_lambda_matches_restricted_ls(self):
        rng = np.random.default_rng(5)
        v_true = rng.standard_normal(8)
        history = random_history(2, 4, 100, rng, v_true=v_true, noise=0.0)
        v_lasso = lasso_solve(history, 0.0, tol=1e-10, max_iter=100_000)
        v_ls = restricted_least_squares(history, set(range(8)))
        assert np.allclose(v_lasso, v_ls, atol=1e-6)

    def test_untouched_coordinates_stay_zero(self):
        rng = np.random.default_rng(6)
        history = make_history(3, 2, [(0, rng.standard_normal(2), 1.0)])
        v = lasso_solve(history, 0.001)
        assert np.all(v[2:] == 0.0)

    def test_convergence_error_carries_gap(self):
        rng = np.random.default_rng(7)
        history = random_history(2, 3, 30, rng, noise=1.0)
        with pytest.raises(LassoConvergenceError) as err:
            lasso_solve(history, 0.01, tol=1e-14, max_iter=1)
        assert err.value.gap >= 0.0

    def test_empty_history_rejected(self):
        with pytest.raises(SparseRegressionError):
            lasso_solve(RegressionHistory(2, 2), 0.1)


class TestTwoStageThreshold:
    def test_direct_definition(self):
        lam = 0.5
        est = two_stage_threshold(np.array([5 * lam, 3 * lam, 0.0]), lam)
        assert est.j0 == {0}
        assert est.j1 == {0}

    def test_second_stage_kills_borderline_entries(self):
        lam = 1.0
        est = two_stage_threshold(np.full(4, 4.5 * lam), lam)
        assert est.j0 == {0, 1, 2, 3}
        # 4 lam sqrt(4) = 8 lam > 4.5 lam
        assert est.j1 == set()

    def test_zero_lambda_keeps_all_nonzeros(self):
        est = two_stage_threshold(np.array([0.0, -0.1, 2.0]), 0.0)
        assert est.j0 == {1, 2}
        assert est.j1 == {1, 2}

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=12),
        st.floats(1e-6, 10.0),
        st.floats(0.01, 100.0),
    )
    def test_scale_equivariance(self, entries, lam, c):
        v0 = np.asarray(entries)
        a = two_stage_threshold(v0, lam)
        b = two_stage_threshold(c * v0, c * lam)
        assert a.j0 == b.j0 and a.j1 == b.j1


class TestRestrictedLeastSquares:
    def test_empty_support(self):
        history = make_history(2, 2, [(0, [1.0, 0.0], 1.0)])
        assert np.all(restricted_least_squares(history, set()) == 0.0)

    def test_noiseless_exact_recovery(self):
        rng = np.random.default_rng(8)
        n, d = 3, 3
        v_true = np.zeros(n * d)
        v_true[[1, 5, 6]] = [2.0, -1.5, 0.7]
        history = random_history(n, d, 90, rng, v_true=v_true, noise=0.0)
        v = restricted_least_squares(history, {1, 5, 6})
        assert np.allclose(v, v_true, atol=1e-9)
        # residuals vanish on a noiseless identifiable system
        for user, x, y in history.rows:
            assert abs(x @ v.reshape(n, d)[user] - y) <= 1e-9

    def test_single_column_projection(self):
        xcol = np.array([1.0, 2.0, 3.0])
        y = np.array([1.0, 0.0, 1.0])
        history = make_history(2, 1, [(1, [xcol[s]], y[s]) for s in range(3)])
        v = restricted_least_squares(history, {1})
        assert v[1] == pytest.approx(xcol @ y / (xcol @ xcol))
        assert v[0] == 0.0

    def test_rank_deficient_support_min_norm(self):
        # support includes a user with no data: stays zero
        history = make_history(2, 2, [(0, [1.0, 0.0], 2.0)])
        v = restricted_least_squares(history, {0, 1, 2, 3})
        assert v[0] == pytest.approx(2.0)
        assert v[1] == 0.0  # no data in dim 1 for user 0
        assert np.all(v[2:] == 0.0)


class TestSupportRecovery:
    def test_lemma_style_recovery_rate(self):
        # noiseless planted residuals, minimum entry gamma / sqrt(d)
        n, d, s0, t = 20, 5, 2, 500
        gamma = 5.0
        hits = 0
        trials = 100
        for seed in range(trials):
            rng = np.random.default_rng(1000 + seed)
            v_true = np.zeros(n * d)
            users = rng.choice(n, size=s0, replace=False)
            support = set()
            for u in users:
                k = int(rng.integers(d))
                j = u * d + k
                v_true[j] = rng.choice([-1.0, 1.0]) * gamma / math.sqrt(d) * (1 + rng.random())
                support.add(j)
            history = random_history(n, d, t, rng, v_true=v_true, noise=0.0)
            lam = lambda_schedule(t, n, d, 0.02)
            v0 = lasso_solve(history, lam)
            est = two_stage_threshold(v0, lam)
            if support <= est.j1:
                hits += 1
        assert hits >= 0.95 * trials
