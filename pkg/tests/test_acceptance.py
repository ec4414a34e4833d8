"""Acceptance gate.

Each test prints one ``ACCEPTANCE <id> ...: PASS/FAIL`` line (visible
with ``pytest -s`` or on failure) and asserts the same condition, so the
suite doubles as a human-readable checklist.  The simulation-backed
criteria share session-scoped fixtures because the underlying runs take
minutes.
"""

import itertools
import math
import time

import numpy as np
import pytest

from netbandit.harness import ExperimentConfig, run_experiment, run_sweep
from netbandit.metrics import aggregate, growth_exponent
from netbandit.nela import mixed_feature
from netbandit.sparse_regression import RegressionHistory, lasso_solve

SEEDS10 = tuple(range(10))


def report(criterion, ok, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {criterion} failed: {detail}"


def random_history(n, d, t, rng):
    history = RegressionHistory(n, d)
    for _ in range(t):
        user = int(rng.integers(n))
        x = rng.standard_normal(d)
        x /= max(np.linalg.norm(x), 1.0)
        history.append(user, x, float(rng.normal()))
    return history


# --- estimator-core oracle suite ----------------------------------------

class TestEstimatorCore:
    def test_criterion_1_lasso_vs_grid(self):
        """Coordinate-wise exhaustive grid descent (step 1e-4 over
        [-20, 20] per coordinate, swept to a fixed point) as the
        brute-force oracle."""
        grid = np.arange(-20.0, 20.0 + 1e-9, 1e-4)
        grid_sq = grid * grid
        grid_abs = np.abs(grid)
        start = time.monotonic()
        worst = 0.0
        rng = np.random.default_rng(2024)
        for _ in range(200):
            # random shapes with 2 <= n*d <= 6 (the solver needs nd > 1
            # for its adaptive penalty)
            n = int(rng.integers(1, 4))
            d_low = 2 if n == 1 else 1
            d = int(rng.integers(d_low, 6 // n + 1))
            t = int(rng.integers(2, 13))
            history = random_history(n, d, t, rng)
            lam = float(rng.uniform(0.01, 0.5))
            v_solver = lasso_solve(history, lam, tol=1e-10)
            # oracle: sweep coordinates, each minimized exactly on the
            # grid, until no coordinate moves
            v = np.zeros(n * d)
            for _ in range(200):
                moved = False
                for i in range(n):
                    g, c = history.gram[i], history.cross[i]
                    for k in range(d):
                        j = i * d + k
                        a = g[k, k] / t
                        b = 2.0 * (g[k] @ v[i * d:(i + 1) * d] - g[k, k] * v[j] - c[k]) / t
                        vals = a * grid_sq + b * grid + lam * grid_abs
                        best = grid[int(np.argmin(vals))]
                        if best != v[j]:
                            v[j] = best
                            moved = True
                if not moved:
                    break
            gap = history.objective(v_solver, lam) - history.objective(v, lam)
            worst = max(worst, gap)
        elapsed = time.monotonic() - start
        ok = worst <= 1e-6 and elapsed < 30.0
        report("1 lasso-vs-grid", ok, f"worst gap {worst:.2e}, {elapsed:.1f}s")

    def test_criterion_2_orthogonal_closed_form(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(2, 6))
            per_user = int(rng.integers(2, 8))
            t = n * per_user
            scale = math.sqrt(t / per_user)
            history = RegressionHistory(n, 1)
            sums = np.zeros(n)
            for i in range(n):
                ys = rng.standard_normal(per_user)
                sums[i] = ys.sum()
                for y in ys:
                    history.append(i, np.array([scale]), float(y))
            lam = float(rng.uniform(0.05, 1.0))
            v = lasso_solve(history, lam, tol=1e-12)
            for i in range(n):
                corr = scale * sums[i] / t
                expected = math.copysign(max(abs(corr) - lam / 2.0, 0.0), corr)
                worst = max(worst, abs(v[i] - expected))
        report("2 orthogonal-soft-threshold", worst <= 1e-8, f"worst err {worst:.2e}")

    def test_criterion_3_sherman_morrison_logdet(self):
        from netbandit.graph import InfluenceMatrix
        from netbandit.nela import NelaConfig, NelaPolicy

        rng = np.random.default_rng(11)
        n, d = 8, 5  # nd = 40
        raw = rng.random((n, n))
        w = InfluenceMatrix(raw / raw.sum(axis=0))
        policy = NelaPolicy(n, d, w, NelaConfig(warmup_rounds=math.inf))
        for _ in range(200):
            x = rng.standard_normal(d)
            x /= max(np.linalg.norm(x), 1.0)
            policy.update(int(rng.integers(n)), x, float(rng.normal()))
        inv_err = float(np.linalg.norm(policy.a_inv - np.linalg.inv(policy.A)))
        _, logdet = np.linalg.slogdet(policy.A)
        logdet_err = abs(policy.log_det_a - logdet)
        ok = inv_err <= 1e-7 and logdet_err <= 1e-6
        report("3 sherman-morrison", ok, f"inv {inv_err:.2e}, logdet {logdet_err:.2e}")

    def test_criterion_4_mixed_feature_identity(self):
        from netbandit.graph import InfluenceMatrix

        rng = np.random.default_rng(13)
        worst = 0.0
        for _ in range(50):
            n, d = int(rng.integers(2, 8)), int(rng.integers(1, 6))
            raw = rng.random((n, n))
            w = InfluenceMatrix(raw / raw.sum(axis=0))
            theta = rng.standard_normal((d, n))
            x = rng.standard_normal(d)
            u = int(rng.integers(n))
            lhs = mixed_feature(x, u, w) @ theta.T.reshape(-1)
            rhs = x @ (theta @ w.w[:, u])
            worst = max(worst, abs(lhs - rhs))
        report("4 mixed-feature-identity", worst <= 1e-12, f"worst err {worst:.2e}")


# --- algorithm-behavior suite -------------------------------------------

# All simulation-backed criteria pin the residual-bound constant to
# s_v = 1.0: the conservative theoretical default (10 * sqrt(anomaly
# count)) inflates NELA's exploration width by two orders of magnitude
# at sigma = 0.01 and drowns the structural comparison the criteria
# test.  Detection metrics are insensitive to this constant; regret is
# not.  See the experiment-defaults note in the README.

@pytest.fixture(scope="session")
def synthetic_run(tmp_path_factory):
    """The shared n=50 synthetic scenario behind criteria 5 and 6."""
    config = ExperimentConfig(
        scenario="synthetic", n=50, d=10, m=50, horizon=1000,
        sigma=0.01, gamma=0.0, nonzero_dims=1, anomaly_count=3, s_v=1.0,
        policies=("nela", "colin", "linucb", "nlinucb", "graphucb"),
        seeds=SEEDS10, out_dir=str(tmp_path_factory.mktemp("synthetic")),
    )
    return run_experiment(config)


@pytest.fixture(scope="session")
def sweep_run(tmp_path_factory):
    """The gamma x nonzero-dims recall sweep behind criterion 7."""
    config = ExperimentConfig(
        scenario="synthetic", n=20, d=10, m=50, horizon=1500,
        sigma=0.01, anomaly_count=3, s_v=1.0, policies=("nela",),
        seeds=SEEDS10, out_dir=str(tmp_path_factory.mktemp("sweep")),
    )
    return run_sweep(config, [2.0, 5.0, 10.0], [1, 2, 3])


class TestAlgorithmBehavior:
    def test_criterion_5_regret_ordering(self, synthetic_run):
        final = {
            name: aggregate(logs)["cum_regret_mean"][-1]
            for name, logs in synthetic_run.items()
        }
        ordered = (
            final["nela"] < final["colin"]
            and final["colin"] < final["linucb"]
            and final["colin"] < final["nlinucb"]
            and final["linucb"] < final["graphucb"]
            and final["nlinucb"] < final["graphucb"]
        )
        margin = (final["colin"] - final["nela"]) / final["colin"]
        ok = ordered and margin >= 0.05
        detail = ", ".join(f"{k}={v:.1f}" for k, v in sorted(final.items()))
        report("5 regret-ordering", ok, f"{detail}; nela<colin margin {margin:.1%}")

    def test_criterion_6_precision_after_burn_in(self, synthetic_run):
        agg = aggregate(synthetic_run["nela"])
        mask = agg["t"] >= 200
        min_prec = float(agg["precision_mean"][mask].min())
        report("6 precision", min_prec >= 0.99, f"min mean precision t>=200 is {min_prec:.4f}")

    def test_criterion_7_recall_trends(self, sweep_run):
        final_recall = {}
        for (g, k), logs_by_policy in sweep_run.items():
            agg = aggregate(logs_by_policy["nela"])
            final_recall[(g, k)] = float(agg["recall_mean"][-1])
        monotone = all(
            final_recall[(2.0, k)] <= final_recall[(5.0, k)] + 1e-9
            and final_recall[(5.0, k)] <= final_recall[(10.0, k)] + 1e-9
            for k in (1, 2, 3)
        )
        spread_ok = final_recall[(2.0, 3)] <= final_recall[(2.0, 1)] + 1e-9
        ok = monotone and spread_ok
        detail = ", ".join(
            f"g{g:g}k{k}={final_recall[(g, k)]:.2f}"
            for g, k in itertools.product((2.0, 5.0, 10.0), (1, 2, 3))
        )
        report("7 recall-trends", ok, detail)

    def test_criterion_8_toy_graph_ordering(self, tmp_path_factory):
        # anomaly-free toy instance; the residual vector is exactly zero,
        # so the residual-norm bound in nela's width is set near zero.
        # lambda0=0.1 keeps the Lasso threshold above the ridge model's
        # early prediction-error floor (see the criterion-10 comment);
        # the outcome is flat over lambda0 in [0.05, 0.2]
        config = ExperimentConfig(
            scenario="toy-full", n=4, d=10, m=50, horizon=500,
            sigma=0.01, gamma=0.0, anomaly_count=0, s_v=0.01, lambda0=0.1,
            policies=("nela", "colin", "linucb", "nlinucb"), seeds=SEEDS10,
            out_dir=str(tmp_path_factory.mktemp("toy")),
        )
        results = run_experiment(config)
        final = {
            name: aggregate(logs)["cum_regret_mean"][-1]
            for name, logs in results.items()
        }
        within = abs(final["nela"] - final["colin"]) <= 0.15 * final["colin"]
        below = final["nela"] < final["linucb"] and final["nela"] < final["nlinucb"]
        ok = within and below
        detail = ", ".join(f"{k}={v:.1f}" for k, v in sorted(final.items()))
        report("8 toy-ordering", ok, detail)

    def test_criterion_9_sublinear_growth(self, tmp_path_factory):
        config = ExperimentConfig(
            scenario="synthetic", n=20, d=10, m=50, horizon=2000,
            sigma=0.01, anomaly_count=0, s_v=1.0,
            policies=("nela",), seeds=tuple(range(5)),
            out_dir=str(tmp_path_factory.mktemp("growth")),
        )
        results = run_experiment(config)
        agg = aggregate(results["nela"])
        exponent = growth_exponent(agg["t"], agg["cum_regret_mean"])
        report("9 growth-exponent", exponent <= 0.75, f"exponent {exponent:.3f}")

    def test_criterion_10_support_recovery(self, tmp_path_factory):
        # lambda0 is raised from the 0.02 default because the Lasso
        # targets carry the ridge model's in-sample prediction error,
        # which does not shrink with sigma; at sigma=0.001 the default
        # threshold sits below that bias floor and every seed reports
        # 3-8 persistent false alarms.  0.1 is still two orders below
        # the per-coordinate anomaly signal (10) and the outcome is
        # flat over lambda0 in [0.05, 0.2].
        config = ExperimentConfig(
            scenario="synthetic", n=20, d=5, m=50, horizon=800,
            sigma=0.001, gamma=10.0, nonzero_dims=1, anomaly_count=2,
            s_v=1.0, lambda0=0.1,
            policies=("nela",), seeds=tuple(range(20)),
            out_dir=str(tmp_path_factory.mktemp("recovery")),
        )
        results = run_experiment(config)
        good = 0
        for log in results["nela"]:
            recall = log.recall[-1]
            hits = round(recall * 2)
            false_alarms = log.detected_count[-1] - hits
            if recall == 1.0 and false_alarms <= 1:
                good += 1
        report("10 support-recovery", good >= 18, f"{good}/20 seeds clean")


# --- determinism --------------------------------------------------------

class TestDeterminism:
    def test_criterion_D_byte_identical_outputs(self, tmp_path, monkeypatch):
        base = dict(
            scenario="synthetic", n=10, d=5, m=10, horizon=60,
            anomaly_count=1, gamma=5.0, policies=("nela", "linucb"),
            seeds=(0, 1),
        )
        runs = {}
        for name, workers in (("a", None), ("b", None), ("w4", "4")):
            if workers is None:
                monkeypatch.delenv("NETBANDIT_WORKERS", raising=False)
            else:
                monkeypatch.setenv("NETBANDIT_WORKERS", workers)
            out = tmp_path / name
            run_experiment(ExperimentConfig(out_dir=str(out), **base))
            runs[name] = {
                p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))
            }
        same_invocation = runs["a"] == runs["b"]
        same_workers = runs["a"] == runs["w4"]
        ok = same_invocation and same_workers
        report(
            "D determinism", ok,
            f"repeat invocation identical: {same_invocation}, "
            f"workers 1 vs 4 identical: {same_workers}",
        )
