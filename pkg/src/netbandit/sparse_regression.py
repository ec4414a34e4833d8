"""Residual-vector estimation: Lasso, two-stage thresholding, and the
restricted least-squares refit.

Every observation row touches only the served user's d coordinates of
the nd-dimensional coefficient vector, so the Lasso and the refit both
decompose into n independent d-dimensional problems.  The history keeps
per-user Gram matrices and cross products incrementally, which makes the
per-round solves cheap even as the history grows.
"""

import math
from dataclasses import dataclass, field

import numpy as np

EIG_CLIP = 1e-10


class SparseRegressionError(ValueError):
    """Raised on invalid solver inputs."""


class LassoConvergenceError(RuntimeError):
    """Coordinate descent exhausted its sweep budget.

    Carries the final KKT gap in ``gap``.
    """

    def __init__(self, gap, sweeps):
        super().__init__(f"lasso did not converge after {sweeps} sweeps (KKT gap {gap:.3e})")
        self.gap = gap
        self.sweeps = sweeps


@dataclass
class RegressionHistory:
    """Observation log for the residual regression.

    Each row is (user, arm vector, adjusted target), where the target was
    frozen at insertion time.  Per-user sufficient statistics (Gram
    matrix, cross product, squared-target sum) are maintained alongside
    the raw rows.
    """

    n: int
    d: int
    rows: list = field(default_factory=list)

    def __post_init__(self):
        if self.n * self.d <= 1:
            raise SparseRegressionError("need nd > 1")
        self.gram = np.zeros((self.n, self.d, self.d))
        self.cross = np.zeros((self.n, self.d))
        self.sq_targets = np.zeros(self.n)
        for user, x, y in self.rows:
            self._accumulate(user, np.asarray(x, float), y)

    @property
    def nd(self) -> int:
        return self.n * self.d

    def __len__(self) -> int:
        return len(self.rows)

    def _accumulate(self, user, x, y):
        self.gram[user] += np.outer(x, x)
        self.cross[user] += y * x
        self.sq_targets[user] += y * y

    def append(self, user: int, x, adjusted_target: float):
        x = np.asarray(x, dtype=float)
        self.rows.append((int(user), x, float(adjusted_target)))
        self._accumulate(int(user), x, float(adjusted_target))

    def objective(self, v_flat, lam: float) -> float:
        """(1/t) ||R - X v||^2 + lam ||v||_1 for the block-sparse design."""
        t = len(self.rows)
        blocks = v_flat.reshape(self.n, self.d)
        quad = 0.0
        for i in range(self.n):
            vi = blocks[i]
            quad += vi @ self.gram[i] @ vi - 2.0 * self.cross[i] @ vi + self.sq_targets[i]
        return quad / t + lam * float(np.abs(v_flat).sum())

    def dump_debug(self, path, v_flat=None, supports=None):
        """CSV dump of rows (and optional solution) for test fixtures."""
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["user", "target"] + [f"x{k}" for k in range(self.d)])
            for user, x, y in self.rows:
                writer.writerow([user, repr(y)] + [repr(float(val)) for val in x])
            if v_flat is not None:
                writer.writerow(["vhat"] + [repr(float(val)) for val in v_flat])
            if supports is not None:
                writer.writerow(["j0"] + sorted(supports.j0))
                writer.writerow(["j1"] + sorted(supports.j1))


@dataclass(frozen=True)
class SupportEstimate:
    """Index sets surviving the first and second threshold."""

    j0: frozenset
    j1: frozenset
    lambda_t: float

    def __post_init__(self):
        if not self.j1 <= self.j0:
            raise SparseRegressionError("second-stage support must be inside the first")


def lambda_schedule(t: int, n: int, d: int, lambda0: float) -> float:
    """Shrinking Lasso penalty ``lambda0 * sqrt(2 log t log(nd) / t)``.

    ``log t`` is floored at ``log 2`` so the penalty is positive from the
    first round.
    """
    if t < 1:
        raise SparseRegressionError(f"t must be >= 1, got {t}")
    nd = n * d
    if nd <= 1:
        raise SparseRegressionError("need nd > 1 for the log(nd) factor")
    return lambda0 * math.sqrt(2.0 * math.log(max(t, 2)) * math.log(nd) / t)


def _kkt_gap(history, v_blocks, lam, t):
    """Worst-coordinate violation of the Lasso stationarity conditions."""
    gap = 0.0
    for i in range(history.n):
        g = (2.0 / t) * (history.gram[i] @ v_blocks[i] - history.cross[i])
        for k in range(history.d):
            if v_blocks[i][k] != 0.0:
                gap = max(gap, abs(g[k] + lam * math.copysign(1.0, v_blocks[i][k])))
            else:
                gap = max(gap, max(0.0, abs(g[k]) - lam))
    return gap


def lasso_solve(history: RegressionHistory, lam: float, tol: float = 1e-8,
                max_iter: int = 10_000, warm_start=None) -> np.ndarray:
    """Cyclic coordinate descent for
    ``min_v (1/t) ||R - X v||^2 + lam ||v||_1``.

    Exploits the block structure: each user's coordinates only see that
    user's rows.  Coordinates with no data stay at zero.  Raises
    :class:`LassoConvergenceError` if the sweep budget is exhausted
    before both the max-coordinate-change and KKT criteria are met.
    """
    if len(history) == 0:
        raise SparseRegressionError("history is empty")
    if lam < 0:
        raise SparseRegressionError("lambda must be >= 0")
    if tol <= 0:
        raise SparseRegressionError("tol must be > 0")
    t = len(history)
    n, d = history.n, history.d
    v = np.zeros((n, d)) if warm_start is None else warm_start.reshape(n, d).copy()
    thresh = t * lam / 2.0
    diag = np.array([np.diag(history.gram[i]) for i in range(n)])
    active = [i for i in range(n) if history.sq_targets[i] > 0 or np.any(diag[i] > 0)]
    # coordinates whose design column is identically zero carry no data
    v[diag == 0.0] = 0.0
    for sweep in range(max_iter):
        max_change = 0.0
        for i in active:
            gi, ci, vi = history.gram[i], history.cross[i], v[i]
            for k in range(d):
                if diag[i, k] == 0.0:
                    continue
                rho = ci[k] - gi[k] @ vi + diag[i, k] * vi[k]
                new = math.copysign(max(abs(rho) - thresh, 0.0), rho) / diag[i, k]
                change = abs(new - vi[k])
                if change > max_change:
                    max_change = change
                vi[k] = new
        if max_change < tol:
            gap = _kkt_gap(history, v, lam, t)
            if gap <= tol * (1.0 + lam):
                return v.reshape(-1)
    raise LassoConvergenceError(_kkt_gap(history, v, lam, t), max_iter)


def two_stage_threshold(v0, lambda_t: float) -> SupportEstimate:
    """Keep coordinates strictly above 4*lambda_t, then strictly above
    4*lambda_t*sqrt(|first-stage support|)."""
    if lambda_t < 0:
        raise SparseRegressionError("lambda_t must be >= 0")
    v0 = np.asarray(v0, dtype=float)
    mags = np.abs(v0)
    j0 = np.flatnonzero(mags > 4.0 * lambda_t)
    second = 4.0 * lambda_t * math.sqrt(len(j0))
    j1 = j0[mags[j0] > second]
    return SupportEstimate(
        j0=frozenset(int(j) for j in j0),
        j1=frozenset(int(j) for j in j1),
        lambda_t=float(lambda_t),
    )


def restricted_least_squares(history: RegressionHistory, support) -> np.ndarray:
    """Unregularized refit on the given flat coordinate set.

    Zero outside the support; on the support, the minimum-norm
    least-squares solution per user block, with Gram eigenvalues below
    ``1e-10`` treated as null directions.
    """
    v = np.zeros(history.nd)
    if not support:
        return v
    d = history.d
    by_user = {}
    for j in support:
        by_user.setdefault(j // d, []).append(j % d)
    for user, dims in by_user.items():
        dims = np.asarray(sorted(dims))
        g = history.gram[user][np.ix_(dims, dims)]
        c = history.cross[user][dims]
        eigvals, eigvecs = np.linalg.eigh(g)
        inv = np.where(eigvals > EIG_CLIP, 1.0 / np.where(eigvals > EIG_CLIP, eigvals, 1.0), 0.0)
        sol = eigvecs @ (inv * (eigvecs.T @ c))
        v[user * d + dims] = sol
    return v
