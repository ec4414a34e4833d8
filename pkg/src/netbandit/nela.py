"""The NELA policy: networked LinUCB with simultaneous anomaly detection.

The policy maintains a ridge state over graph-mixed features (dimension
nd), selects arms by an optimistic score, and after each reward update
re-estimates the sparse residual vector by Lasso, two-stage
thresholding, and a restricted least-squares refit.  Users owning any
coordinate of the refit support are reported as anomalies.
"""

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from netbandit.graph import InfluenceMatrix
from netbandit.sparse_regression import (
    RegressionHistory,
    SupportEstimate,
    lambda_schedule,
    lasso_solve,
    restricted_least_squares,
    two_stage_threshold,
)


def default_warmup(n: int, d: int) -> int:
    """Default number of rounds with the residual estimate pinned to 0."""
    return 10 * math.ceil(math.log(n * d))


def default_s_v(anomaly_count: int) -> float:
    """Conservative residual-norm bound for U(-10,10) draws."""
    return 10.0 * math.sqrt(anomaly_count) if anomaly_count > 0 else 1.0


@dataclass(frozen=True)
class NelaConfig:
    """Policy hyperparameters.

    ``s_x``, ``s_v``, ``s_theta`` bound the arm, residual, and feature
    norms and enter the exploration width.  ``s_1`` (l1 bound of the
    residual vector) appears only in the theory constants and is kept
    for documentation; it is unused at runtime.  ``warmup_rounds`` may
    be ``math.inf`` to disable the residual machinery entirely.
    """

    lambda1: float = 1.0
    lambda0: float = 0.02
    sigma: float = 0.01
    delta: float = 0.001
    s_x: float = 1.0
    s_v: float = 1.0
    s_theta: float = 1.0
    s_1: float = 1.0
    warmup_rounds: float | None = None
    lasso_every: int = 1
    lasso_tol: float = 1e-8
    lasso_max_iter: int = 10_000

    def __post_init__(self):
        for name in ("lambda1", "sigma", "s_x", "s_v", "s_theta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lambda0 < 0:
            raise ValueError("lambda0 must be >= 0")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must be in (0,1)")
        if self.lasso_every < 1:
            raise ValueError("lasso_every must be >= 1")


def mixed_feature(x, user: int, w: InfluenceMatrix) -> np.ndarray:
    """Graph-mixed regression feature: block j of the output is
    ``W(j, user) * x``, so its inner product with the stacked feature
    matrix equals ``x^T (Theta W)(:, user)``."""
    return np.kron(w.w[:, user], np.asarray(x, dtype=float))


class NelaPolicy:
    """Stateful decision-maker; one instance per simulated run."""

    name = "nela"

    def __init__(self, n: int, d: int, w: InfluenceMatrix, config: NelaConfig):
        if w.n != n:
            raise ValueError(f"graph has {w.n} users, expected {n}")
        self.n, self.d = n, d
        self.nd = n * d
        self.w = w
        self.config = config
        self.warmup = config.warmup_rounds
        if self.warmup is None:
            self.warmup = default_warmup(n, d)
        lam1 = config.lambda1
        self.A = lam1 * np.eye(self.nd)
        self.a_inv = np.eye(self.nd) / lam1
        self.log_det_a = self.nd * math.log(lam1)
        self.b = np.zeros(self.nd)
        self.theta_hat = np.zeros(self.nd)
        self.v_hat = np.zeros(self.nd)
        self.history = RegressionHistory(n, d)
        self.support = SupportEstimate(frozenset(), frozenset(), 0.0)
        self.detected = frozenset()
        self.t = 0
        self._v0_warm = None

    # -- helper views ----------------------------------------------------

    def _theta_mat(self):
        # vec stacks columns: block i of theta_hat is column i
        return self.theta_hat.reshape(self.n, self.d).T

    def _v_mat(self):
        return self.v_hat.reshape(self.n, self.d).T

    def alpha(self) -> float:
        """Exploration width from the self-normalized confidence bound."""
        c = self.config
        inner = self.log_det_a - self.nd * math.log(c.lambda1) - 2.0 * math.log(c.delta)
        radius = (c.sigma + 2.0 * c.s_x * c.s_v) * math.sqrt(max(inner, 0.0))
        return max(radius + math.sqrt(c.lambda1) * c.s_theta, 0.0)

    def select(self, user: int, arm_set) -> int:
        """Optimistic arm choice; ties broken by lowest index."""
        arms = arm_set.arms
        wcol = self.w.w[:, user]
        exploit = arms @ (self._theta_mat() @ wcol + self._v_mat()[:, user])
        # ||wcol (x) x||^2_{AInv} = x^T B x with B the wcol-contracted
        # block form of AInv; contracting once is far cheaper than
        # building each nd-dimensional feature
        nz = np.flatnonzero(wcol)
        blocks = self.a_inv.reshape(self.n, self.d, self.n, self.d)
        b_mat = np.einsum(
            "j,jakb,k->ab", wcol[nz], blocks[np.ix_(nz, range(self.d), nz, range(self.d))], wcol[nz]
        )
        quad = np.einsum("ma,ab,mb->m", arms, b_mat, arms)
        scores = exploit + self.alpha() * np.sqrt(np.maximum(quad, 0.0))
        return int(np.argmax(scores))

    def update(self, user: int, arm, reward: float) -> frozenset:
        """Absorb one observation; returns the detected anomaly set."""
        x = np.asarray(arm, dtype=float)
        z = mixed_feature(x, user, self.w)
        az = self.a_inv @ z
        denom = 1.0 + z @ az
        assert denom >= 1.0 - 1e-12, "rank-one denominator below 1"
        self.A += np.outer(z, z)
        self.a_inv -= np.outer(az, az) / denom
        self.log_det_a += math.log(denom)
        # the residual correction uses the previous round's estimate
        self.b += z * (reward - x @ self._v_mat()[:, user])
        self.theta_hat = self.a_inv @ self.b
        self.t += 1
        adjusted = reward - x @ (self._theta_mat() @ self.w.w[:, user])
        self.history.append(user, x, adjusted)
        if self.t > self.warmup and self.t % self.config.lasso_every == 0:
            lam = lambda_schedule(self.t, self.n, self.d, self.config.lambda0)
            v0 = lasso_solve(
                self.history,
                lam,
                tol=self.config.lasso_tol,
                max_iter=self.config.lasso_max_iter,
                warm_start=self._v0_warm,
            )
            self._v0_warm = v0
            self.support = two_stage_threshold(v0, lam)
            self.v_hat = restricted_least_squares(self.history, self.support.j1)
            self.detected = frozenset(j // self.d for j in self.support.j1)
        return self.detected

    def snapshot(self) -> str:
        """JSON state dump (diagonal A blocks, estimates, supports)."""
        diag_blocks = [
            self.A[i * self.d:(i + 1) * self.d, i * self.d:(i + 1) * self.d].tolist()
            for i in range(self.n)
        ]
        return json.dumps(
            {
                "t": self.t,
                "a_diag_blocks": diag_blocks,
                "log_det_a": self.log_det_a,
                "theta_hat": self.theta_hat.tolist(),
                "v_hat": self.v_hat.tolist(),
                "j0": sorted(self.support.j0),
                "j1": sorted(self.support.j1),
                "detected": sorted(self.detected),
            }
        )


def colin_config(config: NelaConfig) -> NelaConfig:
    """NELA config with the residual machinery disabled."""
    return replace(config, warmup_rounds=math.inf)
