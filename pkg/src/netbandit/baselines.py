"""Comparison policies: LinUCB, nLinUCB, CoLin, and a simplified
GraphUCB.

All policies expose ``select(user, arm_set) -> arm index`` and
``update(user, arm, reward) -> detected anomaly set`` (always empty for
the baselines) and share NELA's (sigma, delta, lambda1, s_theta)
exploration constants, so comparisons are about structure rather than
tuning.
"""

import math
from dataclasses import replace

import numpy as np

from netbandit.graph import InfluenceMatrix
from netbandit.nela import NelaConfig, NelaPolicy, colin_config


class GraphPriorError(ValueError):
    """Raised when the Laplacian prior is singular."""


class RidgeModel:
    """Streaming ridge regression with a rank-one inverse update and a
    running log-determinant."""

    def __init__(self, dim: int, lambda1: float):
        self.dim = dim
        self.lambda1 = lambda1
        self.A = lambda1 * np.eye(dim)
        self.a_inv = np.eye(dim) / lambda1
        self.log_det_a = dim * math.log(lambda1)
        self.b = np.zeros(dim)
        self.theta = np.zeros(dim)

    @classmethod
    def from_prior(cls, a0: np.ndarray, lambda1: float):
        model = cls.__new__(cls)
        model.dim = a0.shape[0]
        model.lambda1 = lambda1
        model.A = a0.copy()
        if np.linalg.eigvalsh(a0).min() <= 1e-12:
            raise GraphPriorError("prior precision matrix is not positive definite")
        _, logdet = np.linalg.slogdet(a0)
        model.a_inv = np.linalg.inv(a0)
        model.log_det_a = logdet
        model.b = np.zeros(model.dim)
        model.theta = np.zeros(model.dim)
        return model

    def rank_one_update(self, z, reward):
        az = self.a_inv @ z
        denom = 1.0 + z @ az
        self.A += np.outer(z, z)
        self.a_inv -= np.outer(az, az) / denom
        self.log_det_a += math.log(denom)
        self.b += reward * z
        self.theta = self.a_inv @ self.b

    def alpha(self, config: NelaConfig) -> float:
        inner = self.log_det_a - self.dim * math.log(self.lambda1) - 2.0 * math.log(config.delta)
        return config.sigma * math.sqrt(max(inner, 0.0)) + math.sqrt(self.lambda1) * config.s_theta


class LinUCBPolicy:
    """One d-dimensional ridge model shared by every user; graph-blind."""

    name = "linucb"

    def __init__(self, n: int, d: int, config: NelaConfig):
        self.model = RidgeModel(d, config.lambda1)
        self.config = config

    def select(self, user, arm_set) -> int:
        arms = arm_set.arms
        quad = np.einsum("ma,ab,mb->m", arms, self.model.a_inv, arms)
        scores = arms @ self.model.theta + self.model.alpha(self.config) * np.sqrt(
            np.maximum(quad, 0.0)
        )
        return int(np.argmax(scores))

    def update(self, user, arm, reward) -> frozenset:
        self.model.rank_one_update(np.asarray(arm, dtype=float), reward)
        return frozenset()


class NLinUCBPolicy:
    """n independent d-dimensional ridge models, one per user; graph-blind."""

    name = "nlinucb"

    def __init__(self, n: int, d: int, config: NelaConfig):
        self.models = [RidgeModel(d, config.lambda1) for _ in range(n)]
        self.config = config

    def select(self, user, arm_set) -> int:
        model = self.models[user]
        arms = arm_set.arms
        quad = np.einsum("ma,ab,mb->m", arms, model.a_inv, arms)
        scores = arms @ model.theta + model.alpha(self.config) * np.sqrt(np.maximum(quad, 0.0))
        return int(np.argmax(scores))

    def update(self, user, arm, reward) -> frozenset:
        self.models[user].rank_one_update(np.asarray(arm, dtype=float), reward)
        return frozenset()


class ColinPolicy(NelaPolicy):
    """CoLin: the NELA code path with the residual machinery disabled
    (infinite warm-up pins the residual estimate to zero forever).

    As a baseline its exploration width is the standard self-normalized
    bound in its own dimension nd with the shared (sigma, delta,
    lambda1), without NELA's residual-bound inflation.
    """

    name = "colin"

    def __init__(self, n: int, d: int, w: InfluenceMatrix, config: NelaConfig):
        super().__init__(n, d, w, colin_config(config))

    def alpha(self) -> float:
        c = self.config
        inner = self.log_det_a - self.nd * math.log(c.lambda1) - 2.0 * math.log(c.delta)
        return c.sigma * math.sqrt(max(inner, 0.0)) + math.sqrt(c.lambda1) * c.s_theta


def make_colin(n: int, d: int, w: InfluenceMatrix, config: NelaConfig) -> ColinPolicy:
    return ColinPolicy(n, d, w, config)


class GraphUCBPolicy:
    """Laplacian-regularized ridge over all users' blocks.

    A simplified GraphUCB: the prior precision is
    ``lambda1 * ((L (x) I_d) + eps I)`` with L the symmetrized
    random-walk Laplacian ``sym(I - P)`` where P is W^T with rows
    renormalized to row-stochastic; features are the raw per-user block
    vectors (no graph mixing), and the UCB width is the played user's
    block norm under the running inverse.

    The symmetrized random-walk Laplacian is only guaranteed to yield a
    positive-definite prior for graphs whose weights come from a
    symmetric score (the uniform and similarity constructions here); the
    constructor validates and rejects anything else.
    """

    name = "graphucb"

    def __init__(self, n: int, d: int, w: InfluenceMatrix, config: NelaConfig, eps: float = 0.01):
        self.n, self.d = n, d
        self.config = config
        p = w.w.T.copy()
        rowsums = p.sum(axis=1)
        rowsums[rowsums == 0] = 1.0
        l_rw = np.eye(n) - p / rowsums[:, None]
        l_sym = 0.5 * (l_rw + l_rw.T)
        a0 = config.lambda1 * (np.kron(l_sym, np.eye(d)) + eps * np.eye(n * d))
        self.model = RidgeModel.from_prior(a0, config.lambda1)

    def select(self, user, arm_set) -> int:
        arms = arm_set.arms
        d = self.d
        block = slice(user * d, (user + 1) * d)
        a_inv_block = self.model.a_inv[block, block]
        quad = np.einsum("ma,ab,mb->m", arms, a_inv_block, arms)
        scores = arms @ self.model.theta[block] + self.model.alpha(self.config) * np.sqrt(
            np.maximum(quad, 0.0)
        )
        return int(np.argmax(scores))

    def update(self, user, arm, reward) -> frozenset:
        z = np.zeros(self.n * self.d)
        z[user * self.d:(user + 1) * self.d] = np.asarray(arm, dtype=float)
        self.model.rank_one_update(z, reward)
        return frozenset()


def make_policy(name: str, n: int, d: int, w: InfluenceMatrix, config: NelaConfig):
    """Instantiate a policy by name; the graph-blind baselines never see W."""
    name = name.lower()
    if name == "nela":
        return NelaPolicy(n, d, w, config)
    if name == "colin":
        return make_colin(n, d, w, config)
    if name == "graphucb":
        return GraphUCBPolicy(n, d, w, config)
    if name == "nlinucb":
        return NLinUCBPolicy(n, d, config)
    if name == "linucb":
        return LinUCBPolicy(n, d, config)
    raise ValueError(f"unknown policy {name!r}")
