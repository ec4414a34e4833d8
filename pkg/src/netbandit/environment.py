"""Simulated networked bandit with injected anomalies.

The hidden state is a feature matrix Theta (one unit-norm column per
user), a sparse residual matrix V that is nonzero only on anomalous
users, and the anomaly set itself.  Rewards follow the linear model
``x^T (Theta W + V)(:, user) + noise``.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from netbandit.graph import InfluenceMatrix

ARM_NORM_TOL = 1e-9


class EnvironmentInputError(ValueError):
    """Raised on invalid environment construction arguments."""


@dataclass(frozen=True)
class GroundTruth:
    """Hidden simulator state: features, residuals, and true anomalies."""

    theta: np.ndarray  # d x n, unit-norm columns
    v: np.ndarray  # d x n, nonzero columns only on anomalies
    anomaly_set: frozenset
    gamma: float

    @property
    def n(self) -> int:
        return self.theta.shape[1]

    @property
    def d(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True)
class ArmSet:
    """The candidate context vectors offered at one round (M x d)."""

    arms: np.ndarray

    def __post_init__(self):
        arms = np.atleast_2d(np.asarray(self.arms, dtype=float))
        object.__setattr__(self, "arms", arms)
        norms = np.linalg.norm(arms, axis=1)
        if np.any(norms > 1.0 + ARM_NORM_TOL):
            raise EnvironmentInputError(f"arm norm {norms.max()!r} exceeds 1")

    @property
    def m(self) -> int:
        return self.arms.shape[0]


@dataclass(frozen=True)
class RoundRecord:
    t: int
    user: int
    arm_set: ArmSet
    chosen_arm: int
    reward: float
    optimal_reward: float
    instant_regret: float


def generate_ground_truth(n, d, anomaly_count, gamma_target, nonzero_dims, rng) -> GroundTruth:
    """Draw hidden features and plant anomalies.

    Theta columns are standard normal, normalized to unit length.
    ``anomaly_count`` distinct users receive ``nonzero_dims`` residual
    coordinates drawn U(-10, 10).  With ``gamma_target > 0`` each
    anomalous column is rescaled to that exact l2 norm; ``gamma_target
    == 0`` leaves the raw draws in place (uncontrolled norms).
    """
    theta = rng.standard_normal((d, n))
    theta /= np.linalg.norm(theta, axis=0)
    return inject_anomalies(theta, anomaly_count, gamma_target, nonzero_dims, rng)


def inject_anomalies(theta, anomaly_count, gamma_target, nonzero_dims, rng) -> GroundTruth:
    """Plant anomalies on top of a given (already unit-norm) feature
    matrix; see :func:`generate_ground_truth` for the sampling law."""
    theta = np.asarray(theta, dtype=float)
    d, n = theta.shape
    if anomaly_count > n:
        raise EnvironmentInputError(f"anomaly_count {anomaly_count} exceeds n {n}")
    if nonzero_dims > d:
        raise EnvironmentInputError(f"nonzero_dims {nonzero_dims} exceeds d {d}")
    if anomaly_count > 0 and nonzero_dims == 0:
        raise EnvironmentInputError("nonzero_dims must be >= 1 when planting anomalies")
    v = np.zeros((d, n))
    anomalies = rng.choice(n, size=anomaly_count, replace=False) if anomaly_count else []
    for i in anomalies:
        dims = rng.choice(d, size=nonzero_dims, replace=False)
        vals = rng.uniform(-10.0, 10.0, size=nonzero_dims)
        if gamma_target > 0:
            norm = np.linalg.norm(vals)
            if norm == 0.0:
                vals = np.full(nonzero_dims, gamma_target / np.sqrt(nonzero_dims))
            else:
                vals = vals * (gamma_target / norm)
        v[dims, i] = vals
    return GroundTruth(
        theta=theta,
        v=v,
        anomaly_set=frozenset(int(i) for i in anomalies),
        gamma=float(gamma_target),
    )


def equicorrelated_normal(m, d, rho_sq, rng) -> np.ndarray:
    """Raw arm draws before the norm cap: per coordinate, an
    equicorrelated M-vector ``sqrt(rho_sq) z0 + sqrt(1-rho_sq) z`` with
    iid standard normals (unit variances, pairwise correlation rho_sq)."""
    if m < 1:
        raise EnvironmentInputError("need at least one arm")
    if not (0.0 <= rho_sq < 1.0):
        raise EnvironmentInputError(f"rho_sq must be in [0,1), got {rho_sq}")
    z0 = rng.standard_normal(d)
    z = rng.standard_normal((m, d))
    return np.sqrt(rho_sq) * z0[None, :] + np.sqrt(1.0 - rho_sq) * z


def sample_arm_set(m, d, rho_sq, rng) -> ArmSet:
    """Sample M correlated d-dimensional arms.

    Draws from :func:`equicorrelated_normal`; arms longer than unit norm
    are rescaled to norm 1, shorter arms are left alone.
    """
    arms = equicorrelated_normal(m, d, rho_sq, rng)
    norms = np.linalg.norm(arms, axis=1)
    over = norms > 1.0
    arms[over] /= norms[over, None]
    return ArmSet(arms)


def expected_reward(gt: GroundTruth, w: InfluenceMatrix, user: int, arm) -> float:
    """Noiseless payoff ``x^T (Theta W + V)(:, user)``."""
    col = gt.theta @ w.w[:, user] + gt.v[:, user]
    return float(np.asarray(arm, dtype=float) @ col)


def expected_rewards(gt: GroundTruth, w: InfluenceMatrix, user: int, arm_set: ArmSet):
    """Noiseless payoffs of every arm in the set, as one vector."""
    col = gt.theta @ w.w[:, user] + gt.v[:, user]
    return arm_set.arms @ col


def play_round(gt, w, arm_set, user, chosen_arm, sigma, rng, t=0) -> RoundRecord:
    """Serve one round: noisy reward for the chosen arm, pseudo-regret
    against the noiselessly best arm."""
    if not (0 <= chosen_arm < arm_set.m):
        raise EnvironmentInputError(f"chosen_arm {chosen_arm} outside [0,{arm_set.m})")
    exp = expected_rewards(gt, w, user, arm_set)
    reward = float(exp[chosen_arm])
    if sigma > 0:
        reward += float(rng.normal(0.0, sigma))
    optimal = float(exp.max())
    return RoundRecord(
        t=t,
        user=int(user),
        arm_set=arm_set,
        chosen_arm=int(chosen_arm),
        reward=reward,
        optimal_reward=optimal,
        instant_regret=float(optimal - exp[chosen_arm]),
    )


# --- CSV fixtures -------------------------------------------------------

def export_ground_truth(gt: GroundTruth, out_dir):
    """Write theta.csv, v.csv, anomalies.csv into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "theta.csv", gt.theta, delimiter=",")
    np.savetxt(out / "v.csv", gt.v, delimiter=",")
    with open(out / "anomalies.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user", "gamma"])
        for i in sorted(gt.anomaly_set):
            writer.writerow([i, repr(gt.gamma)])


def import_ground_truth(in_dir) -> GroundTruth:
    """Read the bundle written by :func:`export_ground_truth`."""
    src = Path(in_dir)
    theta = np.loadtxt(src / "theta.csv", delimiter=",", ndmin=2)
    v = np.loadtxt(src / "v.csv", delimiter=",", ndmin=2)
    anomalies = []
    gamma = 0.0
    with open(src / "anomalies.csv") as fh:
        for row in csv.DictReader(fh):
            anomalies.append(int(row["user"]))
            gamma = float(row["gamma"])
    return GroundTruth(theta=theta, v=v, anomaly_set=frozenset(anomalies), gamma=gamma)


def load_feature_matrix(path, renorm_tol=1e-6) -> np.ndarray:
    """Load a d x K feature CSV with unit-norm columns.

    Columns within ``renorm_tol`` of unit norm are renormalized; anything
    worse is rejected.
    """
    mat = np.loadtxt(path, delimiter=",", ndmin=2)
    norms = np.linalg.norm(mat, axis=0)
    off = np.abs(norms - 1.0)
    if np.any(off > renorm_tol):
        j = int(np.argmax(off))
        raise EnvironmentInputError(
            f"{path}: column {j} has norm {norms[j]!r}, expected 1 within {renorm_tol}"
        )
    return mat / norms
