"""Experiment harness: configure, run, and persist seeded replications.

Within one seed, every policy faces identical users, arm sets, and noise
draws (common random numbers), so differences between the logged curves
isolate policy structure.  Each (policy, seed) replication rebuilds its
environment deterministically from the seed, which makes replications
embarrassingly parallel and worker-count independent.
"""

import hashlib
import json
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from netbandit import metrics
from netbandit.baselines import make_policy
from netbandit.environment import (
    ArmSet,
    expected_rewards,
    inject_anomalies,
    load_feature_matrix,
    sample_arm_set,
)
from netbandit.graph import build_similarity_graph, build_uniform_graph
from netbandit.nela import NelaConfig, default_s_v

WORKERS_ENV = "NETBANDIT_WORKERS"

KNOWN_POLICIES = ("nela", "colin", "graphucb", "nlinucb", "linucb")
SCENARIOS = ("toy-star", "toy-full", "synthetic", "sweep", "replay")


class ConfigError(ValueError):
    """Raised on invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "synthetic"
    n: int = 50
    d: int = 10
    m: int = 50
    horizon: int = 1000
    sigma: float = 0.01
    delta: float = 0.001
    lambda0: float = 0.02
    lambda1: float = 1.0
    gamma: float = 0.0
    nonzero_dims: int = 1
    anomaly_count: int = 3
    keep_fraction: float = 0.3
    rho_sq: float = 0.7
    policies: tuple = KNOWN_POLICIES
    seeds: tuple = tuple(range(10))
    out_dir: str = "runs"
    lasso_every: int = 1
    warmup_rounds: float | None = None
    s_v: float | None = None
    user_features: str | None = None
    item_features: str | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        unknown = set(p.lower() for p in self.policies) - set(KNOWN_POLICIES)
        if unknown:
            raise ConfigError(f"unknown policies {sorted(unknown)}")
        object.__setattr__(self, "policies", tuple(p.lower() for p in self.policies))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    def nela_config(self) -> NelaConfig:
        s_v = self.s_v if self.s_v is not None else default_s_v(self.anomaly_count)
        return NelaConfig(
            lambda1=self.lambda1,
            lambda0=self.lambda0,
            sigma=self.sigma,
            delta=self.delta,
            s_v=s_v,
            warmup_rounds=self.warmup_rounds,
            lasso_every=self.lasso_every,
        )

    def hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


# --- deterministic per-seed environment ---------------------------------

def _rng(seed, stream):
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream]))


def build_environment(config: ExperimentConfig, seed: int):
    """Ground truth, graph, and trajectory shared by all policies of one
    seed.  Returns (gt, w, users, arm_sets, noise)."""
    # streams: 0 feature draw, 1 trajectory, 2 anomaly injection.
    # keeping injection on its own stream lets a replay of exported
    # synthetic features reproduce the same ground truth.
    rng_anom = _rng(seed, 2)
    item_pool = None
    if config.scenario == "replay":
        if not config.user_features or not config.item_features:
            raise ConfigError("replay needs user and item feature files")
        theta = load_feature_matrix(config.user_features)
        item_pool = load_feature_matrix(config.item_features)
        if item_pool.shape[0] != theta.shape[0]:
            raise ConfigError(
                f"feature dimension mismatch: users d={theta.shape[0]}, "
                f"items d={item_pool.shape[0]}"
            )
        if theta.shape[1] != config.n or theta.shape[0] != config.d:
            raise ConfigError(
                f"user features are {theta.shape[0]}x{theta.shape[1]}, "
                f"config says d={config.d}, n={config.n}"
            )
        gt = inject_anomalies(
            theta, config.anomaly_count, config.gamma, config.nonzero_dims, rng_anom
        )
        w = build_similarity_graph(gt.theta, config.keep_fraction)
    else:
        rng_world = _rng(seed, 0)
        theta = rng_world.standard_normal((config.d, config.n))
        theta /= np.linalg.norm(theta, axis=0)
        gt = inject_anomalies(
            theta, config.anomaly_count, config.gamma, config.nonzero_dims, rng_anom
        )
        if config.scenario == "toy-star":
            edges = [(0, j) for j in range(1, config.n)]
            w = build_uniform_graph(edges, config.n)
        elif config.scenario == "toy-full":
            edges = [(i, j) for i in range(config.n) for j in range(i + 1, config.n)]
            w = build_uniform_graph(edges, config.n)
        else:  # synthetic / sweep cell
            w = build_similarity_graph(gt.theta, config.keep_fraction)

    rng_traj = _rng(seed, 1)
    users = rng_traj.integers(0, config.n, size=config.horizon)
    arm_sets = []
    for _ in range(config.horizon):
        if item_pool is not None:
            idx = rng_traj.choice(item_pool.shape[1], size=config.m, replace=False)
            arm_sets.append(ArmSet(item_pool[:, idx].T))
        else:
            arm_sets.append(sample_arm_set(config.m, config.d, config.rho_sq, rng_traj))
    noise = rng_traj.normal(0.0, 1.0, size=config.horizon) * config.sigma
    return gt, w, users, arm_sets, noise


def run_replication(config: ExperimentConfig, policy_name: str, seed: int) -> metrics.MetricsLog:
    """One full T-round loop of one policy on one seed's environment."""
    gt, w, users, arm_sets, noise = build_environment(config, seed)
    policy = make_policy(policy_name, config.n, config.d, w, config.nela_config())
    log = metrics.MetricsLog(policy_name=policy_name, seed=seed)
    for t in range(1, config.horizon + 1):
        user = int(users[t - 1])
        arm_set = arm_sets[t - 1]
        chosen = policy.select(user, arm_set)
        exp = expected_rewards(gt, w, user, arm_set)
        reward = float(exp[chosen]) + float(noise[t - 1])
        detected = policy.update(user, arm_set.arms[chosen], reward)
        log.record(t, float(exp.max() - exp[chosen]), detected, gt.anomaly_set)
    return log


def _replication_job(args):
    config_dict, policy_name, seed = args
    config = ExperimentConfig(**config_dict)
    return policy_name, seed, run_replication(config, policy_name, seed)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_experiment(config: ExperimentConfig, progress=None):
    """Run all (policy, seed) replications, persist logs, aggregates,
    summaries, and a manifest.  Returns {policy: [MetricsLog, ...]}."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.monotonic()
    jobs = [(asdict(config), p, s) for p in config.policies for s in config.seeds]
    results = {}
    workers = worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for policy_name, seed, log in pool.map(_replication_job, jobs):
                results.setdefault(policy_name, {})[seed] = log
                if progress:
                    progress(f"done {policy_name} seed {seed}")
    else:
        for job in jobs:
            policy_name, seed, log = _replication_job(job)
            results.setdefault(policy_name, {})[seed] = log
            if progress:
                progress(f"done {policy_name} seed {seed}")
    wall = time.monotonic() - start
    logs_by_policy = {}
    for policy_name in config.policies:
        logs = [results[policy_name][s] for s in config.seeds]
        logs_by_policy[policy_name] = logs
        for log in logs:
            metrics.write_log_csv(log, out / f"{policy_name}_seed{log.seed}.csv")
        agg = metrics.aggregate(logs)
        metrics.write_aggregate_csv(agg, policy_name, out / f"{policy_name}_agg.csv")
        metrics.write_summary_json(agg, policy_name, wall, out / f"{policy_name}_summary.json")
    manifest = {
        "config": asdict(config),
        "config_hash": config.hash(),
        "seeds": list(config.seeds),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    return logs_by_policy


def run_sweep(config: ExperimentConfig, gammas, nonzero_dims_list, progress=None):
    """One run_experiment per (gamma, nonzero_dims) cell, each in its own
    subdirectory ``gamma{g}_nzd{k}``."""
    if not gammas:
        raise ConfigError("gamma list must be nonempty")
    if not nonzero_dims_list:
        raise ConfigError("nonzero_dims list must be nonempty")
    results = {}
    for g in gammas:
        for k in nonzero_dims_list:
            cell_dir = Path(config.out_dir) / f"gamma{g:g}_nzd{k}"
            cell = replace(
                config,
                scenario="synthetic",
                gamma=float(g),
                nonzero_dims=int(k),
                out_dir=str(cell_dir),
            )
            results[(float(g), int(k))] = run_experiment(cell, progress=progress)
    return results


def run_replay(config: ExperimentConfig, user_features, item_features, progress=None):
    """File-driven replay: features from disk, loop otherwise identical."""
    cfg = replace(
        config,
        scenario="replay",
        user_features=str(user_features),
        item_features=str(item_features),
    )
    return run_experiment(cfg, progress=progress)


def reaggregate(out_dir):
    """Rebuild aggregate CSVs from the per-seed logs already on disk."""
    out = Path(out_dir)
    by_policy = {}
    for path in sorted(out.glob("*_seed*.csv")):
        stem = path.stem
        policy_name, seed_part = stem.rsplit("_seed", 1)
        log = metrics.read_log_csv(path, policy_name=policy_name, seed=int(seed_part))
        by_policy.setdefault(policy_name, []).append(log)
    if not by_policy:
        raise ConfigError(f"no per-seed logs found in {out}")
    for policy_name, logs in by_policy.items():
        logs.sort(key=lambda log: log.seed)
        agg = metrics.aggregate(logs)
        metrics.write_aggregate_csv(agg, policy_name, out / f"{policy_name}_agg.csv")
    return by_policy
