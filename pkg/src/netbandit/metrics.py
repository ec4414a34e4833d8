"""Per-round regret and detection metrics, plus cross-seed aggregation.

CSV schemas:

* per-seed log, one row per round:
  ``t,instant_regret,cum_regret,precision,recall,detected_count``
* aggregate, one row per round: the same columns with ``_mean`` and
  ``_se`` suffixes (plus ``t``).
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LOG_COLUMNS = ["t", "instant_regret", "cum_regret", "precision", "recall", "detected_count"]


class MetricsInputError(ValueError):
    """Raised on inconsistent aggregation inputs."""


def precision_recall(detected, truth):
    """Detection precision and recall with the no-claims conventions:
    empty detected set has precision 1, empty truth has recall 1."""
    detected, truth = set(detected), set(truth)
    hits = len(detected & truth)
    precision = hits / len(detected) if detected else 1.0
    recall = hits / len(truth) if truth else 1.0
    return precision, recall


@dataclass
class MetricsLog:
    """Per-round metric trajectory of one (policy, seed) run."""

    policy_name: str
    seed: int
    t: list = field(default_factory=list)
    instant_regret: list = field(default_factory=list)
    cum_regret: list = field(default_factory=list)
    precision: list = field(default_factory=list)
    recall: list = field(default_factory=list)
    detected_count: list = field(default_factory=list)

    def record(self, t, instant_regret, detected, truth):
        prec, rec = precision_recall(detected, truth)
        prev = self.cum_regret[-1] if self.cum_regret else 0.0
        self.t.append(int(t))
        self.instant_regret.append(float(instant_regret))
        self.cum_regret.append(prev + float(instant_regret))
        self.precision.append(prec)
        self.recall.append(rec)
        self.detected_count.append(len(detected))

    def __len__(self):
        return len(self.t)


def aggregate(logs):
    """Pointwise mean and spread over seeds.

    The spread column is the ddof-1 standard deviation across seeds at
    each round (zero for a single log).  Output: dict with key ``t`` and
    ``<metric>_mean`` / ``<metric>_se`` arrays.
    """
    if not logs:
        raise MetricsInputError("no logs to aggregate")
    horizon = len(logs[0])
    name = logs[0].policy_name
    for log in logs:
        if len(log) != horizon:
            raise MetricsInputError(
                f"horizon mismatch: {len(log)} vs {horizon} for policy {log.policy_name}"
            )
        if log.policy_name != name:
            raise MetricsInputError(f"policy mismatch: {log.policy_name} vs {name}")
    out = {"t": np.asarray(logs[0].t)}
    for metric in LOG_COLUMNS[1:]:
        stack = np.asarray([getattr(log, metric) for log in logs], dtype=float)
        out[f"{metric}_mean"] = stack.mean(axis=0)
        if len(logs) > 1:
            out[f"{metric}_se"] = stack.std(axis=0, ddof=1)
        else:
            out[f"{metric}_se"] = np.zeros(horizon)
    return out


def growth_exponent(t, cum_regret):
    """Least-squares slope of log(cumRegret) against log(t) over the
    second half of the horizon."""
    t = np.asarray(t, dtype=float)
    cum = np.asarray(cum_regret, dtype=float)
    half = t >= t[-1] / 2.0
    tt, cc = t[half], cum[half]
    keep = cc > 0
    if keep.sum() < 2:
        return 0.0
    slope = np.polyfit(np.log(tt[keep]), np.log(cc[keep]), 1)[0]
    return float(slope)


# --- persistence --------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def write_log_csv(log: MetricsLog, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOG_COLUMNS)
        for i in range(len(log)):
            writer.writerow(
                [
                    log.t[i],
                    _fmt(log.instant_regret[i]),
                    _fmt(log.cum_regret[i]),
                    _fmt(log.precision[i]),
                    _fmt(log.recall[i]),
                    log.detected_count[i],
                ]
            )


def read_log_csv(path, policy_name="", seed=0) -> MetricsLog:
    log = MetricsLog(policy_name=policy_name, seed=seed)
    with open(path) as fh:
        reader = csv.DictReader(fh)
        missing = set(LOG_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise MetricsInputError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            log.t.append(int(row["t"]))
            log.instant_regret.append(float(row["instant_regret"]))
            log.cum_regret.append(float(row["cum_regret"]))
            log.precision.append(float(row["precision"]))
            log.recall.append(float(row["recall"]))
            log.detected_count.append(int(row["detected_count"]))
    return log


def write_aggregate_csv(agg, policy_name, path):
    cols = ["t"]
    for metric in LOG_COLUMNS[1:]:
        cols += [f"{metric}_mean", f"{metric}_se"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy"] + cols)
        for i in range(len(agg["t"])):
            row = [policy_name, int(agg["t"][i])]
            for metric in LOG_COLUMNS[1:]:
                row += [_fmt(agg[f"{metric}_mean"][i]), _fmt(agg[f"{metric}_se"][i])]
            writer.writerow(row)


def write_summary_json(agg, policy_name, wall_clock, path):
    summary = {
        "policy": policy_name,
        "final_cum_regret_mean": float(agg["cum_regret_mean"][-1]),
        "final_precision_mean": float(agg["precision_mean"][-1]),
        "final_recall_mean": float(agg["recall_mean"][-1]),
        "growth_exponent": growth_exponent(agg["t"], agg["cum_regret_mean"]),
        "wall_clock_seconds": wall_clock,
    }
    Path(path).write_text(json.dumps(summary, indent=2) + "\n")
    return summary
