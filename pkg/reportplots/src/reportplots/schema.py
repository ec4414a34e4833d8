"""Reading and validating aggregate metric CSVs.

Expected header: ``policy,t`` followed by ``<metric>_mean`` and
``<metric>_se`` pairs for instant_regret, cum_regret, precision,
recall, and detected_count.  Every row of one file carries the same
policy name.
"""

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

METRICS = ("instant_regret", "cum_regret", "precision", "recall", "detected_count")

REQUIRED_COLUMNS = ("policy", "t") + tuple(
    f"{metric}_{suffix}" for metric in METRICS for suffix in ("mean", "se")
)

SWEEP_DIR_PATTERN = re.compile(r"gamma(?P<gamma>[0-9.]+)_nzd(?P<nzd>\d+)")


class SchemaError(ValueError):
    """Raised when a CSV does not match the aggregate schema."""


@dataclass
class AggregateCurves:
    """One policy's aggregated per-round curves from a single CSV."""

    path: Path
    policy: str
    t: np.ndarray
    columns: dict = field(default_factory=dict)

    def mean(self, metric: str) -> np.ndarray:
        return self.columns[f"{metric}_mean"]

    def band(self, metric: str) -> np.ndarray:
        return self.columns[f"{metric}_se"]


def read_aggregate_csv(path) -> AggregateCurves:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for column in REQUIRED_COLUMNS:
            if column not in fields:
                raise SchemaError(f"{path}: missing column {column!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    policies = {row["policy"] for row in rows}
    if len(policies) != 1:
        raise SchemaError(f"{path}: expected one policy per file, found {sorted(policies)}")
    curves = AggregateCurves(
        path=path,
        policy=policies.pop(),
        t=np.array([int(row["t"]) for row in rows]),
    )
    for metric in METRICS:
        for suffix in ("mean", "se"):
            column = f"{metric}_{suffix}"
            try:
                curves.columns[column] = np.array([float(row[column]) for row in rows])
            except ValueError as exc:
                raise SchemaError(f"{path}: non-numeric value in column {column!r}") from exc
    return curves


def sweep_cell(path) -> tuple:
    """(gamma, nonzero_dims) parsed from a sweep cell's directory name,
    or None when the file does not live in a sweep cell directory."""
    match = SWEEP_DIR_PATTERN.fullmatch(Path(path).parent.name)
    if not match:
        return None
    return float(match.group("gamma")), int(match.group("nzd"))
