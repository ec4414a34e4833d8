"""User-influence graph construction.

An influence matrix W is an n-by-n nonnegative matrix whose column j
describes how much every user's parameters contribute to user j's payoff.
Columns sum to one, i.e. W is column-stochastic.
"""

from dataclasses import dataclass

import numpy as np

COLUMN_SUM_TOL = 1e-9
LOAD_TOL = 1e-6
UNIT_NORM_TOL = 1e-6


class GraphInputError(ValueError):
    """Raised when graph inputs violate the construction contract."""


class GraphLoadError(ValueError):
    """Raised when an influence-matrix file cannot be validated."""


@dataclass(frozen=True)
class InfluenceMatrix:
    """Column-stochastic nonnegative user-influence weights.

    ``w[i, j]`` is the influence of user i on user j.
    """

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "w", w)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise GraphInputError(f"influence matrix must be square n>=1, got shape {w.shape}")
        if np.any(w < 0):
            raise GraphInputError("influence matrix has negative entries")
        colsums = w.sum(axis=0)
        bad = np.abs(colsums - 1.0) > COLUMN_SUM_TOL
        if np.any(bad):
            j = int(np.argmax(bad))
            raise GraphInputError(
                f"column {j} sums to {colsums[j]!r}, expected 1 within {COLUMN_SUM_TOL}"
            )

    @property
    def n(self) -> int:
        return self.w.shape[0]


def build_uniform_graph(edges, n: int) -> InfluenceMatrix:
    """Equal-influence matrix for an undirected graph.

    Column j holds 1/(1+deg(j)) at row j and at each neighbor of j.
    ``edges`` is either an iterable of undirected (i, j) pairs (each edge
    may be listed once; mirrored automatically) or a dict mapping each
    node to its neighbor list, which must be symmetric. Self loops are
    rejected.
    """

    def _check_node(i):
        if not (0 <= i < n):
            raise GraphInputError(f"node id {i} outside [0,{n})")
        return i

    adj = np.zeros((n, n), dtype=bool)
    if isinstance(edges, dict):
        # neighbor-list form: {node: [neighbors]}; must be symmetric
        for i, neighbors in edges.items():
            i = _check_node(int(i))
            for j in neighbors:
                j = _check_node(int(j))
                if i == j:
                    raise GraphInputError(f"self-loop ({i},{i}) not allowed")
                adj[i, j] = True
        if not np.array_equal(adj, adj.T):
            bad = np.argwhere(adj != adj.T)[0]
            raise GraphInputError(
                f"asymmetric adjacency: edge ({bad[0]},{bad[1]}) listed one-way"
            )
    else:
        for i, j in edges:
            i, j = _check_node(int(i)), _check_node(int(j))
            if i == j:
                raise GraphInputError(f"self-loop ({i},{i}) not allowed")
            adj[i, j] = True
            adj[j, i] = True
    deg = adj.sum(axis=0)
    w = np.zeros((n, n))
    for j in range(n):
        w[j, j] = 1.0 / (1.0 + deg[j])
        w[adj[:, j], j] = 1.0 / (1.0 + deg[j])
    return InfluenceMatrix(w)


def build_similarity_graph(theta: np.ndarray, keep_fraction: float) -> InfluenceMatrix:
    """Influence matrix from pairwise feature similarity.

    Raw scores are clipped inner products max(<theta_i, theta_j>, 0).
    Off-diagonal scores strictly below the (1 - keep_fraction) quantile of
    all off-diagonal scores are zeroed (entries exactly at the cutoff are
    kept), then each column is l1-normalized.  A column that becomes all
    zero falls back to self-weight 1.
    """
    theta = np.asarray(theta, dtype=float)
    if not (0.0 < keep_fraction <= 1.0):
        raise GraphInputError(f"keep_fraction must be in (0,1], got {keep_fraction}")
    norms = np.linalg.norm(theta, axis=0)
    if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
        j = int(np.argmax(np.abs(norms - 1.0)))
        raise GraphInputError(f"theta column {j} has norm {norms[j]!r}, expected 1")
    n = theta.shape[1]
    scores = np.clip(theta.T @ theta, 0.0, None)
    if n > 1 and keep_fraction < 1.0:
        off = scores[~np.eye(n, dtype=bool)]
        cutoff = np.quantile(off, 1.0 - keep_fraction)
        mask = scores < cutoff
        np.fill_diagonal(mask, False)
        scores = np.where(mask, 0.0, scores)
    colsums = scores.sum(axis=0)
    w = np.zeros((n, n))
    for j in range(n):
        if colsums[j] <= 0:
            w[j, j] = 1.0
        else:
            w[:, j] = scores[:, j] / colsums[j]
    return InfluenceMatrix(w)


def load_influence_matrix(path) -> InfluenceMatrix:
    """Load a headerless CSV of n rows of n decimals; row i is W(i,:).

    Columns whose sums are within 1e-6 of 1 are renormalized; anything
    worse is rejected.
    """
    try:
        w = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise GraphLoadError(f"malformed influence CSV {path}: {exc}") from exc
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise GraphLoadError(f"{path}: expected square matrix, got shape {w.shape}")
    neg = np.argwhere(w < 0)
    if neg.size:
        i, j = neg[0]
        raise GraphLoadError(f"{path}: negative entry at row {i}, column {j}")
    colsums = w.sum(axis=0)
    off = np.abs(colsums - 1.0)
    # small slack so a sum of exactly 1 +/- 1e-6 is still accepted
    if np.any(off > LOAD_TOL + 1e-12):
        j = int(np.argmax(off))
        raise GraphLoadError(
            f"{path}: column {j} sums to {colsums[j]!r}, off by more than {LOAD_TOL}"
        )
    return InfluenceMatrix(w / colsums)


def load_adjacency(path):
    """Read an adjacency-list file, one 0-based ``i,j`` pair per line."""
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise GraphLoadError(f"{path}:{lineno}: expected 'i,j', got {line!r}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError as exc:
                raise GraphLoadError(f"{path}:{lineno}: non-integer node id") from exc
    return edges
