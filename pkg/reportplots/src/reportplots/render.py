"""Figure construction for the four supported plot kinds.

regret / precision / recall: one curve per policy (mean line with a
mean +- spread band) drawn from every CSV the glob matches.

sweep-grid: a row-by-column panel grid of recall curves, one panel per
``gamma<g>_nzd<k>`` sweep cell directory; rows are gamma values, columns
nonzero-dimension counts.
"""

import glob as globlib
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from reportplots.schema import read_aggregate_csv, sweep_cell

KINDS = ("regret", "precision", "recall", "sweep-grid")

CURVE_METRIC = {
    "regret": "cum_regret",
    "precision": "precision",
    "recall": "recall",
}

AXIS_LABEL = {
    "regret": "cumulative regret",
    "precision": "precision",
    "recall": "recall",
}


class RenderError(ValueError):
    """Raised on unrenderable input (no files, bad kind, bad layout)."""


@dataclass
class PlotSpec:
    input_glob: str
    kind: str
    out_path: str
    title: str = ""


def _load(spec: PlotSpec):
    paths = sorted(globlib.glob(spec.input_glob, recursive=True))
    if not paths:
        raise RenderError(f"glob {spec.input_glob!r} matched no files")
    return [read_aggregate_csv(path) for path in paths]


def _draw_curves(ax, curves, metric):
    for c in sorted(curves, key=lambda c: c.policy):
        mean, band = c.mean(metric), c.band(metric)
        ax.plot(c.t, mean, label=c.policy, linewidth=1.3)
        ax.fill_between(c.t, mean - band, mean + band, alpha=0.2, linewidth=0)
    ax.set_xlabel("round")
    ax.margins(x=0)


def build_figure(spec: PlotSpec):
    """Assemble and return the matplotlib figure for a spec (the
    testable core of render)."""
    if spec.kind not in KINDS:
        raise RenderError(f"unknown kind {spec.kind!r}; expected one of {KINDS}")
    curves = _load(spec)
    if spec.kind in CURVE_METRIC:
        metric = CURVE_METRIC[spec.kind]
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        _draw_curves(ax, curves, metric)
        ax.set_ylabel(AXIS_LABEL[spec.kind])
        if spec.kind in ("precision", "recall"):
            ax.set_ylim(-0.02, 1.02)
        ax.legend(loc="best", fontsize=8)
        ax.set_title(spec.title or AXIS_LABEL[spec.kind])
        fig.tight_layout()
        return fig
    return _build_sweep_grid(spec, curves)


def _build_sweep_grid(spec: PlotSpec, curves):
    cells = {}
    for c in curves:
        cell = sweep_cell(c.path)
        if cell is None:
            raise RenderError(
                f"{c.path}: sweep-grid input must live in gamma<g>_nzd<k> directories"
            )
        cells.setdefault(cell, []).append(c)
    gammas = sorted({g for g, _ in cells})
    nzds = sorted({k for _, k in cells})
    fig, axes = plt.subplots(
        len(gammas), len(nzds),
        figsize=(3.0 * len(nzds), 2.4 * len(gammas)),
        sharex=True, sharey=True, squeeze=False,
    )
    for i, g in enumerate(gammas):
        for j, k in enumerate(nzds):
            ax = axes[i][j]
            for c in cells.get((g, k), []):
                _draw_curves(ax, [c], "recall")
            ax.set_ylim(-0.02, 1.02)
            ax.set_title(f"gamma={g:g}, nonzero dims={k}", fontsize=9)
            if j == 0:
                ax.set_ylabel("recall")
    fig.suptitle(spec.title or "recall across anomaly settings")
    fig.tight_layout()
    return fig


def render(spec: PlotSpec) -> str:
    """Render the spec to its output image file and return the path."""
    fig = build_figure(spec)
    try:
        fig.savefig(spec.out_path)
    finally:
        plt.close(fig)
    return spec.out_path
