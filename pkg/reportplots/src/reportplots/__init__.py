"""Figure rendering for netbandit aggregate CSVs.

This package is deliberately decoupled from the simulation library: it
consumes only the documented aggregate CSV schema (``policy,t`` plus
``<metric>_mean``/``<metric>_se`` columns) and the sweep directory
naming convention (``gamma<g>_nzd<k>``).
"""

from reportplots.render import KINDS, PlotSpec, RenderError, render

__all__ = ["KINDS", "PlotSpec", "RenderError", "render"]
