"""Publication-style figures from trace-sim CSV/JSON outputs."""

from .render import FIGURE_KINDS, PlotSpec, SchemaError, render

__version__ = "0.1.0"
