"""Rendering of benchmark harness CSVs: lead-time cost curves and gap tables.

This package is a pure consumer of the harness file formats; it never
recomputes statistics.  Rendering is deterministic: rerunning on the same
inputs produces byte-identical images.
"""

__version__ = "0.1.0"

from .figures import FigureSpec, SchemaError, render_leadtime_figure
from .tables import render_gap_table

__all__ = ["FigureSpec", "SchemaError", "render_gap_table", "render_leadtime_figure"]
