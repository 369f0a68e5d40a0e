"""Figure rendering for dpg-heat CSV results.

Consumes the CSV files written by the `dpg-heat` command line tool and
renders two figure kinds: log-log error curves with an h^{1/2} reference
slope, and stability-ratio curves with a guide line at 1.
"""

from .figures import (
    DEFAULT_ERROR_COLUMNS,
    FigureSpec,
    PlotDataError,
    load_rows,
    render,
)

__all__ = [
    "DEFAULT_ERROR_COLUMNS",
    "FigureSpec",
    "PlotDataError",
    "load_rows",
    "render",
]
