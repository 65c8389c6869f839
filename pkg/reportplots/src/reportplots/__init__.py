"""Render log-log figures from shell-count sweep CSV files."""

from .plotting import PlotSpec, fit_loglog, load_sweep, plot

__version__ = "0.1.0"

__all__ = ["PlotSpec", "fit_loglog", "load_sweep", "plot"]
