"""Exact enumeration of square-lattice self-avoiding polygons."""

from . import analysis, engine, modular, oracle, series, signature  # noqa: F401
from .engine import enumerate_polygons  # noqa: F401
