"""Figures from the shuttle simulator's CSV datasets.

Everything here works from the on-disk CSV files written by the simulator
CLI; there is no dependency on the simulator package itself.
"""

__version__ = "0.1.0"

from .figures import KINDS, FigureSpec, render
from .schema import SchemaError

__all__ = ["FigureSpec", "KINDS", "SchemaError", "render", "__version__"]
