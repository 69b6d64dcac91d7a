"""Figure rendering for the mimo-d2d sweep CSV files."""

from .render import FigureSpec, SchemaError, render

__version__ = "0.1.0"
