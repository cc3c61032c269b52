"""Numerical laboratory for centrally symmetric Birkhoff billiards."""
from ._backend import BACKEND
from .geometry import SupportFunction, Table, build_table, circle, ellipse

__all__ = ["BACKEND", "SupportFunction", "Table", "build_table", "circle", "ellipse"]
__version__ = "0.1.0"
