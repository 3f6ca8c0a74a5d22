"""Exact finite metric spaces over prescribed value sets."""

from .errors import VMetricError
from .space import FiniteMetricSpace, build_space
from .values import ValueSet, rational

__all__ = ["FiniteMetricSpace", "ValueSet", "VMetricError", "build_space", "rational"]
