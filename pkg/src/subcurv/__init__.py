"""Curvature-parameterized submodular maximization."""
__version__ = "0.1.0"
