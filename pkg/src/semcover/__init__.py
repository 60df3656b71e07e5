"""Semantics-guided fuzzy coverage control for multi-robot underwater survey."""

__version__ = "0.1.0"
