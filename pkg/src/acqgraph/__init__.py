"""Acquisition-network analytics toolkit.

Builds company acquisition networks (and their projections onto acquirers,
acquirees, cities and countries) from Crunchbase-schema tables and computes
structural, centrality, assortativity, community, baseline, ERGM and temporal
analyses over them.
"""

from acqgraph.errors import (
    AcqGraphError,
    ConvergenceError,
    DataError,
    DegenerateSpectrumError,
    UndefinedValueError,
)
from acqgraph.graph import AttributedGraph, NetworkKind

__version__ = "0.1.0"

__all__ = [
    "AcqGraphError",
    "AttributedGraph",
    "ConvergenceError",
    "DataError",
    "DegenerateSpectrumError",
    "NetworkKind",
    "UndefinedValueError",
    "__version__",
]
