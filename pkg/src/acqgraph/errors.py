"""Exception hierarchy shared by every module."""


class AcqGraphError(Exception):
    """Base class for all errors raised by acqgraph."""


class DataError(AcqGraphError):
    """Input data is malformed or violates referential integrity."""


class UndefinedValueError(AcqGraphError):
    """A metric is mathematically undefined for the given graph.

    Callers that serialize results map this to ``null`` rather than 0.
    """


class ConvergenceError(AcqGraphError):
    """An iterative solver did not converge.

    Attributes:
        iterations: number of iterations performed before giving up.
        term: offending model term, when the failure can be attributed to one.
    """

    def __init__(self, message: str, iterations: int | None = None, term: str | None = None):
        super().__init__(message)
        self.iterations = iterations
        self.term = term


class DegenerateSpectrumError(AcqGraphError):
    """The leading eigenvector is identically zero (e.g. an acyclic digraph)."""
