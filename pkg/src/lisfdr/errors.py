"""Exception types raised across the package."""


class GraphSizeError(ValueError):
    """Requested graph size is zero, negative or too large."""


class StructureError(ValueError):
    """Operation needs an acyclic graph but got one with cycles."""


class MissingParameterError(KeyError):
    """An edge class in the graph has no coupling parameter."""


class DivergenceError(ArithmeticError):
    """Parameter ascent produced a non-finite value."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class DegeneratePosteriorError(ArithmeticError):
    """Posterior carries no evidence of alternatives."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class DegenerateTableError(ValueError):
    """Contingency table has zero variance under the null."""


class ScenarioError(ValueError):
    """Scenario configuration is invalid, or every replication failed."""
