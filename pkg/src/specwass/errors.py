"""Exception hierarchy. Every class also derives from the matching builtin."""


class SpecwassError(Exception):
    """Base class for all errors raised by specwass."""


class ShapeError(SpecwassError, ValueError):
    """Array dimensions do not agree."""


class SizeError(SpecwassError, ValueError):
    """A size argument is outside its admissible range."""


class ParameterError(SpecwassError, ValueError):
    """A scalar parameter is outside its admissible range."""


class MetricError(SpecwassError, ValueError):
    """A matrix fails the metric axioms."""

    def __init__(self, message, report=()):
        super().__init__(message)
        self.report = list(report)


class DistributionError(SpecwassError, ValueError):
    """Weights are negative or do not sum to one."""


class UnsupportedSpaceError(SpecwassError, ValueError):
    """The operation needs structure (coordinates, a line) the space lacks."""


class HypothesisError(UnsupportedSpaceError):
    """A theorem's hypothesis (e.g. Euclidean embedding) does not hold."""


class DegenerateError(SpecwassError, ValueError):
    """The input makes the requested quantity undefined."""


class EmbeddingError(SpecwassError, ValueError):
    """A two-sheet state carries mass off the two sheets."""


class PairingError(SpecwassError, ValueError):
    """A plan and a potential come from different inputs."""


class DualityGapError(SpecwassError, ArithmeticError):
    """Primal and dual values disagree beyond tolerance."""


class SolverError(SpecwassError, RuntimeError):
    """The simplex did not reach optimality."""


class NormalizationError(DistributionError):
    """A shape density does not integrate to one over its support."""


class InvariantError(SpecwassError, ValueError):
    """A value object violates its invariant (e.g. a state outside the ball)."""
