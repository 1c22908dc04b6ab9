"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Array arguments have inconsistent or wrong dimensions."""


class DegenerateCovariance(ValueError):
    """Covariance matrix is not symmetric positive definite."""


class IndistinguishableHypotheses(ValueError):
    """The two hypotheses share the same mean vector."""


class ParameterError(ValueError):
    """Scalar argument outside its documented domain."""


class InvalidWeights(ValueError):
    """Weight matrix violates symmetry, stochasticity or nonnegativity."""


class NoConnectedWindow(ValueError):
    """No window length up to the period yields a connected union graph."""


class BoundViolated(RuntimeError):
    """A measured quantity exceeded its proven envelope.

    Carries the witness so the offending indices can be reported.
    """

    def __init__(self, message: str, witness: dict | None = None):
        super().__init__(message)
        self.witness = witness or {}


class MaximizerAtBoundary(RuntimeError):
    """Numeric maximizer landed on the edge of the search interval."""


class ThresholdOutOfRange(ValueError):
    """Decision threshold outside the open interval of achievable means."""


class DegenerateVariance(ValueError):
    """A per-node variance is zero or negative beyond tolerance."""


class InsufficientPoints(ValueError):
    """Too few checkpoints inside the requested fit window."""


class ZeroProbabilityInWindow(ValueError):
    """Monte Carlo window left with too few nonzero error estimates."""


class ConfigError(ValueError):
    """Scenario configuration failed to parse or validate."""
