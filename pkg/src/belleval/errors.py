"""Exception hierarchy for the belleval package."""


class BellevalError(Exception):
    """Base class for all package-specific errors."""


class OutOfSimplex(BellevalError):
    """A reconstructed probability is negative or exceeds one beyond tolerance."""


class NoSignalingViolation(BellevalError):
    """The marginal of one party depends on the other party's setting."""


class DegenerateGeometry(BellevalError):
    """Setting angles or efficiencies make the expectation-value recovery singular."""


class SolverFailure(BellevalError):
    """An LP or optimizer ended without a usable feasibility/optimality certificate."""


class ConvergenceFailure(BellevalError):
    """Multistart optimizations disagree beyond tolerance."""


class RangeMaximumAtBoundary(BellevalError):
    """A scan maximum sits on the edge of the requested range."""


class NegativeQ(BellevalError):
    """The click-mass rescaling produced a negative entry (gamma inconsistent with p)."""


class InsufficientRegionPoints(BellevalError):
    """A prior region holds no points to draw mock-true probabilities from."""


class ParseError(BellevalError):
    """A counts or configuration file is malformed."""


class TotalMismatch(ParseError):
    """A declared trigger total disagrees with the column sum."""


class DegenerateWeightsWarning(UserWarning):
    """Too few sample points carry posterior weight; the Monte Carlo estimate is shaky."""
