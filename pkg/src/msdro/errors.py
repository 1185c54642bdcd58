"""Exception types shared across the package."""


class MsdroError(Exception):
    """Base class for all package errors."""


class NumericalFailure(MsdroError):
    """The solver lost too much precision to certify a result."""


class SizeExceeded(MsdroError):
    """Input is larger than the configured desk-scale envelope."""


class DimensionMismatch(MsdroError):
    """Operands live in different ambient dimensions."""


class AllWeightsZero(MsdroError):
    """A weighted aggregation was requested with every weight zero."""


class UnsupportedCost(MsdroError):
    """The ground cost is outside the pure-LP regime handled here."""


class IntersectionEmpty(MsdroError):
    """The ambiguity set is empty; carries an infeasibility certificate."""

    def __init__(self, certificate, message="ambiguity-set intersection is empty"):
        super().__init__(message)
        self.certificate = certificate


class RecoveryDegenerate(MsdroError):
    """Dual multipliers do not carry enough mass to rebuild a distribution."""


class NegativeLambda(MsdroError):
    """A transport multiplier was negative where nonnegativity is required."""


class IterationBudgetExceeded(MsdroError):
    """The ellipsoid loop ran out of iterations before certifying a value."""


class UnboundedObjective(MsdroError):
    """The objective decreases without bound along a feasible direction."""


class InvalidParams(MsdroError):
    """Concentration parameters violate their admissibility conditions."""


class PreconditionViolated(MsdroError):
    """An operation was called outside its documented domain."""


class Unreachable(MsdroError):
    """The requested significance level cannot be attained."""
