"""Exception types shared across the package."""


class AdascaleError(Exception):
    """Base class for all solver errors."""


class DimensionMismatch(AdascaleError, ValueError):
    """Operands have incompatible shapes."""


class NonFiniteEntry(AdascaleError, ValueError):
    """Problem data contains NaN or infinity."""


class NotPositiveDefinite(AdascaleError, ArithmeticError):
    """Cholesky pivot fell below the scale-relative threshold.

    When raised while factoring A*A^T this signals rank deficiency of A.
    """


class RankDeficient(AdascaleError, ValueError):
    """Constraint matrix does not have full row rank."""


class NotInterior(AdascaleError, ValueError):
    """Point has a nonpositive x or s component."""


class NotFeasible(AdascaleError, ValueError):
    """Start point violates primal or dual feasibility beyond tolerance."""


class SingularUpdate(AdascaleError, ArithmeticError):
    """A rank-one update denominator vanished; the cascade cannot continue."""


class SchemaError(AdascaleError, ValueError):
    """Problem file does not match the expected JSON schema."""


class GenerationError(AdascaleError, RuntimeError):
    """Random instance generation exhausted its redraw budget."""
