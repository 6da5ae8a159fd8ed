"""Exception and warning types raised across the package.

Every error carries a stable class name; the command-line front end prints
that name on stderr when a numerical failure aborts a command.
"""

__all__ = [
    "InfoDelayError",
    "InvalidPolynomial",
    "NotAdmissible",
    "UnstableDenominator",
    "PoleOnEvaluationPoint",
    "BoundaryPole",
    "TailNotConverged",
    "ZeroOnOrOutsideCircle",
    "UnpairedComplexZero",
    "NonPositiveKappa",
    "KappaTooSmall",
    "KappaOutOfRegime",
    "NotNegativeRealPart",
    "QuadratureNotConverged",
    "NotOuter",
    "NonPositiveRate",
    "SingularToeplitz",
    "NonInvertiblePolicyWithFullHistory",
    "InvalidConfig",
    "NegativeOrdersWarning",
    "RegimeWarning",
]


class InfoDelayError(Exception):
    """Base class for all package errors."""


class InvalidPolynomial(InfoDelayError, ValueError):
    """Empty, non-finite, or identically zero coefficient list."""


class NotAdmissible(InfoDelayError, ValueError):
    """Filter violates the bounded-inventory condition psi(1) = 1."""


class UnstableDenominator(InfoDelayError, ValueError):
    """Denominator has a root in the closed unit disk."""


class PoleOnEvaluationPoint(InfoDelayError, ValueError):
    """Evaluation point hits a pole of the filter or of its exponent."""


class BoundaryPole(InfoDelayError, ValueError):
    """Exponent has a pole on the unit circle, so circle FFT extraction is invalid."""


class TailNotConverged(InfoDelayError, RuntimeError):
    """Impulse-response truncation could not reach the tail tolerance."""


class ZeroOnOrOutsideCircle(InfoDelayError, ValueError):
    """Blaschke zero with modulus >= 1."""


class UnpairedComplexZero(InfoDelayError, ValueError):
    """Complex Blaschke zeros must be supplied with their conjugates."""


class NonPositiveKappa(InfoDelayError, ValueError):
    """Cost ratio must be strictly positive."""


class KappaTooSmall(InfoDelayError, ValueError):
    """MA(1) construction needs kappa > 1."""


class KappaOutOfRegime(InfoDelayError, ValueError):
    """Limiting delayed policy only exists for kappa < sqrt(5)."""


class NotNegativeRealPart(InfoDelayError, ValueError):
    """Exponent has positive real part somewhere on the sampled disk."""


class QuadratureNotConverged(InfoDelayError, RuntimeError):
    """Numerical integration failed to reach its tolerance."""


class NotOuter(InfoDelayError, ValueError):
    """Filter is not invertible (has zeros inside the disk)."""


class NonPositiveRate(InfoDelayError, ValueError):
    """Holding and backlog rates must be strictly positive."""


class SingularToeplitz(InfoDelayError, ArithmeticError):
    """Levinson recursion met a nonpositive prediction-error pivot."""


class NonInvertiblePolicyWithFullHistory(InfoDelayError, ValueError):
    """Full-history forecasting needs recoverable shocks."""


class InnovationRecoveryFailed(InfoDelayError, RuntimeError):
    """The inverse filter could not reproduce the shocks in finite precision."""


class InvalidConfig(InfoDelayError, ValueError):
    """Simulation configuration violates its preconditions."""


class NegativeOrdersWarning(UserWarning):
    """Some simulated orders were negative; allowed under Gaussian demand."""


class RegimeWarning(UserWarning):
    """Construction used outside the cost regime where it is optimal."""
