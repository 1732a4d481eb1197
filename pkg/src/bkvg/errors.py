"""Exception types shared across the package.

Every contract violation raises one of these instead of a bare ValueError so
callers (and the CLI exit-code mapping) can tell invalid input apart from a
failed verification or a numerical breakdown.
"""


class BkvgError(Exception):
    """Base class for all package-specific errors."""


class NonIntegrable(BkvgError):
    """Inner product requested for functions whose product is not integrable on (0,1)."""


class DomainViolation(BkvgError):
    """A function handed to a quadratic form lies outside the form domain."""


class NonIntegrableHint(BkvgError):
    """Quadrature was told the integrand behaves like x^hint with hint <= -1."""


class NoConvergence(BkvgError):
    """Adaptive quadrature hit its subdivision cap before meeting tolerance."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result  # best QuadratureResult so far, for diagnostics


class InvalidGamma(BkvgError):
    """Coupling constant outside (0, inf)."""


class NotInKernel(BkvgError):
    """Function is not in the kernel of the relevant adjoint."""


class WrongRegime(BkvgError):
    """Operation only defined when the adjoint kernels are two-dimensional."""


class SolveFailure(BkvgError):
    """The boundary-value-problem oracle failed to produce a solution."""


class WrongFamily(BkvgError):
    """A family-specific constant was requested for the other family."""


class UncertifiedConstants(BkvgError):
    """Closed-form constants disagreed with the quadrature oracle."""


class NotAccretive(BkvgError):
    """Operation requires an accretive extension."""


class NotClosable(BkvgError):
    """Operation requires a closable real part."""


class FamilyMismatch(BkvgError):
    """Comparison requested between extensions of different family instances."""


class NotApplicable(BkvgError):
    """The requested certificate does not exist for this configuration."""


class EigenFailure(BkvgError):
    """An eigenvalue computation failed to converge."""
