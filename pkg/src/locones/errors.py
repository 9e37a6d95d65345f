"""Exception hierarchy.

Domain errors (bad parameters) and numerical failures are kept apart so the
command line can map them to different exit codes.
"""


class LomseDomainError(ValueError):
    """Input parameters outside the domain of an operation."""


class NoConeError(LomseDomainError):
    """``p * lambda**2 <= n``: the slope equation has no root in (0, 1)."""


class DegenerateError(LomseDomainError):
    """The fixed point P sits on the node/spiral boundary."""


class NumericalError(RuntimeError):
    """An integration or quadrature step failed."""


class ConsistencyError(NumericalError):
    """A computed quantity violates a property it must satisfy.

    Usually a sign that integrator or quadrature tolerances are too loose.
    """


class StabilityError(NumericalError):
    """The Jacobi-field integration along the cone segment failed."""
