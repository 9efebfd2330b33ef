"""Exception hierarchy shared by every module of the package."""


class SimplexConfError(Exception):
    """Base class for all errors raised by ``simplex_conf``."""


class NonInterior(SimplexConfError, ValueError):
    """A weight vector is not in the open simplex."""


class DimensionMismatch(SimplexConfError, ValueError):
    pass


class DomainError(SimplexConfError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class ConvergenceError(SimplexConfError, RuntimeError):
    pass


class CapExceeded(SimplexConfError, RuntimeError):
    """Support enumeration would exceed the configured size cap."""


class OutOfBulk(SimplexConfError, ValueError):
    pass


class OutOfPTau(SimplexConfError, ValueError):
    pass


class RegimeViolation(SimplexConfError, ValueError):
    """Bound requested outside ``tau >= d + 1`` and ``n >= tau**4``."""


class ZeroCount(SimplexConfError, ValueError):
    """An observed category has zero count; the interior confidence set needs positive counts."""
