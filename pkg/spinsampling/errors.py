"""Exceptions raised by the spin sampling toolkit."""


class SpinSamplingError(Exception):
    """Base class for every error raised by this package."""


class InvalidDimensionError(SpinSamplingError, ValueError):
    """A matrix or mode count has an unusable shape or size."""


class CapacityError(SpinSamplingError):
    """A sector (or dense operator) would exceed the configured state cap."""

    def __init__(self, message: str, size: int = 0, cap: int = 0):
        super().__init__(message)
        self.size = size
        self.cap = cap


class BasisMismatchError(SpinSamplingError, ValueError):
    """Two bases do not describe the same (m, n) system."""


class SectorError(SpinSamplingError, ValueError):
    """An operation was handed a basis of the wrong sector kind."""


class DomainError(SpinSamplingError, ValueError):
    """Arguments fall outside a formula's domain of validity."""


class SupportMismatchError(SpinSamplingError, ValueError):
    """Two probability tables are not defined over the same configurations."""


class DegeneratePostselectionError(SpinSamplingError):
    """Postselection kept (numerically) no weight."""


class UnsupportedCouplingError(SpinSamplingError, ValueError):
    """The Ising mapping only accepts real orthogonal coupling matrices."""


class ConvergenceError(SpinSamplingError):
    """An iterative solver ran out of iterations."""


class ConfigError(SpinSamplingError, ValueError):
    """A run configuration field is invalid."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name
