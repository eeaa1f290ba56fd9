"""Exception types shared across the package."""


class ViscError(Exception):
    """Base class for all package errors."""


class DomainError(ViscError, ValueError):
    """An argument lies outside the interval a function is defined on."""


class RangeError(ViscError, ValueError):
    """A value lies outside the range of an invertible map."""


class ConfigurationError(ViscError, ValueError):
    """Inconsistent or invalid configuration (grids, gauges, schemes, files)."""


class PreconditionError(ViscError, ValueError):
    """A documented precondition of an operation is violated."""


class ModelError(ViscError, ValueError):
    """A financial model violates a structural requirement (e.g. positivity)."""


class SamplingError(ViscError, RuntimeError):
    """A rejection sampler failed to produce admissible samples."""


class QuadratureError(ViscError, ArithmeticError):
    """An integrand is singular or undefined inside the integration range."""
