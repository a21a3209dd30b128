"""Exception hierarchy shared across the toolkit."""


class ParameterError(ValueError):
    """Raised for invalid distribution or algorithm parameters."""


class NumericError(ArithmeticError):
    """Raised when a numerical routine fails to converge or overflows."""


class CapabilityError(RuntimeError):
    """Raised when a target lacks a capability a consumer requires
    (e.g. a density-based sampler on a density-free target)."""
