"""Exception types shared across the package."""


class HetSinrError(Exception):
    """Base class for all package-specific errors."""


class EmptyTierListError(HetSinrError):
    """Network configuration contains no tiers."""


class NonPositiveParameterError(HetSinrError):
    """A parameter that must be strictly positive (or nonnegative) is not."""


class InvalidExponentError(HetSinrError):
    """Path loss exponent is at or below 2, where the interference
    integral diverges."""


class IndexOutOfRangeError(HetSinrError):
    """Tier index outside 1..K."""


class AlphaOutOfRangeError(HetSinrError):
    """Exponent argument of the interference kernel is at or below 2."""


class QuadratureFailureError(HetSinrError):
    """Adaptive quadrature could not meet the requested tolerance
    within the subdivision budget."""


class NotApplicableError(HetSinrError):
    """Closed-form shortcut preconditions are not met; callers should
    fall back to the general quadrature path."""


class ZeroUserDensityError(HetSinrError):
    """Per-user throughput requested with zero user density."""


class EmptyDeploymentError(HetSinrError):
    """Simulation window contains no base station."""


class EmptySampleSetError(HetSinrError):
    """Empirical statistics requested from an empty sample set."""


class ConfigParseError(HetSinrError):
    """Configuration file is missing, malformed, or fails validation."""
