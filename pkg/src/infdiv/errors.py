"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Model or solver parameters outside their admissible domain."""


class DomainError(ValueError):
    """Point outside the state space, or query outside a table's range."""


class ConfigurationError(ValueError):
    """Missing or inconsistent inputs (e.g. a required boundary table)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (non-monotone solve, NaN in dynamics)."""


class PathInvalidError(ValueError):
    """A sample path violates the admissibility constraints."""


class PolicyError(ValueError):
    """A control policy prescribes an inadmissible action."""
