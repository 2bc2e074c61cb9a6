"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A constructor or operation received an out-of-contract argument."""


class StabilityError(ParameterError):
    """A constant-order rate at or above the demand mean was requested."""


class ConfigError(ValueError):
    """Incompatible combination of demand model, backend, or policy."""


class TruncationError(RuntimeError):
    """A truncated support lost more probability mass than allowed.

    The offending mass is stored in ``tail_mass``.
    """

    def __init__(self, message: str, tail_mass: float):
        super().__init__(f"{message} (tail mass {tail_mass:.3e})")
        self.tail_mass = tail_mass


class ResourceError(RuntimeError):
    """A computation exceeded its configured size or iteration budget."""
