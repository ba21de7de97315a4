"""Exception types shared across the package."""


class InvalidInput(ValueError):
    """An argument violates an operation's precondition."""


class InvalidShape(InvalidInput):
    """A layer shape has a zero or negative dimension."""


class ConfigError(ValueError):
    """An experiment configuration cannot be executed."""


class DegeneratePrivacy(ValueError):
    """Effective noise variance is zero, so epsilon would be infinite."""


class InvariantViolation(RuntimeError):
    """A runtime safety invariant (power cap, ledger monotonicity, ...) failed."""
