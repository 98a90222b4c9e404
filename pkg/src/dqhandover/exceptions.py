"""Exception types raised across the package."""


class InvalidOperandError(ValueError):
    """An operand violates an algebraic precondition (e.g. a non-unit quaternion)."""


class InvalidTransitionError(RuntimeError):
    """An operation was requested on an episode state that cannot accept it."""


class InvariantViolation(RuntimeError):
    """A runtime invariant failed (e.g. a distance evaluated to NaN)."""


class ConfigError(ValueError):
    """A configuration file or override could not be parsed or validated."""
