"""Exception types raised across the package."""


class StopbedError(Exception):
    """Base class for all package errors."""


class DomainError(StopbedError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ShapeError(StopbedError, ValueError):
    """Array or grid shapes do not line up."""


class SupportError(StopbedError, ValueError):
    """KL divergence requested where the reference density vanishes."""


class DegeneratePosteriorError(StopbedError, ValueError):
    """Bayes update left no probability mass anywhere."""


class ConstraintError(StopbedError, ValueError):
    """Design outside its admissible box."""


class ConfigError(StopbedError, ValueError):
    """Invalid configuration value."""


class StateError(StopbedError, RuntimeError):
    """Operation attempted on an object in the wrong state."""


class TerminalStateError(StateError):
    """Transition requested from the absorbing terminal state."""


class UnsupportedError(StopbedError, ValueError):
    """Operation not defined for the given configuration."""


class UpdateRejected(StopbedError, FloatingPointError):
    """Non-finite gradient or loss; the parameter update was refused."""
