"""Exception types raised across the package."""


class LrsaoError(Exception):
    """Base class for every error raised by this package."""


class RangeError(LrsaoError, ValueError):
    pass


class HyperparamError(LrsaoError, ValueError):
    """Hyperparameters violate the penalty window or the (alpha, gamma) side condition."""


class ConfigError(LrsaoError, ValueError):
    pass


class PhaseError(LrsaoError, ValueError):
    pass


class TraceError(LrsaoError, ValueError):
    pass


class InstantiationError(LrsaoError, ValueError):
    """A checker was asked to watch a (state, objective) pair that is not a strict local maximum."""


class EmptyInput(LrsaoError, ValueError):
    pass


class IoError(LrsaoError, OSError):
    """Writing results or traces failed."""
