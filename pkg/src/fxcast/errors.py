"""Exception hierarchy shared across the package.

The CLI maps these classes onto distinct exit codes, so keep the split:
config problems, data problems, shape problems, training problems.
"""


class FxcastError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(FxcastError):
    """Array dimensions do not conform to an operation's contract."""


class DataError(FxcastError):
    """Malformed or degenerate input data."""


class ConfigError(FxcastError):
    """Invalid experiment configuration or command usage."""


class TrainingError(FxcastError):
    """Training could not complete."""


class TrainingDiverged(TrainingError):
    """Epoch loss exploded past the divergence guard."""


class NonFiniteGradient(TrainingError):
    """A gradient or error signal became NaN or infinite."""
