"""Exception hierarchy shared across the package."""


class TensorGCNError(Exception):
    """Base class for all package errors."""


class ShapeError(TensorGCNError, ValueError):
    """Operand dimensions are not conformable."""


class ParameterError(TensorGCNError, ValueError):
    """An argument is outside its admissible range."""


class PreconditionError(TensorGCNError, ValueError):
    """Input violates a mathematical precondition (e.g. symmetry)."""


class FitError(TensorGCNError):
    """Least-squares polynomial fit is numerically singular."""


class NumericError(TensorGCNError, FloatingPointError):
    """A non-finite value appeared during computation."""


class ConfigError(TensorGCNError, ValueError):
    """Experiment configuration is inconsistent."""


class DataError(TensorGCNError):
    """Dataset files are missing or malformed."""


class ParseError(DataError):
    """A row in a dataset file could not be parsed."""

    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = path
        self.lineno = lineno


class MetricError(TensorGCNError, ValueError):
    """A metric is undefined for the given input."""


class CheckpointError(TensorGCNError):
    """A checkpoint file cannot be loaded or does not match the config."""
