"""Exception hierarchy shared by every qspinlab module."""


class QSpinError(Exception):
    """Base class for all library errors."""


class InvalidSize(QSpinError, ValueError):
    pass


class InvalidParam(QSpinError, ValueError):
    pass


class SizeMismatch(QSpinError, ValueError):
    pass


class EmptySubset(QSpinError, ValueError):
    pass


class FullSubset(QSpinError, ValueError):
    pass


class InvalidState(QSpinError, ValueError):
    pass


class ResourceLimit(QSpinError):
    """Requested problem size exceeds the configured memory guard."""


class NumericalFailure(QSpinError):
    """Base for iterative methods that did not reach their tolerance."""


class ConvergenceFailure(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass


class QuadratureFailure(NumericalFailure):
    pass


class NearCritical(QSpinError, ValueError):
    pass


class NonUniformGrid(QSpinError, ValueError):
    pass


class ConfigError(QSpinError, ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IoError(QSpinError, OSError):
    pass
