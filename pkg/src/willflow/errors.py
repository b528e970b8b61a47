"""Exception hierarchy shared by all willflow modules."""


class WillflowError(Exception):
    """Base class for every error raised by this package."""


class ParseError(WillflowError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TopologyError(WillflowError):
    """The mesh is not a closed, manifold, consistently oriented surface."""


class DomainError(WillflowError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateMesh(WillflowError):
    """A face is too small for the curvature operators to be meaningful."""


class StepFailed(WillflowError):
    """Backtracking could not find an energy-decreasing, valid step."""


class ConfigError(WillflowError, ValueError):
    pass


class IoError(WillflowError, OSError):
    pass
