"""Exception hierarchy shared by every module."""


class SigmaSpaceError(Exception):
    """Base class for all library errors."""


class IoError(SigmaSpaceError, OSError):
    pass


class FormatError(SigmaSpaceError, ValueError):
    pass


class DimensionError(SigmaSpaceError, ValueError):
    pass


class WindowError(DimensionError):
    pass


class ScaleError(DimensionError):
    pass


class DomainError(SigmaSpaceError, ValueError):
    pass


class RangeError(DomainError):
    pass


class DegenerateInput(SigmaSpaceError, ValueError):
    pass


class EmptyCorpus(SigmaSpaceError, ValueError):
    pass


class ShapeError(DimensionError):
    pass


class ScheduleError(SigmaSpaceError, ValueError):
    pass


class NonFinite(SigmaSpaceError, FloatingPointError):
    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite value encountered at step {step}")


class SingularSystem(SigmaSpaceError, ArithmeticError):
    pass


class ConfigError(SigmaSpaceError, ValueError):
    pass
