"""Exception types raised across the package."""


class TrackliteError(Exception):
    """Base class for all package errors."""


class BehindCamera(TrackliteError, ValueError):
    """A point with non-positive depth cannot be projected onto the image plane."""


class SingularInnovation(TrackliteError, ArithmeticError):
    """The innovation covariance is too ill-conditioned to invert."""


class NonMonotonicTimestamp(TrackliteError, ValueError):
    """A frame arrived with a timestamp not after the previous one."""


class EmptyGroundTruth(TrackliteError, ValueError):
    pass


class NoOverlap(TrackliteError, ValueError):
    """Estimated and ground-truth trajectories share no time span."""


class ParseError(TrackliteError, ValueError):
    def __init__(self, message: str, path=None, line: int | None = None, field: str | None = None):
        self.path = path
        self.line = line
        self.field = field
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class MissingFile(TrackliteError, FileNotFoundError):
    pass


class ValidationError(TrackliteError, ValueError):
    pass


class StalePose(TrackliteError, LookupError):
    """No ego pose lies within the staleness window of a frame timestamp."""
