"""Exception hierarchy. The CLI maps each class onto a process exit code."""


class SlamEvalError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(SlamEvalError, ValueError):
    pass


class DegenerateGeometryError(InvalidInputError):
    """Point configuration too degenerate for a unique rigid fit."""


class InvalidPoseError(InvalidInputError):
    pass


class UnresolvedFrameError(InvalidInputError):
    """Some map points reference frames that cannot be paired with a pose."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(int(i) for i in indices)


class ParseError(SlamEvalError, ValueError):
    """Malformed input document.

    ``line`` is 1-based when the failure is attributable to a single line,
    ``key`` names the violated header field for keyed formats (PCD, PGM).
    """

    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.key = key


class OrderingError(ParseError):
    """Timestamps are not strictly increasing."""


class NoOverlapError(SlamEvalError):
    """Two trajectories share no timestamps within the allowed offset."""


class UndefinedMetricError(SlamEvalError, ValueError):
    """The metric has no value for the given input (e.g. nothing matched)."""
