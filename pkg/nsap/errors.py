from __future__ import annotations


class NsapError(Exception):
    """Base error; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class ConfigError(NsapError, ValueError):
    exit_code = 4


class NumericalFailure(NsapError):
    exit_code = 3


class GridMismatchError(ValueError):
    pass


class CheckpointFormatError(ValueError):
    pass


class SeriesFormatError(NsapError, ValueError):
    """A stored diagnostic series is missing columns or metadata."""

    exit_code = 4


class UnknownInequalityError(NsapError, KeyError):
    exit_code = 4

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown inequality id"
