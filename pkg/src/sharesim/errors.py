"""Exception types raised across the engine."""

from __future__ import annotations


class ShareError(Exception):
    """Base class for all engine errors."""


class DimensionMismatch(ShareError, ValueError):
    pass


class IndexOutOfRange(DimensionMismatch, IndexError):
    pass


class SpaceMismatch(ShareError, ValueError):
    pass


class NonFiniteResult(ShareError, ArithmeticError):
    """A computation produced NaN or infinity.

    ``trajectory`` carries the records emitted before the failure when the
    error escapes a simulation loop.
    """

    def __init__(self, message: str, trajectory: list | None = None):
        super().__init__(message)
        self.trajectory = trajectory if trajectory is not None else []


class ZeroVector(ShareError, ValueError):
    pass


class ZeroGradient(ShareError, ValueError):
    pass


class MissingField(ShareError, LookupError):
    pass


class UnknownLabel(ShareError, LookupError):
    pass


class InvalidParams(ShareError, ValueError):
    pass


class AtThresholdWarning(UserWarning):
    """A binary-threshold unit sits exactly on its threshold; its derivative is taken as 0."""


class ScenarioError(ShareError):
    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


class ScenarioSyntaxError(ScenarioError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class UnknownKey(ScenarioError):
    pass


class TypeMismatch(ScenarioError):
    pass
