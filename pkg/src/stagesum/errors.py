from __future__ import annotations

from typing import Any


class StagesumError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(StagesumError, ValueError):
    """Invalid configuration or arguments; detected before any work starts."""


class CorpusError(StagesumError, ValueError):
    """Corpus records that fail validation."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = violations or []


class BackendError(StagesumError, RuntimeError):
    """A summarizer call failed (after retries, for remote backends)."""

    def __init__(self, message: str, metadata: dict[str, Any] | None = None):
        super().__init__(message)
        self.metadata = metadata or {}


class ProtocolError(BackendError):
    """The remote backend answered, but not with a usable summary."""


class BatchError(BackendError):
    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"request {index} failed: {cause}", getattr(cause, "metadata", None))
        self.index = index
        self.cause = cause


class NonConvergenceError(StagesumError, RuntimeError):
    def __init__(self, trajectory: list[float], limit: int):
        path = " -> ".join(f"{d:.2f}" for d in trajectory)
        super().__init__(
            f"average source length still above the stop threshold after {limit} "
            f"coarse stages (d trajectory: {path})"
        )
        self.trajectory = trajectory
        self.limit = limit
