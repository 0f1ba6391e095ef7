"""Exception types raised across the package."""

from __future__ import annotations


class BrickwallError(Exception):
    """Base class for all errors raised by :mod:`brickwall`."""


class ShapeError(BrickwallError, ValueError):
    """Tensor or network dimensions do not line up."""


class DomainError(BrickwallError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class DecompositionError(BrickwallError, ArithmeticError):
    """A matrix factorization failed to converge."""


class TopologyError(BrickwallError, ValueError):
    """A gate acts on sites that are not adjacent in the active topology."""


class UnsupportedGate(BrickwallError, ValueError):
    """A gate cannot be represented in the requested output format."""


class PlanError(BrickwallError, ValueError):
    """A partition plan is inconsistent with the circuit it partitions."""


class ConfigError(BrickwallError, ValueError):
    """A run configuration failed validation."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
