"""Exception hierarchy.

Domain errors (exit code 3 on the command line) signal that a quantity is
mathematically undefined for the given input, as opposed to malformed input.
"""

from __future__ import annotations

import numpy as np


class SpinMetroError(Exception):
    """Base class for all package errors."""


class DimensionError(SpinMetroError, ValueError):
    pass


class StateSpecError(SpinMetroError, ValueError):
    """Malformed state specification string."""

    def __init__(self, message: str, position: int | None = None, text: str | None = None):
        self.position = position
        self.text = text
        if position is not None and text is not None:
            message = f"{message} at position {position}\n  {text}\n  {' ' * position}^"
        elif position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class DomainError(SpinMetroError):
    """The requested quantity does not exist for this input."""


class SingularQfiError(DomainError):
    """QFI matrix is not invertible: some direction in parameter space is not locally estimable."""

    def __init__(self, h: np.ndarray, direction: np.ndarray, eigenvalue: float):
        self.h = h
        self.direction = direction
        self.eigenvalue = eigenvalue
        super().__init__(
            f"QFI matrix is singular (min eigenvalue {eigenvalue:.3e}); "
            f"unestimable direction (phi_x, phi_y) ~ ({direction[0]:.6f}, {direction[1]:.6f})"
        )


class DivergentSensitivityError(DomainError):
    """Spin-measurement sensitivity diverges because <J_z> vanishes."""


class UndefinedMsdError(DomainError):
    """Mean spin vector vanishes, so the mean-spin direction is undefined."""
