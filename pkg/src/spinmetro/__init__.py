"""Estimation of two-phase spin rotations: QFI matrices, sensitivity bounds,
spin squeezing, Monte Carlo saturation and probe-state optimization."""

from .errors import (
    DivergentSensitivityError,
    DomainError,
    SingularQfiError,
    SpinMetroError,
    StateSpecError,
    UndefinedMsdError,
)
from .qfi import PhasePair, QfiMatrix, crb, evolve, qfi_matrix_analytic, qfi_matrix_numeric
from .spin_algebra import CompositeSpace, SpinQuantum, make_spin_ops
from .states import StateVector, parse_state_spec

__version__ = "0.1.0"

__all__ = [
    "CompositeSpace",
    "DivergentSensitivityError",
    "DomainError",
    "PhasePair",
    "QfiMatrix",
    "SingularQfiError",
    "SpinMetroError",
    "SpinQuantum",
    "StateSpecError",
    "StateVector",
    "UndefinedMsdError",
    "crb",
    "evolve",
    "make_spin_ops",
    "parse_state_spec",
    "qfi_matrix_analytic",
    "qfi_matrix_numeric",
]
