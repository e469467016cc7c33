"""Spin-j angular momentum operators and related linear algebra.

Operators are plain complex ``numpy`` arrays in the J_z eigenbasis ordered
m = j, j-1, ..., -j. A spin is stored as the integer ``two_j`` so that
integer and semi-odd spins are never confused by floating-point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DimensionError

HERMITIAN_TOL = 1e-12
AXES = ("x", "y", "z")


@dataclass(frozen=True, order=True)
class SpinQuantum:
    """Spin magnitude j, held exactly as ``two_j = 2j``."""

    two_j: int

    def __post_init__(self):
        if isinstance(self.two_j, bool) or not isinstance(self.two_j, (int, np.integer)):
            raise TypeError(f"two_j must be an integer, got {self.two_j!r}")
        if self.two_j < 1:
            raise ValueError(f"spin must satisfy j >= 1/2, got two_j={self.two_j}")
        object.__setattr__(self, "two_j", int(self.two_j))

    @classmethod
    def parse(cls, value: str | float | int | Fraction | "SpinQuantum") -> "SpinQuantum":
        """Accept ``"3/2"``, ``"1.5"``, ``1.5``, ``Fraction(3, 2)`` or an existing spin."""
        if isinstance(value, SpinQuantum):
            return value
        try:
            frac = Fraction(value.strip()) if isinstance(value, str) else Fraction(value)
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise ValueError(f"cannot parse spin j from {value!r}") from exc
        twice = 2 * frac
        if twice.denominator != 1:
            raise ValueError(f"j must be an integer or half-integer, got {value!r}")
        return cls(int(twice))

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.two_j, 2)

    @property
    def dim(self) -> int:
        return self.two_j + 1

    @property
    def is_integer(self) -> bool:
        return self.two_j % 2 == 0

    @property
    def parity(self) -> str:
        return "integer" if self.is_integer else "semi-odd"

    @property
    def casimir(self) -> float:
        """j(j+1)."""
        return self.j * (self.j + 1)

    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers j, j-1, ..., -j (basis order)."""
        return self.j - np.arange(self.dim)

    def index_of(self, m: float | Fraction) -> int:
        two_m = 2 * Fraction(m)
        if two_m.denominator != 1 or abs(two_m) > self.two_j or (self.two_j - two_m) % 2:
            raise ValueError(f"m={m} is not a valid projection for j={self}")
        return int((self.two_j - two_m) // 2)

    def __str__(self) -> str:
        return str(self.fraction)


@dataclass(frozen=True)
class CompositeSpace:
    """System of dimension 2j+1 tensored with an optional ancilla (0 means none)."""

    system_dim: int
    ancilla_dim: int = 0

    def __post_init__(self):
        if self.system_dim < 1 or self.ancilla_dim < 0:
            raise ValueError(f"invalid composite space {self.system_dim} x {self.ancilla_dim}")

    @property
    def total_dim(self) -> int:
        return self.system_dim * max(self.ancilla_dim, 1)


class SpinOps(NamedTuple):
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray

    def along(self, axis: str) -> np.ndarray:
        return {"x": self.jx, "y": self.jy, "z": self.jz}[axis]

    def dot(self, vec) -> np.ndarray:
        return vec[0] * self.jx + vec[1] * self.jy + vec[2] * self.jz


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def _spin_ops_cached(two_j: int) -> SpinOps:
    j = two_j / 2
    m = j - np.arange(two_j + 1)
    # <m+1|J_+|m> = sqrt(j(j+1) - m(m+1)); row k-1 is m[k]+1
    jplus = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    jminus = jplus.conj().T
    jx = (jplus + jminus) / 2
    jy = (jplus - jminus) / 2j
    jz = np.diag(m).astype(complex)
    return SpinOps(_readonly(jx), _readonly(jy), _readonly(jz))


def make_spin_ops(j: SpinQuantum) -> SpinOps:
    """Standard (2j+1)-dimensional representation of (J_x, J_y, J_z)."""
    return _spin_ops_cached(j.two_j)


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def hermitian_expm(generator: np.ndarray, scale: complex = 1j) -> np.ndarray:
    """exp(scale * G) for Hermitian G via its spectral decomposition."""
    evals, evecs = np.linalg.eigh(generator)
    return (evecs * np.exp(scale * evals)) @ evecs.conj().T


def embed(op: np.ndarray, space: CompositeSpace) -> np.ndarray:
    """op (x) I_ancilla; unchanged when there is no ancilla."""
    op = np.asarray(op)
    if op.shape != (space.system_dim, space.system_dim):
        raise DimensionError(f"operator shape {op.shape} does not match system dimension {space.system_dim}")
    if space.ancilla_dim <= 1:
        return op
    return np.kron(op, np.eye(space.ancilla_dim))


def rotation_unitary(phi, j: SpinQuantum, space: CompositeSpace | None = None) -> np.ndarray:
    """exp(i(phi_x J_x + phi_y J_y)) (x) I_ancilla.

    ``phi`` is anything with ``phi_x``/``phi_y`` attributes or a length-2 sequence.
    """
    phi_x, phi_y = _phase_components(phi)
    ops = make_spin_ops(j)
    u = hermitian_expm(phi_x * ops.jx + phi_y * ops.jy)
    return embed(u, space or CompositeSpace(j.dim))


def _phase_components(phi) -> tuple[float, float]:
    if hasattr(phi, "phi_x"):
        return float(phi.phi_x), float(phi.phi_y)
    px, py = phi
    return float(px), float(py)


def _fix_phase(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate the global phase so the first nonzero amplitude is real positive."""
    nz = np.flatnonzero(np.abs(v) > tol)
    if nz.size == 0:
        return v
    return v * np.exp(-1j * np.angle(v[nz[0]]))


@lru_cache(maxsize=None)
def _eigenbasis_cached(two_j: int, axis: str) -> tuple[np.ndarray, ...]:
    j = SpinQuantum(two_j)
    ops = make_spin_ops(j)
    if axis == "z":
        basis = np.eye(j.dim, dtype=complex)
    elif axis == "x":
        basis = hermitian_expm(ops.jy, scale=-1j * np.pi / 2)
    elif axis == "y":
        basis = hermitian_expm(ops.jx, scale=1j * np.pi / 2)
    else:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    return tuple(_readonly(_fix_phase(basis[:, k].copy())) for k in range(j.dim))


def eigenbasis(j: SpinQuantum, axis: str) -> list[np.ndarray]:
    """Eigenvectors |j,m>_axis for m = j, ..., -j as z-basis amplitude arrays.

    |j,m>_x = exp(-i pi/2 J_y)|j,m>_z and |j,m>_y = exp(+i pi/2 J_x)|j,m>_z,
    then each vector's first nonzero amplitude is made real positive.
    """
    return list(_eigenbasis_cached(j.two_j, axis))


def _as_vector(state) -> np.ndarray:
    return np.asarray(getattr(state, "amplitudes", state))


def _matched(state, op: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vec = _as_vector(state)
    op = np.asarray(op)
    if op.shape == (vec.size, vec.size):
        return vec, op
    space = getattr(state, "space", None)
    if space is not None and op.shape == (space.system_dim, space.system_dim):
        return vec, embed(op, space)
    raise DimensionError(f"operator shape {op.shape} incompatible with state of length {vec.size}")


def expectation(state, op: np.ndarray) -> complex | float:
    """<psi|A|psi>; real for Hermitian A.

    Accepts a ``StateVector`` or a bare amplitude array. System-only operators
    are embedded automatically when the state carries an ancilla.
    """
    vec, op = _matched(state, op)
    val = np.vdot(vec, op @ vec)
    if is_hermitian(op):
        if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
            raise ArithmeticError(f"Hermitian expectation has imaginary part {val.imag:.3e}")
        return float(val.real)
    return complex(val)


def variance(state, op: np.ndarray) -> float:
    return sym_covariance(state, op, op)


def sym_covariance(state, a: np.ndarray, b: np.ndarray) -> float:
    """1/2 <{A,B}> - <A><B> for Hermitian A, B."""
    vec, a = _matched(state, a)
    _, b = _matched(state, b)
    av, bv = a @ vec, b @ vec
    ea, eb = np.vdot(vec, av).real, np.vdot(vec, bv).real
    return float(np.vdot(av, bv).real - ea * eb)


def spin_ops_on(space: CompositeSpace, j: SpinQuantum) -> SpinOps:
    ops = make_spin_ops(j)
    return SpinOps(*(embed(o, space) for o in ops))


def batch_expectation(states: np.ndarray, op: np.ndarray) -> np.ndarray:
    """<psi_k|A|psi_k> for the rows of ``states`` (real part)."""
    return np.einsum("ki,ki->k", states.conj(), states @ op.T).real
