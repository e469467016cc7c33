"""Quantum Fisher information for the two-phase rotation exp(i(phi_x J_x + phi_y J_y)).

Two independent routes are provided:

* ``qfi_matrix_analytic``: H0 = 4 * symmetrized covariance of (J_x, J_y) on the
  probe, optionally plus the first-order correction H1 at the given phases.
* ``qfi_matrix_numeric``: builds rho(phi), differentiates it with the
  five-point central stencil, uses L = 2 d rho (valid for pure states) and evaluates
  Tr[rho (L_mu L_nu + L_nu L_mu)/2].

For pure probes Im<l_x|l_y> = 2 <J_z>_0 at phi = 0, so the achievability
residual is reported raw; divide by 2 to recover <J_z>_0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, SingularQfiError
from .spin_algebra import commutator, is_hermitian, rotation_unitary, spin_ops_on
from .states import StateVector, check_density_matrix

RESIDUAL_TO_JZ = 2.0
SINGULAR_TOL = 1e-12
STEP_RANGE = (1e-7, 1e-3)
DEFAULT_STEP = 1e-4


@dataclass(frozen=True)
class PhasePair:
    """Rotation phases (phi_x, phi_y); the z component is identically zero."""

    phi_x: float = 0.0
    phi_y: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.phi_x) and math.isfinite(self.phi_y)):
            raise ValueError("phases must be finite")

    @classmethod
    def parse(cls, text: str) -> "PhasePair":
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 2:
            raise ValueError(f"expected 'phi_x,phi_y', got {text!r}")
        return cls(float(parts[0]), float(parts[1]))

    @property
    def magnitude(self) -> float:
        return math.hypot(self.phi_x, self.phi_y)

    def as_array(self) -> np.ndarray:
        return np.array([self.phi_x, self.phi_y])


ZERO = PhasePair()


@dataclass(frozen=True)
class QfiMatrix:
    h: np.ndarray
    order: str
    achievability_residual: float
    richardson_delta: float | None = None
    warning: str | None = None
    pure_state_model: bool = True  # False: Im-condition is only sufficient

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.shape != (2, 2):
            raise ValueError("QFI matrix must be 2x2")
        if not np.all(np.isfinite(h)):
            raise ValueError("QFI matrix must be finite")
        if abs(h[0, 1] - h[1, 0]) > 1e-10 * max(1.0, float(np.max(np.abs(h)))):
            raise ValueError("QFI matrix must be symmetric")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def is_symmetric(self) -> bool:
        return abs(self.h[0, 1] - self.h[1, 0]) <= 1e-10

    @property
    def achievable(self) -> bool:
        return abs(self.achievability_residual) <= 1e-10

    def to_json(self) -> dict:
        out = {
            "h": self.h.tolist(),
            "order": self.order,
            "achievability_residual": self.achievability_residual,
            "pure_state_model": self.pure_state_model,
        }
        if self.richardson_delta is not None:
            out["richardson_delta"] = self.richardson_delta
        if self.warning:
            out["warning"] = self.warning
        return out


@dataclass(frozen=True)
class CrbResult:
    weight: np.ndarray
    value: float
    m_measurements: int
    total_sensitivity: float | None
    qfi: QfiMatrix = field(repr=False)

    def to_json(self) -> dict:
        return {
            "weight": np.asarray(self.weight).tolist(),
            "value": self.value,
            "m_measurements": self.m_measurements,
            "total_sensitivity": self.total_sensitivity,
        }


def _ops(psi0: StateVector):
    return spin_ops_on(psi0.space, psi0.j)


def evolve(psi0: StateVector, phi: PhasePair) -> StateVector:
    """|psi_phi> = U(phi) (x) I_A |psi0>."""
    u = rotation_unitary(phi, psi0.j, psi0.space)
    if u.shape[0] != psi0.dim:
        raise DimensionError("rotation and state dimensions differ")
    vec = u @ psi0.amplitudes
    return psi0.with_amplitudes(vec / np.linalg.norm(vec))


class AuxVectors(NamedTuple):
    zeroth: tuple[np.ndarray, np.ndarray]
    first: tuple[np.ndarray, np.ndarray]

    def total(self) -> tuple[np.ndarray, np.ndarray]:
        return self.zeroth[0] + self.first[0], self.zeroth[1] + self.first[1]


def aux_vectors(psi0: StateVector, phi: PhasePair = ZERO) -> AuxVectors:
    """|l_mu> expanded to first order in phi.

    |l0_mu> = 2i (J_mu|psi0> - |psi0><J_mu>)
    |l1_mu> = 2 (phi.J|psi0><J_mu> - |psi0><J_mu phi.J>)
    """
    ops = _ops(psi0)
    psi = psi0.amplitudes
    gen = phi.phi_x * ops.jx + phi.phi_y * ops.jy
    gen_psi = gen @ psi
    zeroth, first = [], []
    for jm in (ops.jx, ops.jy):
        jm_psi = jm @ psi
        mean = np.vdot(psi, jm_psi)
        zeroth.append(2j * (jm_psi - psi * mean))
        first.append(2 * (gen_psi * mean - psi * np.vdot(jm_psi, gen_psi)))
    return AuxVectors(tuple(zeroth), tuple(first))


def _gram(ls) -> np.ndarray:
    return np.array([[np.vdot(a, b) for b in ls] for a in ls])


def first_order_correction(psi0: StateVector, phi: PhasePair) -> np.ndarray:
    """H1_{mu nu} = 2i [<[phi.J, J_nu]><J_mu> + <[phi.J, J_mu]><J_nu>]."""
    ops = _ops(psi0)
    psi = psi0.amplitudes
    gen = phi.phi_x * ops.jx + phi.phi_y * ops.jy
    js = (ops.jx, ops.jy)
    means = [np.vdot(psi, jm @ psi).real for jm in js]
    comms = [np.vdot(psi, commutator(gen, jm) @ psi) for jm in js]
    h1 = np.empty((2, 2))
    for mu in range(2):
        for nu in range(2):
            h1[mu, nu] = (2j * (comms[nu] * means[mu] + comms[mu] * means[nu])).real
    return h1


def qfi_matrix_analytic(psi0: StateVector, phi: PhasePair = ZERO, order: str = "zeroth") -> QfiMatrix:
    """Covariance-form QFI matrix, optionally with the first-order correction."""
    if order not in ("zeroth", "first_corrected"):
        raise ValueError(f"order must be 'zeroth' or 'first_corrected', got {order!r}")
    lx, ly = aux_vectors(psi0, ZERO).zeroth
    gram = _gram((lx, ly))
    h = gram.real
    h = (h + h.T) / 2
    if order == "first_corrected":
        h = h + first_order_correction(psi0, phi)
    return QfiMatrix(h, order, float(gram[0, 1].imag))


def _numeric_once(psi0: StateVector, phi: PhasePair, step: float) -> tuple[np.ndarray, float]:
    def rho_at(px, py):
        v = evolve(psi0, PhasePair(px, py)).amplitudes
        return np.outer(v, v.conj())

    def diff(dx, dy, k):
        return rho_at(phi.phi_x + k * dx, phi.phi_y + k * dy) - rho_at(phi.phi_x - k * dx, phi.phi_y - k * dy)

    rho = rho_at(phi.phi_x, phi.phi_y)
    slds = []
    for dx, dy in ((step, 0.0), (0.0, step)):
        # fourth-order central difference: the O(step^2) error grows like j^3
        drho = (8 * diff(dx, dy, 1) - diff(dx, dy, 2)) / (12 * step)
        slds.append(2 * drho)
    h = np.empty((2, 2))
    for mu in range(2):
        for nu in range(2):
            anti = slds[mu] @ slds[nu] + slds[nu] @ slds[mu]
            h[mu, nu] = np.trace(rho @ anti).real / 2
    residual = np.trace(rho @ slds[0] @ slds[1]).imag
    return h, float(residual)


def qfi_matrix_numeric(psi0: StateVector, phi: PhasePair = ZERO, step: float = DEFAULT_STEP,
                       rtol: float = 1e-6) -> QfiMatrix:
    """Finite-difference SLD route; independent of the covariance formula.

    The computation is repeated at 2*step; if the two disagree by more than
    ``rtol`` (relative to max(1, |H|)) the result carries a warning.
    """
    if not (STEP_RANGE[0] <= step <= STEP_RANGE[1]):
        raise ValueError(f"step must lie in [{STEP_RANGE[0]:g}, {STEP_RANGE[1]:g}], got {step:g}")
    h, residual = _numeric_once(psi0, phi, step)
    h2, _ = _numeric_once(psi0, phi, 2 * step)
    delta = float(np.max(np.abs(h - h2)))
    msg = None
    if delta > rtol * max(1.0, float(np.max(np.abs(h)))):
        msg = f"finite-difference QFI changed by {delta:.3e} between step {step:g} and {2 * step:g}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return QfiMatrix((h + h.T) / 2, "numeric", residual, richardson_delta=delta, warning=msg)


def sld_general(rho: np.ndarray, drho: np.ndarray, support_tol: float = 1e-12) -> np.ndarray:
    """Solve 2 d rho = L rho + rho L in the eigenbasis of rho.

    L_ab = 2 <a|d rho|b> / (p_a + p_b); pairs with p_a + p_b <= support_tol are set to 0.
    """
    rho = check_density_matrix(rho)
    drho = np.asarray(drho, dtype=complex)
    if not is_hermitian(drho, 1e-10):
        raise ValueError("d rho must be Hermitian")
    if abs(np.trace(drho)) > 1e-10:
        raise ValueError("d rho must be traceless")
    p, v = np.linalg.eigh(rho)
    d = v.conj().T @ drho @ v
    denom = p[:, None] + p[None, :]
    safe = denom > support_tol
    lmat = np.zeros_like(d)
    lmat[safe] = 2 * d[safe] / denom[safe]
    return v @ lmat @ v.conj().T


def qfi_from_slds(rho: np.ndarray, slds) -> QfiMatrix:
    """QFI matrix from a list of SLDs; works for mixed states."""
    n = len(slds)
    h = np.empty((n, n))
    for mu in range(n):
        for nu in range(n):
            h[mu, nu] = np.trace(rho @ (slds[mu] @ slds[nu] + slds[nu] @ slds[mu])).real / 2
    residual = np.trace(rho @ commutator(slds[0], slds[1])).imag / 2 if n > 1 else 0.0
    purity = np.trace(rho @ rho).real
    if n == 1:
        h = np.pad(h, ((0, 1), (0, 1)))
    return QfiMatrix(h, "numeric", float(residual), pure_state_model=bool(abs(purity - 1) < 1e-10))


def crb(qfi: QfiMatrix | np.ndarray, weight: np.ndarray | None = None, m: int = 1) -> CrbResult:
    """tr[G H^-1]/M; for G = identity also Delta Phi = sqrt(tr[H^-1])."""
    if not isinstance(qfi, QfiMatrix):
        qfi = QfiMatrix(np.asarray(qfi, dtype=float), "numeric", 0.0)
    if int(m) != m or m < 1:
        raise ValueError("number of measurements must be a positive integer")
    h = qfi.h
    evals, evecs = np.linalg.eigh(h)
    if evals[0] <= SINGULAR_TOL:
        raise SingularQfiError(h, evecs[:, 0], float(evals[0]))
    identity = weight is None
    g = np.eye(2) if identity else np.asarray(weight, dtype=float)
    if g.shape != (2, 2) or np.max(np.abs(g - g.T)) > 1e-12 or np.linalg.eigvalsh(g)[0] <= 0:
        raise ValueError("weight matrix must be 2x2 symmetric positive definite")
    hinv = np.linalg.inv(h)
    value = float(np.trace(g @ hinv)) / m
    total = math.sqrt(float(np.trace(hinv))) if identity or np.allclose(g, np.eye(2)) else None
    return CrbResult(g, value, int(m), total, qfi)


def trace_inverse(h: np.ndarray) -> float:
    return float(np.trace(np.linalg.inv(h)))
