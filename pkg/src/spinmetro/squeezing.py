"""Spin-squeezing diagnostics (Wineland-type) and the two-mode criterion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DivergentSensitivityError, UndefinedMsdError
from .spin_algebra import SpinQuantum, batch_expectation, make_spin_ops, spin_ops_on
from .states import StateVector

MARGIN = 1e-12
ZERO_MEAN_TOL = 1e-10


@dataclass(frozen=True)
class SqueezingReport:
    msd: tuple[float, float, float]
    delta_phi: float
    sql: float
    squeezed: bool
    ku_parameter: float  # min orthogonal variance / (j/2); informational only

    def to_json(self) -> dict:
        return {
            "msd": list(self.msd),
            "delta_phi": self.delta_phi,
            "sql": self.sql,
            "squeezed": self.squeezed,
            "ku_parameter": self.ku_parameter,
        }


@dataclass(frozen=True)
class TwoModeReport:
    var_x_minus: float
    var_y_plus: float
    z_plus_mean: float
    two_mode_squeezed: bool

    @property
    def margin(self) -> float:
        """|<J_z+>| - Var(J_x-) - Var(J_y+); positive means squeezed."""
        return abs(self.z_plus_mean) - self.var_x_minus - self.var_y_plus

    def to_json(self) -> dict:
        return {
            "var_x_minus": self.var_x_minus,
            "var_y_plus": self.var_y_plus,
            "z_plus_mean": self.z_plus_mean,
            "margin": self.margin,
            "two_mode_squeezed": self.two_mode_squeezed,
        }


def _moments(state: StateVector):
    ops = spin_ops_on(state.space, state.j)
    psi = state.amplitudes
    vecs = [o @ psi for o in ops]
    means = np.array([np.vdot(psi, v).real for v in vecs])
    second = np.array([[np.vdot(a, b).real for b in vecs] for a in vecs])
    cov = second - np.outer(means, means)
    return means, cov


def mean_spin_vector(state: StateVector) -> np.ndarray:
    return _moments(state)[0]


def mean_spin_direction(state: StateVector) -> np.ndarray:
    mean = mean_spin_vector(state)
    norm = np.linalg.norm(mean)
    if norm <= ZERO_MEAN_TOL:
        raise UndefinedMsdError(f"mean spin vector vanishes (|<J>| = {norm:.3e})")
    return mean / norm


def phase_sensitivity_spin(state: StateVector, rotation_axis: str = "x") -> float:
    """Delta J_y / |<J_z>| for rotations about x, Delta J_x / |<J_z>| about y."""
    if rotation_axis not in ("x", "y"):
        raise ValueError("rotation axis must be 'x' or 'y'")
    means, cov = _moments(state)
    if abs(means[2]) <= ZERO_MEAN_TOL:
        raise DivergentSensitivityError(
            f"<J_z> = {means[2]:.3e}: the spin-measurement estimator of phi_{rotation_axis} diverges"
        )
    k = 1 if rotation_axis == "x" else 0
    return math.sqrt(max(cov[k, k], 0.0)) / abs(means[2])


def sql_single(j: SpinQuantum) -> float:
    return 1 / math.sqrt(2 * j.j)


def kitagawa_ueda(state: StateVector) -> float:
    """Minimal variance orthogonal to the mean-spin direction, over j/2."""
    means, cov = _moments(state)
    n = means / np.linalg.norm(means)
    trial = np.eye(3)[np.argmin(np.abs(n))]
    e1 = np.cross(n, trial)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    basis = np.stack([e1, e2])
    perp = basis @ cov @ basis.T
    return float(np.linalg.eigvalsh(perp)[0] / (state.j.j / 2))


def is_spin_squeezed(state: StateVector, rotation_axis: str = "x") -> SqueezingReport:
    """Squeezed iff the spin-measurement sensitivity is strictly below 1/sqrt(2j)."""
    dphi = phase_sensitivity_spin(state, rotation_axis)
    sql = sql_single(state.j)
    msd = tuple(float(x) for x in mean_spin_direction(state))
    return SqueezingReport(msd, dphi, sql, bool(dphi < sql - MARGIN), kitagawa_ueda(state))


def two_mode_ops(j1, j2=None) -> dict[str, np.ndarray]:
    """J_{a+-} = J_{a,1} (x) I +- I (x) J_{a,2} for a in x, y, z."""
    j1 = SpinQuantum.parse(j1)
    j2 = j1 if j2 is None else SpinQuantum.parse(j2)
    o1, o2 = make_spin_ops(j1), make_spin_ops(j2)
    i1, i2 = np.eye(j1.dim), np.eye(j2.dim)
    out = {}
    for axis in "xyz":
        a = np.kron(o1.along(axis), i2)
        b = np.kron(i1, o2.along(axis))
        out[f"{axis}+"] = a + b
        out[f"{axis}-"] = a - b
    return out


def _two_spin_vector(state, j1, j2) -> tuple[np.ndarray, SpinQuantum, SpinQuantum]:
    if isinstance(state, StateVector):
        j1 = state.j if j1 is None else SpinQuantum.parse(j1)
        vec = state.amplitudes
    else:
        vec = np.asarray(state, dtype=complex).ravel()
        if j1 is None:
            d = int(round(math.sqrt(vec.size)))
            if d * d != vec.size or d < 2:
                raise DimensionError(f"length {vec.size} is not a (2j+1)^2 two-spin dimension")
            j1 = SpinQuantum(d - 1)
        j1 = SpinQuantum.parse(j1)
    if j2 is None:
        if vec.size % j1.dim:
            raise DimensionError(f"length {vec.size} is not a multiple of 2j1+1={j1.dim}")
        d2 = vec.size // j1.dim
        if d2 < 2:
            raise DimensionError("second factor must be a spin (dimension >= 2)")
        j2 = SpinQuantum(d2 - 1)
    j2 = SpinQuantum.parse(j2)
    if vec.size != j1.dim * j2.dim:
        raise DimensionError(f"length {vec.size} != (2j1+1)(2j2+1) = {j1.dim * j2.dim}")
    return vec, j1, j2


def two_mode_margins(states: np.ndarray, ops: dict[str, np.ndarray]) -> np.ndarray:
    """Vectorized |<J_z+>| - Var(J_x-) - Var(J_y+) over the rows of ``states``."""
    def var(op):
        m = batch_expectation(states, op)
        return batch_expectation(states, op @ op) - m ** 2
    return np.abs(batch_expectation(states, ops["z+"])) - var(ops["x-"]) - var(ops["y+"])


def is_two_mode_squeezed(state, j1=None, j2=None) -> TwoModeReport:
    """Strict two-mode criterion: Var(J_x-) + Var(J_y+) < |<J_z+>| - 1e-12.

    ``state`` is a StateVector whose ancilla is the second spin (as built by
    ``states.product``) or a bare vector of length (2j1+1)(2j2+1).
    """
    vec, j1, j2 = _two_spin_vector(state, j1, j2)
    if abs(np.linalg.norm(vec) - 1) > 1e-10:
        raise ValueError("two-spin state must be normalized")
    ops = two_mode_ops(j1, j2)

    def var(op):
        v = op @ vec
        return float(np.vdot(v, v).real - np.vdot(vec, v).real ** 2)

    vxm, vyp = var(ops["x-"]), var(ops["y+"])
    zp = float(np.vdot(vec, ops["z+"] @ vec).real)
    return TwoModeReport(vxm, vyp, zp, bool(vxm + vyp < abs(zp) - MARGIN))
