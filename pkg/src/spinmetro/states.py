"""Probe states: constructors, purification and the text state-spec grammar.

Grammar (see README for the full description)::

    dicke:j=1,m=0,axis=z
    css:j=2,axis=z            css:z  (j taken from context)
    css:j=1,theta=pi/2,phi=0
    joint:j=3/2,phase=0
    seq:j=2,axis=x,xi=0       (alias: ghz)
    squeezed:j=2,axis=x
    raw:[1,0,0,1]/j=3/2       raw:[0.5+0.5i,0.5-0.5i]/j=1/2,ancilla=0
    product:css:j=1/2,axis=z & css:j=1/2,axis=x
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .errors import DimensionError, StateSpecError
from .spin_algebra import (
    CompositeSpace,
    SpinQuantum,
    _fix_phase,
    eigenbasis,
    hermitian_expm,
    make_spin_ops,
)

NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm amplitudes over spin-j (x) optional ancilla (system index major)."""

    j: SpinQuantum
    amplitudes: np.ndarray
    ancilla_dim: int = 0
    label: str = ""

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        space = CompositeSpace(self.j.dim, self.ancilla_dim)
        if amps.size != space.total_dim:
            raise DimensionError(f"{amps.size} amplitudes do not fit space {space.system_dim}x{max(space.ancilla_dim, 1)}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace(self.j.dim, self.ancilla_dim)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def with_amplitudes(self, amps: np.ndarray, label: str | None = None) -> "StateVector":
        return StateVector(self.j, amps, self.ancilla_dim, self.label if label is None else label)

    def to_json(self) -> dict:
        return {
            "two_j": self.j.two_j,
            "ancilla_dim": self.ancilla_dim,
            "label": self.label,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }


def normalized(j: SpinQuantum, amps, ancilla_dim: int = 0, label: str = "") -> StateVector:
    amps = np.asarray(amps, dtype=complex).ravel()
    norm = np.linalg.norm(amps)
    if not np.isfinite(norm) or norm == 0:
        raise ValueError("cannot normalize a zero or non-finite amplitude vector")
    return StateVector(j, amps / norm, ancilla_dim, label)


def _as_spin(j) -> SpinQuantum:
    return SpinQuantum.parse(j)


def dicke(j, m, axis: str = "z") -> StateVector:
    """Eigenstate |j,m>_axis with the package phase convention."""
    j = _as_spin(j)
    idx = j.index_of(m)
    return StateVector(j, eigenbasis(j, axis)[idx], label=f"dicke(j={j},m={Fraction(m)},axis={axis})")


_AXIS_VECTORS = {
    "x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0),
    "-x": (-1.0, 0.0, 0.0), "-y": (0.0, -1.0, 0.0), "-z": (0.0, 0.0, -1.0),
}


def direction_vector(direction) -> np.ndarray:
    if isinstance(direction, str):
        try:
            return np.array(_AXIS_VECTORS[direction.strip().lower()])
        except KeyError:
            raise ValueError(f"unknown axis {direction!r}") from None
    n = np.asarray(direction, dtype=float).ravel()
    if n.size != 3:
        raise ValueError("direction must be a 3-vector")
    norm = np.linalg.norm(n)
    if norm < 1e-12:
        raise ValueError("direction vector must be nonzero")
    return n / norm


def css(j, direction) -> StateVector:
    """Coherent spin state |j,j>_n: the top eigenvector of n.J."""
    j = _as_spin(j)
    n = direction_vector(direction)
    ops = make_spin_ops(j)
    _, evecs = np.linalg.eigh(ops.dot(n))
    vec = _fix_phase(evecs[:, -1])
    return StateVector(j, vec, label=f"css(j={j},n=({n[0]:.6g},{n[1]:.6g},{n[2]:.6g}))")


def joint_optimal(j, relative_phase: float = 0.0) -> StateVector:
    """Optimal joint-estimation probe.

    Integer j: |j,0>. Semi-odd j: (|j,1/2>|0>_A + e^{i phase}|j,-1/2>|1>_A)/sqrt 2
    on spin (x) qubit.
    """
    j = _as_spin(j)
    if j.is_integer:
        state = dicke(j, 0)
        return StateVector(j, state.amplitudes, label=f"joint(j={j})")
    amps = np.zeros((j.dim, 2), dtype=complex)
    amps[j.index_of(Fraction(1, 2)), 0] = 1 / np.sqrt(2)
    amps[j.index_of(Fraction(-1, 2)), 1] = np.exp(1j * relative_phase) / np.sqrt(2)
    return StateVector(j, amps.ravel(), ancilla_dim=2, label=f"joint(j={j},phase={relative_phase:g})")


def sequential_optimal(j, axis: str = "x", xi: float = 0.0) -> StateVector:
    """(|j,j>_axis + e^{i xi}|j,-j>_axis)/sqrt 2, the single-phase Heisenberg-limited probe."""
    j = _as_spin(j)
    if axis not in ("x", "y"):
        raise ValueError("sequential probe axis must be 'x' or 'y'")
    basis = eigenbasis(j, axis)
    vec = (basis[0] + np.exp(1j * xi) * basis[-1]) / np.sqrt(2)
    return StateVector(j, vec, label=f"seq(j={j},axis={axis},xi={xi:g})")


def constructive_squeezed(j, rotation_axis: str = "x") -> StateVector:
    """Spin-squeezed probe for estimating the rotation about ``rotation_axis``.

    For rotation about x the state lives in the J_y eigenbasis::

        integer j:   (|j,-1>_y + sqrt2 |j,0>_y + |j,1>_y) / 2
        semi-odd j:  (|j,-1/2>_y + |j,1/2>_y) / sqrt 2

    The rotation-about-y partner is exp(-i pi/2 J_z) applied to it, which swaps
    the roles of J_x and J_y while keeping <J_z>.
    """
    j = _as_spin(j)
    if rotation_axis not in ("x", "y"):
        raise ValueError("rotation axis must be 'x' or 'y'")
    basis = eigenbasis(j, "y")
    if j.is_integer:
        if j.two_j < 2:
            raise ValueError("integer branch needs j >= 1")
        vec = 0.5 * (basis[j.index_of(-1)] + np.sqrt(2) * basis[j.index_of(0)] + basis[j.index_of(1)])
    else:
        half = Fraction(1, 2)
        vec = (basis[j.index_of(-half)] + basis[j.index_of(half)]) / np.sqrt(2)
    if rotation_axis == "y":
        vec = hermitian_expm(make_spin_ops(j).jz, scale=-1j * np.pi / 2) @ vec
    return StateVector(j, vec, label=f"squeezed(j={j},axis={rotation_axis})")


def product(*states: StateVector) -> StateVector:
    """Tensor product; the first factor is the system, the rest form the ancilla."""
    if len(states) < 2:
        raise ValueError("product needs at least two factors")
    amps = states[0].amplitudes
    anc = 1
    for s in states[1:]:
        amps = np.kron(amps, s.amplitudes)
        anc *= s.dim
    for s in states:
        if s.ancilla_dim > 1:
            raise ValueError("product factors must not carry their own ancilla")
    return normalized(states[0].j, amps, ancilla_dim=anc, label=" & ".join(s.label for s in states))


def random_state(j, rng: np.random.Generator, ancilla_dim: int = 0) -> StateVector:
    """Haar-random pure state (normalized complex Gaussian)."""
    j = _as_spin(j)
    n = CompositeSpace(j.dim, ancilla_dim).total_dim
    return normalized(j, rng.normal(size=n) + 1j * rng.normal(size=n), ancilla_dim, label="random")


def reduced_density(state: StateVector) -> np.ndarray:
    """Partial trace over the ancilla."""
    m = state.amplitudes.reshape(state.j.dim, max(state.ancilla_dim, 1))
    return m @ m.conj().T


def check_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def purify(rho: np.ndarray, rank_tol: float = 1e-12) -> StateVector:
    """sum_k sqrt(p_k) |v_k> (x) |k>_A with ancilla dimension equal to rank(rho)."""
    rho = check_density_matrix(rho)
    dim = rho.shape[0]
    if dim < 2:
        raise ValueError("system dimension must be at least 2 (j >= 1/2)")
    p, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    keep = p > rank_tol
    p, v = p[keep][::-1], v[:, keep][:, ::-1]
    amps = v * np.sqrt(p)  # column k -> ancilla index k
    return normalized(SpinQuantum(dim - 1), amps, ancilla_dim=int(keep.sum()), label="purification")


# ---------------------------------------------------------------------------
# text specs

KINDS = {
    "dicke": "dicke",
    "css": "css",
    "joint": "joint",
    "seq": "seq",
    "ghz": "seq",
    "squeezed": "squeezed",
    "raw": "raw",
    "product": "product",
}

_ALLOWED_KEYS = {
    "dicke": {"j", "m", "axis"},
    "css": {"j", "axis", "theta", "phi"},
    "joint": {"j", "phase"},
    "seq": {"j", "axis", "xi"},
    "squeezed": {"j", "axis"},
    "raw": {"j", "ancilla"},
}

_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_REAL_RE = re.compile(rf"[+-]?{_NUM}")
_IMAG_RE = re.compile(rf"(?P<im>[+-]?(?:{_NUM})?)i")
_CPLX_RE = re.compile(rf"(?P<re>[+-]?{_NUM})(?P<im>[+-](?:{_NUM})?)i")
_PI_RE = re.compile(rf"(?P<sign>[+-]?)(?P<mul>{_NUM})?\*?pi(?:/(?P<div>{_NUM}))?")


def parse_amplitude(token: str) -> complex:
    """``re``, ``re+imi``, ``re-imi`` or ``imi``; raises ValueError otherwise."""
    t = token.strip().replace(" ", "")
    if _REAL_RE.fullmatch(t):
        return complex(float(t), 0.0)
    m = _CPLX_RE.fullmatch(t)
    if m:
        return complex(float(m["re"]), _imag_part(m["im"]))
    m = _IMAG_RE.fullmatch(t)
    if m:
        return complex(0.0, _imag_part(m["im"]))
    raise ValueError(f"bad amplitude {token!r}")


def _imag_part(s: str) -> float:
    if s in ("", "+"):
        return 1.0
    if s == "-":
        return -1.0
    return float(s)


def parse_number(token: str) -> float:
    """Decimal, fraction ("3/2") or multiple of pi ("pi/2", "-0.5pi")."""
    t = token.strip()
    m = _PI_RE.fullmatch(t)
    if m:
        val = np.pi * float(m["mul"] or 1.0) / float(m["div"] or 1.0)
        return -val if m["sign"] == "-" else val
    return float(Fraction(t))


@dataclass(frozen=True)
class StateSpec:
    """Parsed form of a state-spec string; ``build()`` produces the StateVector."""

    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    factors: tuple["StateSpec", ...] = ()
    text: str = ""

    def build(self) -> StateVector:
        p = self.params
        try:
            if self.kind == "dicke":
                return dicke(p["j"], p.get("m", Fraction(0)), p.get("axis", "z"))
            if self.kind == "css":
                if "theta" in p or "phi" in p:
                    th, ph = p.get("theta", 0.0), p.get("phi", 0.0)
                    n = (np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th))
                    return css(p["j"], n)
                return css(p["j"], p.get("axis", "z"))
            if self.kind == "joint":
                return joint_optimal(p["j"], p.get("phase", 0.0))
            if self.kind == "seq":
                return sequential_optimal(p["j"], p.get("axis", "x"), p.get("xi", 0.0))
            if self.kind == "squeezed":
                return constructive_squeezed(p["j"], p.get("axis", "x"))
            if self.kind == "raw":
                return normalized(p["j"], p["amplitudes"], p.get("ancilla", 0), label="raw")
            if self.kind == "product":
                return product(*(f.build() for f in self.factors))
        except KeyError as exc:
            raise StateSpecError(f"{self.kind} spec is missing required key {exc.args[0]!r}") from None
        except (ValueError, DimensionError) as exc:
            raise StateSpecError(f"invalid {self.kind} spec {self.text!r}: {exc}") from None
        raise StateSpecError(f"unknown state kind {self.kind!r}")

    def with_axis(self, axis: str) -> "StateSpec":
        params = dict(self.params, axis=axis)
        return StateSpec(self.kind, params, self.factors, self.text)


def _split_items(body: str, offset: int):
    pos = 0
    for piece in body.split(","):
        yield piece, offset + pos
        pos += len(piece) + 1


def _parse_value(kind: str, key: str, raw: str, pos: int, text: str):
    try:
        if key == "j":
            return SpinQuantum.parse(raw)
        if key == "m":
            return Fraction(raw.strip())
        if key == "ancilla":
            val = int(raw)
            if val < 0:
                raise ValueError
            return val
        if key == "axis":
            axis = raw.strip().lower()
            if axis not in _AXIS_VECTORS or (kind != "css" and axis.startswith("-")):
                raise ValueError
            return axis
        return parse_number(raw)
    except (ValueError, ZeroDivisionError):
        raise StateSpecError(f"bad value for {key!r}: {raw!r}", pos, text) from None


def _parse_kv(kind: str, body: str, offset: int, text: str, positional: str | None) -> dict[str, Any]:
    params: dict[str, Any] = {}
    if not body.strip():
        return params
    for piece, pos in _split_items(body, offset):
        if not piece.strip():
            raise StateSpecError("empty item", pos, text)
        if "=" in piece:
            key, _, raw = piece.partition("=")
            key = key.strip()
            vpos = pos + len(piece) - len(raw)
        elif positional and positional not in params:
            key, raw, vpos = positional, piece, pos
        else:
            raise StateSpecError(f"expected key=value, got {piece!r}", pos, text)
        if key not in _ALLOWED_KEYS[kind]:
            raise StateSpecError(f"unknown key {key!r} for kind {kind!r}", pos, text)
        if key in params:
            raise StateSpecError(f"duplicate key {key!r}", pos, text)
        params[key] = _parse_value(kind, key, raw, vpos, text)
    return params


def _parse_raw(body: str, offset: int, text: str, default_j) -> dict[str, Any]:
    if not body.startswith("["):
        raise StateSpecError("raw amplitudes must start with '['", offset, text)
    close = body.find("]")
    if close < 0:
        raise StateSpecError("unterminated amplitude list", offset + len(body), text)
    amps = []
    for piece, pos in _split_items(body[1:close], offset + 1):
        try:
            amps.append(parse_amplitude(piece))
        except ValueError:
            raise StateSpecError(f"bad amplitude {piece!r}", pos, text) from None
    rest = body[close + 1:]
    params: dict[str, Any] = {}
    if rest:
        if not rest.startswith("/"):
            raise StateSpecError("expected '/' after amplitude list", offset + close + 1, text)
        params = _parse_kv("raw", rest[1:], offset + close + 2, text, positional=None)
    anc = params.get("ancilla", 0)
    if "j" not in params:
        if default_j is not None and anc == 0:
            params["j"] = SpinQuantum.parse(default_j)
        elif anc == 0 and len(amps) >= 2:
            params["j"] = SpinQuantum(len(amps) - 1)
        else:
            raise StateSpecError("raw spec needs j", offset, text)
    expected = CompositeSpace(params["j"].dim, anc).total_dim
    if len(amps) != expected:
        raise StateSpecError(f"raw spec has {len(amps)} amplitudes, expected {expected}", offset, text)
    vec = np.array(amps, dtype=complex)
    norm = np.linalg.norm(vec)
    if not np.isfinite(norm) or norm == 0:
        raise StateSpecError("raw amplitudes are not normalizable", offset, text)
    params["amplitudes"] = vec
    return params


def parse_spec(text: str, default_j=None, _offset: int = 0, _full: str | None = None) -> StateSpec:
    """Parse a state-spec string into a StateSpec (see module docstring)."""
    full = text if _full is None else _full
    kind_raw, sep, body = text.partition(":")
    lead = len(kind_raw) - len(kind_raw.lstrip())
    kind = KINDS.get(kind_raw.strip().lower())
    if not sep:
        raise StateSpecError("expected 'kind:...'", _offset + len(text), full)
    if kind is None:
        raise StateSpecError(f"unknown state kind {kind_raw.strip()!r}", _offset + lead, full)
    offset = _offset + len(kind_raw) + 1
    if kind == "product":
        factors = []
        pos = offset
        for chunk in body.split("&"):
            stripped = chunk.lstrip()
            factors.append(parse_spec(stripped.rstrip(), default_j, pos + len(chunk) - len(stripped), full))
            pos += len(chunk) + 1
        if len(factors) < 2:
            raise StateSpecError("product needs at least two '&'-separated factors", offset, full)
        return StateSpec("product", {}, tuple(factors), text)
    if kind == "raw":
        params = _parse_raw(body.strip(), offset + len(body) - len(body.lstrip()), full, default_j)
    else:
        params = _parse_kv(kind, body, offset, full, positional="axis" if kind in ("css", "seq", "squeezed") else None)
    if "j" not in params:
        if default_j is None:
            raise StateSpecError(f"{kind} spec needs j (or supply a default j)", offset, full)
        params["j"] = SpinQuantum.parse(default_j)
    return StateSpec(kind, params, (), text)


def parse_state_spec(text: str, default_j=None) -> StateVector:
    """Parse and build a state in one step."""
    return parse_spec(text, default_j).build()
