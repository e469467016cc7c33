"""Simulated estimation experiments with projective measurements.

Every repetition r draws its x- and y-ensemble outcomes from independent
Philox streams keyed by (seed, r, stream), so results are bit-identical for
any thread count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .errors import DivergentSensitivityError
from .qfi import PhasePair, evolve, qfi_matrix_analytic
from .spin_algebra import eigenbasis, embed, spin_ops_on
from .squeezing import ZERO_MEAN_TOL
from .states import StateSpec, StateVector, parse_spec

LINEAR_REGIME = 0.1
STREAM_X, STREAM_Y = 0, 1


def stream_rng(seed: int, repetition: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(repetition), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


class SpectralDistribution:
    """Outcome distribution of a projective measurement of a Hermitian operator."""

    def __init__(self, state, op: np.ndarray, decimals: int = 10):
        vec = np.asarray(getattr(state, "amplitudes", state))
        space = getattr(state, "space", None)
        if space is not None and op.shape[0] != vec.size:
            op = embed(op, space)
        evals, evecs = np.linalg.eigh(op)
        probs = np.abs(evecs.conj().T @ vec) ** 2
        # merge degenerate eigenvalues into one outcome
        keys = np.round(evals, decimals)
        values, inverse = np.unique(keys, return_inverse=True)
        merged = np.bincount(inverse, weights=probs, minlength=values.size)
        keep = merged > 0
        self.values = values[keep]
        self.probs = merged[keep] / merged[keep].sum()

    @property
    def mean(self) -> float:
        return float(self.values @ self.probs)

    @property
    def variance(self) -> float:
        return float((self.values ** 2) @ self.probs - self.mean ** 2)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.values, size=int(n), p=self.probs)


def sample_projective(state, op: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. eigenvalue outcomes of measuring ``op`` on ``state``."""
    if n < 1:
        raise ValueError("need at least one shot")
    return SpectralDistribution(state, op).sample(n, rng)


@dataclass(frozen=True)
class ExperimentConfig:
    probe: StateSpec
    phi_true: PhasePair
    m_total: int
    seed: int = 0
    split: float = 0.5
    repetitions: int = 400
    probe_y: StateSpec | None = None
    threads: int | None = None

    def __post_init__(self):
        if isinstance(self.probe, str):
            object.__setattr__(self, "probe", parse_spec(self.probe))
        if isinstance(self.probe_y, str):
            object.__setattr__(self, "probe_y", parse_spec(self.probe_y))
        if self.m_total < 2:
            raise ValueError("m_total must be at least 2")
        if not 0 < self.split < 1:
            raise ValueError("split must lie strictly between 0 and 1")
        if self.split == 0.5 and self.m_total % 2:
            raise ValueError("m_total must be even for an equal split")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.repetitions < 2:
            raise ValueError("need at least two repetitions to estimate a variance")
        if self.phi_true.magnitude > LINEAR_REGIME:
            warnings.warn(
                f"|phi| = {self.phi_true.magnitude:.3g} exceeds {LINEAR_REGIME}; linearized estimators may be biased",
                RuntimeWarning, stacklevel=3,
            )

    @property
    def m_x(self) -> int:
        return int(round(self.split * self.m_total))

    @property
    def m_y(self) -> int:
        return self.m_total - self.m_x

    @property
    def j(self):
        return self.probe.params.get("j") or self.probe.build().j

    def to_json(self) -> dict:
        return {
            "probe": self.probe.text or self.probe.kind,
            "probe_y": None if self.probe_y is None else (self.probe_y.text or self.probe_y.kind),
            "phi_true": [self.phi_true.phi_x, self.phi_true.phi_y],
            "m_total": self.m_total,
            "seed": self.seed,
            "split": self.split,
            "repetitions": self.repetitions,
        }


@dataclass(frozen=True)
class ExperimentResult:
    strategy: str
    estimates: tuple[float, float]
    empirical_variances: tuple[float, float]
    crb_prediction: tuple[float, float]
    propagation_prediction: tuple[float, float]
    repetitions: int
    m_x: int
    m_y: int
    seed: int
    samples: np.ndarray = field(repr=False)  # shape (repetitions, 2)

    @property
    def standard_errors(self) -> tuple[float, float]:
        return tuple(math.sqrt(v / self.repetitions) for v in self.empirical_variances)

    @property
    def scaled_variances(self) -> tuple[float, float]:
        """Var(phi_hat) * M_alpha, comparable to 1/H_alpha,alpha."""
        return self.empirical_variances[0] * self.m_x, self.empirical_variances[1] * self.m_y

    @property
    def total_variance(self) -> float:
        return sum(self.empirical_variances)

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "estimates": list(self.estimates),
            "empirical_variances": list(self.empirical_variances),
            "standard_errors": list(self.standard_errors),
            "scaled_variances": list(self.scaled_variances),
            "crb_prediction": list(self.crb_prediction),
            "propagation_prediction": list(self.propagation_prediction),
            "repetitions": self.repetitions,
            "m_x": self.m_x,
            "m_y": self.m_y,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class _Channel:
    """One ensemble: evolved probe, measured observable, linear estimator."""

    dist: SpectralDistribution
    offset: float
    slope: float

    def estimate(self, n: int, rng: np.random.Generator) -> float:
        return (float(self.dist.sample(n, rng).mean()) - self.offset) / self.slope


def _run(config: ExperimentConfig, strategy: str, cx: _Channel, cy: _Channel,
         crb_pred, prop_pred) -> ExperimentResult:
    def one(rep: int) -> tuple[float, float]:
        return (cx.estimate(config.m_x, stream_rng(config.seed, rep, STREAM_X)),
                cy.estimate(config.m_y, stream_rng(config.seed, rep, STREAM_Y)))

    samples = np.array(parallel_map(one, range(config.repetitions), config.threads))
    return ExperimentResult(
        strategy=strategy,
        estimates=tuple(float(x) for x in samples.mean(axis=0)),
        empirical_variances=tuple(float(x) for x in samples.var(axis=0, ddof=1)),
        crb_prediction=crb_pred,
        propagation_prediction=prop_pred,
        repetitions=config.repetitions,
        m_x=config.m_x,
        m_y=config.m_y,
        seed=config.seed,
        samples=samples,
    )


def _partner_spec(config: ExperimentConfig) -> StateSpec:
    if config.probe_y is not None:
        return config.probe_y
    if config.probe.kind in ("squeezed", "seq"):
        return config.probe.with_axis("y")
    return config.probe


def _crb_pair(px: StateVector, py: StateVector, config: ExperimentConfig) -> tuple[float, float]:
    hx = qfi_matrix_analytic(px).h[0, 0]
    hy = qfi_matrix_analytic(py).h[1, 1]
    return 1 / (config.m_x * hx), 1 / (config.m_y * hy)


def estimate_sequential_spin(config: ExperimentConfig) -> ExperimentResult:
    """Measure J_y on M_x copies (for phi_x) and J_x on M_y copies (for phi_y).

    phi_x_hat = (mean(J_y) - <J_y>_0) / <J_z>_0
    phi_y_hat = -(mean(J_x) - <J_x>_0) / <J_z>_0
    """
    px = config.probe.build()
    py = _partner_spec(config).build()
    channels, props = [], []
    for probe, meas, sign, m in ((px, "y", 1.0, config.m_x), (py, "x", -1.0, config.m_y)):
        ops = spin_ops_on(probe.space, probe.j)
        psi = probe.amplitudes
        jz0 = np.vdot(psi, ops.jz @ psi).real
        if abs(jz0) <= ZERO_MEAN_TOL:
            raise DivergentSensitivityError(
                f"probe {probe.label!r} has <J_z> = {jz0:.3e}; spin-measurement estimator diverges"
            )
        op = ops.along(meas)
        base = SpectralDistribution(probe, op)
        evolved = evolve(probe, config.phi_true)
        channels.append(_Channel(SpectralDistribution(evolved, op), base.mean, sign * jz0))
        props.append(base.variance / (jz0 ** 2 * m))
    return _run(config, "sequential_spin", channels[0], channels[1], _crb_pair(px, py, config), tuple(props))


def parity_observable(j, axis: str, xi: float = 0.0) -> np.ndarray:
    """e^{i theta}|j,j><j,-j| + h.c. in the ``axis`` eigenbasis, theta = pi/2 - xi.

    On (|j,j> + e^{i xi}|j,-j>)/sqrt 2 rotated by phi about ``axis`` its mean is
    sin(2 j phi), linear at phi = 0 with outcomes +-1.
    """
    basis = eigenbasis(j, axis)
    top, bottom = basis[0], basis[-1]
    theta = np.pi / 2 - xi
    op = np.exp(1j * theta) * np.outer(top, bottom.conj())
    return op + op.conj().T


def parity_mean(j, phi: float) -> float:
    """Analytic <parity> after a rotation by ``phi`` about the probe axis (any xi)."""
    return math.sin(2 * j.j * phi)


def estimate_sequential_ghz(config: ExperimentConfig) -> ExperimentResult:
    """GHZ-like probes along x and y, each read out with the parity observable."""
    if config.probe.kind != "seq":
        raise ValueError(f"GHZ estimator needs a 'seq' probe, got {config.probe.kind!r}")
    px = config.probe.with_axis("x").build()
    py = _partner_spec(config).build()
    j = px.j
    xi = float(config.probe.params.get("xi", 0.0))
    channels = []
    for probe, axis in ((px, "x"), (py, "y")):
        op = parity_observable(j, axis, xi)
        evolved = evolve(probe, config.phi_true)
        channels.append(_Channel(SpectralDistribution(evolved, op), 0.0, 2 * j.j))
    heis = 1 / (4 * j.j ** 2)
    prop = (heis / config.m_x, heis / config.m_y)
    return _run(config, "sequential_ghz", channels[0], channels[1], _crb_pair(px, py, config), prop)
