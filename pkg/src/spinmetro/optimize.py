"""Numerical probe-state search used to corroborate the closed-form optima.

The search runs projected gradient descent on the unit sphere of amplitudes:
central-difference gradients on the real and imaginary parts, a
Barzilai-Borwein trial step with step-halving backtracking, and
renormalization after every step. Only steps that lower the objective are
accepted.

For ``trace_inverse_qfi`` the search is restricted to probes that satisfy the
achievability condition <J_z>_0 = 0, enforced with an augmented Lagrangian.
Without that restriction a bare |j,1/2> already reaches the semi-odd bound
for any j, which is not attainable by any measurement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .spin_algebra import CompositeSpace, SpinQuantum, batch_expectation, spin_ops_on
from .squeezing import two_mode_margins, two_mode_ops
from .states import StateVector

OBJECTIVES = ("trace_inverse_qfi", "variance_x", "two_mode_margin")
SINGULAR_PENALTY = 1e6
GRAD_STEP = 1e-6
CONSTRAINT_TOL = 1e-9
LAGRANGE_WEIGHT = 20.0
MAX_OUTER = 12
FEASIBLE_TOL = 1e-8


@dataclass(frozen=True)
class OptimizeConfig:
    j: SpinQuantum
    ancilla_dim: int = 0
    objective: str = "trace_inverse_qfi"
    restarts: int = 32
    max_iters: int = 2000
    seed: int = 0
    tol: float = 1e-10
    product_only: bool = False  # two_mode_margin: restrict to product states
    threads: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "j", SpinQuantum.parse(self.j))
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.ancilla_dim not in (0, 2):
            raise ValueError("ancilla_dim must be 0 or 2")
        if self.objective != "trace_inverse_qfi" and self.ancilla_dim:
            raise ValueError(f"{self.objective} runs without an ancilla")
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    def to_json(self) -> dict:
        return {
            "two_j": self.j.two_j,
            "ancilla_dim": self.ancilla_dim,
            "objective": self.objective,
            "restarts": self.restarts,
            "max_iters": self.max_iters,
            "seed": self.seed,
            "tol": self.tol,
            "product_only": self.product_only,
        }


@dataclass(frozen=True)
class OptimizeResult:
    """``best_value`` is in natural units: tr[H^-1], max variance, or max margin."""

    best_value: float
    best_state: StateVector
    objective_trace: tuple[float, ...]
    converged: bool
    constraint_residual: float = 0.0
    descent_history: tuple[float, ...] = field(default=(), repr=False)

    def to_json(self) -> dict:
        return {
            "best_value": self.best_value,
            "objective_trace": list(self.objective_trace),
            "converged": self.converged,
            "constraint_residual": self.constraint_residual,
            "best_state": self.best_state.to_json(),
        }


class _Problem:
    """Batched objective over rows of complex parameter vectors."""

    def __init__(self, config: OptimizeConfig):
        self.config = config
        j = config.j
        if config.objective == "two_mode_margin":
            self.ops = two_mode_ops(j, j)
            self.blocks = [j.dim, j.dim] if config.product_only else [j.dim * j.dim]
        else:
            space = CompositeSpace(j.dim, config.ancilla_dim)
            self.ops = spin_ops_on(space, j)
            self.blocks = [space.total_dim]
        self.n = sum(self.blocks)
        self.constrained = config.objective == "trace_inverse_qfi"

    def normalize(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        start = 0
        for b in self.blocks:
            seg = x[..., start:start + b]
            out[..., start:start + b] = seg / np.linalg.norm(seg, axis=-1, keepdims=True)
            start += b
        return out

    def states(self, x: np.ndarray) -> np.ndarray:
        x = self.normalize(np.atleast_2d(x))
        if len(self.blocks) == 1:
            return x
        a, b = x[:, :self.blocks[0]], x[:, self.blocks[0]:]
        return np.einsum("ki,kj->kij", a, b).reshape(x.shape[0], -1)

    def natural(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Objective in natural units and the constraint value <J_z>, row-wise."""
        s = self.states(x)
        obj = self.config.objective
        if obj == "two_mode_margin":
            return two_mode_margins(s, self.ops), np.zeros(len(s))
        jx, jy, jz = self.ops
        vx, vy = s @ jx.T, s @ jy.T
        mx = np.einsum("ki,ki->k", s.conj(), vx).real
        a = np.einsum("ki,ki->k", vx.conj(), vx).real - mx ** 2
        if obj == "variance_x":
            return a, np.zeros(len(s))
        my = np.einsum("ki,ki->k", s.conj(), vy).real
        c = np.einsum("ki,ki->k", vy.conj(), vy).real - my ** 2
        b = np.einsum("ki,ki->k", vx.conj(), vy).real - mx * my
        det = a * c - b * b
        with np.errstate(divide="ignore", invalid="ignore"):
            tr = np.where(det > 1e-12, (a + c) / (4 * det), SINGULAR_PENALTY)
        return tr, batch_expectation(s, jz)

    def penalized(self, x: np.ndarray, lam: float, weight: float) -> np.ndarray:
        val, con = self.natural(x)
        if self.config.objective in ("variance_x", "two_mode_margin"):
            return -val
        return val + lam * con + 0.5 * weight * con ** 2


def _to_real(x: np.ndarray) -> np.ndarray:
    return np.concatenate([x.real, x.imag])


def _to_complex(r: np.ndarray) -> np.ndarray:
    n = r.size // 2
    return r[:n] + 1j * r[n:]


def _descend(problem: _Problem, x0: np.ndarray, lam: float, weight: float,
             max_iters: int, tol: float) -> tuple[np.ndarray, list[float], bool, int]:
    """Monotone projected gradient descent; returns (x, accepted values, converged, iterations)."""
    n2 = 2 * problem.n
    eye = np.eye(n2) * GRAD_STEP

    def f(r):
        return float(problem.penalized(_to_complex(r)[None, :], lam, weight)[0])

    def grad(r):
        pts = np.concatenate([r + eye, r - eye])
        cx = pts[:, :problem.n] + 1j * pts[:, problem.n:]
        vals = problem.penalized(cx, lam, weight)
        g = (vals[:n2] - vals[n2:]) / (2 * GRAD_STEP)
        return _project(problem, r, g)

    r = _to_real(problem.normalize(x0[None, :])[0])
    fr, g = f(r), grad(r)
    history = [fr]
    alpha, quiet = 1e-2, 0
    for it in range(1, max_iters + 1):
        gnorm = np.linalg.norm(g)
        if gnorm < 1e-12:
            return _to_complex(r), history, True, it
        step = alpha
        while True:
            r_new = _to_real(problem.normalize(_to_complex(r - step * g)[None, :])[0])
            f_new = f(r_new)
            if f_new < fr:
                break
            step *= 0.5
            if step < 1e-16:
                return _to_complex(r), history, True, it
        g_new = grad(r_new)
        s, y = r_new - r, g_new - g
        sy = float(s @ y)
        alpha = float(s @ s) / sy if sy > 0 else 2 * step
        alpha = min(max(alpha, 1e-10), 1e3)
        decrease = fr - f_new
        r, fr, g = r_new, f_new, g_new
        history.append(fr)
        quiet = quiet + 1 if decrease < tol else 0
        if quiet >= 5:
            return _to_complex(r), history, True, it
    return _to_complex(r), history, False, max_iters


def _project(problem: _Problem, r: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Remove the radial component of each block (real embedding of C^n)."""
    n = problem.n
    out = g.copy()
    start = 0
    for b in problem.blocks:
        idx = np.r_[start:start + b, n + start:n + start + b]
        rb = r[idx]
        out[idx] -= (out[idx] @ rb) / (rb @ rb) * rb
        start += b
    return out


def _haar_start(problem: _Problem, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=problem.n) + 1j * rng.normal(size=problem.n)
    return problem.normalize(z[None, :])[0]


def _restart(problem: _Problem, restart: int):
    cfg = problem.config
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(restart,))))
    x = _haar_start(problem, rng)
    lam, weight = 0.0, (LAGRANGE_WEIGHT if problem.constrained else 0.0)
    history: list[float] = []
    converged = False
    budget = cfg.max_iters
    for _ in range(MAX_OUTER if problem.constrained else 1):
        x, hist, converged, used = _descend(problem, x, lam, weight, budget, cfg.tol)
        history.extend(hist)
        budget = max(budget - used, 1)
        if not problem.constrained:
            break
        con = float(problem.natural(x[None, :])[1][0])
        if abs(con) < CONSTRAINT_TOL:
            break
        lam += weight * con
    val, con = problem.natural(x[None, :])
    return x, float(val[0]), float(con[0]), converged, history


def _optimize(config: OptimizeConfig) -> OptimizeResult:
    problem = _Problem(config)
    runs = parallel_map(lambda k: _restart(problem, k), range(config.restarts), config.threads)
    maximize = config.objective != "trace_inverse_qfi"

    def score(run):
        # feasible restarts first, then the best objective among them
        _, val, con, _, _ = run
        infeasible = problem.constrained and abs(con) > FEASIBLE_TOL
        return (infeasible, abs(con) if infeasible else 0.0, -val if maximize else val)

    best = min(runs, key=score)
    x, val, con, _, hist = best
    vec = problem.states(x)[0]
    if config.objective == "two_mode_margin":
        state = StateVector(config.j, vec, ancilla_dim=config.j.dim, label="optimized two-spin state")
    else:
        state = StateVector(config.j, vec, ancilla_dim=config.ancilla_dim, label=f"optimized {config.objective}")
    return OptimizeResult(
        best_value=val,
        best_state=state,
        objective_trace=tuple(r[1] for r in runs),
        converged=any(r[3] for r in runs),
        constraint_residual=con,
        descent_history=tuple(hist),
    )


def minimize_trace_inverse(config: OptimizeConfig) -> OptimizeResult:
    """Minimize tr[(H0)^-1] over achievable probes (<J_z>_0 = 0)."""
    if config.objective != "trace_inverse_qfi":
        raise ValueError("config.objective must be 'trace_inverse_qfi'")
    return _optimize(config)


def maximize_variance(config: OptimizeConfig) -> OptimizeResult:
    """Maximize Var(J_x) over system states (the single-phase QFI is 4 Var(J_x))."""
    if config.objective != "variance_x":
        raise ValueError("config.objective must be 'variance_x'")
    return _optimize(config)


def maximize_two_mode_margin(config: OptimizeConfig) -> OptimizeResult:
    """Maximize |<J_z+>| - Var(J_x-) - Var(J_y+) on the two-spin space j (x) j."""
    if config.objective != "two_mode_margin":
        raise ValueError("config.objective must be 'two_mode_margin'")
    return _optimize(config)


def run(config: OptimizeConfig) -> OptimizeResult:
    return {
        "trace_inverse_qfi": minimize_trace_inverse,
        "variance_x": maximize_variance,
        "two_mode_margin": maximize_two_mode_margin,
    }[config.objective](config)
