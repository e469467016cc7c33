"""Acceptance criteria as plain functions, shared by ``spinmetro verify`` and the tests.

Each check returns an :class:`Outcome`. Reference values are computed inline
from the closed forms (not through :mod:`spinmetro.strategies`) so that the
checks stay independent of the code they judge.
"""

from __future__ import annotations

import contextlib
import csv
import io
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import montecarlo, optimize, squeezing
from .qfi import PhasePair, crb, first_order_correction, qfi_matrix_analytic, qfi_matrix_numeric
from .spin_algebra import SpinQuantum, make_spin_ops, spin_ops_on
from .states import (
    constructive_squeezed,
    css,
    dicke,
    joint_optimal,
    normalized,
    product,
    random_state,
    sequential_optimal,
)
from .strategies import combine_effective


@dataclass(frozen=True)
class Outcome:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number:2d} {self.title}: {self.detail}"

    def to_json(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "detail": self.detail, "seconds": self.seconds}


def spins(lo: str, hi: str) -> list[SpinQuantum]:
    a, b = SpinQuantum.parse(lo), SpinQuantum.parse(hi)
    return [SpinQuantum(t) for t in range(a.two_j, b.two_j + 1)]


def joint_closed(j: SpinQuantum) -> float:
    x = j.j * (j.j + 1)
    return 1 / math.sqrt(x if j.two_j % 2 == 0 else x - 0.25)


def spin_seq_closed(j: SpinQuantum) -> float:
    x = j.j * (j.j + 1)
    return 2 / math.sqrt(x if j.two_j % 2 == 0 else x + 0.25)


def constructor_states(j: SpinQuantum) -> list:
    out = [joint_optimal(j), sequential_optimal(j, "x"), sequential_optimal(j, "y", 0.7),
           css(j, "z"), css(j, "x"), css(j, (1.0, -0.5, 0.3))]
    out += [dicke(j, m, axis) for axis in "xyz" for m in j.m_values()]
    if j.two_j >= 2 or j.two_j % 2:
        out += [constructive_squeezed(j, "x"), constructive_squeezed(j, "y")]
    return out


# ---------------------------------------------------------------------------


def criterion_1():
    worst = 0.0
    for j in spins("1/2", "10"):
        value = crb(qfi_matrix_analytic(joint_optimal(j))).total_sensitivity
        worst = max(worst, abs(value - joint_closed(j)))
    spot_1 = crb(qfi_matrix_analytic(joint_optimal(1))).total_sensitivity
    spot_half = crb(qfi_matrix_analytic(joint_optimal("1/2"))).total_sensitivity
    ok = worst <= 1e-9 and abs(spot_1 - 0.707107) < 5e-7 and abs(spot_half - 1.414214) < 5e-7
    return ok, f"max |dPhi - closed form| = {worst:.2e} (tol 1e-9); j=1 -> {spot_1:.6f}, j=1/2 -> {spot_half:.6f}"


def criterion_2():
    worst_h, worst_total = 0.0, 0.0
    for j in spins("1/2", "10"):
        hxx = qfi_matrix_analytic(sequential_optimal(j, "x")).h[0, 0]
        hyy = qfi_matrix_analytic(sequential_optimal(j, "y")).h[1, 1]
        worst_h = max(worst_h, abs(hxx - 4 * j.j ** 2), abs(hyy - 4 * j.j ** 2))
        total = combine_effective(1 / math.sqrt(hxx), 1 / math.sqrt(hyy))
        worst_total = max(worst_total, abs(total - 1 / j.j))
    ok = worst_h <= 1e-9 and worst_total <= 1e-12
    return ok, f"max |H_xx - 4j^2| = {worst_h:.2e} (tol 1e-9); max |dPhi_SE - 1/j| = {worst_total:.2e} (tol 1e-12)"


def criterion_3():
    worst, margin = 0.0, math.inf
    for j in spins("1/2", "10"):
        if j.two_j == 0 or (j.is_integer and j.two_j < 2):
            continue
        dx = squeezing.phase_sensitivity_spin(constructive_squeezed(j, "x"), "x")
        dy = squeezing.phase_sensitivity_spin(constructive_squeezed(j, "y"), "y")
        total = combine_effective(dx, dy)
        worst = max(worst, abs(total - spin_seq_closed(j)))
        if j.two_j >= 3:
            margin = min(margin, math.sqrt(2 / j.j) - total)
    ok = worst <= 1e-9 and margin > 0
    return ok, f"max |dPhi_spin - closed form| = {worst:.2e} (tol 1e-9); min SQL margin for j>=3/2 = {margin:.3e}"


def criterion_4():
    rng = np.random.default_rng(4)
    worst, count = 0.0, 0
    for j in spins("1/2", "2"):
        pool = constructor_states(j) + [random_state(j, rng) for _ in range(100)]
        for psi in pool:
            a = qfi_matrix_analytic(psi).h
            n = qfi_matrix_numeric(psi).h
            worst = max(worst, float(np.max(np.abs(a - n))))
            count += 1
    return worst <= 1e-6, f"max entrywise |numeric - analytic| = {worst:.2e} over {count} states (tol 1e-6)"


def criterion_5():
    worst_zero = 0.0
    for j in spins("1/2", "4"):
        for psi in constructor_states(j):
            ops = spin_ops_on(psi.space, j)
            if abs(np.vdot(psi.amplitudes, ops.jz @ psi.amplitudes)) < 1e-12:
                worst_zero = max(worst_zero, abs(qfi_matrix_analytic(psi).achievability_residual))
    # designed family cos t |1,0> + sin t |1,1>, <J_z> = sin^2 t
    j = SpinQuantum(2)
    ratios_a, ratios_n = [], []
    for target in np.linspace(0.1, 1.0, 10):
        t = math.asin(math.sqrt(target))
        amps = np.zeros(3, dtype=complex)
        amps[j.index_of(0)], amps[j.index_of(1)] = math.cos(t), math.sin(t)
        psi = normalized(j, amps)
        ratios_a.append(qfi_matrix_analytic(psi).achievability_residual / target)
        ratios_n.append(qfi_matrix_numeric(psi).achievability_residual / target)
    ratios = np.array(ratios_a + ratios_n)
    spread = float(np.max(np.abs(ratios / ratios[0] - 1)))
    ok = worst_zero <= 1e-10 and spread <= 1e-6 and abs(ratios[0]) > 0.1
    return ok, (f"max |residual| at <J_z>=0 = {worst_zero:.2e} (tol 1e-10); "
                f"residual/<J_z> = {ratios[0]:.9f}, relative spread {spread:.2e} (tol 1e-6)")


def criterion_6():
    rng = np.random.default_rng(6)
    worst, tested = math.inf, 0
    for j in spins("1/2", "4"):
        ops = make_spin_ops(j)
        cas = j.j * (j.j + 1)
        for _ in range(1000):
            psi = random_state(j, rng)
            v = psi.amplitudes
            h = qfi_matrix_analytic(psi).h
            if np.linalg.eigvalsh(h)[0] <= 1e-12:
                continue
            tr = float(np.trace(np.linalg.inv(h)))
            mean = [np.vdot(v, o @ v).real for o in ops]
            sq = [np.vdot(o @ v, o @ v).real for o in ops]
            var_x, var_y = sq[0] - mean[0] ** 2, sq[1] - mean[1] ** 2
            b1 = 0.25 * (1 / var_x + 1 / var_y)
            b2 = 0.25 * (1 / sq[0] + 1 / sq[1])
            b3 = 1 / (cas - sq[2])
            worst = min(worst, tr - b1, b1 - b2, b2 - b3)
            tested += 1
    return worst >= -1e-10, f"min slack over the chain = {worst:.3e} on {tested} states (tol -1e-10)"


def criterion_7():
    phi = PhasePair(0.03, 0.04)
    worst = 0.0
    for j in spins("1/2", "10"):
        for psi in (joint_optimal(j), sequential_optimal(j, "x"), sequential_optimal(j, "y")):
            worst = max(worst, float(np.max(np.abs(first_order_correction(psi, phi)))))
    return worst <= 1e-12, f"max |H1| at |phi| = 0.05 = {worst:.2e} (tol 1e-12)"


OPTIMIZER_SPINS = ("1/2", "1", "3/2", "2", "5/2", "3")


def criterion_8():
    worst_rel, worst_below, parts = 0.0, 0.0, []
    for text in OPTIMIZER_SPINS:
        j = SpinQuantum.parse(text)
        anc = 0 if j.is_integer else 2
        res = optimize.minimize_trace_inverse(optimize.OptimizeConfig(j, ancilla_dim=anc, seed=8))
        target = joint_closed(j) ** 2
        worst_rel = max(worst_rel, abs(res.best_value - target) / target)
        worst_below = max(worst_below, target - res.best_value)
        parts.append(f"j={text}:{res.best_value:.9g}")
    ok = worst_rel <= 1e-5 and worst_below <= 1e-9
    return ok, f"max relative gap {worst_rel:.2e} (tol 1e-5), max undershoot {worst_below:.2e} (tol 1e-9); " + " ".join(parts)


def criterion_9():
    reps, m = 400, 10_000
    floor = 1 - 3 * math.sqrt(2 / (reps - 1))
    j = SpinQuantum(4)
    lines, ok = [], True
    probes = (
        ("ghz", "seq:j=2,axis=x", PhasePair(0.01, 0.0), montecarlo.estimate_sequential_ghz),
        ("css", "css:j=2,axis=z", PhasePair(0.01, 0.005), montecarlo.estimate_sequential_spin),
        ("squeezed", "squeezed:j=2,axis=x", PhasePair(0.01, 0.005), montecarlo.estimate_sequential_spin),
    )
    for name, spec, phi, run in probes:
        cfg = montecarlo.ExperimentConfig(spec, phi, m, seed=2024, repetitions=reps)
        res = run(cfg)
        scaled = res.scaled_variances
        if name == "ghz":
            predicted = 1 / (4 * j.j ** 2)
        else:
            psi = cfg.probe.build()
            v = psi.amplitudes
            ops = spin_ops_on(psi.space, psi.j)
            jy, jz = (np.vdot(v, o @ v).real for o in (ops.jy, ops.jz))
            predicted = (np.vdot(ops.jy @ v, ops.jy @ v).real - jy ** 2) / jz ** 2
        rel = abs(scaled[0] / predicted - 1)
        crb_scaled = (res.crb_prediction[0] * res.m_x, res.crb_prediction[1] * res.m_y)
        beats = any(s < c * floor for s, c in zip(scaled, crb_scaled))
        ok = ok and rel <= 0.2 and not beats
        lines.append(f"{name}: Var*M_x={scaled[0]:.4g} vs {predicted:.4g} ({rel:.1%})"
                     f"{', beats CRB' if beats else ''}")
    return ok, "; ".join(lines) + " (tol 20%)"


def criterion_10():
    rng = np.random.default_rng(10)
    flagged = 0
    for j in (SpinQuantum(1), SpinQuantum(2)):
        for _ in range(500):
            state = product(random_state(j, rng), random_state(j, rng))
            flagged += squeezing.is_two_mode_squeezed(state).two_mode_squeezed
    css_worst = 0.0
    for j in spins("1/2", "3"):
        for axis in ("z", "x", "-z"):
            rep = squeezing.is_two_mode_squeezed(product(css(j, axis), css(j, axis)))
            if axis.endswith("z"):
                css_worst = max(css_worst, abs(rep.margin))
    res = optimize.maximize_two_mode_margin(optimize.OptimizeConfig("1/2", objective="two_mode_margin", seed=10))
    ok = flagged == 0 and css_worst <= 1e-12 and res.best_value > 0.1
    return ok, (f"{flagged}/1000 random product states flagged; CSS(x)CSS margin {css_worst:.1e} (tol 1e-12); "
                f"optimized j=1/2 pair margin {res.best_value:.6f} (need > 0.1)")


def criterion_11():
    from .cli import main

    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(["scan", "--jmin", "1/2", "--jmax", "10", "--format", "csv"])
    if code != 0:
        return False, f"scan exited with {code}"
    rows = list(csv.DictReader(io.StringIO(buf.getvalue())))
    table: dict[int, dict[str, float]] = {}
    worst = 0.0
    for row in rows:
        j = SpinQuantum(int(row["two_j"]))
        value = float(row["delta_phi"])
        expected = {
            "joint": joint_closed(j),
            "sequential": 1 / j.j,
            "sequential_spin": spin_seq_closed(j),
            "sql": math.sqrt(2 / j.j),
        }[row["strategy"]]
        worst = max(worst, abs(value - expected))
        table.setdefault(j.two_j, {})[row["strategy"]] = value
    order_ok = True
    for two_j, col in table.items():
        if col["joint"] > col["sequential"] + 1e-12:
            order_ok = False
        if two_j >= 2 and not col["sequential"] < col["sequential_spin"]:
            order_ok = False
        if two_j >= 3 and not col["sequential_spin"] < col["sql"]:
            order_ok = False
    ok = len(rows) == 80 and worst <= 1e-6 and order_ok
    return ok, f"{len(rows)} rows, max |csv - formula| = {worst:.2e} (tol 1e-6), ordering {'holds' if order_ok else 'violated'}"


CRITERIA = {
    1: ("joint bound closed form", criterion_1),
    2: ("sequential bound 1/j", criterion_2),
    3: ("spin-measurement strategy", criterion_3),
    4: ("numeric vs analytic QFI", criterion_4),
    5: ("achievability residual", criterion_5),
    6: ("bound-chain inequalities", criterion_6),
    7: ("first-order term vanishes", criterion_7),
    8: ("optimizer corroboration", criterion_8),
    9: ("Monte Carlo saturation", criterion_9),
    10: ("two-mode criterion", criterion_10),
    11: ("scan table reproduction", criterion_11),
}


def run_criterion(number: int) -> Outcome:
    title, fn = CRITERIA[number]
    start = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # a crash is a failure, reported like any other
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    return Outcome(number, title, bool(passed), detail, time.perf_counter() - start)


def run_all(verbose: bool = False, stream=None) -> list[Outcome]:
    stream = stream or sys.stdout
    out = []
    for number in CRITERIA:
        outcome = run_criterion(number)
        out.append(outcome)
        if verbose:
            print(outcome.line(), file=stream, flush=True)
    if verbose:
        passed = sum(o.passed for o in out)
        print(f"{passed}/{len(out)} criteria passed", file=stream)
    return out


