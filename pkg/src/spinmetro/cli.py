"""Command-line interface: ``spinmetro <command> ...`` (or ``python -m spinmetro``).

Exit codes: 0 success, 1 verification failure, 2 usage error,
3 domain error (singular QFI, divergent estimator), 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import montecarlo, optimize, squeezing, strategies
from .errors import DomainError, SingularQfiError, StateSpecError
from .qfi import PhasePair, crb, first_order_correction, qfi_matrix_analytic, qfi_matrix_numeric
from .spin_algebra import SpinQuantum, commutator, eigenbasis, make_spin_ops
from .states import parse_spec

SCHEMA_VERSION = "1.0"
SIG_DIGITS = 9
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    return f"{x:.{SIG_DIGITS}g}"


def rounded(obj):
    """Round every float in a JSON-able structure to 9 significant digits."""
    if isinstance(obj, (float, np.floating)):
        return float(fmt(float(obj)))
    if isinstance(obj, dict):
        return {k: rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return rounded(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def spin_arg(text: str) -> SpinQuantum:
    try:
        return SpinQuantum.parse(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"invalid j {text!r}: {exc} (need j >= 1/2, e.g. 3/2 or 1.5)") from None


def phase_arg(text: str) -> PhasePair:
    try:
        return PhasePair.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def spin_json(j: SpinQuantum) -> dict:
    return {"two_j": j.two_j, "j": j.j, "j_text": str(j)}


def record(command: str, inputs: dict, results: dict, start: float) -> dict:
    return rounded({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "inputs": inputs,
        "results": results,
        "timing": {"wall_seconds": time.perf_counter() - start},
    })


def write_output(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise IOError(f"cannot write {out}: {exc}") from exc


def emit(rec: dict, args) -> None:
    write_output(json.dumps(rec, indent=2) + "\n", getattr(args, "out", None))


# ---------------------------------------------------------------------------
# commands


def cmd_ops(args) -> int:
    start = time.perf_counter()
    j = args.j
    ops = make_spin_ops(j)
    axes = "xyz" if args.axis == "all" else args.axis
    comm = max(
        float(np.max(np.abs(commutator(ops.jx, ops.jy) - 1j * ops.jz))),
        float(np.max(np.abs(commutator(ops.jy, ops.jz) - 1j * ops.jx))),
        float(np.max(np.abs(commutator(ops.jz, ops.jx) - 1j * ops.jy))),
    )
    if args.format == "json":
        results = {"matrices": {}, "commutator_residual": comm}
        for a in axes:
            m = ops.along(a)
            results["matrices"][a] = {"re": m.real.tolist(), "im": m.imag.tolist()}
            if args.basis:
                results.setdefault("eigenbasis", {})[a] = [[[v.real, v.imag] for v in vec] for vec in eigenbasis(j, a)]
        emit(record("ops", {"j": spin_json(j), "axis": args.axis, "basis": args.basis}, results, start), args)
        return EXIT_OK
    buf = io.StringIO()
    buf.write(f"j = {j} (two_j = {j.two_j}), basis m = {', '.join(str(m) for m in j.m_values())}\n")
    for a in axes:
        buf.write(f"J_{a} =\n{_matrix_text(ops.along(a))}\n")
        if args.basis:
            buf.write(f"eigenvectors of J_{a} (columns m = j..-j):\n{_matrix_text(np.column_stack(eigenbasis(j, a)))}\n")
    buf.write(f"commutator residual max|[J_a,J_b] - i J_c| = {comm:.3e}\n")
    write_output(buf.getvalue(), args.out)
    return EXIT_OK


def _matrix_text(m: np.ndarray) -> str:
    def cell(z):
        if abs(z.imag) < 1e-15:
            return fmt(z.real)
        if abs(z.real) < 1e-15:
            return f"{fmt(z.imag)}i"
        return f"{fmt(z.real)}{'+' if z.imag >= 0 else '-'}{fmt(abs(z.imag))}i"
    rows = [[cell(z) for z in row] for row in m]
    width = max(len(c) for r in rows for c in r)
    return "\n".join("  " + "  ".join(c.rjust(width) for c in r) for r in rows)


def cmd_qfi(args) -> int:
    start = time.perf_counter()
    spec = parse_spec(args.state, default_j=args.j)
    psi = spec.build()
    if args.j is not None and psi.j != args.j:
        raise UsageError(f"--j {args.j} disagrees with state spin j={psi.j}")
    order = "first_corrected" if args.order == "first" else "zeroth"
    analytic = qfi_matrix_analytic(psi, args.phi, order)
    numeric = qfi_matrix_numeric(psi, args.phi, args.step)
    inputs = {"j": spin_json(psi.j), "state": args.state, "phi": [args.phi.phi_x, args.phi.phi_y],
              "order": args.order, "step": args.step}
    results = {
        "h": analytic.h,
        "numeric_h": numeric.h,
        "analytic_numeric_delta": float(np.max(np.abs(numeric.h - analytic.h))),
        "achievability_residual": analytic.achievability_residual,
        "numeric_achievability_residual": numeric.achievability_residual,
        "achievable": analytic.achievable,
        "richardson_delta": numeric.richardson_delta,
    }
    if numeric.warning:
        results["warning"] = numeric.warning
    if order == "first_corrected":
        results["h1"] = first_order_correction(psi, args.phi)
    try:
        bound = crb(analytic)
        results.update(trace_inverse=bound.value, delta_phi=bound.total_sensitivity)
        code = EXIT_OK
    except SingularQfiError as exc:
        results.update(trace_inverse=None, delta_phi=None, singular_direction=exc.direction, error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_DOMAIN
    emit(record("qfi", inputs, results, start), args)
    return code


def cmd_scan(args) -> int:
    start = time.perf_counter()
    which = strategies.STRATEGIES if args.strategies == "all" else [s.strip() for s in args.strategies.split(",")]
    try:
        rows = [r.to_row() for r in strategies.scan(args.jmin, args.jmax, which)]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "json":
        inputs = {"jmin": spin_json(args.jmin), "jmax": spin_json(args.jmax), "strategies": list(which)}
        emit(record("scan", inputs, {"rows": rows}, start), args)
        return EXIT_OK
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["two_j", "j", "parity", "strategy", "delta_phi"])
    for r in rows:
        writer.writerow([r["two_j"], fmt(r["j"]), r["parity"], r["strategy"], fmt(r["delta_phi"])])
    write_output(buf.getvalue(), args.out)
    return EXIT_OK


def load_job(path: str) -> dict:
    try:
        with open(path) as fh:
            job = json.load(fh)
    except OSError as exc:
        raise IOError(f"cannot read job file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"job file {path} is not valid JSON: {exc}") from None
    if not isinstance(job, dict) or "probe" not in job:
        raise UsageError("job file must be a JSON object with at least a 'probe' field")
    return job


def cmd_simulate(args) -> int:
    start = time.perf_counter()
    job = {
        "probe": args.probe, "probe_y": args.probe_y, "phi": None, "m_total": args.m,
        "seed": args.seed, "repetitions": args.repetitions, "split": args.split, "estimator": args.estimator,
    }
    if args.phi is not None:
        job["phi"] = [args.phi.phi_x, args.phi.phi_y]
    if args.job:
        loaded = load_job(args.job)
        unknown = set(loaded) - set(job) - {"j"}
        if unknown:
            raise UsageError(f"unknown job fields: {sorted(unknown)}")
        job.update({k: v for k, v in loaded.items() if v is not None})
    if not job["probe"]:
        raise UsageError("simulate needs --probe or a job file with 'probe'")
    default_j = job.get("j")
    phi = PhasePair(*job["phi"]) if job["phi"] is not None else PhasePair(0.01, 0.005)
    config = montecarlo.ExperimentConfig(
        probe=parse_spec(job["probe"], default_j),
        probe_y=parse_spec(job["probe_y"], default_j) if job["probe_y"] else None,
        phi_true=phi,
        m_total=int(job["m_total"]),
        seed=int(job["seed"]),
        split=float(job["split"]),
        repetitions=int(job["repetitions"]),
    )
    run = montecarlo.estimate_sequential_ghz if job["estimator"] == "ghz" else montecarlo.estimate_sequential_spin
    result = run(config)
    inputs = dict(config.to_json(), estimator=job["estimator"])
    emit(record("simulate", inputs, result.to_json(), start), args)
    return EXIT_OK


def cmd_optimize(args) -> int:
    start = time.perf_counter()
    config = optimize.OptimizeConfig(
        j=args.j, ancilla_dim=args.ancilla, objective=args.objective, restarts=args.restarts,
        max_iters=args.max_iters, seed=args.seed, tol=args.tol, product_only=args.product_only,
    )
    result = optimize.run(config)
    results = result.to_json()
    if args.objective == "trace_inverse_qfi":
        target = strategies.joint_sensitivity(args.j).delta_phi_total ** 2
        results["closed_form_bound"] = target
        results["gap"] = result.best_value - target
    emit(record("optimize", config.to_json(), results, start), args)
    return EXIT_OK


def cmd_squeeze(args) -> int:
    start = time.perf_counter()
    spec = parse_spec(args.state, default_j=args.j)
    psi = spec.build()
    inputs = {"state": args.state, "axis": args.axis, "two_mode": args.two_mode}
    if args.two_mode:
        results = squeezing.is_two_mode_squeezed(psi).to_json()
    else:
        results = squeezing.is_spin_squeezed(psi, args.axis).to_json()
    emit(record("squeeze", inputs, results, start), args)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import run_all

    start = time.perf_counter()
    outcomes = run_all(verbose=True, stream=sys.stderr if args.format == "json" else sys.stdout)
    ok = all(o.passed for o in outcomes)
    if args.format == "json":
        results = {"passed": ok, "criteria": [o.to_json() for o in outcomes]}
        emit(record("verify", {}, results, start), args)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinmetro", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ops", help="print spin operators or their eigenbases")
    p.add_argument("--j", type=spin_arg, required=True)
    p.add_argument("--axis", choices=["x", "y", "z", "all"], default="all")
    p.add_argument("--basis", action="store_true", help="also print the eigenvectors")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_ops)

    p = sub.add_parser("qfi", help="QFI matrix, bound and achievability for a probe state")
    p.add_argument("--j", type=spin_arg, default=None)
    p.add_argument("--state", required=True, help="state spec, e.g. dicke:j=1,m=0,axis=z")
    p.add_argument("--phi", type=phase_arg, default=PhasePair())
    p.add_argument("--order", choices=["zeroth", "first"], default="zeroth")
    p.add_argument("--step", type=float, default=1e-4)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_qfi)

    p = sub.add_parser("scan", help="closed-form sensitivities versus j")
    p.add_argument("--jmin", type=spin_arg, default=SpinQuantum(1))
    p.add_argument("--jmax", type=spin_arg, default=SpinQuantum(20))
    p.add_argument("--strategies", default="all", help="'all' or comma list of " + ",".join(strategies.STRATEGIES))
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("simulate", help="Monte Carlo estimation experiment")
    p.add_argument("--job", help="JSON job file (fields override flags)")
    p.add_argument("--probe", help="state spec of the phi_x probe")
    p.add_argument("--probe-y", dest="probe_y", help="state spec of the phi_y probe")
    p.add_argument("--phi", type=phase_arg, default=None)
    p.add_argument("--m", type=int, default=10_000, help="total number of copies M")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repetitions", type=int, default=400)
    p.add_argument("--split", type=float, default=0.5)
    p.add_argument("--estimator", choices=["spin", "ghz"], default="spin")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="numerical probe-state optimization")
    p.add_argument("--j", type=spin_arg, required=True)
    p.add_argument("--ancilla", type=int, choices=[0, 2], default=0)
    p.add_argument("--objective", choices=list(optimize.OBJECTIVES), default="trace_inverse_qfi")
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--product-only", dest="product_only", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("squeeze", help="spin-squeezing diagnostics")
    p.add_argument("--state", required=True)
    p.add_argument("--j", type=spin_arg, default=None)
    p.add_argument("--axis", choices=["x", "y"], default="x", help="rotation axis")
    p.add_argument("--two-mode", dest="two_mode", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_squeeze)

    p = sub.add_parser("verify", help="run the acceptance criteria and print a pass/fail table")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, StateSpecError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
