"""Command-line front end.

Subcommands: bounds (bound grids), simulate (protocol closed forms against
brute-force simulation), classify (operation class predicates), rates
(protocol-trace rate accounting), compile (tensor-power compilation), and
verify (the full invariant suite).  All output is deterministic for a fixed
seed: one seeded generator per run, numbers serialized as shortest
round-trip decimals at the configured precision.

Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import bounds as bnd
from . import distillation as dst
from . import protocols as pro
from . import verify as ver
from .linalg import BipartiteLabel, random_density
from .operations import (
    apply_operation,
    is_ppt_operation,
    is_trace_preserving,
    is_completely_positive,
    verify_separable_form,
)
from .serialize import (
    SchemaError,
    decode_operation,
    decode_trace,
    dump_report,
    encode_trace,
    format_number,
    load_json,
)
from .states import fidelity, isotropic

INPUT_ERROR = 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    emit: str = "csv"
    precision: int = 12
    seed: int = 0
    out: str | None = None


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _csv(rows: list[list], header: list[str], precision: int) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(x, precision) if x is not None else "" for x in row))
    return "\n".join(lines) + "\n"


def parse_f_grid(spec: str) -> list[float]:
    """Parse 'start:stop:step' into an inclusive grid."""
    try:
        start_s, stop_s, step_s = spec.split(":")
        start, stop, step = float(start_s), float(stop_s), float(step_s)
    except ValueError as exc:
        raise SchemaError(f"F grid {spec!r} is not start:stop:step") from exc
    if step <= 0 or stop < start:
        raise SchemaError(f"F grid {spec!r} must have positive step and stop >= start")
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def cmd_bounds(args: argparse.Namespace) -> int:
    grid = parse_f_grid(args.F_grid)
    rows = []
    records = []
    for k in args.K_list:
        for f in grid:
            fb = bnd.formation_bounds_isotropic(k, f)
            hr = bnd.hashing_rate(k, f)
            rows.append([k, f, fb.lower, fb.upper, fb.ppt_bound, hr.raw, hr.clamped])
            records.append(
                {
                    "K": k,
                    "F": f,
                    "ef_lower": fb.lower,
                    "ef_upper": fb.upper,
                    "ppt_bound": fb.ppt_bound,
                    "hashing_raw": hr.raw,
                    "hashing_clamped": hr.clamped,
                    "hashing_established": hr.dimension_is_power_of_two,
                }
            )
    if args.emit == "csv":
        header = ["K", "F", "ef_lower", "ef_upper", "ppt_bound", "hashing_raw", "hashing_clamped"]
        _emit(_csv(rows, header, args.precision), args.out)
    else:
        _emit(dump_report(records, args.precision), args.out)
    return 0


def _simulate_rows(args: argparse.Namespace) -> list[dict]:
    grid = parse_f_grid(args.F_grid)
    k, kp = args.K, args.Kprime
    rng = np.random.default_rng(args.seed)
    records = []
    for f in grid:
        if args.protocol == "1":
            closed = pro.subspace_measurement_fidelity(k, kp, f)
            ((_, state),) = apply_operation(pro.subspace_measurement_op(k, kp), isotropic(k, f))
            sim = fidelity(state)
            bound = (kp / k) * f
        elif args.protocol == "2":
            closed = pro.factor_tracing_fidelity(k, kp, f)
            ((_, state),) = apply_operation(pro.factor_tracing_op(k, kp), isotropic(k, f))
            sim = fidelity(state)
            bound = f
        elif args.protocol == "reduce":
            closed = pro.reduce_dimension_fidelity(k, kp, f)
            sim = fidelity(pro.reduce_dimension(isotropic(k, f), kp))
            bound = pro.reduction_plan(k, kp).guaranteed_fidelity_factor * f
        else:  # twirl
            rho = random_density(BipartiteLabel(k, k), rng)
            target = isotropic(k, fidelity(rho))
            closed = fidelity(rho)
            tw = pro.exact_twirl(rho)
            sim = fidelity(tw)
            if args.mc_samples > 0:
                mc = pro.monte_carlo_twirl(rho, args.mc_samples, rng)
                bound = float(np.max(np.abs(mc - target.matrix)))
            else:
                bound = None
        if args.protocol == "twirl":
            ok = abs(sim - closed) <= 1e-12 and (bound is None or bound <= 1e-2)
        else:
            ok = abs(sim - closed) <= 1e-9 and sim >= bound - 1e-12
        records.append(
            {
                "K": k,
                "Kprime": kp,
                "F_in": f,
                "F_closed_form": closed,
                "F_simulated": sim,
                "bound": bound,
                "pass": ok,
            }
        )
    return records


def cmd_simulate(args: argparse.Namespace) -> int:
    records = _simulate_rows(args)
    if args.emit == "csv":
        header = ["K", "Kprime", "F_in", "F_closed_form", "F_simulated", "bound", "pass"]
        rows = [[r[h] for h in header] for r in records]
        _emit(_csv(rows, header, args.precision), args.out)
    else:
        _emit(dump_report(records, args.precision), args.out)
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    doc = load_json(args.input)
    op, witness = decode_operation(doc)
    report = {
        "tp": is_trace_preserving(op),
        "cp": all(is_completely_positive(sub) for sub in op.subops),
        "ppt": is_ppt_operation(op),
        "separable_verified": (
            verify_separable_form(op, witness) if witness is not None else None
        ),
    }
    _emit(dump_report(report, args.precision), args.out)
    return 0


def cmd_rates(args: argparse.Namespace) -> int:
    trace = decode_trace(load_json(args.input))
    report = dst.rate_report(trace)
    intervals = dst.formation_rate_intervals(trace)
    rr = dst.rate_and_residual(trace)
    mins = dst.min_branch_fidelity(trace)
    doc = {
        "single_branch_rate": report.single_branch,
        "rate": report.rate,
        "residual": report.residual,
        "formation_interval": list(report.formation_interval),
        "min_fidelity": report.min_fidelity,
        "all_power_of_two": report.all_power_of_two,
        "per_step": [
            {
                "n": s.n,
                "rate": float(r),
                "residual": float(res),
                "formation_lower": iv[0],
                "formation_upper": iv[1],
                "min_fidelity": mf,
            }
            for s, r, res, iv, mf in zip(trace.steps, rr.rates, rr.residuals, intervals, mins)
        ],
    }
    if args.emit == "csv":
        header = ["n", "rate", "residual", "formation_lower", "formation_upper", "min_fidelity"]
        rows = [[p[h] for h in header] for p in doc["per_step"]]
        _emit(_csv(rows, header, args.precision), args.out)
    else:
        _emit(dump_report(doc, args.precision), args.out)
    return 0


def cmd_compile(args: argparse.Namespace) -> int:
    trace = decode_trace(load_json(args.input))
    if not dst.dims_are_powers_of_two(trace):
        trace = dst.floor_dims_to_powers_of_two(trace)
    p_frac = Fraction(args.p_fraction)
    r_frac = Fraction(args.rate_fraction)
    out_docs = []
    for k in args.k_list:
        cfg = dst.CompilerConfig.from_fractions(trace, k, p_frac, r_frac)
        result = dst.tensor_power_compile(trace, cfg)
        out_docs.append(
            {
                "k": k,
                "achieved_rate": result.achieved_rate,
                "failure_probability": result.failure_probability,
                "failure_method": result.steps[-1].failure_method,
                "rate_bound": result.rate_bound,
                "compiled_trace": (
                    encode_trace(result.def1_trace)
                    if result.def1_trace is not None
                    and all(s.branches[0].K.bit_length() <= 64 for s in result.def1_trace.steps)
                    else None
                ),
                "log2_output_dims": [s.log2_output_dim for s in result.steps],
            }
        )
    if args.emit == "csv":
        header = ["k", "achieved_rate", "failure_probability", "rate_bound"]
        rows = [[d[h] for h in header] for d in out_docs]
        _emit(_csv(rows, header, args.precision), args.out)
    else:
        _emit(dump_report(out_docs, args.precision), args.out)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    results = ver.run_suites(seed=args.seed, suites=args.suite or None)
    if args.emit == "json":
        doc = [
            {
                "suite": r.name,
                "checks": r.checks,
                "failed": len(r.failures),
                "failures": r.failures[:20],
            }
            for r in results
        ]
        _emit(dump_report(doc, args.precision), args.out)
    else:
        _emit(ver.render_text(results), args.out)
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entdist",
        description="Entanglement distillation workbench: bounds, protocols, "
        "operation classification, and trace rate accounting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, emit_default: str = "csv") -> None:
        p.add_argument("--emit", choices=["csv", "json"], default=emit_default)
        p.add_argument("--precision", type=int, default=12, help="significant decimal digits")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="write to a file instead of stdout")

    p = sub.add_parser("bounds", help="evaluate the bound formulas on a (K, F) grid")
    p.add_argument("--K-list", dest="K_list", type=int, nargs="+", required=True)
    p.add_argument("--F-grid", dest="F_grid", default="0:1:0.1", help="start:stop:step")
    common(p)
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("simulate", help="protocol simulation against closed forms")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--Kprime", type=int, required=True)
    p.add_argument("--F-grid", dest="F_grid", default="0:1:0.1")
    p.add_argument("--protocol", choices=["1", "2", "reduce", "twirl"], required=True)
    p.add_argument("--mc-samples", dest="mc_samples", type=int, default=0)
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("classify", help="class predicates for an operation descriptor")
    p.add_argument("input", help="operation descriptor JSON")
    common(p, emit_default="json")
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("rates", help="rate accounting for a protocol trace")
    p.add_argument("input", help="protocol trace JSON")
    common(p, emit_default="json")
    p.set_defaults(fn=cmd_rates)

    p = sub.add_parser("compile", help="tensor-power compilation of a trace")
    p.add_argument("input", help="protocol trace JSON")
    p.add_argument("--k-list", dest="k_list", type=int, nargs="+", required=True)
    p.add_argument("--p-fraction", dest="p_fraction", default="0.9",
                   help="p' as a fraction of each branch probability")
    p.add_argument("--rate-fraction", dest="rate_fraction", default="0.99",
                   help="R' as a fraction of each branch's rate slack")
    common(p, emit_default="json")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("verify", help="run the invariant suites")
    p.add_argument("--suite", action="append", choices=sorted(ver.SUITES), default=None)
    p.add_argument("--emit", choices=["text", "json"], default="text")
    p.add_argument("--precision", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
