"""Command-line interface: ``qbd2d {validate,regions,decay,oracle,verify}``.

Every command reads a JSON model file (``--model``) and writes a run report.
``--out`` takes ``json`` (default) or ``csv`` to pick the format on stdout, or
a file path whose suffix (``.csv`` or anything else for JSON) picks it.

Exit codes: 0 ok, 1 model or domain infeasibility (including a failed
``validate`` or ``verify``), 2 input error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .decay import DEFAULT_TOL, full_analysis
from .errors import QBDError
from .model import load_model, validate_model
from .oracle import (
    build_truncated,
    empirical_decay,
    hitting_measure,
    occupation_measure,
    ray_values,
)
from .regions import DEFAULT_SAMPLES, ROOT_TOL, region_report
from .verify import verify

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_CONVERGENCE = 0, 1, 2, 3


@dataclass
class RunReport:
    command: str
    model_sha256: str
    parameters: dict
    results: dict
    wall_time: float = 0.0
    version: str = __version__
    exit_code: int = EXIT_OK
    table: list = field(default_factory=list, repr=False)   # rows for CSV output

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("table")
        return d


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError("not JSON serialisable: %r" % type(obj))


def _pair(text: str, kind=int):
    try:
        a, b = (kind(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected two comma-separated numbers, got %r" % text)
    return a, b


def _directions(text: str):
    return tuple(_pair(part) for part in text.split(";") if part.strip())


def _write_csv(rows, stream):
    writer = csv.writer(stream, lineterminator="\n")
    for row in rows:
        writer.writerow(row)


def _emit(report: RunReport, out: str) -> None:
    fmt = "csv" if out == "csv" or out.endswith(".csv") else "json"
    if fmt == "csv":
        if not report.table:
            raise ValueError("command %r has no tabular output; use --out json" % report.command)
        buf = io.StringIO()
        _write_csv(report.table, buf)
        text = buf.getvalue()
    else:
        text = json.dumps(report.to_dict(), indent=2, default=_json_default) + "\n"
    if out in ("json", "csv", "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args):
    m = load_model(args.model, validate=False)
    rep = validate_model(m)
    code = EXIT_OK if rep.ok else EXIT_INFEASIBLE
    return m, {"model": args.model}, rep.to_dict(), [], code


def cmd_regions(args):
    m = load_model(args.model)
    rep = region_report(m, args.samples)
    rows = [("theta1", "eta_lower", "eta_upper")] + [tuple(s) for s in rep.samples]
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            _write_csv(rows, fh)
    params = {"samples": args.samples, "tol": args.tol, "csv": args.csv}
    return m, params, rep.to_dict(), rows, EXIT_OK


def cmd_decay(args):
    m = load_model(args.model)
    sol = full_analysis(m, args.directions, args.tol)
    params = {"directions": [list(c) for c in args.directions], "tol": args.tol}
    return m, params, sol.to_dict(), [], EXIT_OK


def cmd_oracle(args):
    m = load_model(args.model)
    op = build_truncated(m, args.N)
    solve = occupation_measure if args.kind == "occupation" else hitting_measure
    fld = solve(op, args.tol, args.method)
    results = {"kind": fld.kind, "N": fld.N, "terms": fld.terms, "residual": fld.residual,
               "method": fld.method, "total_mass": float(fld.values.sum())}
    n, blocks = ray_values(fld, args.ray)
    s0 = m.s0
    header = ["n", "value_pooled"] + ["value_%d_%d" % (a, b) for a in range(s0) for b in range(s0)]
    rows = [header]
    for k, blk in zip(n, blocks):
        rows.append([int(k), float(blk.sum())] + [float(v) for v in blk.ravel()])
    est = empirical_decay(fld, args.ray, window=args.window)
    results["ray"] = {
        "c": list(args.ray),
        "window": list(est.window),
        "pooled_slope": est.pooled_slope,
        "r2": est.r2,
        "phase_slopes": est.phase_slopes.tolist(),
        "values": rows[1:],
    }
    params = {"N": args.N, "kind": args.kind, "ray": list(args.ray),
              "window": list(args.window) if args.window else None, "tol": args.tol,
              "method": args.method}
    return m, params, results, rows, EXIT_OK


def cmd_verify(args):
    m = load_model(args.model)
    rep = verify(m, args.N, args.tol, args.method)
    code = EXIT_OK if rep.passed else EXIT_INFEASIBLE
    params = {"N": args.N, "tol": args.tol, "method": args.method}
    return m, params, rep.to_dict(), [], code


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qbd2d", description="Decay rates of 2d-QBD measures.")
    p.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol):
        sp.add_argument("--model", required=True, help="model JSON file")
        sp.add_argument("--tol", type=float, default=tol, help="tolerance (default %(default)g)")
        sp.add_argument("--out", default="json",
                        help="'json', 'csv', or an output path (suffix .csv selects CSV)")

    sp = sub.add_parser("validate", help="check a model file")
    common(sp, DEFAULT_TOL)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("regions", help="extremes, Gamma0 intervals, boundary samples")
    common(sp, ROOT_TOL)
    sp.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    sp.add_argument("--csv", help="also write the boundary samples to this CSV file")
    sp.set_defaults(func=cmd_regions)

    sp = sub.add_parser("decay", help="optimal exponents and directional rates")
    common(sp, DEFAULT_TOL)
    sp.add_argument("--directions", type=_directions, default=((1, 0), (0, 1), (1, 1)),
                    help="semicolon-separated directions, e.g. '1,0;0,1;1,1'")
    sp.set_defaults(func=cmd_decay)

    sp = sub.add_parser("oracle", help="truncated-lattice measure and a ray")
    common(sp, DEFAULT_TOL)
    sp.add_argument("--N", type=int, default=100)
    sp.add_argument("--kind", choices=("occupation", "hitting"), default="occupation")
    sp.add_argument("--ray", type=_pair, default=(1, 0), help="direction 'c1,c2'")
    sp.add_argument("--window", type=_pair, default=None, help="fit window 'a,b'")
    sp.add_argument("--method", choices=("neumann", "direct"), default="neumann")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("verify", help="compare analytic predictions with the oracle")
    common(sp, DEFAULT_TOL)
    sp.add_argument("--N", type=int, default=200)
    sp.add_argument("--method", choices=("neumann", "direct"), default="neumann")
    sp.set_defaults(func=cmd_verify)
    return p


def _fail(code, exc):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    report = getattr(exc, "report", None)
    if report is not None:
        payload["report"] = report.to_dict()
    sys.stderr.write(json.dumps(payload, indent=2) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        m, params, results, rows, code = args.func(args)
        report = RunReport(args.command, m.sha256(), params, results, exit_code=code, table=rows)
        report.wall_time = time.perf_counter() - start
        _emit(report, args.out)
    except QBDError as exc:
        return _fail(exc.exit_code, exc)
    except (ValueError, MemoryError, OSError) as exc:
        return _fail(EXIT_INPUT, exc)
    return code


if __name__ == "__main__":
    sys.exit(main())
