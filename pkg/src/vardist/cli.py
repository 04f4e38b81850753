"""Command-line front end: ``vardist {distance,estimate,select,simulate}``.

stdout carries exactly one JSON document; diagnostics go to stderr.
Exit codes: 0 success, 2 bad input, 3 no solution / degenerate fit,
4 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .distributions import FAMILIES, parse_model
from .errors import DegenerateError, VardistError
from .estimators import METHODS, Status, estimate
from .harness import (
    FULL_REPLICATES,
    run_binomial_identification,
    run_exponential_consistency,
    run_normal_table,
    run_weibull_gamma,
)
from .selection import select
from .tables import FrequencyTable, Region
from .vdist import dv_model, pairwise_terms

EXIT_OK, EXIT_INPUT, EXIT_NO_SOLUTION, EXIT_INTERNAL = 0, 2, 3, 4
SIG_DIGITS = 12


class InputError(Exception):
    pass


def _round(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.{SIG_DIGITS}g}")
    if isinstance(obj, (np.floating,)):
        return _round(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_round(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_round(obj), sort_keys=False)


def _read_table(path: str) -> FrequencyTable:
    try:
        return FrequencyTable.from_csv(path)
    except OSError as exc:
        raise InputError(f"cannot read table {path}: {exc}") from None


def _parse_known(items) -> dict:
    known = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--known expects param=value, got {item!r}")
        try:
            known[name.strip()] = float(value)
        except ValueError:
            raise InputError(f"--known value for {name!r} is not a number") from None
    return known


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vardist", description="Distance in variations: estimation and model selection.")
    p.add_argument("--version", action="version", version=f"vardist {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("distance", help="distance between a table and a model")
    d.add_argument("--table", required=True, help="CSV with header y,count[,lo,hi]")
    d.add_argument("--model", required=True, help="family:params, e.g. normal:0,1")
    d.add_argument("--top", type=int, default=5, help="number of largest pair terms to report")

    e = sub.add_parser("estimate", help="fit a family to a table")
    e.add_argument("--table", required=True)
    e.add_argument("--family", required=True, choices=sorted(FAMILIES))
    e.add_argument("--method", default="dv", choices=METHODS)
    e.add_argument("--known", action="append", metavar="PARAM=VALUE", help="fixed parameter (repeatable)")
    e.add_argument("--region", help="observed region, e.g. '[-1.7951,-1.2712),[-0.22335,0.30055)'")
    e.add_argument("--seed", type=int, help="accepted for interface symmetry; estimators are deterministic")

    s = sub.add_parser("select", help="choose the closest candidate model")
    s.add_argument("--table", required=True)
    s.add_argument("--candidate", action="append", required=True, metavar="FAMILY:PARAMS")

    m = sub.add_parser("simulate", help="run a seeded Monte Carlo study")
    m.add_argument("--experiment", required=True,
                   choices=["binomial-id", "weibull-gamma", "normal-table", "exp-consistency"])
    m.add_argument("--replicates", type=int, help="defaults: 2000 binomial-id, 1000 weibull-gamma, 200 exp-consistency")
    m.add_argument("--full", action="store_true", help=f"use {FULL_REPLICATES} replicates")
    m.add_argument("--seed", type=int, help="required for randomized experiments")
    m.add_argument("--gamma-convention", choices=["rate", "scale"],
                   help="read G(2, 0.5) with 0.5 as a rate or a scale (required for weibull-gamma)")
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--emit-csv", metavar="DIR",
                   help="write per-replicate rows to DIR/replicates.csv and each table to DIR/tables/")
    return p


def _cmd_distance(args):
    table = _read_table(args.table)
    model = parse_model(args.model)
    terms = pairwise_terms(table, model, top=args.top)
    out = {
        "model": str(model),
        "dv": dv_model(table, model),
        "top_terms": [{"i": t.i, "j": t.j, "y_i": table.support[t.i], "y_j": table.support[t.j],
                       "value": t.value} for t in terms],
    }
    return out, EXIT_OK


def _cmd_estimate(args):
    table = _read_table(args.table)
    known = _parse_known(args.known)
    region = None
    if args.region:
        try:
            region = Region.parse(args.region)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    res = estimate(table, args.family, args.method, known=known, region=region)
    code = EXIT_NO_SOLUTION if res.status in (Status.NO_SOLUTION, Status.DEGENERATE) else EXIT_OK
    return res.to_dict(), code


def _cmd_select(args):
    table = _read_table(args.table)
    report = select(table, [parse_model(c) for c in args.candidate])
    return report.to_dict(), EXIT_OK


def _emit(report, directory):
    os.makedirs(os.path.join(directory, "tables"), exist_ok=True)
    rows = report.rows
    if rows:
        fields = []
        for r in rows:
            fields += [k for k in r if k not in fields]
        with open(os.path.join(directory, "replicates.csv"), "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in fields})
    for name, table in report.tables:
        table.to_csv(os.path.join(directory, "tables", f"{name}.csv"))


def _cmd_simulate(args):
    exp = args.experiment
    if exp != "normal-table" and args.seed is None:
        raise InputError(f"--seed is required for {exp}")
    reps = FULL_REPLICATES if args.full else args.replicates
    keep = bool(args.emit_csv)
    if reps is not None and reps < 1:
        raise InputError("--replicates must be >= 1")
    t0 = time.perf_counter()
    if exp == "binomial-id":
        report = run_binomial_identification(reps or 2000, args.seed, workers=args.workers, keep_tables=keep)
    elif exp == "weibull-gamma":
        if args.gamma_convention is None:
            raise InputError("--gamma-convention {rate,scale} is required for weibull-gamma")
        report = run_weibull_gamma(reps or 1000, args.seed, gamma_convention=args.gamma_convention,
                                   workers=args.workers, keep_tables=keep)
    elif exp == "exp-consistency":
        report = run_exponential_consistency(replicates=reps or 200, seed=args.seed, workers=args.workers)
    else:
        report = run_normal_table()
    print(f"wall time {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    if args.emit_csv:
        _emit(report, args.emit_csv)
    return report.to_dict(), EXIT_OK


COMMANDS = {"distance": _cmd_distance, "estimate": _cmd_estimate, "select": _cmd_select,
            "simulate": _cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out, code = COMMANDS[args.command](args)
    except DegenerateError as exc:
        print(f"vardist: degenerate: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except (InputError, VardistError, ValueError) as exc:
        print(f"vardist: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"vardist: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    sys.stdout.write(dumps(out) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
