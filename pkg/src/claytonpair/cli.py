"""Command-line front end.

Exit codes: 0 success, 1 runtime or model error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .errors import ClaytonPairError, DomainError
from .estimation import fit
from .fileio import (
    build_report,
    dumps,
    load_config,
    read_table,
    sim_spec_from_dict,
    sweep_spec_from_dict,
    write_report,
)
from .grids import CASES, TABLES, run_cells, table_rows
from .homogeneity import ALL_METHODS, Method, run_tests
from .likelihood import Hypothesis
from .simulation import default_workers, run_power, run_sweep, run_tie

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2


class _UsageError(Exception):
    pass


def format_p(p: float) -> str:
    if p < 1e-16:
        return "< 1e-16"
    if p < 1e-4:
        return f"{p:.3e}"
    return f"{p:.4f}"


def _finite(obj: Any) -> Any:
    """Replace non-finite floats with None so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _jsonl(obj: Any, out) -> None:
    out.write(json.dumps(_finite(obj)) + "\n")
    out.flush()


# ---------------------------------------------------------------------------
# fit / test


def _print_fit(name: str, rec: dict, labels: Sequence[str], out) -> None:
    title = "H0 (common rate)" if name == "null" else "Ha (separate rates)"
    out.write(f"{title}: theta = {rec['theta']:.3f}, tau = {rec['tau']:.3f}, loglik = {rec['loglik']:.3f}\n")
    names = ["pooled"] if name == "null" else labels
    width = max(len(s) for s in names)
    for lab, pi, rho in zip(names, rec["pis"], rec["rho"]):
        out.write(f"  {lab:<{width}}  pi = {pi:.4f}  rho = {rho:.3f}\n")
    if rec["boundary_warning"]:
        out.write("  warning: estimate on the boundary of the parameter box\n")


def _print_header(args, table, report, out) -> None:
    out.write(f"{args.data}: {table.g} groups, N = {table.n}, sha256 {report['input']['sha256'][:12]}\n")


def cmd_fit(args, out) -> int:
    table, _ = read_table(args.data)
    wanted = ("alternative", "null") if args.hypothesis == "both" else (args.hypothesis,)
    fits = {h: fit(table, Hypothesis(h)) for h in wanted}
    report = build_report(table, fits)
    if args.output:
        write_report(report, args.output)
    if args.json:
        out.write(dumps(report) + "\n")
        return EXIT_OK
    _print_header(args, table, report, out)
    for name, rec in report["fits"].items():
        _print_fit(name, rec, table.labels, out)
    return EXIT_OK


def cmd_test(args, out) -> int:
    table, _ = read_table(args.data)
    methods = ALL_METHODS if args.method == "all" else (Method.parse(args.method),)
    reports = run_tests(table, methods)
    fits = {}
    for rep in reports.values():
        if rep.fit_ha is not None:
            fits["alternative"] = rep.fit_ha
        if rep.fit_h0 is not None:
            fits["null"] = rep.fit_h0
    report = build_report(
        table, fits, {m.value: r for m, r in reports.items()}, alpha=args.alpha
    )
    if args.output:
        write_report(report, args.output)
    if args.json:
        out.write(dumps(report) + "\n")
        return EXIT_OK
    _print_header(args, table, report, out)
    for name, rec in report["fits"].items():
        _print_fit(name, rec, table.labels, out)
    out.write(f"Homogeneity of rates (alpha = {args.alpha:g}):\n")
    for name, rec in report["tests"].items():
        verdict = "reject" if rec["reject"] else "do not reject"
        out.write(
            f"  {name:<5}  T = {rec['statistic']:.3f}  df = {rec['df']}  "
            f"p = {format_p(rec['p_value'])}  {verdict}\n"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _flag_config(args, sweep: bool) -> dict:
    cfg: dict[str, Any] = {}
    for key in ("g", "reps", "alpha", "seed"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    if args.methods is not None:
        cfg["methods"] = args.methods.split(",")
    if sweep:
        if args.m is not None:
            if len(args.m) != 1:
                raise _UsageError("sweep takes a single balanced --m")
            cfg["m"] = args.m[0]
        if args.scenarios is not None:
            cfg["n_scenarios"] = args.scenarios
        if args.floor is not None:
            cfg["floor"] = args.floor
        return cfg
    if args.m is not None:
        cfg["m"] = args.m
    if args.pi is not None:
        cfg["pis"] = args.pi
    if args.case is not None:
        cfg["case"] = args.case
    if args.theta is not None:
        cfg["theta"] = args.theta
    return cfg


def _percent(rates: dict) -> dict:
    return {k: (round(100.0 * v, 3) if math.isfinite(v) else None) for k, v in rates.items()}


def cmd_simulate(args, out) -> int:
    sweep = args.mode == "sweep"
    workers = args.threads or default_workers()
    flags = _flag_config(args, sweep)
    if args.config:
        cfg = load_config(args.config)
        cfg.update(flags)  # explicit flags override the file
        where = args.config
    else:
        cfg, where = flags, "flags"
    build = sweep_spec_from_dict if sweep else sim_spec_from_dict
    try:
        spec = build(cfg, where)
    except DomainError as exc:
        if args.config:
            raise
        raise _UsageError(str(exc)) from None

    if not sweep:
        runner = run_tie if args.mode == "tie" else run_power
        summary = runner(spec, workers=workers)
        _jsonl({"record": "scenario", **summary.to_dict()}, out)
        _jsonl({"record": "aggregate", "mode": args.mode, "percent": _percent(summary.rejection_rate)}, out)
        return EXIT_OK

    rates: dict[str, list[float]] = {m.value: [] for m in spec.methods}
    n = 0
    for rec in run_sweep(spec, workers=workers):
        _jsonl({"record": "scenario", **rec.to_dict()}, out)
        for k, v in rec.summary.rejection_rate.items():
            rates[k].append(v)
        n += 1
    quantiles = {}
    for k, vals in rates.items():
        v = np.asarray(vals, dtype=float)
        v = v[np.isfinite(v)]
        qs = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0]) if v.size else [math.nan] * 5
        quantiles[k] = dict(zip(("min", "q1", "median", "q3", "max"), (round(100.0 * q, 3) for q in qs)))
    _jsonl({"record": "aggregate", "mode": "sweep", "scenarios": n, "percent": quantiles}, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# tables


def _fmt_cell(key: str, value: Any) -> str:
    if isinstance(value, str):
        return value
    if key in ("theta", "pi"):
        return f"{value:g}"
    if key == "max_diff":
        return f"{value:.2f}"
    return f"{value:.3f}"


def cmd_tables(args, out) -> int:
    workers = args.threads or default_workers()
    results = []
    for cell, summary in run_cells(args.which, args.reps, args.seed, workers, args.alpha):
        results.append((cell, summary))
        if not args.quiet:
            rates = ", ".join(f"{k} {100 * v:.3f}" for k, v in summary.rejection_rate.items())
            print(f"theta={cell.theta:g} {cell.key} m={cell.m}: {rates}", file=sys.stderr, flush=True)
    rows = table_rows(args.which, results)
    target = open(args.output, "w", newline="", encoding="utf-8") if args.output else out
    try:
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(list(rows[0]))
        for row in rows:
            writer.writerow([_fmt_cell(k, v) for k, v in row.items()])
    finally:
        if args.output:
            target.close()
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="claytonpair",
        description="Clayton-copula fits and homogeneity tests for paired binary data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("data", help="table CSV (group,m0,m1,m2) or a bundled name: example1, example2")
        p.add_argument("--json", action="store_true", help="print the full JSON report instead of text")
        p.add_argument("-o", "--output", help="also write the JSON report to this file")
        return p

    p = data_command("fit", "maximum-likelihood estimates")
    p.add_argument("--hypothesis", choices=("alternative", "null", "both"), default="both")
    p.set_defaults(func=cmd_fit)

    p = data_command("test", "homogeneity tests of the group rates")
    p.add_argument("--method", choices=("lr", "score", "wald", "all"), default="all")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="Monte Carlo Type-I error, power or random sweep (JSON lines)")
    p.add_argument("mode", choices=("tie", "power", "sweep"))
    p.add_argument("--config", help="JSON file with the scenario fields")
    p.add_argument("--g", type=int)
    p.add_argument("--m", type=_ints, help="group size, or comma-separated sizes")
    p.add_argument("--pi", type=_floats, help="common rate, or comma-separated rates")
    p.add_argument("--case", choices=tuple(CASES), help="named rate configuration")
    p.add_argument("--theta", type=float, help="Clayton parameter (0 = independence)")
    p.add_argument("--reps", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--methods", help="comma-separated subset of lr,score,wald")
    p.add_argument("--scenarios", type=int, help="sweep: number of random scenarios")
    p.add_argument("--floor", type=float, help="sweep: lower bound on every cell probability")
    p.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tables", help="rerun a full simulation grid and print it as CSV")
    p.add_argument("which", choices=TABLES)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("-o", "--output", help="write the CSV here instead of stdout")
    p.add_argument("-q", "--quiet", action="store_true", help="no per-cell progress on stderr")
    p.set_defaults(func=cmd_tables)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except _UsageError as exc:
        parser.error(str(exc))
    except (ClaytonPairError, OSError, ValueError) as exc:
        print(f"claytonpair: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
