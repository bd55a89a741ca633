"""Table CSV files, bundled datasets, JSON reports and simulation configs."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

from . import __version__
from .copula import kendall_tau, pearson_rho
from .errors import DomainError, TableError
from .estimation import FitResult
from .frequency import FrequencyTable
from .homogeneity import TestReport
from .simulation import SimSpec, SweepSpec

HEADER = ("group", "m0", "m1", "m2")
BUNDLED = ("example1", "example2")


class TableParseError(TableError):
    """Malformed table file; the message names the offending line."""


def parse_table(text: str, source: str = "<table>") -> FrequencyTable:
    """Parse ``group,m0,m1,m2`` CSV text.  Lines starting with ``#`` are skipped."""
    header_seen = False
    rows = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = [f.strip() for f in next(csv.reader([line]))]
        if not header_seen:
            if tuple(f.lower() for f in fields) != HEADER:
                raise TableParseError(
                    f"{source}:{lineno}: expected header {','.join(HEADER)}, got {line.strip()!r}"
                )
            header_seen = True
            continue
        if len(fields) != 4:
            raise TableParseError(
                f"{source}:{lineno}: row {line.strip()!r} has {len(fields)} fields, expected 4"
            )
        label = fields[0]
        if not label:
            raise TableParseError(f"{source}:{lineno}: empty group label")
        if label in seen:
            raise TableParseError(
                f"{source}:{lineno}: duplicate group label {label!r} (first on line {seen[label]})"
            )
        try:
            counts = [int(f) for f in fields[1:]]
        except ValueError:
            raise TableParseError(
                f"{source}:{lineno}: row {line.strip()!r} has non-integer counts"
            ) from None
        if min(counts) < 0:
            raise TableParseError(f"{source}:{lineno}: row {line.strip()!r} has negative counts")
        seen[label] = lineno
        rows.append((label, *counts))
    if not header_seen:
        raise TableParseError(f"{source}: no header line")
    try:
        return FrequencyTable.from_rows(rows)
    except TableError as exc:
        raise TableParseError(f"{source}: {exc}") from None


def format_table(table: FrequencyTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    writer.writerows(table.rows())
    return buf.getvalue()


def bundled_text(name: str) -> str:
    stem = name[:-4] if name.endswith(".csv") else name
    if stem not in BUNDLED:
        raise FileNotFoundError(f"no bundled dataset {name!r}; available: {', '.join(BUNDLED)}")
    return resources.files("claytonpair.data").joinpath(f"{stem}.csv").read_text(encoding="utf-8")


def read_table(path: str | Path) -> tuple[FrequencyTable, str]:
    """Read a table file, falling back to a bundled dataset of the same name.

    Returns the table and the raw text it was parsed from.
    """
    p = Path(path)
    if p.is_file():
        text = p.read_text(encoding="utf-8")
    else:
        try:
            text = bundled_text(p.name)
        except FileNotFoundError:
            raise FileNotFoundError(f"{path}: no such file or bundled dataset") from None
    return parse_table(text, str(path)), text


def table_digest(table: FrequencyTable) -> str:
    """sha256 of the canonical CSV form, so comments and spacing do not matter."""
    return hashlib.sha256(format_table(table).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# reports


def fit_record(res: FitResult) -> dict[str, Any]:
    p = res.params_hat
    return {
        "pis": list(p.pis),
        "theta": p.theta,
        "tau": kendall_tau(p.theta),
        "rho": [pearson_rho(pi, p.theta) for pi in p.pis],
        "loglik": res.loglik_hat,
        "converged": res.converged,
        "grad_norm": res.grad_norm,
        "iterations": res.iterations,
        "n_starts_used": res.n_starts_used,
        "boundary_warning": res.boundary_warning,
    }


def test_record(rep: TestReport, alpha: float) -> dict[str, Any]:
    return {
        "statistic": rep.statistic,
        "df": rep.df,
        "p_value": rep.p_value,
        "alpha": alpha,
        "reject": rep.rejects(alpha),
    }


def build_report(
    table: FrequencyTable,
    fits: Mapping[str, FitResult],
    tests: Mapping[str, TestReport] | None = None,
    *,
    alpha: float = 0.05,
    seed: int | None = None,
) -> dict[str, Any]:
    return {
        "tool": "claytonpair",
        "version": __version__,
        "input": {
            "sha256": table_digest(table),
            "groups": list(table.labels),
            "counts": table.counts.tolist(),
        },
        "fits": {name: fit_record(res) for name, res in fits.items()},
        "tests": {name: test_record(rep, alpha) for name, rep in (tests or {}).items()},
        "seed": seed,
    }


def dumps(obj: Any) -> str:
    # json writes floats with repr(), which round-trips exactly.
    return json.dumps(obj, indent=2)


def write_report(report: Mapping[str, Any], path: str | Path) -> None:
    Path(path).write_text(dumps(report) + "\n", encoding="utf-8")


def load_report(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# simulation configs

SIM_FIELDS = {"g", "m", "pis", "pi", "case", "theta", "reps", "alpha", "seed", "methods"}
SWEEP_FIELDS = {"g", "m", "reps", "n_scenarios", "scenarios", "floor", "seed", "alpha", "methods"}


def _check_keys(cfg: Mapping[str, Any], allowed: Iterable[str], where: str) -> None:
    extra = sorted(set(cfg) - set(allowed))
    if extra:
        raise DomainError(f"{where}: unknown field(s) {', '.join(extra)}")


def _prefixed(where: str, build):
    try:
        return build()
    except (DomainError, TypeError, ValueError) as exc:
        raise DomainError(f"{where}.{exc}") from None


def sim_spec_from_dict(cfg: Mapping[str, Any], where: str = "config") -> SimSpec:
    """Build a :class:`SimSpec`; ``pi`` is accepted for ``pis`` and ``case``
    names one of the power configurations."""
    from .grids import CASES

    _check_keys(cfg, SIM_FIELDS, where)
    cfg = dict(cfg)
    if "case" in cfg:
        case = str(cfg.pop("case"))
        if case not in CASES:
            raise DomainError(f"{where}.case: unknown case {case!r}; expected one of {', '.join(CASES)}")
        cfg.setdefault("pis", CASES[case])
        cfg.setdefault("g", len(CASES[case]))
    if "pi" in cfg:
        cfg["pis"] = cfg.pop("pi")
    for key in ("g", "m", "pis", "theta"):
        if key not in cfg:
            raise DomainError(f"{where}.{key}: required field missing")
    return _prefixed(where, lambda: SimSpec(**cfg))


def sweep_spec_from_dict(cfg: Mapping[str, Any], where: str = "config") -> SweepSpec:
    _check_keys(cfg, SWEEP_FIELDS, where)
    cfg = dict(cfg)
    if "scenarios" in cfg:
        cfg["n_scenarios"] = cfg.pop("scenarios")
    for key in ("g", "m"):
        if key not in cfg:
            raise DomainError(f"{where}.{key}: required field missing")
    return _prefixed(where, lambda: SweepSpec(**cfg))


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise DomainError(f"{path}: expected a JSON object")
    return cfg
