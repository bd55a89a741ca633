"""Scenario grids of the Type-I error and power studies.

Each table crosses ``theta`` in {0, 2, 8} with either a common rate (Type-I
error) or a rate configuration (power) and a balanced group size in
{30, 55, 100}.  Every cell gets its own scenario index, so cells draw from
disjoint random streams under one seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .copula import pearson_rho
from .simulation import SimSpec, SimSummary, _Pool, run_power

THETAS = (0.0, 2.0, 8.0)
SIZES = (30, 55, 100)
TIE_RATES = (0.4, 0.5, 0.6, 0.7)

CASES = {
    "1": (0.4, 0.4, 0.5),
    "2": (0.4, 0.4, 0.53),
    "3": (0.5, 0.5, 0.67),
    "4": (0.6, 0.6, 0.8),
    "A": (0.4, 0.4, 0.45, 0.45, 0.5, 0.5),
    "B": (0.4, 0.4, 0.45, 0.45, 0.53, 0.53),
    "C": (0.5, 0.5, 0.6, 0.6, 0.67, 0.67),
    "D": (0.6, 0.6, 0.7, 0.7, 0.8, 0.8),
}

TABLES = ("tie3", "tie6", "power3", "power6")


@dataclass(frozen=True)
class Cell:
    theta: float
    key: str  # common rate for Type-I error tables, case name for power tables
    m: int
    spec: SimSpec


def _rows(which: str) -> list[tuple[str, tuple[float, ...]]]:
    if which not in TABLES:
        raise ValueError(f"unknown table {which!r}; expected one of {', '.join(TABLES)}")
    g = int(which[-1])
    if which.startswith("tie"):
        return [(f"{p:g}", (p,) * g) for p in TIE_RATES]
    return [(name, pis) for name, pis in CASES.items() if len(pis) == g]


def cells(which: str, reps: int = 10_000, seed: int = 0, alpha: float = 0.05) -> Iterator[Cell]:
    """Grid cells of one table in row-major order (theta, row, m)."""
    index = 0
    for theta in THETAS:
        for key, pis in _rows(which):
            for m in SIZES:
                spec = SimSpec(
                    g=len(pis), m=(m,), pis=pis, theta=theta,
                    reps=reps, alpha=alpha, seed=seed, scenario=index,
                )
                yield Cell(theta, key, m, spec)
                index += 1


def run_cells(which: str, reps: int = 10_000, seed: int = 0, workers: int | None = 1, alpha: float = 0.05):
    """Run every cell; yields ``(cell, summary)`` pairs."""
    with _Pool(workers) as pool:
        for cell in cells(which, reps, seed, alpha):
            yield cell, run_power(cell.spec, pool=pool)


def table_rows(which: str, results: list[tuple[Cell, SimSummary]]) -> list[dict]:
    """Collapse cell results into rows shaped like the reference tables.

    Rates are percentages.  Type-I error rows carry the within-pair Pearson
    correlation; power rows carry the largest rate difference.
    """
    rows: dict[tuple[float, str], dict] = {}
    for cell, summary in results:
        row = rows.get((cell.theta, cell.key))
        if row is None:
            row = {"theta": cell.theta}
            if which.startswith("tie"):
                pi = float(cell.key)
                row["pi"] = pi
                row["rho"] = pearson_rho(pi, cell.theta)
            else:
                pis = cell.spec.pis
                row["case"] = cell.key
                row["max_diff"] = max(pis) - min(pis)
            rows[(cell.theta, cell.key)] = row
        for method, rate in summary.rejection_rate.items():
            row[f"{method.lower()}_{cell.m}"] = 100.0 * rate
    return list(rows.values())
