"""Seeded Monte Carlo studies of Type-I error and power.

Replicate ``r`` of scenario ``s`` draws from a Philox stream whose key is
``(seed, s)`` and whose counter starts at ``r << 64``, so every table is
fixed by ``(seed, s, r)`` alone.  Replicates are processed in blocks of
``BLOCK_SIZE`` that do not depend on the worker count, and only integer
counts are aggregated; the output is therefore identical for any degree of
parallelism.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .chisq import chisq_isf
from .copula import check_rate, check_theta, diagonal_pieces, tau_to_theta
from .errors import DomainError, H0ViolationInSpec, SamplingExhausted
from .estimation import fit_batch
from .frequency import FrequencyTable
from .homogeneity import (
    ALL_METHODS,
    Method,
    lr_statistics,
    refit_from_null,
    score_statistics,
    wald_statistics,
)
from .likelihood import Hypothesis

BLOCK_SIZE = 500
FAILURE_FLAG_SHARE = 0.01
MAX_PROPOSALS = 100_000
_MASK64 = (1 << 64) - 1
# Stream index reserved for drawing sweep scenarios.
SWEEP_STREAM = _MASK64


def replicate_rng(seed: int, scenario: int, rep: int) -> np.random.Generator:
    key = (int(seed) & _MASK64) | ((int(scenario) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key, counter=(int(rep) & _MASK64) << 64))


def _methods(methods) -> tuple[Method, ...]:
    out = []
    for m in methods:
        m = m if isinstance(m, Method) else Method.parse(m)
        if m not in out:
            out.append(m)
    if not out:
        raise DomainError("at least one test method is required")
    return tuple(sorted(out, key=ALL_METHODS.index))


@dataclass(frozen=True)
class SimSpec:
    """One simulation scenario.  ``m`` may be a single balanced size."""

    g: int
    m: tuple[int, ...]
    pis: tuple[float, ...]
    theta: float
    reps: int = 10_000
    alpha: float = 0.05
    seed: int = 0
    methods: tuple[Method, ...] = ALL_METHODS
    scenario: int = 0

    def __post_init__(self):
        g = int(self.g)
        if g < 2:
            raise DomainError(f"g: need at least two groups, got {g}")
        m = tuple(int(x) for x in np.atleast_1d(self.m))
        if len(m) == 1:
            m = m * g
        if len(m) != g or min(m) < 1:
            raise DomainError(f"m: expected {g} positive sizes, got {m}")
        pis = tuple(float(p) for p in np.atleast_1d(self.pis))
        if len(pis) == 1:
            pis = pis * g
        if len(pis) != g:
            raise DomainError(f"pis: expected {g} rates, got {len(pis)}")
        for p in pis:
            check_rate(p)
        if int(self.reps) < 1:
            raise DomainError(f"reps: must be >= 1, got {self.reps}")
        if not 0.0 < float(self.alpha) < 1.0:
            raise DomainError(f"alpha: must lie in (0, 1), got {self.alpha}")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "pis", pis)
        object.__setattr__(self, "theta", check_theta(self.theta))
        object.__setattr__(self, "reps", int(self.reps))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "methods", _methods(self.methods))
        object.__setattr__(self, "scenario", int(self.scenario))

    @property
    def is_null(self) -> bool:
        return len(set(self.pis)) == 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = [m.value for m in self.methods]
        return d


@dataclass
class SimSummary:
    """Rejection fractions of one scenario; failed replicates are excluded
    per method and reported."""

    spec: SimSpec
    rejections: dict[str, int]
    failures: dict[str, int]
    elapsed_reps: int

    @property
    def effective_reps(self) -> dict[str, int]:
        return {k: self.elapsed_reps - v for k, v in self.failures.items()}

    @property
    def rejection_rate(self) -> dict[str, float]:
        eff = self.effective_reps
        return {k: (v / eff[k] if eff[k] else float("nan")) for k, v in self.rejections.items()}

    @property
    def flagged(self) -> bool:
        return any(v > FAILURE_FLAG_SHARE * self.elapsed_reps for v in self.failures.values())

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "rejection_rate": self.rejection_rate,
            "rejections": dict(self.rejections),
            "failures": dict(self.failures),
            "effective_reps": self.effective_reps,
            "elapsed_reps": self.elapsed_reps,
            "flagged": self.flagged,
        }


def cell_matrix(pis: Sequence[float], theta: float) -> np.ndarray:
    """``(g, 3)`` cell probabilities; ``theta == 0`` gives exact independence."""
    d = diagonal_pieces(np.asarray(pis, dtype=float), theta)
    return np.stack([d.p0, d.p1, d.p2], axis=-1)


def draw_counts(cells: np.ndarray, m: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    return rng.multinomial(np.asarray(m, dtype=np.int64), cells)


def generate_table(pis, theta, m, rng: np.random.Generator) -> FrequencyTable:
    """Draw one table: ``m_i`` independent subjects per group over the three cells."""
    pis = [check_rate(p) for p in np.atleast_1d(pis)]
    m = np.atleast_1d(m)
    if len(m) == 1:
        m = np.repeat(m, len(pis))
    counts = draw_counts(cell_matrix(pis, check_theta(theta)), m, rng)
    return FrequencyTable.from_counts(counts)


def block_statistics(counts: np.ndarray, methods: Iterable[Method]) -> dict[Method, np.ndarray]:
    """Test statistics for a ``(B, g, 3)`` batch; failed replicates are NaN."""
    methods = tuple(methods)
    f0 = fit_batch(counts, Hypothesis.NULL)
    out = {}
    fa = None
    if Method.LR in methods or Method.WALD in methods:
        fa = refit_from_null(counts, fit_batch(counts, Hypothesis.ALTERNATIVE), f0)
    if Method.LR in methods:
        ok = f0.converged & fa.converged
        out[Method.LR] = np.where(ok, lr_statistics(f0, fa), np.nan)
    if Method.SCORE in methods:
        out[Method.SCORE] = np.where(f0.converged, score_statistics(counts, f0), np.nan)
    if Method.WALD in methods:
        ok = f0.converged & fa.converged
        out[Method.WALD] = np.where(ok, wald_statistics(counts, fa, f0), np.nan)
    return out


def _block_tables(spec: SimSpec, start: int, stop: int) -> np.ndarray:
    cells = cell_matrix(spec.pis, spec.theta)
    return np.stack(
        [draw_counts(cells, spec.m, replicate_rng(spec.seed, spec.scenario, r)) for r in range(start, stop)]
    )


def _run_block(spec: SimSpec, start: int, stop: int) -> dict[str, np.ndarray]:
    counts = _block_tables(spec, start, stop)
    stats = block_statistics(counts, spec.methods)
    return {m.value: v for m, v in stats.items()}


def _blocks(reps: int) -> list[tuple[int, int]]:
    return [(a, min(a + BLOCK_SIZE, reps)) for a in range(0, reps, BLOCK_SIZE)]


def default_workers() -> int:
    return os.cpu_count() or 1


class _Pool:
    """Runs blocks in-process for one worker, otherwise on a process pool."""

    def __init__(self, workers: int | None):
        self.workers = max(1, int(workers or default_workers()))
        self._ex = ProcessPoolExecutor(self.workers) if self.workers > 1 else None

    def map_blocks(self, spec: SimSpec) -> list[dict[str, np.ndarray]]:
        blocks = _blocks(spec.reps)
        if self._ex is None:
            return [_run_block(spec, a, b) for a, b in blocks]
        futures = [self._ex.submit(_run_block, spec, a, b) for a, b in blocks]
        return [f.result() for f in futures]

    def close(self):
        if self._ex is not None:
            self._ex.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def simulate_statistics(spec: SimSpec, workers: int | None = 1, pool: _Pool | None = None) -> dict[str, np.ndarray]:
    """Raw statistics of every replicate in order (NaN marks a failed fit)."""
    own = pool is None
    pool = pool or _Pool(workers)
    try:
        parts = pool.map_blocks(spec)
    finally:
        if own:
            pool.close()
    return {m.value: np.concatenate([p[m.value] for p in parts]) for m in spec.methods}


def _summarize(spec: SimSpec, stats: dict[str, np.ndarray]) -> SimSummary:
    crit = chisq_isf(spec.alpha, spec.g - 1)
    rejections, failures = {}, {}
    for name, values in stats.items():
        bad = ~np.isfinite(values)
        failures[name] = int(bad.sum())
        rejections[name] = int(np.sum(values[~bad] > crit))
    return SimSummary(spec, rejections, failures, spec.reps)


def run_power(spec: SimSpec, workers: int | None = 1, pool: _Pool | None = None) -> SimSummary:
    """Empirical rejection rates at level ``alpha`` (reject when ``p < alpha``)."""
    return _summarize(spec, simulate_statistics(spec, workers, pool))


def run_tie(spec: SimSpec, workers: int | None = 1, pool: _Pool | None = None) -> SimSummary:
    """Empirical Type-I error; the scenario must have equal group rates."""
    if not spec.is_null:
        raise H0ViolationInSpec(f"pis: Type-I error needs equal rates, got {spec.pis}")
    return run_power(spec, workers, pool)


@dataclass(frozen=True)
class SweepSpec:
    g: int
    m: int
    reps: int = 10_000
    n_scenarios: int = 1000
    floor: float = 0.1
    seed: int = 0
    alpha: float = 0.05
    methods: tuple[Method, ...] = ALL_METHODS
    pi_range: tuple[float, float] = (0.01, 0.99)
    tau_range: tuple[float, float] = (0.01, 0.95)

    def __post_init__(self):
        if not 0.0 <= float(self.floor) < 0.25:
            raise DomainError(f"floor: must lie in [0, 0.25), got {self.floor}")
        if int(self.n_scenarios) < 1:
            raise DomainError(f"n_scenarios: must be >= 1, got {self.n_scenarios}")
        for name, least in (("g", 2), ("m", 1), ("reps", 1)):
            value = int(getattr(self, name))
            if value < least:
                raise DomainError(f"{name}: must be >= {least}, got {value}")
            object.__setattr__(self, name, value)
        if not 0.0 < float(self.alpha) < 1.0:
            raise DomainError(f"alpha: must lie in (0, 1), got {self.alpha}")
        object.__setattr__(self, "n_scenarios", int(self.n_scenarios))
        object.__setattr__(self, "floor", float(self.floor))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "methods", _methods(self.methods))
        object.__setattr__(self, "pi_range", tuple(map(float, self.pi_range)))
        object.__setattr__(self, "tau_range", tuple(map(float, self.tau_range)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = [m.value for m in self.methods]
        return d


def passes_floor(pi: float, theta: float, floor: float) -> bool:
    p0, p1, p2 = cell_matrix([pi], theta)[0]
    return bool(min(p0, p1, p2) > floor)


def sweep_scenarios(spec: SweepSpec) -> list[tuple[float, float]]:
    """Rejection-sample ``(pi, theta)`` pairs whose three cells exceed the floor."""
    rng = replicate_rng(spec.seed, SWEEP_STREAM, 0)
    out = []
    misses = 0
    while len(out) < spec.n_scenarios:
        pi = rng.uniform(*spec.pi_range)
        theta = tau_to_theta(rng.uniform(*spec.tau_range))
        if passes_floor(pi, theta, spec.floor):
            out.append((float(pi), float(theta)))
            misses = 0
        else:
            misses += 1
            if misses >= MAX_PROPOSALS:
                raise SamplingExhausted(f"{MAX_PROPOSALS} consecutive proposals below floor {spec.floor}")
    return out


@dataclass
class SweepRecord:
    scenario: int
    pi: float
    theta: float
    tau: float
    summary: SimSummary = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "pi": self.pi,
            "theta": self.theta,
            "tau": self.tau,
            **{k: v for k, v in self.summary.to_dict().items() if k != "spec"},
        }


def run_sweep(spec: SweepSpec, workers: int | None = 1) -> Iterable[SweepRecord]:
    """Null-hypothesis study over random scenarios; yields one record per scenario."""
    scenarios = sweep_scenarios(spec)
    with _Pool(workers) as pool:
        for s, (pi, theta) in enumerate(scenarios):
            sim = SimSpec(
                g=spec.g,
                m=(spec.m,),
                pis=(pi,),
                theta=theta,
                reps=spec.reps,
                alpha=spec.alpha,
                seed=spec.seed,
                methods=spec.methods,
                scenario=s,
            )
            yield SweepRecord(s, pi, theta, theta / (theta + 2.0), run_tie(sim, pool=pool))
