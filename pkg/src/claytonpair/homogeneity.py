"""Likelihood-ratio, score and Wald tests of equal group rates.

Every statistic is referred to a chi-square distribution with ``g - 1``
degrees of freedom.  The ``*_statistics`` kernels work on batches of tables
and are what the simulation harness uses.  :func:`lr_test`,
:func:`score_test` and :func:`wald_test` handle one table and raise on
singular information instead of returning NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np
from scipy.special import logit

from .chisq import chisq_sf
from .errors import NoConvergence, SingularInformation
from .estimation import THETA_FLOOR, BatchFit, FitResult, fit, optimize_batch
from .fisher import assemble_info, info_entries, solve_arrowhead, solve_arrowhead_arrays
from .frequency import FrequencyTable
from .likelihood import Hypothesis, ModelParams, as_counts, score_terms, score_vector


class Method(str, Enum):
    LR = "LR"
    SCORE = "Score"
    WALD = "Wald"

    @classmethod
    def parse(cls, name: str) -> "Method":
        key = name.strip().lower()
        for m in cls:
            if m.value.lower() == key:
                return m
        raise ValueError(f"unknown test method {name!r}; expected one of lr, score, wald")


ALL_METHODS = (Method.LR, Method.SCORE, Method.WALD)


@dataclass(frozen=True)
class TestReport:
    """Outcome of one homogeneity test.

    ``fit_h0`` / ``fit_ha`` hold the fits the statistic was computed from;
    the score test leaves ``fit_ha`` empty.
    """

    __test__ = False  # keep pytest from collecting this class

    method: Method
    statistic: float
    df: int
    p_value: float
    fit_h0: FitResult | None = None
    fit_ha: FitResult | None = None

    def rejects(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


def adjacent_contrast(g: int) -> np.ndarray:
    """``(g-1, g+1)`` matrix of ``pi_i - pi_{i+1}`` rows with a zero theta column."""
    c = np.zeros((g - 1, g + 1))
    idx = np.arange(g - 1)
    c[idx, idx] = 1.0
    c[idx, idx + 1] = -1.0
    return c


# ---------------------------------------------------------------------------
# batch kernels


def refit_from_null(counts, fit_ha: BatchFit, fit_h0: BatchFit) -> BatchFit:
    """Restart the alternative fit from the null optimum wherever it ended
    below the null log-likelihood (a restricted maximum can never beat the
    unrestricted one)."""
    worse = fit_ha.loglik < fit_h0.loglik
    if not worse.any():
        return fit_ha
    counts = np.asarray(counts, dtype=float)[worse]
    g = counts.shape[1]
    x0 = np.concatenate(
        [np.repeat(logit(fit_h0.pis[worse]), g, axis=1), np.log(fit_h0.theta[worse])[:, None]],
        axis=-1,
    )
    x, f, conv, gn, it, bound = optimize_batch(counts, x0)
    out = BatchFit(**{k: v.copy() for k, v in vars(fit_ha).items()})
    better = f >= out.loglik[worse]
    rows = np.flatnonzero(worse)[better]
    out.pis[rows] = 1.0 / (1.0 + np.exp(-x[better, :-1]))
    out.theta[rows] = np.exp(x[better, -1])
    out.loglik[rows] = f[better]
    out.converged[rows] = conv[better]
    out.grad_norm[rows] = gn[better]
    out.iterations[rows] = it[better]
    out.boundary[rows] = bound[better]
    return out


def lr_statistics(fit_h0: BatchFit, fit_ha: BatchFit) -> np.ndarray:
    return 2.0 * np.maximum(fit_ha.loglik - fit_h0.loglik, 0.0)


def at_theta_floor(theta) -> np.ndarray:
    return np.asarray(theta) <= THETA_FLOOR * (1.0 + 1e-9)


def score_statistics(counts, fit_h0: BatchFit) -> np.ndarray:
    """``U' I^-1 U`` at the null optimum, one value per table.

    The theta component of ``U`` vanishes at an interior null optimum.  When
    theta sits on its floor the constrained optimum leaves a nonzero theta
    score that says nothing about the rates, so it is set to zero there.
    """
    counts = np.asarray(counts, dtype=float)
    g = counts.shape[1]
    pi = np.repeat(fit_h0.pis, g, axis=1)
    theta = fit_h0.theta
    with np.errstate(all="ignore"):
        d_pi, t = score_terms(counts, pi, theta)
        u_theta = np.where(at_theta_floor(theta), 0.0, t.sum(axis=-1))
        u = np.concatenate([d_pi, u_theta[:, None]], axis=-1)
        diag, border, corner = info_entries(counts.sum(axis=-1), pi, theta)
        sol, schur = solve_arrowhead_arrays(diag, border, corner, u)
        stat = np.sum(u * sol, axis=-1)
    return np.where(schur > 0, stat, np.nan)


def wald_statistics(
    counts,
    fit_ha: BatchFit,
    fit_h0: BatchFit | None = None,
    contrast: np.ndarray | None = None,
) -> np.ndarray:
    """``(C b)' (C I^-1 C')^-1 (C b)`` with ``b`` the unrestricted optimum.

    The information matrix is evaluated at the null optimum when ``fit_h0``
    is given (the default route of :func:`wald_test`), otherwise at ``b``.
    """
    counts = np.asarray(counts, dtype=float)
    g = counts.shape[1]
    c = adjacent_contrast(g) if contrast is None else np.asarray(contrast, dtype=float)
    beta = np.concatenate([fit_ha.pis, fit_ha.theta[:, None]], axis=-1)
    if fit_h0 is None:
        pi_info, theta_info = fit_ha.pis, fit_ha.theta
    else:
        pi_info, theta_info = np.repeat(fit_h0.pis, g, axis=1), fit_h0.theta
    with np.errstate(all="ignore"):
        diag, border, corner = info_entries(counts.sum(axis=-1), pi_info, theta_info)
        rhs = np.broadcast_to(c.T, (len(beta),) + c.T.shape)
        inv_ct, schur = solve_arrowhead_arrays(diag, border, corner, rhs)
        middle = np.einsum("rj,bjs->brs", c, inv_ct)
        cb = beta @ c.T
        ok = (schur > 0) & np.all(np.isfinite(middle), axis=(-2, -1))
        middle[~ok] = np.eye(c.shape[0])
        stat = np.einsum("br,br->b", cb, np.linalg.solve(middle, cb[..., None])[..., 0])
    return np.where(ok, stat, np.nan)


# ---------------------------------------------------------------------------
# single-table API


def _batch_view(res: FitResult) -> BatchFit:
    p = res.params_hat
    return BatchFit(
        pis=np.atleast_2d(np.array(p.pis)),
        theta=np.array([p.theta]),
        loglik=np.array([res.loglik_hat]),
        converged=np.array([res.converged]),
        grad_norm=np.array([res.grad_norm]),
        iterations=np.array([res.iterations]),
        boundary=np.array([res.boundary_warning]),
    )


def _as_table(table) -> FrequencyTable:
    if isinstance(table, FrequencyTable):
        return table
    return FrequencyTable.from_counts(as_counts(table).astype(np.int64))


def _fit_ha_nested(table: FrequencyTable, fit_h0: FitResult) -> FitResult:
    res = fit(table, Hypothesis.ALTERNATIVE)
    if res.loglik_hat >= fit_h0.loglik_hat:
        return res
    counts = table.counts[None].astype(float)
    fixed = refit_from_null(counts, _batch_view(res), _batch_view(fit_h0))
    if not fixed.converged[0]:
        raise NoConvergence("alternative fit restarted from the null optimum did not converge")
    return FitResult(
        ModelParams(tuple(fixed.pis[0]), float(fixed.theta[0])),
        float(fixed.loglik[0]),
        True,
        float(fixed.grad_norm[0]),
        res.iterations + int(fixed.iterations[0]),
        res.n_starts_used + 1,
        bool(fixed.boundary[0]),
    )


def _report(method, stat, g, fit_h0=None, fit_ha=None) -> TestReport:
    stat = float(stat)
    if not np.isfinite(stat):
        raise SingularInformation(f"{method.value} statistic is not finite")
    stat = max(stat, 0.0)
    return TestReport(method, stat, g - 1, chisq_sf(stat, g - 1), fit_h0, fit_ha)


def lr_test(table, *, fit_h0: FitResult | None = None, fit_ha: FitResult | None = None) -> TestReport:
    """Likelihood-ratio test ``2 (l_a - l_0)``."""
    table = _as_table(table)
    fit_h0 = fit_h0 or fit(table, Hypothesis.NULL)
    fit_ha = fit_ha or _fit_ha_nested(table, fit_h0)
    stat = 2.0 * (fit_ha.loglik_hat - fit_h0.loglik_hat)
    return _report(Method.LR, stat, table.g, fit_h0, fit_ha)


def score_test(table, *, fit_h0: FitResult | None = None) -> TestReport:
    """Score test at the pooled optimum, using per-group score components."""
    table = _as_table(table)
    fit_h0 = fit_h0 or fit(table, Hypothesis.NULL)
    p0 = fit_h0.params_hat
    u = score_vector(p0, table)
    if at_theta_floor(p0.theta):
        u[-1] = 0.0  # see score_statistics
    info = assemble_info(p0, table)
    stat = float(u @ solve_arrowhead(info, u))
    return _report(Method.SCORE, stat, table.g, fit_h0=fit_h0)


def wald_test(
    table,
    *,
    fit_ha: FitResult | None = None,
    fit_h0: FitResult | None = None,
    contrast: np.ndarray | None = None,
    info_at: Hypothesis | str = Hypothesis.NULL,
) -> TestReport:
    """Wald test of ``C beta = 0`` with ``beta = (pi_1, ..., pi_g, theta)``.

    ``beta`` is the unrestricted optimum.  The expected information is taken
    at the pooled (null) optimum by default; ``info_at="alternative"`` uses
    the unrestricted optimum instead.  ``contrast`` defaults to adjacent
    differences; any full-row-rank matrix with the same row space gives the
    same statistic.
    """
    table = _as_table(table)
    info_at = Hypothesis(info_at)
    fit_ha = fit_ha or fit(table, Hypothesis.ALTERNATIVE)
    params = fit_ha.params_hat
    if info_at is Hypothesis.NULL:
        fit_h0 = fit_h0 or fit(table, Hypothesis.NULL)
        info = assemble_info(fit_h0.params_hat, table)
    else:
        info = assemble_info(params, table)
    c = adjacent_contrast(table.g) if contrast is None else np.asarray(contrast, dtype=float)
    beta = np.append(params.pis, params.theta)
    cb = c @ beta
    middle = c @ solve_arrowhead(info, c.T)
    try:
        stat = float(cb @ np.linalg.solve(middle, cb))
    except np.linalg.LinAlgError as exc:
        raise SingularInformation(f"contrast covariance is singular: {exc}") from exc
    return _report(Method.WALD, stat, table.g, fit_h0=fit_h0, fit_ha=fit_ha)


def run_tests(table, methods: Iterable[Method | str] = ALL_METHODS) -> dict[Method, TestReport]:
    """Run several tests on one table, sharing the fits between them."""
    table = _as_table(table)
    methods = [m if isinstance(m, Method) else Method.parse(m) for m in methods]
    fit_h0 = fit(table, Hypothesis.NULL)
    fit_ha = None
    if Method.LR in methods or Method.WALD in methods:
        fit_ha = _fit_ha_nested(table, fit_h0)
    out = {}
    for m in methods:
        if m is Method.LR:
            out[m] = lr_test(table, fit_h0=fit_h0, fit_ha=fit_ha)
        elif m is Method.SCORE:
            out[m] = score_test(table, fit_h0=fit_h0)
        else:
            out[m] = wald_test(table, fit_ha=fit_ha, fit_h0=fit_h0)
    return out
