"""Log-likelihood of grouped paired-binary counts and its score components.

All array kernels take ``counts`` of shape ``(..., k, 3)``, rates of shape
``(..., k)`` and ``theta`` of shape ``(...)``; counts may be real-valued.
The public functions wrap them for a single :class:`FrequencyTable`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .copula import check_rate, check_theta, diagonal_pieces
from .errors import DomainError, NonfiniteLikelihood
from .frequency import FrequencyTable

TINY_PROB = 1e-300


class Hypothesis(str, Enum):
    NULL = "null"
    ALTERNATIVE = "alternative"


@dataclass(frozen=True)
class ModelParams:
    """Group rates and the copula parameter.

    Under :attr:`Hypothesis.NULL` ``pis`` holds the single common rate.
    """

    pis: tuple[float, ...]
    theta: float
    hypothesis: Hypothesis = Hypothesis.ALTERNATIVE

    def __post_init__(self):
        pis = tuple(check_rate(p) for p in np.atleast_1d(self.pis))
        hyp = Hypothesis(self.hypothesis)
        if hyp is Hypothesis.NULL and len(pis) != 1:
            raise DomainError(f"null-hypothesis parameters carry one rate, got {len(pis)}")
        object.__setattr__(self, "pis", pis)
        object.__setattr__(self, "theta", check_theta(self.theta))
        object.__setattr__(self, "hypothesis", hyp)

    @classmethod
    def null(cls, pi0: float, theta: float) -> "ModelParams":
        return cls((pi0,), theta, Hypothesis.NULL)

    def rates(self, g: int) -> np.ndarray:
        """Per-group rate vector of length ``g``."""
        if self.hypothesis is Hypothesis.NULL:
            return np.full(g, self.pis[0])
        if len(self.pis) != g:
            raise DomainError(f"{len(self.pis)} rates for a table with {g} groups")
        return np.array(self.pis)


def as_counts(table) -> np.ndarray:
    if isinstance(table, FrequencyTable):
        return table.counts.astype(float)
    counts = np.asarray(table, dtype=float)
    if counts.ndim != 2 or counts.shape[1] != 3 or (counts < 0).any():
        raise DomainError("counts must be a nonnegative (g, 3) array")
    return counts


# ---------------------------------------------------------------------------
# array kernels


def _cells(pi, theta):
    d = diagonal_pieces(pi, np.asarray(theta, dtype=float)[..., None])
    return d, np.stack([d.p0, d.p1, d.p2], axis=-1)


def loglik_terms(counts, pi, theta) -> np.ndarray:
    """Per-group log-likelihood contributions, shape ``(..., k)``.

    Zero counts contribute nothing whatever the cell probability; a positive
    count against a probability below ``1e-300`` gives ``-inf``.
    """
    counts = np.asarray(counts, dtype=float)
    _, p = _cells(pi, theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.where(p > TINY_PROB, np.log(np.where(p > TINY_PROB, p, 1.0)), -np.inf)
        terms = np.where(counts > 0, counts * logp, 0.0)
    return terms.sum(axis=-1)


def batch_loglik(counts, pi, theta) -> np.ndarray:
    return loglik_terms(counts, pi, theta).sum(axis=-1)


def dlogc_dtheta(d, theta) -> np.ndarray:
    """Derivative of ``log C_theta(q, q)`` with respect to theta.

    Equals ``h / theta^2 + q^theta log q / (theta (2 - q^theta))``; both terms
    grow like ``1/theta`` with opposite signs, so a short series in
    ``x = theta log q`` takes over near independence (limit ``log(q)^2``).
    """
    theta = np.asarray(theta, dtype=float)
    log_q = d.log_q
    x = theta * log_q
    small = np.abs(x) < 1e-6
    th = np.where(small, 1.0, theta)
    direct = d.h / th**2 + d.s * log_q / (th * (2.0 - d.s))
    series = log_q**2 + 2.0 * theta * log_q**3
    return np.where(small, series, direct)


def score_terms(counts, pi, theta) -> tuple[np.ndarray, np.ndarray]:
    """Per-group ``dl/dpi_i`` and per-group contributions to ``dl/dtheta``.

    The rate derivative is the closed form in ``omega = 2 / q^theta - 1``::

        d_i = m1 (4 / (omega^(1/theta+1) q^(theta+1)) - 2) / P(1)
            + m2 (2 - 2 / (omega^(1/theta+1) q^(theta+1))) / P(2)
            - 2 m0 / (2q - q^(theta+1))

    with ``omega^(1/theta+1) q^(theta+1) = exp(h/theta) (2 - q^theta)``.
    """
    counts = np.asarray(counts, dtype=float)
    theta = np.asarray(theta, dtype=float)
    th = theta[..., None]
    d, _ = _cells(pi, theta)
    m0, m1, m2 = counts[..., 0], counts[..., 1], counts[..., 2]
    two_minus_s = 2.0 - d.s
    pair = 2.0 * d.shrink / two_minus_s  # dC/dq
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(m1 > 0, m1 / d.p1, 0.0)
        r2 = np.where(m2 > 0, m2 / d.p2, 0.0)
        r0 = np.where(m0 > 0, m0 / d.p0, 0.0)
        d_pi = r1 * (2.0 * pair - 2.0) + r2 * (2.0 - pair) - np.where(
            m0 > 0, 2.0 * m0 / (d.q * two_minus_s), 0.0
        )
        dc_dtheta = d.c * dlogc_dtheta(d, th)
        t_theta = dc_dtheta * (r0 - 2.0 * r1 + r2)
    return d_pi, t_theta


# ---------------------------------------------------------------------------
# single-table API


def _prepare(params: ModelParams, table):
    counts = as_counts(table)
    pi = params.rates(counts.shape[0])
    return counts, pi


def _guard(counts, pi, theta):
    _, p = _cells(pi, theta)
    bad = (counts > 0) & (p < TINY_PROB)
    if bad.any():
        grp, cell = np.argwhere(bad)[0]
        raise NonfiniteLikelihood(
            f"group {grp} has {counts[grp, cell]:g} subjects in cell {cell} "
            f"whose probability is {p[grp, cell]:.3g}"
        )


def loglik(params: ModelParams, table) -> float:
    """Log-likelihood of ``table`` at ``params`` (multinomial constants dropped)."""
    counts, pi = _prepare(params, table)
    _guard(counts, pi, params.theta)
    return float(batch_loglik(counts, pi, params.theta))


def score_pi(i: int, params: ModelParams, table) -> float:
    """``dl/dpi_i``; under the null it is group ``i``'s term at the common rate."""
    counts, pi = _prepare(params, table)
    _guard(counts, pi, params.theta)
    d_pi, _ = score_terms(counts, pi, params.theta)
    return float(d_pi[i])


def score_theta(params: ModelParams, table) -> float:
    counts, pi = _prepare(params, table)
    _guard(counts, pi, params.theta)
    _, t = score_terms(counts, pi, params.theta)
    return float(t.sum())


def score_vector(params: ModelParams, table) -> np.ndarray:
    """``(dl/dpi_1, ..., dl/dpi_g, dl/dtheta)`` with per-group rate components."""
    counts, pi = _prepare(params, table)
    _guard(counts, pi, params.theta)
    d_pi, t = score_terms(counts, pi, params.theta)
    return np.append(d_pi, t.sum())

