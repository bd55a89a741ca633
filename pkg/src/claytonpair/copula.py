"""Clayton copula for a pair of Bernoulli outcomes with a common margin.

A subject contributes two binary outcomes (e.g. two eyes) with the same
success probability ``pi``.  Writing ``q = 1 - pi``, every joint probability
follows from the single copula value ``C = C_theta(q, q)``::

    P(0 affected) = C
    P(1 affected) = 2q - 2C          (both discordant cells together)
    P(2 affected) = 1 - 2q + C

``theta = 0`` stands for the independence copula ``C(u, v) = u v``.  It is a
distinguished case handled by its own branch and never reaches the power
formula.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError

# Beyond this C(u, v) equals min(u, v) to machine precision.
THETA_EVAL_MAX = 1e6

INDEPENDENCE = 0.0


def check_theta(theta: float) -> float:
    theta = float(theta)
    if not math.isfinite(theta) or theta < 0.0:
        raise DomainError(f"theta must be a finite value >= 0, got {theta!r}")
    return theta


def check_rate(pi: float) -> float:
    pi = float(pi)
    if not 0.0 < pi < 1.0:
        raise DomainError(f"rate must lie strictly inside (0, 1), got {pi!r}")
    return pi


def clayton_cdf(u: float, v: float, theta: float) -> float:
    """Evaluate the Clayton copula ``(u^-theta + v^-theta - 1)^(-1/theta)``.

    The evaluation is arranged around ``w = min(u, v)`` and ``r = w / max(u, v)``
    so that no power can overflow and the ``theta -> 0`` limit stays accurate::

        C = w * (1 + expm1(theta log r) - expm1(theta log w)) ** (-1/theta)
    """
    u = float(u)
    v = float(v)
    for name, x in (("u", u), ("v", v)):
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {x!r}")
    theta = check_theta(theta)
    if u == 0.0 or v == 0.0:
        return 0.0
    if u == 1.0:
        return v
    if v == 1.0:
        return u
    if theta == INDEPENDENCE:
        return u * v
    theta = min(theta, THETA_EVAL_MAX)
    w, big = (u, v) if u <= v else (v, u)
    log_w = math.log(w)
    log_r = log_w - math.log(big)
    excess = math.expm1(theta * log_r) - math.expm1(theta * log_w)
    return w * math.exp(-math.log1p(excess) / theta)


class CellProbs(NamedTuple):
    """Probabilities of 0, 1 and 2 affected members of a pair."""

    p0: float
    p1: float
    p2: float
    c_value: float


class _Diagonal(NamedTuple):
    # Shared sub-expressions of C_theta(q, q) and its derivatives.
    q: np.ndarray
    log_q: np.ndarray
    s: np.ndarray  # q ** theta
    h: np.ndarray  # log(2 - q ** theta)
    shrink: np.ndarray  # C / q = exp(-h / theta)
    c: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    p2: np.ndarray


def diagonal_pieces(pi, theta) -> _Diagonal:
    """Array version of the diagonal copula value and the three cell probabilities.

    ``pi`` and ``theta`` broadcast against each other; entries with
    ``theta == 0`` use the independence copula.
    """
    pi = np.asarray(pi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    indep = theta == 0.0
    th = np.where(indep, 1.0, np.minimum(theta, THETA_EVAL_MAX))
    q = 1.0 - pi
    log_q = np.log(q)
    tl = th * log_q
    s = np.exp(tl)
    h = np.log1p(-np.expm1(tl))
    shrink = np.where(indep, q, np.exp(-h / th))
    s = np.where(indep, 1.0, s)
    h = np.where(indep, 0.0, h)
    c = q * shrink
    # 2q - 2C written without cancellation; P(2) = pi - P(1) / 2.
    p1 = np.where(indep, 2.0 * q * pi, -2.0 * q * np.expm1(-h / th))
    p2 = pi - 0.5 * p1
    return _Diagonal(q, log_q, s, h, shrink, c, c, p1, p2)


def cell_probs(pi: float, theta: float) -> CellProbs:
    pi = check_rate(pi)
    theta = check_theta(theta)
    d = diagonal_pieces(pi, theta)
    return CellProbs(float(d.p0), float(d.p1), float(d.p2), float(d.c))


def kendall_tau(theta: float) -> float:
    """Kendall's tau of the Clayton copula, ``theta / (theta + 2)``."""
    theta = check_theta(theta)
    return theta / (theta + 2.0)


def tau_to_theta(tau: float) -> float:
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie strictly inside (0, 1), got {tau!r}")
    return 2.0 * tau / (1.0 - tau)


def pearson_rho(pi: float, theta: float) -> float:
    """Within-pair Pearson correlation of the two binary outcomes.

    Unlike Kendall's tau this depends on the margin as well as on ``theta``.
    """
    cp = cell_probs(pi, theta)
    q = 1.0 - pi
    return (cp.c_value - q * q) / (pi * q)


class ClassicalEquivalents(NamedTuple):
    rosner_r: float
    donner_rho: float
    dallal_gamma: float


def classical_equivalents(pi: float, theta: float) -> ClassicalEquivalents:
    """Parameters of the constant-R, constant-rho and conditional-probability
    models that produce the same diagonal copula value at ``(pi, theta)``.

    They solve ``C = R pi^2 - 2 pi + 1``, ``C = (1 - rho) pi^2 + (rho - 2) pi + 1``
    and ``C = (gamma - 2) pi + 1`` respectively.
    """
    c = cell_probs(pi, theta).c_value
    rosner = (c + 2.0 * pi - 1.0) / (pi * pi)
    donner = (c - pi * pi + 2.0 * pi - 1.0) / (pi - pi * pi)
    dallal = (c - 1.0) / pi + 2.0
    return ClassicalEquivalents(rosner, donner, dallal)


def copula_from_classical(pi: float, eq: ClassicalEquivalents) -> tuple[float, float, float]:
    """Copula values implied by each classical parameter; inverse of
    :func:`classical_equivalents`."""
    return (
        eq.rosner_r * pi * pi - 2.0 * pi + 1.0,
        (1.0 - eq.donner_rho) * pi * pi + (eq.donner_rho - 2.0) * pi + 1.0,
        (eq.dallal_gamma - 2.0) * pi + 1.0,
    )
