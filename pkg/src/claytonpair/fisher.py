"""Expected Fisher information for group rates and the Clayton parameter.

The information matrix over ``(pi_1, ..., pi_g, theta)`` is an arrowhead:
diagonal in the rates, with a dense last row and column for ``theta``.  Each
entry is a closed-form ratio (``A_i/B_i``, ``C_i/D_i``, ``E_i/F_i``) of powers
of ``q = 1 - pi`` and ``theta``; every power is formed from logarithms so that
nothing overflows for large ``theta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularInformation
from .likelihood import ModelParams, as_counts

THETA_INFO_MIN = 1e-6
SINGULAR_TOL = 1e-12


def _powers(pi, theta):
    q = 1.0 - pi
    log_q = np.log(q)
    tl = theta * log_q
    s = np.exp(tl)  # q^theta
    h = np.log1p(-np.expm1(tl))  # log(2 - q^theta)
    w1 = np.exp(h / theta)  # (2 - q^theta)^(1/theta)
    return q, log_q, s, h, w1


def info_entries(m, pi, theta):
    """Arrowhead entries for per-group sizes ``m`` and rates ``pi``.

    Returns ``(diag, border, corner)`` with shapes ``(..., k)``, ``(..., k)`` and
    ``(...)``.  ``theta`` is clamped below at ``1e-6``.
    """
    m = np.asarray(m, dtype=float)
    pi = np.asarray(pi, dtype=float)
    theta = np.maximum(np.asarray(theta, dtype=float), THETA_INFO_MIN)[..., None]
    q, log_q, s, h, w1 = _powers(pi, theta)
    w2 = w1 * w1

    a = (
        4.0 * m
        + (8.0 * m + 2.0 * m * s * s) * w2
        + (8.0 * m * s - 2.0 * m * (s * s * q + 6.0)) * w1
        - 8.0 * m * w2 * s
    )
    b = (w1 - 1.0) * (s - 2.0) ** 2 * (pi - 1.0) * (pi - 2.0 * pi * w1 + w1 - 1.0)

    # omega = (2 - q^theta) / q^theta, so omega^(1/theta) = w1 / q.
    log_omega = h - theta * log_q
    o1 = w1 / q
    o2 = o1 * o1
    k = 2.0 * log_omega + 2.0 * theta * log_q - log_omega * s
    bracket = 3.0 * pi * o1 - 2.0 * o1 - 3.0 * pi * o2 + o2 + 2.0 * pi**2 * o2 + 1.0
    c = -m * k**2 * (3.0 * pi * o1 - o1 - 2.0 * pi**2 * o1 + 1.0)
    d = theta**4 * (s - 2.0) ** 2 * bracket
    e = -2.0 * m * k * (pi * o1 - o1 + pi * o1 * s - pi**2 * o1 * s + 1.0)
    f = theta**2 * (s - 2.0) ** 2 * (pi - 1.0) * bracket

    return a / b, e / f, (c / d).sum(axis=-1)


@dataclass(frozen=True)
class InfoMatrix:
    """Arrowhead Fisher information: ``diag`` (rates), ``border`` (rate-theta)
    and ``corner`` (theta-theta)."""

    diag: np.ndarray
    border: np.ndarray
    corner: float
    theta_clamped: bool = False

    @property
    def dim(self) -> int:
        return len(self.diag) + 1

    def dense(self) -> np.ndarray:
        g = len(self.diag)
        out = np.zeros((g + 1, g + 1))
        out[np.arange(g), np.arange(g)] = self.diag
        out[:g, g] = self.border
        out[g, :g] = self.border
        out[g, g] = self.corner
        return out


def _entries_for(params: ModelParams, table):
    counts = as_counts(table)
    m = counts.sum(axis=1)
    return info_entries(m, params.rates(len(m)), params.theta)


def info_pi_pi(i: int, params: ModelParams, table) -> float:
    diag, _, _ = _entries_for(params, table)
    return float(diag[i])


def info_theta_theta(params: ModelParams, table) -> float:
    """Theta-theta entry, summed over groups."""
    _, _, corner = _entries_for(params, table)
    return float(corner)


def info_pi_theta(i: int, params: ModelParams, table) -> float:
    _, border, _ = _entries_for(params, table)
    return float(border[i])


def assemble_info(params: ModelParams, table) -> InfoMatrix:
    """Full information at ``params`` using the table's group sizes.

    Under null parameters every group is evaluated at the common rate, which
    still gives a ``(g+1)``-dimensional matrix.
    """
    diag, border, corner = _entries_for(params, table)
    if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(border)) and np.isfinite(corner)):
        raise SingularInformation(f"non-finite information entries at {params}")
    return InfoMatrix(diag, border, float(corner), params.theta < THETA_INFO_MIN)


def solve_arrowhead_arrays(diag, border, corner, rhs):
    """Batched ``I^-1 rhs`` by eliminating the rate block first.

    ``rhs`` has shape ``(..., k+1)`` or ``(..., k+1, r)``.  Returns the solution
    and the Schur complement ``corner - sum(border^2 / diag)``.
    """
    diag = np.asarray(diag, dtype=float)
    border = np.asarray(border, dtype=float)
    corner = np.asarray(corner, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    matrix_rhs = rhs.ndim == diag.ndim + 1
    if not matrix_rhs:
        rhs = rhs[..., None]
    x, y = rhs[..., :-1, :], rhs[..., -1, :]
    u = border / diag
    schur = corner - (border * u).sum(axis=-1)
    z = (y - (u[..., None] * x).sum(axis=-2)) / schur[..., None]
    w = x / diag[..., None] - u[..., None] * z[..., None, :]
    out = np.concatenate([w, z[..., None, :]], axis=-2)
    return (out if matrix_rhs else out[..., 0]), schur


def solve_arrowhead(info: InfoMatrix, rhs) -> np.ndarray:
    """Solve ``info @ x = rhs`` in O(g) operations."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != info.dim:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, matrix has dimension {info.dim}")
    diag = np.asarray(info.diag, dtype=float)
    scale = max(abs(info.corner), float(np.max(np.abs(diag))), 1e-300)
    if np.any(np.abs(diag) < SINGULAR_TOL * scale):
        raise SingularInformation("a diagonal rate entry vanishes")
    with np.errstate(divide="ignore", invalid="ignore"):
        sol, schur = solve_arrowhead_arrays(diag, info.border, info.corner, rhs)
    pivot_scale = max(abs(info.corner), float(np.sum(info.border**2 / np.abs(diag))), 1e-300)
    if abs(schur) < SINGULAR_TOL * pivot_scale:
        raise SingularInformation(f"Schur complement {float(schur):.3g} is numerically zero")
    return sol
