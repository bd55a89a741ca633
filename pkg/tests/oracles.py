"""Reference computations that share no code with the package.

Cell probabilities here come straight from ``(2 q^-theta - 1)^(-1/theta)``,
evaluated in multiprecision where cancellation would matter.
"""

from __future__ import annotations

import mpmath as mp
import numpy as np

mp.mp.dps = 40


def mp_cells(pi, theta):
    pi = mp.mpf(pi)
    theta = mp.mpf(theta)
    q = 1 - pi
    if theta == 0:
        c = q * q
    else:
        c = (2 * q ** (-theta) - 1) ** (-1 / theta)
    return c, 2 * q - 2 * c, 1 - 2 * q + c


def mp_loglik(counts, pis, theta):
    total = mp.mpf(0)
    for row, pi in zip(counts, pis):
        for n, p in zip(row, mp_cells(pi, theta)):
            if n:
                total += n * mp.log(p)
    return total


def fd_gradient(counts, pis, theta, step=1e-6):
    """Central differences of the log-likelihood on the natural scale."""
    x = [mp.mpf(p) for p in pis] + [mp.mpf(theta)]
    out = []
    for j in range(len(x)):
        up = list(x)
        dn = list(x)
        up[j] += step
        dn[j] -= step
        f_up = mp_loglik(counts, up[:-1], up[-1])
        f_dn = mp_loglik(counts, dn[:-1], dn[-1])
        out.append(float((f_up - f_dn) / (2 * step)))
    return np.array(out)


def _log_cells(pi, theta):
    return [mp.log(p) for p in mp_cells(pi, theta)]


def expected_information(m, pis, theta, step=1e-5):
    """``-sum m_i p_c d2 log p_c`` by central second differences."""
    g = len(pis)
    out = np.zeros((g + 1, g + 1))
    h = mp.mpf(step)
    for i, (mi, pi) in enumerate(zip(m, pis)):
        pi = mp.mpf(pi)
        th = mp.mpf(theta)
        p = mp_cells(pi, th)

        def lp(a, b):
            return _log_cells(pi + a, th + b)

        base = lp(0, 0)
        pp, mm = lp(h, 0), lp(-h, 0)
        tp, tm = lp(0, h), lp(0, -h)
        d_pp = [(a - 2 * c + b) / h**2 for a, b, c in zip(pp, mm, base)]
        d_tt = [(a - 2 * c + b) / h**2 for a, b, c in zip(tp, tm, base)]
        x1, x2, x3, x4 = lp(h, h), lp(h, -h), lp(-h, h), lp(-h, -h)
        d_pt = [(a - b - c + d) / (4 * h**2) for a, b, c, d in zip(x1, x2, x3, x4)]
        out[i, i] = float(-mi * sum(pc * d for pc, d in zip(p, d_pp)))
        out[i, g] = out[g, i] = float(-mi * sum(pc * d for pc, d in zip(p, d_pt)))
        out[g, g] += float(-mi * sum(pc * d for pc, d in zip(p, d_tt)))
    return out


# ---------------------------------------------------------------------------
# grid-search maximum likelihood

PI_GRID = np.round(np.arange(1, 100) * 0.01, 2)
THETA_GRID = np.round(np.arange(1, 601) * 0.05, 2)


def _grid_logp():
    q = 1.0 - PI_GRID[None, :]
    th = THETA_GRID[:, None]
    c = (2.0 * q ** (-th) - 1.0) ** (-1.0 / th)
    return np.log(np.stack([c, 2 * q - 2 * c, 1 - 2 * q + c], axis=-1))


_LOGP = None


def grid_max_loglik(counts, null=False):
    """Best log-likelihood over the (pi, theta) grid.  For fixed theta the
    groups separate, so each group's rate is maximized on its own."""
    global _LOGP
    if _LOGP is None:
        _LOGP = _grid_logp()
    counts = np.asarray(counts, dtype=float)
    if null:
        counts = counts.sum(axis=0, keepdims=True)
    per_group = np.einsum("tpc,gc->tgp", _LOGP, counts)  # (theta, group, pi)
    return float(per_group.max(axis=-1).sum(axis=-1).max())


# ---------------------------------------------------------------------------
# Wald statistic by generalized least squares on a dense matrix


def wald_gls(pis, info):
    """``min_c (b - c 1)' V^-1 (b - c 1)`` with ``V`` the rate block of ``info^-1``.

    Equivalent to the contrast form for any contrast whose null space is the
    constant vector.
    """
    b = np.asarray(pis, dtype=float)
    v = np.linalg.inv(info)[:-1, :-1]
    w = np.linalg.inv(v)
    one = np.ones_like(b)
    c = (one @ w @ b) / (one @ w @ one)
    r = b - c * one
    return float(r @ w @ r)
